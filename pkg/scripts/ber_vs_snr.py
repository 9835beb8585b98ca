"""Coded 16-QAM BER vs SNR and the SNR gain at a target BER.

    python3 scripts/ber_vs_snr.py --trials 5000 --out results/ber_tu6_k64.csv
"""
import argparse
import logging
from pathlib import Path

from surechan.harness import ExperimentConfig, run_sweep, snr_at_ber, write_csv


def main():
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--scenario", default="tu6")
    p.add_argument("--k", type=int, default=64)
    p.add_argument("--snr", default="10,12,14,16,18,20,22,24,26,28,30")
    p.add_argument("--trials", type=int, default=5000)
    p.add_argument("--estimators", default="ml,kang,sure-linear,sure-let,genie")
    p.add_argument("--target", type=float, default=1e-3)
    p.add_argument("--seed", type=int, default=2025)
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--out", default="results/ber.csv")
    args = p.parse_args()
    logging.basicConfig(level=logging.INFO, format="%(asctime)s %(message)s")

    snr = [float(s) for s in args.snr.split(",")]
    cfg = ExperimentConfig(scenario=args.scenario, K=args.k, snr_grid_db=snr, trials=args.trials, mode="ber",
                           estimators=args.estimators.split(","), seed=args.seed,
                           sigma2_source="estimated", workers=args.workers)
    table = run_sweep(cfg)
    Path(args.out).parent.mkdir(parents=True, exist_ok=True)
    write_csv(table, args.out)

    at = {e.label: snr_at_ber(snr, table.column(e.label, "ber"), args.target) for e in cfg.estimators}
    ref = at.get("ml")
    print(f"SNR at BER {args.target:g}:")
    for label, s in at.items():
        gain = f"  ({ref - s:+.2f} dB vs ml)" if ref is not None and label != "ml" else ""
        print(f"  {label:24s} {s:6.2f} dB{gain}")


if __name__ == "__main__":
    main()
