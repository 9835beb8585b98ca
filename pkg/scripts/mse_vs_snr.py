"""MSE vs SNR for every estimator on one scenario (plot-ready CSV).

    python3 scripts/mse_vs_snr.py --scenario tu6 --k 64 --trials 20000 --out results/mse_tu6_k64.csv
"""
import argparse
import logging
from pathlib import Path

from surechan.harness import ExperimentConfig, mse_monotone_violations, run_sweep, write_csv

ESTIMATORS = ["ml", "kang", "james-stein", "sure-linear", "sure-linear:2", "sure-let", "sure-let:2", "lmmse"]


def main():
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--scenario", default="tu6")
    p.add_argument("--k", type=int, default=64)
    p.add_argument("--snr", default="0,2.5,5,7.5,10,12.5,15,17.5,20,22.5,25")
    p.add_argument("--trials", type=int, default=2000)
    p.add_argument("--sigma2", choices=["true", "estimated"], default="true")
    p.add_argument("--seed", type=int, default=2024)
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--out", default="results/mse.csv")
    args = p.parse_args()
    logging.basicConfig(level=logging.INFO, format="%(asctime)s %(message)s")

    cfg = ExperimentConfig(scenario=args.scenario, K=args.k, snr_grid_db=[float(s) for s in args.snr.split(",")],
                           trials=args.trials, estimators=ESTIMATORS, seed=args.seed,
                           sigma2_source=args.sigma2, workers=args.workers)
    table = run_sweep(cfg)
    Path(args.out).parent.mkdir(parents=True, exist_ok=True)
    write_csv(table, args.out)
    for est, lo, hi in mse_monotone_violations(table):
        logging.warning("MSE of %s rises from %g to %g dB beyond 2 CI widths", est, lo, hi)


if __name__ == "__main__":
    main()
