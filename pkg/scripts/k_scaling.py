"""SURE estimator MSE at a fixed SNR over several symbol sizes K."""
import argparse
import logging
from pathlib import Path

from surechan.harness import ExperimentConfig, SweepTable, run_sweep, write_csv


def main():
    p = argparse.ArgumentParser(description=__doc__)
    p.add_argument("--scenario", default="tu6")
    p.add_argument("--ks", default="64,256,1024")
    p.add_argument("--snr", default="0,10,20")
    p.add_argument("--trials", type=int, default=2000)
    p.add_argument("--out", default="results/k_scaling.csv")
    args = p.parse_args()
    logging.basicConfig(level=logging.INFO, format="%(asctime)s %(message)s")

    table = SweepTable()
    for K in (int(k) for k in args.ks.split(",")):
        cfg = ExperimentConfig(scenario=args.scenario, K=K, snr_grid_db=[float(s) for s in args.snr.split(",")],
                               trials=args.trials, estimators=["ml", "sure-linear", "sure-let"])
        table.rows.extend(run_sweep(cfg).rows)
    Path(args.out).parent.mkdir(parents=True, exist_ok=True)
    write_csv(table, args.out)


if __name__ == "__main__":
    main()
