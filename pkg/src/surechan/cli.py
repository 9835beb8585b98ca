"""Command-line entry point: ``surechan {mse,ber} [options]``."""
from __future__ import annotations

import argparse
import logging
import sys

from .estimators import ESTIMATOR_NAMES, EstimatorSpec
from .harness import ExperimentConfig, _write, run_sweep, write_csv


def _floats(text: str) -> list[float]:
    return [float(x) for x in text.split(",") if x.strip()]


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="surechan", description="OFDM preamble channel-estimation sweeps.")
    sub = p.add_subparsers(dest="mode", required=True)
    for mode, help_ in (("mse", "channel-estimate MSE vs SNR"), ("ber", "coded 16-QAM BER vs SNR")):
        s = sub.add_parser(mode, help=help_)
        s.add_argument("--config", help="JSON experiment file; flags override its values")
        s.add_argument("--scenario", help="shipped profile (awgn, rayleigh1, tu6) or a profile file path")
        s.add_argument("--k", type=int, dest="K", help="subcarriers (64, 256, 1024)")
        s.add_argument("--snr", type=_floats, dest="snr_grid_db", help="comma-separated SNR grid in dB")
        s.add_argument("--trials", type=int)
        s.add_argument("--estimators", help=f"comma-separated, from: {', '.join(ESTIMATOR_NAMES)}; "
                                            "append :L to set the half-window (sure-let:2)")
        s.add_argument("--seed", type=int)
        s.add_argument("--sigma2", choices=["true", "est"], help="noise variance source")
        s.add_argument("--threshold-policy", choices=["fixed", "grid"], dest="T_policy")
        s.add_argument("--l", type=int, dest="L", help="default half-window L (N = 2L+1)")
        s.add_argument("--blank-carriers", type=int, dest="blank_carriers")
        s.add_argument("--workers", type=int)
        s.add_argument("--out", help="CSV path (default: standard output)")
        s.add_argument("-q", "--quiet", action="store_true")
    return p


def config_from_args(args) -> ExperimentConfig:
    data = {}
    if args.config:
        import json
        with open(args.config) as fh:
            data = json.load(fh)
    data["mode"] = args.mode
    for key in ("scenario", "K", "snr_grid_db", "trials", "seed", "blank_carriers", "workers", "out"):
        val = getattr(args, key)
        if val is not None:
            data[key] = val
    if args.sigma2 is not None:
        data["sigma2_source"] = "true" if args.sigma2 == "true" else "estimated"
    L = args.L if args.L is not None else 1
    policy = args.T_policy or "fixed"
    names = args.estimators.split(",") if args.estimators else data.get("estimators", ["ml", "sure-linear", "sure-let"])
    data["estimators"] = [EstimatorSpec.parse(n, L, policy) for n in names]
    return ExperimentConfig.from_dict(data)


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.WARNING if args.quiet else logging.INFO,
                        format="%(asctime)s %(message)s", stream=sys.stderr)
    try:
        config = config_from_args(args)
        table = run_sweep(config)
        if config.out:
            write_csv(table, config.out)
        else:
            _write(table, sys.stdout)
    except (ValueError, OSError) as exc:
        print(f"surechan: error: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
