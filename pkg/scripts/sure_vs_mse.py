"""Per-trial SURE value against true squared error for one fixed channel draw.

Prints mean, spread and the bias in standard errors for each SURE estimator.
"""
import argparse

import numpy as np

from surechan.channels import draw_cir, load_profile
from surechan.core import channel_gains, observe_preamble
from surechan.estimators import estimate_james_stein, estimate_sure_let, estimate_sure_linear


def main():
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--scenario", default="tu6")
    p.add_argument("--k", type=int, default=64)
    p.add_argument("--snr", type=float, default=10.0)
    p.add_argument("--draws", type=int, default=10_000)
    p.add_argument("--seed", type=int, default=7)
    args = p.parse_args()

    rng = np.random.default_rng(args.seed)
    h = channel_gains(draw_cir(load_profile(args.scenario), rng), args.k)
    s2 = 10 ** (-args.snr / 10)
    runs = {
        "james-stein": lambda o: estimate_james_stein(o, s2),
        "sure-linear": lambda o: estimate_sure_linear(o, s2, 1),
        "sure-let": lambda o: estimate_sure_let(o, s2, 1)[::2],
    }
    d = {name: np.empty((args.draws, 2)) for name in runs}
    for i in range(args.draws):
        obs = observe_preamble(h, s2, rng)
        for name, fn in runs.items():
            h_hat, risk = fn(obs)
            d[name][i] = risk.epsilon, np.mean(np.abs(h_hat - h) ** 2)
    print(f"{'estimator':12s} {'mean eps':>10s} {'mean mse':>10s} {'bias/SE':>8s}")
    for name, v in d.items():
        diff = v[:, 0] - v[:, 1]
        print(f"{name:12s} {v[:, 0].mean():10.5f} {v[:, 1].mean():10.5f} "
              f"{diff.mean() / (diff.std(ddof=1) / np.sqrt(args.draws)):+8.2f}")


if __name__ == "__main__":
    main()
