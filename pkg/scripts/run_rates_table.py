#!/usr/bin/env python3
"""Estimator-only convergence table and its log-log slope against the order.

    python scripts/run_rates_table.py scripts/configs/rates_d1.json
"""

import argparse

import numpy as np

from glbackward.experiments import parse_config, run_convergence_table, table_csv


def order(row, d, mu, mu0):
    n = row["n"]
    return max(row["beta"] ** (d / 2) * float(n) ** (-4 * mu * d), row["beta"] ** (-mu0))


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("config")
    parser.add_argument("--out")
    args = parser.parse_args()
    cfg = parse_config(args.config)
    rows = run_convergence_table(cfg)
    text = table_csv(rows)
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(text)
    print(text, end="")
    mu = cfg.mu if isinstance(cfg.mu, (int, float)) else cfg.mu[0]
    x = np.log([order(r, cfg.d, mu, cfg.mu0) for r in rows])
    y = np.log([r["mise_mean"] for r in rows])
    slope = np.polyfit(x, y, 1)[0]
    print(f"log-log slope of MISE against the order: {slope:.3f}")


if __name__ == "__main__":
    main()
