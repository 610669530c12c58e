#!/usr/bin/env python3
"""Monte Carlo backward-reconstruction study with a diagonal monotonicity check.

    python scripts/run_mise_study.py scripts/configs/mise_l2.json --outdir results/
"""

import argparse
import itertools
from pathlib import Path

from glbackward.experiments import emit_report, parse_config, run_mise_study


def diagonal_pairs(counts, eps):
    """Cell pairs (a, b) with b on a finer grid and a smaller noise level than a."""
    cells = list(itertools.product(counts, eps))
    return [(a, b) for a in cells for b in cells if b[0] > a[0] and b[1] < a[1]]


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("config")
    parser.add_argument("--outdir", default="results")
    parser.add_argument("--workers", type=int, default=None)
    args = parser.parse_args()

    cfg = parse_config(args.config)
    if args.workers:
        cfg.workers = args.workers
    report = run_mise_study(cfg)
    out = Path(args.outdir)
    out.mkdir(parents=True, exist_ok=True)
    stem = Path(args.config).stem
    emit_report(report, "csv", out / f"{stem}.csv")
    emit_report(report, "json", out / f"{stem}.json")

    key = "h1_mean" if cfg.mode == "H1" else "l2_mean"
    print(f"{'n':>6} {'eps':>8} {'t':>5} {'l2_mean':>12} {'h1_mean':>12} {'rate':>12}")
    for row in report.summary:
        rate = row["rate_h1"] if cfg.mode == "H1" else row["rate_l2"]
        print(f"{row['n']:>6} {row['eps']:>8.0e} {row['t']:>5.2f} {row['l2_mean']:>12.5g} {row['h1_mean']:>12.5g} {rate:>12.4g}")

    at0 = {(r["n"], r["eps"]): r[key] for r in report.summary if r["t"] == 0.0}
    counts = [r["n"] for r in report.summary if r["t"] == 0.0]
    for a, b in diagonal_pairs(sorted(set(counts)), sorted(set(cfg.eps), reverse=True)):
        flag = "ok" if at0[b] < at0[a] else "NOT DECREASING"
        print(f"diagonal {a} -> {b}: {at0[a]:.5g} -> {at0[b]:.5g}  {flag}")
    print(f"wall time {report.metadata['wall_time']:.1f} s; reports in {out}")


if __name__ == "__main__":
    main()
