"""Command-line entry point.

Global flags go before or after the subcommand::

    glbackward --config study.json --seed 3 mise-study --out report.csv
    glbackward generate --config study.json --n 256 --eps 1e-3 --out obs.txt
    glbackward reconstruct --config study.json --input obs.txt --out h.txt
    glbackward backward --config study.json --observations obs.txt --out u.txt

Exit codes: 0 success, 2 invalid config, 3 inadmissible schedule,
4 numerical failure.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from dataclasses import replace
from pathlib import Path

from . import __version__, io
from .errors import BlowUpError, ConfigError, RejectionError, ScheduleError
from .estimator import reconstruct_final, reconstruct_source
from .experiments import (
    ExperimentConfig,
    backward_from_observations,
    config_from_dict,
    parse_config,
    report_csv,
    report_json,
    run_convergence_table,
    run_mise_study,
    simulate_observations,
    solve_truth,
    table_csv,
    truth_diffusion,
    truth_modes,
    truth_source,
)
from .noise import GridObservations
from .operators import OperatorBand, TruncationLevel
from .params import admissibility_check
from .solver import SolveSpec, backward_regularized_solve, forward_solve
from .spectral import DesignGrid

EXIT_OK, EXIT_CONFIG, EXIT_SCHEDULE, EXIT_NUMERIC = 0, 2, 3, 4


def _global_flags(parser, suppress: bool):
    default = argparse.SUPPRESS if suppress else None
    parser.add_argument("--config", default=default, help="JSON experiment config")
    parser.add_argument("--seed", type=int, default=default, help="override the config seed")
    parser.add_argument("--out", default=default, help="output path (stdout when omitted)")
    parser.add_argument(
        "--format", choices=("csv", "json"), default=argparse.SUPPRESS if suppress else "csv",
        help="report format for mise-study and rates-table",
    )


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="glbackward", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=__version__)
    _global_flags(parser, suppress=False)
    common = argparse.ArgumentParser(add_help=False)
    _global_flags(common, suppress=True)
    sub = parser.add_subparsers(dest="command", required=True)

    def cell_flags(p):
        p.add_argument("--n", help="grid size (comma separated per axis); default first of counts")
        p.add_argument("--eps", type=float, help="coefficient noise level; default first of eps")
        p.add_argument("--replicate", type=int, default=0, help="replicate index for the noise streams")

    p = sub.add_parser("generate", parents=[common], help="observations file from truth and noise")
    cell_flags(p)
    p = sub.add_parser("forward", parents=[common], help="forward solve from a field file")
    p.add_argument("--input", help="u0 field file; default the config recipe")
    p.add_argument("--final-only", action="store_true", help="write only u(T) as a field")
    p = sub.add_parser("reconstruct", parents=[common], help="H-hat (and G-hat) from observations")
    p.add_argument("--input", required=True, help="observations file")
    p.add_argument("--source-out", help="also write G-hat as a trajectory here")
    cell_flags(p)
    p = sub.add_parser("backward", parents=[common], help="regularized backward solve")
    src = p.add_mutually_exclusive_group(required=True)
    src.add_argument("--observations", help="observations file (reconstructs H-hat and G-hat)")
    src.add_argument("--input", help="H-hat field file")
    p.add_argument("--source", help="G-hat trajectory file, used with --input")
    cell_flags(p)
    sub.add_parser("mise-study", parents=[common], help="Monte Carlo reconstruction errors")
    sub.add_parser("rates-table", parents=[common], help="estimator-only convergence table")
    return parser


def load_config(args) -> ExperimentConfig:
    cfg = parse_config(args.config) if args.config else config_from_dict({})
    if args.seed is not None:
        cfg = replace(cfg, seed=args.seed)
    return cfg


def _emit(text: str, out) -> None:
    if out:
        Path(out).write_text(text)
    else:
        sys.stdout.write(text)


def _cell(cfg: ExperimentConfig, args, grid: DesignGrid | None = None):
    if args.n is not None:
        parts = [int(c) for c in str(args.n).split(",")]
        n = parts[0] if len(parts) == 1 else parts
    elif grid is not None:
        n = list(grid.counts)
    else:
        n = cfg.counts[0]
    eps = args.eps if args.eps is not None else cfg.eps[0]
    counts = cfg.grid_counts(n)
    if grid is not None and counts != grid.counts:
        raise ConfigError([f"--n {counts} disagrees with the observation grid {grid.counts}"])
    return counts, eps


def _schedule(cfg, counts, eps):
    s = cfg.schedule(list(counts), eps)
    adm = admissibility_check(s)
    if not adm.ok and cfg.enforce_admissibility:
        raise ScheduleError("inadmissible schedule", list(adm.reasons))
    if cfg.nonlinear and math.isnan(s.q):
        raise ScheduleError("no truncation level exists for this schedule", [f"pi_bar={s.pi_bar:.6g} >= 1"])
    return s


def cmd_generate(cfg, args) -> str:
    counts, eps = _cell(cfg, args)
    truth = solve_truth(cfg)
    obs = simulate_observations(cfg, truth, DesignGrid(counts), eps, args.replicate)
    return io.format_observations(obs)


def cmd_forward(cfg, args) -> str:
    u0 = io.read_field(args.input) if args.input else None
    if u0 is None:
        traj = solve_truth(cfg).trajectory
    else:
        grid = cfg.time_grid()
        modes = tuple(sorted(set(truth_modes(cfg)) | set(u0.modes())))
        spec = SolveSpec(
            modes, truth_diffusion(cfg, grid.nodes), nonlinear=cfg.nonlinear,
            source=truth_source(cfg, grid.nodes),
        )
        traj = forward_solve(u0, spec, grid)
    if args.final_only:
        return io.format_field(traj.field(len(traj) - 1))
    return io.format_trajectory(traj)


def _with_coefficient(cfg, obs: GridObservations) -> GridObservations:
    if obs.coefficient is not None:
        return obs
    nodes = cfg.time_grid().nodes
    return replace(obs, coefficient=truth_diffusion(cfg, nodes))


def cmd_reconstruct(cfg, args) -> str:
    obs = io.read_observations(args.input)
    counts, eps = _cell(cfg, args, obs.grid)
    est = cfg.estimator_config(list(counts))
    if args.source_out:
        Path(args.source_out).write_text(io.format_trajectory(reconstruct_source(obs, est)))
    return io.format_field(reconstruct_final(obs, est))


def cmd_backward(cfg, args) -> str:
    if args.observations:
        obs = _with_coefficient(cfg, io.read_observations(args.observations))
        counts, eps = _cell(cfg, args, obs.grid)
        s = _schedule(cfg, counts, eps)
        return io.format_trajectory(backward_from_observations(cfg, obs, s))
    h_hat = io.read_field(args.input)
    counts, eps = _cell(cfg, args)
    s = _schedule(cfg, counts, eps)
    g_hat = io.read_trajectory(args.source) if args.source else None
    # no observations: the coefficient path is the noise-free config recipe
    grid = cfg.time_grid()
    spec = SolveSpec(
        h_hat.modes(), truth_diffusion(cfg, grid.nodes),
        band=OperatorBand(cfg.a0, cfg.a1, s.rho, cfg.frac_beta),
        trunc=TruncationLevel(s.q) if cfg.nonlinear else None,
        nonlinear=cfg.nonlinear,
    )
    return io.format_trajectory(backward_regularized_solve(h_hat, g_hat, spec, grid))


def cmd_mise_study(cfg, args) -> str:
    report = run_mise_study(cfg)
    return report_json(report) if args.format == "json" else report_csv(report)


def cmd_rates_table(cfg, args) -> str:
    rows = run_convergence_table(cfg)
    if args.format == "json":
        return json.dumps(rows, indent=1) + "\n"
    return table_csv(rows)


COMMANDS = {
    "generate": cmd_generate,
    "forward": cmd_forward,
    "reconstruct": cmd_reconstruct,
    "backward": cmd_backward,
    "mise-study": cmd_mise_study,
    "rates-table": cmd_rates_table,
}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = load_config(args)
        text = COMMANDS[args.command](cfg, args)
        _emit(text, args.out)
    except ConfigError as exc:
        for problem in exc.problems:
            print(f"config error: {problem}", file=sys.stderr)
        return EXIT_CONFIG
    except ScheduleError as exc:
        for reason in exc.reasons:
            print(f"schedule error: {reason}", file=sys.stderr)
        return EXIT_SCHEDULE
    except (BlowUpError, RejectionError, FloatingPointError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except (io.FormatError, FileNotFoundError) as exc:
        print(f"input error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
