"""Monte Carlo studies: estimator convergence tables and end-to-end backward
reconstruction errors.

A study is fully determined by its :class:`ExperimentConfig`.  Noise for
replicate ``r`` is drawn from streams keyed by ``(seed, purpose, r)`` only, so
all cells of a study share common random numbers and adding replicates leaves
earlier ones untouched.
"""

from __future__ import annotations

import csv
import io
import json
import math
import time
from collections import Counter
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path
from typing import Any, Sequence

import numpy as np

from . import __version__
from .errors import ConfigError, ScheduleError
from .estimator import EstimatorConfig, empirical_mise, mise_bound_final, reconstruct_final, reconstruct_source
from .noise import (
    CoefficientPath,
    GridObservations,
    NoiseSpec,
    sample_diffusion_path,
    sample_final_observations,
    sample_source_observations,
)
from .operators import OperatorBand, TruncationLevel
from .params import (
    H1,
    L2,
    RegularizationSchedule,
    admissibility_check,
    beta_schedule,
    make_schedule,
    theoretical_rate_H1,
    theoretical_rate_L2,
)
from .solver import SolveSpec, TimeGrid, backward_regularized_solve, forward_solve
from .spectral import (
    DesignGrid,
    SpectralField,
    Trajectory,
    basis_matrix,
    eigenvalue,
    mode_set,
    sobolev_norm,
    synthesize_on_grid,
)

CSV_COLUMNS = ("n", "eps", "replicate", "t", "l2_err", "h1_err", "rate_l2", "rate_h1", "seed")


def fmt(x) -> str:
    """17 significant digits; integers as integers."""
    if isinstance(x, (int, np.integer)) and not isinstance(x, bool):
        return str(int(x))
    return format(float(x), ".17g")


# --- configuration -----------------------------------------------------------


@dataclass
class ExperimentConfig:
    d: int = 1
    T: float = 1.0
    counts: list = field(default_factory=lambda: [64, 256, 1024])
    eps: list = field(default_factory=lambda: [1e-2, 1e-3])
    replicates: int = 30
    seed: int = 0
    dt: float = 1 / 256
    times: list = field(default_factory=lambda: [0.0, 0.5])
    # truth recipes
    u0: list = field(default_factory=lambda: [[1, 1.0], [2, 0.5]])
    source: dict = field(default_factory=lambda: {"kind": "zero"})
    diffusion: dict = field(default_factory=lambda: {"kind": "constant", "value": 1.0})
    nonlinear: bool = True
    truth_beta: float | None = None
    # noise
    v_max: float = 1.0
    noise_level: float | None = None
    vartheta: float = 0.0
    # operator band
    a0: float = 0.5
    a1: float = 2.0
    frac_beta: float = 1.0
    # schedule knobs
    mode: str = L2
    alpha0: float = 1.0
    delta0: float = 0.5
    m0: float = 0.3
    m1: float = 0.3
    gamma: float = 1.0
    mu: Any = 1.0
    mu0: float = 1.0
    c_mu: float = 1.0
    enforce_admissibility: bool = True
    workers: int = 1

    def grid_counts(self, n) -> tuple[int, ...]:
        if isinstance(n, (list, tuple)):
            return tuple(int(k) for k in n)
        return (int(n),) * self.d

    def time_grid(self) -> TimeGrid:
        return TimeGrid.from_dt(self.T, self.dt)

    def noise_spec(self, eps: float) -> NoiseSpec:
        return NoiseSpec(
            v_max=self.v_max,
            vartheta=self.vartheta,
            eps=eps,
            seed=self.seed,
            lambda_levels=self.noise_level,
        )

    def estimator_config(self, n) -> EstimatorConfig:
        return EstimatorConfig(
            beta_schedule(self.grid_counts(n), self.alpha0), _as_tuple(self.mu), self.mu0, self.c_mu
        )

    def schedule(self, n, eps: float) -> RegularizationSchedule:
        return make_schedule(
            self.grid_counts(n), eps, T=self.T, alpha0=self.alpha0, delta0=self.delta0,
            m0=self.m0, m1=self.m1, gamma=self.gamma, mu=_as_list(self.mu), mu0=self.mu0,
            mode=self.mode, a0=self.a0, a1=self.a1,
        )

    def to_dict(self) -> dict:
        return asdict(self)


def _as_list(mu):
    return list(mu) if isinstance(mu, (list, tuple)) else [mu]


def _as_tuple(mu):
    return tuple(_as_list(mu))


def _reject_duplicates(pairs):
    keys = [k for k, _ in pairs]
    dupes = sorted(k for k, c in Counter(keys).items() if c > 1)
    if dupes:
        raise ConfigError([f"duplicate key: {k}" for k in dupes])
    return dict(pairs)


def validate_config(cfg: ExperimentConfig) -> list[str]:
    problems = []
    if cfg.d < 1:
        problems.append("d: must be >= 1")
    if not cfg.T > 0:
        problems.append("T: must be positive")
    if cfg.replicates < 1:
        problems.append("replicates: R must be >= 1")
    if not cfg.counts:
        problems.append("counts: need at least one grid size")
    for n in cfg.counts:
        try:
            counts = cfg.grid_counts(n)
            if len(counts) != cfg.d or any(k < 1 for k in counts):
                problems.append(f"counts: {n!r} is not a valid grid for d={cfg.d}")
        except (TypeError, ValueError):
            problems.append(f"counts: {n!r} is not a valid grid")
    if not cfg.eps or any(e < 0 for e in cfg.eps):
        problems.append("eps: need a nonempty list of nonnegative noise levels")
    try:
        grid = cfg.time_grid()
        for t in cfg.times:
            if not 0 <= t <= cfg.T or not math.isclose(t / grid.dt, round(t / grid.dt), abs_tol=1e-9):
                problems.append(f"times: {t} is not a solver node in [0, T]")
    except ValueError as exc:
        problems.append(f"dt: {exc}")
    if not 0 < cfg.a0 < cfg.a1:
        problems.append("a0/a1: need 0 < a0 < a1")
    if cfg.mode not in (L2, H1):
        problems.append(f"mode: must be {L2!r} or {H1!r}")
    if not 0 < cfg.delta0 < 1:
        problems.append("delta0: must lie in (0, 1)")
    if not (0 < cfg.m0 < 1 and 0 < cfg.m1 < 1):
        problems.append("m0/m1: must lie in (0, 1)")
    if not cfg.m0 + cfg.m1 < 1:
        problems.append("m0+m1: must be < 1")
    if cfg.alpha0 <= 0:
        problems.append("alpha0: must be positive")
    if cfg.gamma < 0:
        problems.append("gamma: must be nonnegative")
    mu = _as_list(cfg.mu)
    if any(m <= 0.5 for m in mu):
        problems.append("mu: every entry must exceed 1/2")
    elif cfg.mu0 < cfg.d * max(mu):
        problems.append("mu0: must be >= d * max(mu)")
    if cfg.c_mu <= 0:
        problems.append("c_mu: must be positive")
    if cfg.v_max < 0 or not 0 <= cfg.vartheta <= cfg.v_max:
        problems.append("v_max/vartheta: need 0 <= vartheta <= v_max")
    if cfg.noise_level is not None and not 0 <= cfg.noise_level <= cfg.v_max:
        problems.append("noise_level: must lie in [0, v_max]")
    if cfg.workers < 1:
        problems.append("workers: must be >= 1")
    try:
        truth_u0(cfg)
    except (ValueError, TypeError, IndexError) as exc:
        problems.append(f"u0: {exc}")
    try:
        truth_diffusion(cfg, np.linspace(0, cfg.T, 3))
    except (ValueError, TypeError, KeyError) as exc:
        problems.append(f"diffusion: {exc}")
    try:
        _source_recipe(cfg)
    except (ValueError, TypeError, KeyError) as exc:
        problems.append(f"source: {exc}")
    return problems


def config_from_dict(raw: dict) -> ExperimentConfig:
    known = {f.name for f in fields(ExperimentConfig)}
    unknown = sorted(set(raw) - known)
    problems = [f"unknown key: {k}" for k in unknown]
    cfg = ExperimentConfig(**{k: v for k, v in raw.items() if k in known})
    try:
        problems += validate_config(cfg)
    except (TypeError, ValueError, KeyError) as exc:
        problems.append(f"malformed value: {exc}")
    if problems:
        raise ConfigError(problems)
    return cfg


def parse_config(path) -> ExperimentConfig:
    """Read a JSON config; every problem is reported together."""
    text = Path(path).read_text()
    try:
        raw = json.loads(text, object_pairs_hook=_reject_duplicates)
    except json.JSONDecodeError as exc:
        raise ConfigError([f"not valid JSON: {exc}"]) from exc
    if not isinstance(raw, dict):
        raise ConfigError(["top level must be an object"])
    return config_from_dict(raw)


# --- truth recipes -----------------------------------------------------------


def truth_u0(cfg: ExperimentConfig) -> SpectralField:
    """u0 as a list of ``[p_1, ..., p_d, coefficient]`` rows (at most five)."""
    if len(cfg.u0) > 5:
        raise ValueError("at most five modes")
    coeffs = {}
    for row in cfg.u0:
        if len(row) != cfg.d + 1:
            raise ValueError(f"row {row} needs {cfg.d} indices and a coefficient")
        coeffs[tuple(int(c) for c in row[:-1])] = float(row[-1])
    return SpectralField(cfg.d, coeffs)


def truth_diffusion(cfg: ExperimentConfig, nodes) -> CoefficientPath:
    """``constant``: Lambda = value; ``sinusoidal``: mean + amplitude sin(2 pi freq t / T)."""
    spec = cfg.diffusion
    kind = spec["kind"]
    if kind == "constant":
        path = CoefficientPath.constant(float(spec["value"]), nodes)
    elif kind == "sinusoidal":
        t = np.asarray(nodes, dtype=float)
        values = spec["mean"] + spec["amplitude"] * np.sin(2 * np.pi * spec.get("frequency", 1.0) * t / cfg.T)
        path = CoefficientPath(t, values)
    else:
        raise ValueError(f"unknown diffusion kind {kind!r}")
    if not cfg.a0 < path.sup < cfg.a1:
        raise ValueError(f"sup Lambda = {path.sup:.6g} is not inside ({cfg.a0}, {cfg.a1})")
    return path


def _source_recipe(cfg: ExperimentConfig):
    spec = cfg.source
    kind = spec["kind"]
    if kind == "zero":
        return None
    if kind == "exp_decay":
        rows = spec["modes"]
        field_ = SpectralField(cfg.d, {tuple(int(c) for c in r[:-1]): float(r[-1]) for r in rows})
        return field_, float(spec.get("rate", 1.0))
    raise ValueError(f"unknown source kind {kind!r}")


def truth_source(cfg: ExperimentConfig, nodes) -> Trajectory | None:
    """``zero`` or ``exp_decay``: G(x, t) = e^{-rate t} * field(x)."""
    recipe = _source_recipe(cfg)
    if recipe is None:
        return None
    field_, rate = recipe
    modes = field_.modes()
    nodes = np.asarray(nodes, dtype=float)
    values = np.exp(-rate * nodes)[:, None] * field_.values(modes)[None, :]
    return Trajectory(cfg.d, nodes, modes, values)


def truth_modes(cfg: ExperimentConfig):
    """Galerkin ball for the reference forward solve."""
    u0 = truth_u0(cfg)
    beta = cfg.truth_beta
    if beta is None:
        top = max([eigenvalue(p) for p in u0.modes()] + [cfg.d])
        beta = max(64.0 * cfg.d, 16.0 * top) if cfg.d == 1 else max(16.0 * cfg.d, 4.0 * top)
    members = set(mode_set(cfg.d, beta).members) | set(u0.modes())
    src = truth_source(cfg, [0.0])
    if src is not None:
        members |= set(src.modes)
    return tuple(sorted(members))


@dataclass(frozen=True)
class Truth:
    trajectory: Trajectory
    coefficient: CoefficientPath
    source: Trajectory | None


def solve_truth(cfg: ExperimentConfig) -> Truth:
    grid = cfg.time_grid()
    nodes = grid.nodes
    coefficient = truth_diffusion(cfg, nodes)
    source = truth_source(cfg, nodes)
    spec = SolveSpec(
        truth_modes(cfg), coefficient, band=None, trunc=None, nonlinear=cfg.nonlinear, source=source
    )
    return Truth(forward_solve(truth_u0(cfg), spec, grid), coefficient, source)


def observe_truth(truth: Truth, grid: DesignGrid):
    """Exact final data and source on the design grid, shape (N,) and (N, M)."""
    traj = truth.trajectory
    basis = basis_matrix(traj.modes, grid)
    H = traj.values[-1] @ basis
    if truth.source is None:
        G = np.zeros((grid.size, traj.times.size))
    else:
        G = (truth.source.values @ basis_matrix(truth.source.modes, grid)).T
    return H, G


# --- one replicate -----------------------------------------------------------


def simulate_observations(cfg, truth: Truth, grid: DesignGrid, eps: float, replicate: int,
                          exact=None) -> GridObservations:
    H, G = exact if exact is not None else observe_truth(truth, grid)
    noise = cfg.noise_spec(eps)
    nodes = truth.trajectory.times
    final = sample_final_observations(H, noise, replicate)
    source = sample_source_observations(G, noise, nodes, replicate)
    coefficient = sample_diffusion_path(truth.coefficient, eps, noise, cfg.a0, cfg.a1, replicate)
    return GridObservations(grid, final, nodes, source, coefficient)


def backward_from_observations(cfg, obs: GridObservations, schedule: RegularizationSchedule) -> Trajectory:
    est = EstimatorConfig(schedule.beta, schedule.mu, schedule.mu0, cfg.c_mu)
    h_hat = reconstruct_final(obs, est)
    g_hat = reconstruct_source(obs, est) if cfg.vartheta > 0 or cfg.source.get("kind") != "zero" else None
    spec = SolveSpec(
        h_hat.modes(),
        obs.coefficient,
        band=OperatorBand(cfg.a0, cfg.a1, schedule.rho, cfg.frac_beta),
        trunc=TruncationLevel(schedule.q) if cfg.nonlinear else None,
        nonlinear=cfg.nonlinear,
    )
    if not spec.modes:
        return Trajectory(obs.grid.dim, cfg.time_grid().nodes, (), np.zeros((len(cfg.time_grid().nodes), 0)))
    return backward_regularized_solve(h_hat, g_hat, spec, cfg.time_grid())


def errors_at(estimate: Trajectory, truth: Trajectory, m: int) -> tuple[float, float]:
    """(squared L2 error, squared H1 error) at node m, by Parseval."""
    modes = tuple(sorted(set(estimate.modes) | set(truth.modes)))
    diff = estimate.on_modes(modes)[m] - truth.on_modes(modes)[m]
    lam = np.array([eigenvalue(p) for p in modes], dtype=float)
    return math.fsum(diff**2), math.fsum(lam * diff**2)


def _run_cell(args):
    cfg, truth, n, eps, replicate, schedule = args
    grid = DesignGrid(cfg.grid_counts(n))
    obs = simulate_observations(cfg, truth, grid, eps, replicate)
    est = backward_from_observations(cfg, obs, schedule)
    step = cfg.time_grid().dt
    rows = []
    for t in cfg.times:
        m = int(round(t / step))
        l2, h1 = errors_at(est, truth.trajectory, m)
        rows.append(
            {
                "n": int(np.prod(grid.counts)) if cfg.d > 1 else grid.counts[0],
                "eps": eps,
                "replicate": replicate,
                "t": float(t),
                "l2_err": l2,
                "h1_err": h1,
                "rate_l2": theoretical_rate_L2(t, schedule),
                "rate_h1": theoretical_rate_H1(t, schedule),
                "seed": cfg.seed,
                "rejections": obs.coefficient.rejections,
            }
        )
    return rows


# --- studies -----------------------------------------------------------------


@dataclass
class ExperimentReport:
    config: dict
    rows: list
    summary: list
    schedules: list
    metadata: dict


def _mean_se(values):
    values = list(values)
    mean = math.fsum(values) / len(values)
    if len(values) < 2:
        return mean, 0.0
    var = math.fsum((v - mean) ** 2 for v in values) / (len(values) - 1)
    return mean, math.sqrt(var / len(values))


def build_schedules(cfg: ExperimentConfig):
    out = []
    for n in cfg.counts:
        for eps in cfg.eps:
            s = cfg.schedule(n, eps)
            out.append((n, eps, s, admissibility_check(s)))
    return out


def run_mise_study(cfg: ExperimentConfig) -> ExperimentReport:
    """Reconstruction errors for every (n, eps, replicate, t) and their means.

    All schedules are checked before any replicate runs.  With
    ``enforce_admissibility`` set an inadmissible schedule aborts the study;
    otherwise it is recorded in the schedule echo and the study proceeds.
    """
    started = time.perf_counter()
    schedules = build_schedules(cfg)
    failing = [(n, eps, a) for n, eps, _, a in schedules if not a.ok]
    if failing and cfg.enforce_admissibility:
        reasons = [f"n={n} eps={eps}: {r}" for n, eps, a in failing for r in a.reasons]
        raise ScheduleError("inadmissible schedule", reasons)
    for n, eps, s, _ in schedules:
        if math.isnan(s.q) and cfg.nonlinear:
            raise ScheduleError(
                "no truncation level exists for this schedule",
                [f"n={n} eps={eps}: pi_bar={s.pi_bar:.6g} >= 1"],
            )

    truth = solve_truth(cfg)
    tasks = [
        (cfg, truth, n, eps, r, s)
        for n, eps, s, _ in schedules
        for r in range(cfg.replicates)
    ]
    if cfg.workers > 1:
        with ProcessPoolExecutor(cfg.workers) as pool:
            chunks = list(pool.map(_run_cell, tasks, chunksize=max(1, len(tasks) // (4 * cfg.workers))))
    else:
        chunks = [_run_cell(task) for task in tasks]
    rows = [row for chunk in chunks for row in chunk]
    rows.sort(key=lambda r: (cfg.counts.index(_count_key(cfg, r["n"])), cfg.eps.index(r["eps"]), r["t"], r["replicate"]))

    summary = []
    for n, eps, s, adm in schedules:
        for t in cfg.times:
            cell = [r for r in rows if _count_key(cfg, r["n"]) == n and r["eps"] == eps and r["t"] == float(t)]
            l2_mean, l2_se = _mean_se(r["l2_err"] for r in cell)
            h1_mean, h1_se = _mean_se(r["h1_err"] for r in cell)
            summary.append(
                {
                    "n": cell[0]["n"], "eps": eps, "t": float(t),
                    "l2_mean": l2_mean, "l2_se": l2_se, "h1_mean": h1_mean, "h1_se": h1_se,
                    "rate_l2": cell[0]["rate_l2"], "rate_h1": cell[0]["rate_h1"],
                    "admissible": adm.ok,
                }
            )
    schedule_echo = [
        {**s.as_dict(), "admissible": a.ok, "violations": list(a.reasons)} for _, _, s, a in schedules
    ]
    meta = {
        "seed": cfg.seed,
        "version": __version__,
        "wall_time": time.perf_counter() - started,
        "truth_modes": len(truth.trajectory.modes),
    }
    return ExperimentReport(cfg.to_dict(), rows, summary, schedule_echo, meta)


def _count_key(cfg, n_value):
    for n in cfg.counts:
        counts = cfg.grid_counts(n)
        if (counts[0] if cfg.d == 1 else int(np.prod(counts))) == n_value:
            return n
    raise KeyError(n_value)


def run_convergence_table(cfg: ExperimentConfig) -> list[dict]:
    """Estimator-only study: MISE of the final-data estimate against the bound.

    The final datum is the ``u0`` recipe itself (no PDE), so the truth is
    spectrally exact and the noise-free MISE is precisely the truncation tail.
    """
    H = truth_u0(cfg)
    h_norm = sobolev_norm(H, cfg.mu0)
    noise = cfg.noise_spec(0.0)
    out = []
    for n in cfg.counts:
        counts = cfg.grid_counts(n)
        grid = DesignGrid(counts)
        est = cfg.estimator_config(n)
        exact = synthesize_on_grid(H, grid)
        zero_source = np.zeros((grid.size, 1))
        errs = []
        for r in range(cfg.replicates):
            final = sample_final_observations(exact, noise, r)
            obs = GridObservations(grid, final, np.zeros(1), zero_source)
            errs.append(empirical_mise(reconstruct_final(obs, est), H))
        mean, se = _mean_se(errs)
        bound = mise_bound_final(est, counts, h_norm, cfg.v_max)
        out.append(
            {
                "n": counts[0] if cfg.d == 1 else int(np.prod(counts)),
                "beta": est.beta,
                "modes": len(mode_set(cfg.d, est.beta)),
                "mise_mean": mean,
                "mise_se": se,
                "bound": bound,
                "ratio": mean / bound if bound > 0 else math.nan,
            }
        )
    return out


# --- output ------------------------------------------------------------------


def report_csv(report: ExperimentReport) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(CSV_COLUMNS)
    for row in report.rows:
        writer.writerow([fmt(row[c]) for c in CSV_COLUMNS])
    return buf.getvalue()


def _jsonable(obj):
    if isinstance(obj, dict):
        return {k: _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        return fmt(x) if not math.isfinite(x) else float(fmt(x))
    return obj


def report_json(report: ExperimentReport, include_timing: bool = False) -> str:
    meta = dict(report.metadata)
    if not include_timing:
        meta.pop("wall_time", None)
    payload = {
        "config": report.config,
        "schedules": report.schedules,
        "summary": report.summary,
        "rows": report.rows,
        "metadata": meta,
    }
    return json.dumps(_jsonable(payload), indent=1, sort_keys=False) + "\n"


def table_csv(rows: Sequence[dict]) -> str:
    if not rows:
        return ""
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    columns = list(rows[0])
    writer.writerow(columns)
    for row in rows:
        writer.writerow([fmt(row[c]) for c in columns])
    return buf.getvalue()


def emit_report(report: ExperimentReport, fmt_: str, path) -> None:
    """Write the report; identical reports give byte-identical files.

    Wall time is kept out of the file so reruns compare equal.
    """
    if fmt_ == "csv":
        text = report_csv(report)
    elif fmt_ == "json":
        text = report_json(report)
    else:
        raise ValueError(f"unknown format {fmt_!r}")
    Path(path).write_text(text)
