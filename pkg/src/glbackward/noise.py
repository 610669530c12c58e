"""Observation models: noisy final data, Brownian source noise and a noisy
diffusion coefficient.

Every draw comes from its own stream keyed by ``(seed, purpose, replicate)``,
so replicate ``r`` sees the same numbers no matter how many replicates run or
in which order.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import RejectionError
from .spectral import DesignGrid

FINAL, SOURCE, COEFFICIENT = 0, 1, 2

MAX_REJECTIONS = 1000


def stream(seed: int, purpose: int, replicate: int = 0) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence([int(seed), purpose, int(replicate)]))


@dataclass(frozen=True)
class NoiseSpec:
    """Noise scales.

    ``lambda_levels`` is either a scalar applied at every grid point or an
    array with one entry per point; ``None`` means the constant ``v_max``.
    """

    v_max: float = 1.0
    vartheta: float = 0.0
    eps: float = 0.0
    seed: int = 0
    lambda_levels: float | np.ndarray | None = None

    def __post_init__(self):
        if self.v_max < 0:
            raise ValueError("v_max must be nonnegative")
        if not 0 <= self.vartheta <= self.v_max:
            raise ValueError("vartheta must lie in [0, v_max]")
        if self.eps < 0:
            raise ValueError("eps must be nonnegative")
        if self.lambda_levels is not None:
            levels = np.asarray(self.lambda_levels, dtype=float)
            if np.any(levels < 0) or np.any(levels > self.v_max):
                raise ValueError("noise levels must lie in [0, v_max]")

    def levels(self, size: int) -> np.ndarray:
        if self.lambda_levels is None:
            return np.full(size, float(self.v_max))
        levels = np.asarray(self.lambda_levels, dtype=float)
        if levels.ndim == 0:
            return np.full(size, float(levels))
        levels = levels.ravel()
        if levels.size != size:
            raise ValueError(f"{levels.size} noise levels given for {size} grid points")
        return levels


@dataclass(frozen=True)
class CoefficientPath:
    """Diffusion coefficient sampled at increasing times, linear in between."""

    time_nodes: np.ndarray
    values: np.ndarray
    rejections: int = 0

    def __post_init__(self):
        t = np.asarray(self.time_nodes, dtype=float)
        v = np.asarray(self.values, dtype=float)
        if t.ndim != 1 or t.shape != v.shape or t.size < 1:
            raise ValueError("time_nodes and values must be 1-d arrays of equal length")
        if np.any(np.diff(t) <= 0):
            raise ValueError("time nodes must be strictly increasing")
        object.__setattr__(self, "time_nodes", t)
        object.__setattr__(self, "values", v)

    @classmethod
    def constant(cls, value: float, time_nodes) -> CoefficientPath:
        t = np.asarray(time_nodes, dtype=float)
        return cls(t, np.full(t.shape, float(value)))

    def __call__(self, t):
        return np.interp(t, self.time_nodes, self.values)

    @property
    def sup(self) -> float:
        return float(np.max(np.abs(self.values)))

    def within(self, a0: float, a1: float) -> bool:
        return a0 <= self.sup < a1

    def integral(self, a: float, b: float) -> float:
        """Exact integral of the piecewise-linear interpolant over [a, b]."""
        t, v = self.time_nodes, self.values
        if a == b:
            return 0.0
        if a > b:
            return -self.integral(b, a)
        inner = t[(t > a) & (t < b)]
        knots = np.concatenate(([a], inner, [b]))
        vals = np.interp(knots, t, v)
        return float(np.sum(0.5 * (vals[1:] + vals[:-1]) * np.diff(knots)))


@dataclass(frozen=True)
class GridObservations:
    grid: DesignGrid
    final_data: np.ndarray
    time_nodes: np.ndarray
    source_paths: np.ndarray
    coefficient: CoefficientPath | None = field(default=None)

    def __post_init__(self):
        final = np.asarray(self.final_data, dtype=float).ravel()
        t = np.asarray(self.time_nodes, dtype=float)
        src = np.asarray(self.source_paths, dtype=float)
        if final.size != self.grid.size:
            raise ValueError("one final observation per grid point is required")
        if src.shape != (self.grid.size, t.size):
            raise ValueError(
                f"source paths of shape {src.shape}, expected {(self.grid.size, t.size)}"
            )
        object.__setattr__(self, "final_data", final)
        object.__setattr__(self, "time_nodes", t)
        object.__setattr__(self, "source_paths", src)


def _check_time_nodes(time_nodes) -> np.ndarray:
    t = np.asarray(time_nodes, dtype=float)
    if t.ndim != 1 or t.size < 1:
        raise ValueError("time nodes must be a nonempty 1-d array")
    if t[0] != 0.0:
        raise ValueError("time nodes must start at 0")
    if np.any(np.diff(t) <= 0):
        raise ValueError("time nodes must be strictly increasing")
    return t


def brownian_paths(rng: np.random.Generator, time_nodes, count: int) -> np.ndarray:
    """``count`` independent Brownian paths at ``time_nodes``, shape (count, M)."""
    t = _check_time_nodes(time_nodes)
    steps = rng.standard_normal((count, t.size - 1)) * np.sqrt(np.diff(t))
    paths = np.zeros((count, t.size))
    np.cumsum(steps, axis=1, out=paths[:, 1:])
    return paths


def sample_final_observations(H_values, spec: NoiseSpec, replicate: int = 0) -> np.ndarray:
    """D_i = H(x_i) + Lambda_i * Upsilon_i with standard normal Upsilon_i."""
    H = np.asarray(H_values, dtype=float).ravel()
    levels = spec.levels(H.size)
    noise = stream(spec.seed, FINAL, replicate).standard_normal(H.size)
    return H + levels * noise


def sample_source_observations(G_values, spec: NoiseSpec, time_nodes, replicate: int = 0) -> np.ndarray:
    """G_i(t_m) = G(x_i, t_m) + vartheta * Psi_i(t_m), Psi_i independent Brownian motions."""
    t = _check_time_nodes(time_nodes)
    G = np.asarray(G_values, dtype=float)
    if G.ndim != 2 or G.shape[1] != t.size:
        raise ValueError("G_values must have shape (grid points, time nodes)")
    psi = brownian_paths(stream(spec.seed, SOURCE, replicate), t, G.shape[0])
    return G + spec.vartheta * psi


def sample_diffusion_path(
    truth: CoefficientPath,
    eps: float,
    spec: NoiseSpec,
    a0: float,
    a1: float,
    replicate: int = 0,
) -> CoefficientPath:
    """Lambda_eps(t) = Lambda(t) + eps * xi(t), xi a Brownian path.

    Draws that leave the band ``a0 <= sup|Lambda_eps| < a1`` are discarded and
    redrawn from the same stream; the returned path records how many were
    rejected.
    """
    if not 0 < a0 < a1:
        raise ValueError("need 0 < a0 < a1")
    if not a0 < truth.sup < a1:
        raise ValueError(
            f"true coefficient (sup {truth.sup:.6g}) must lie strictly inside [{a0}, {a1})"
        )
    if eps < 0:
        raise ValueError("eps must be nonnegative")
    if eps == 0:
        return CoefficientPath(truth.time_nodes, truth.values.copy())
    rng = stream(spec.seed, COEFFICIENT, replicate)
    for rejected in range(MAX_REJECTIONS):
        xi = brownian_paths(rng, truth.time_nodes, 1)[0]
        candidate = CoefficientPath(truth.time_nodes, truth.values + eps * xi, rejected)
        if candidate.within(a0, a1):
            return candidate
    raise RejectionError(
        f"{MAX_REJECTIONS} consecutive draws of the noisy coefficient left "
        f"[{a0}, {a1}); eps={eps} is too large for this band"
    )
