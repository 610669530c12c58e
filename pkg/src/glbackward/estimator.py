"""Series estimators of the final datum and the source from grid data, and the
closed-form MISE bounds that go with them.

The constant ``c_mu`` in the bounds is not determined by the construction; it
is a user input.  Absolute bound levels scale with it, rates do not.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .noise import GridObservations
from .spectral import SpectralField, Trajectory, analyze, ball_volume_factor, mode_set


@dataclass(frozen=True)
class EstimatorConfig:
    beta: float
    mu: tuple[float, ...] = (1.0,)
    mu0: float = 1.0
    c_mu: float = 1.0

    def __post_init__(self):
        mu = tuple(float(m) for m in np.atleast_1d(self.mu))
        object.__setattr__(self, "mu", mu)
        if self.beta < 0:
            raise ValueError("beta must be nonnegative")
        if any(m <= 0.5 for m in mu):
            raise ValueError("every smoothness index mu_k must exceed 1/2")
        if self.mu0 < len(mu) * max(mu):
            raise ValueError("mu0 must be at least d * max(mu)")
        if self.c_mu <= 0:
            raise ValueError("c_mu must be positive")

    def mu_for(self, d: int) -> tuple[float, ...]:
        if len(self.mu) == d:
            return self.mu
        if len(self.mu) == 1:
            return self.mu * d
        raise ValueError(f"{len(self.mu)} smoothness indices for dimension {d}")


def reconstruct_final(obs: GridObservations, cfg: EstimatorConfig) -> SpectralField:
    modes = mode_set(obs.grid.dim, cfg.beta).members
    coeffs = analyze(obs.final_data, obs.grid, modes)
    return SpectralField.from_arrays(obs.grid.dim, modes, coeffs)


def reconstruct_source(obs: GridObservations, cfg: EstimatorConfig) -> Trajectory:
    """Source estimate, independently at each observation time node."""
    modes = mode_set(obs.grid.dim, cfg.beta).members
    coeffs = analyze(obs.source_paths, obs.grid, modes)  # (modes, times)
    return Trajectory(obs.grid.dim, obs.time_nodes, modes, coeffs.T.reshape(obs.time_nodes.size, len(modes)))


def empirical_mise(estimate: SpectralField, truth: SpectralField) -> float:
    """Squared L2 distance by Parseval, over the union of both supports."""
    diff = estimate - truth
    return math.fsum(c * c for c in diff.coeffs.values())


def empirical_source_error(estimate: Trajectory, truth: Trajectory) -> float:
    """max over the shared time nodes of the squared L2 error.

    The sup in time is taken over the discrete nodes only.
    """
    if estimate.times.shape != truth.times.shape or not np.allclose(estimate.times, truth.times):
        raise ValueError("estimate and truth must share time nodes")
    modes = tuple(sorted(set(estimate.modes) | set(truth.modes)))
    diff = estimate.on_modes(modes) - truth.on_modes(modes)
    return float(np.max(np.sum(diff**2, axis=1)))


def _prod_n_pow(n: Sequence[int], mu: Sequence[float]) -> float:
    return math.prod(float(nk) ** (-4.0 * m) for nk, m in zip(n, mu))


def _tail_term(cfg: EstimatorConfig, norm: float) -> float:
    if norm == 0:
        return 0.0
    if cfg.beta == 0:
        return math.inf
    return 4 * cfg.beta ** (-cfg.mu0) * norm**2


def mise_bound_terms(cfg: EstimatorConfig, n: Sequence[int], h_norm: float, v_max: float):
    """(variance term, bias term) of the L2 bound; their sum is :func:`mise_bound_final`."""
    n = tuple(n)
    d = len(n)
    vol = ball_volume_factor(d)
    c_bar = 8 * math.pi**d * v_max**2 * vol + 8 * cfg.c_mu**2 * vol * h_norm**2
    first = c_bar * cfg.beta ** (d / 2) * _prod_n_pow(n, cfg.mu_for(d))
    second = _tail_term(cfg, h_norm)
    return first, second


def mise_bound_final(cfg: EstimatorConfig, n: Sequence[int], h_norm: float, v_max: float) -> float:
    """C_bar beta^(d/2) prod n_k^(-4 mu_k) + 4 beta^(-mu0) ||H||^2.

    ``h_norm`` is the H^{mu0} norm of the final datum.  The same expression
    bounds the source error with the source norm in place of ``h_norm``.
    """
    return sum(mise_bound_terms(cfg, n, h_norm, v_max))


def h1_data_bound_terms(cfg, n, h_norm_mu0, h_norm_mu0p1, v_max):
    n = tuple(n)
    d = len(n)
    vol = ball_volume_factor(d)
    growth = cfg.beta ** ((d + 2) / 2)
    noise = 8 * math.pi**d * v_max**2 * vol * growth / math.prod(n)
    aliasing = 8 * cfg.c_mu**2 * vol * h_norm_mu0**2 * growth * _prod_n_pow(n, cfg.mu_for(d))
    tail = _tail_term(cfg, h_norm_mu0p1)
    return noise, aliasing, tail


def h1_data_bound(cfg: EstimatorConfig, n, h_norm_mu0: float, h_norm_mu0p1: float, v_max: float) -> float:
    """Bound on E||H_hat - H||^2 in H^1 (noise + aliasing + tail)."""
    return sum(h1_data_bound_terms(cfg, n, h_norm_mu0, h_norm_mu0p1, v_max))
