"""Stabilizing operator pair, truncated cubic nonlinearity and its
pseudo-spectral evaluation.

Sign convention: ``P`` acts on mode ``p`` as multiplication by the positive
number ``A1 * lambda_p**frac_beta``, i.e. ``P = A1 (-Laplace)^frac_beta``.  The
bounded counterpart ``P_rho`` keeps only modes with ``lambda_p**frac_beta <= rho/A1``,
so ``||P_rho v|| <= rho ||v||``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .spectral import (
    DesignGrid,
    MultiIndex,
    SpectralField,
    analyze,
    basis_matrix,
    eigenvalue,
    log_gevrey_norm,
)


@dataclass(frozen=True)
class OperatorBand:
    a0: float
    a1: float
    rho: float
    frac_beta: float = 1.0

    def __post_init__(self):
        if not 0 < self.a0 < self.a1:
            raise ValueError("need 0 < a0 < a1")
        if self.rho < 0:
            raise ValueError("rho must be nonnegative")
        if self.frac_beta <= 0:
            raise ValueError("frac_beta must be positive")

    def symbol(self, p: Sequence[int]) -> float:
        """lambda_p ** frac_beta."""
        return float(eigenvalue(p)) ** self.frac_beta

    def kept(self, p: Sequence[int]) -> bool:
        return self.a1 * self.symbol(p) <= self.rho

    def kept_mask(self, modes: Sequence[MultiIndex]) -> np.ndarray:
        return np.array([self.kept(p) for p in modes], dtype=bool)


@dataclass(frozen=True)
class TruncationLevel:
    q: float

    def __post_init__(self):
        if not self.q > 0:
            raise ValueError("Q must be positive")

    @property
    def lipschitz(self) -> float:
        return 2.0 + 6.0 * self.q**2


def apply_P(v: SpectralField, band: OperatorBand) -> SpectralField:
    return SpectralField(v.dim, {p: band.a1 * band.symbol(p) * c for p, c in v.coeffs.items()})


def apply_P_trunc(v: SpectralField, band: OperatorBand) -> SpectralField:
    return SpectralField(
        v.dim,
        {p: band.a1 * band.symbol(p) * c for p, c in v.coeffs.items() if band.kept(p)},
    )


@dataclass(frozen=True)
class TailCheck:
    actual: float
    bound: float
    finite: bool

    @property
    def holds(self) -> bool:
        return self.actual <= self.bound


def trunc_error_bound(v: SpectralField, band: OperatorBand, gamma: float, T: float) -> TailCheck:
    """Exact ``||P v - P_rho v||`` next to ``A1 rho^-gamma e^(-T rho) ||v||_{Z_{gamma, T A1}}``.

    The right side is assembled in log space, so it stays finite whenever the
    bound itself is representable even if the Gevrey norm alone would
    overflow.  ``finite`` is False only when the bound is genuinely beyond
    double range; ``holds`` is then trivially true.
    """
    tail = [band.a1 * band.symbol(p) * c for p, c in v.coeffs.items() if not band.kept(p)]
    actual = math.sqrt(math.fsum(x * x for x in tail))
    log_norm = log_gevrey_norm(v, gamma, T * band.a1)
    if log_norm == -math.inf:
        return TailCheck(actual, 0.0, True)
    if band.rho == 0:
        log_rho_term = math.inf if gamma > 0 else 0.0
    else:
        log_rho_term = -gamma * math.log(band.rho)
    log_bound = math.log(band.a1) + log_rho_term - T * band.rho + log_norm
    if log_bound > math.log(np.finfo(float).max):
        return TailCheck(actual, math.inf, False)
    return TailCheck(actual, math.exp(log_bound), True)


def truncated_nonlinearity(u, q: TruncationLevel | float):
    """u - u^3 on [-Q, Q], held constant outside; odd and continuous.

    ``Q = inf`` gives the plain cubic.  Works elementwise on arrays.
    """
    Q = q.q if isinstance(q, TruncationLevel) else float(q)
    u = np.asarray(u, dtype=float)
    clipped = np.clip(u, -Q, Q) if math.isfinite(Q) else u
    out = clipped - clipped**3
    return float(out) if out.ndim == 0 else out


def collocation_grid(modes: Sequence[MultiIndex], dim: int) -> DesignGrid:
    """Smallest grid on which the cubic of a field on ``modes`` projects exactly."""
    top = [max((p[k] for p in modes), default=0) for k in range(dim)]
    return DesignGrid(tuple(2 * m + 1 for m in top))


def check_collocation(modes: Sequence[MultiIndex], grid: DesignGrid):
    for k in range(grid.dim):
        top = max((p[k] for p in modes), default=0)
        if grid.counts[k] < 2 * top + 1:
            raise ValueError(
                f"collocation grid has {grid.counts[k]} points on axis {k}; "
                f"need at least {2 * top + 1} for modes up to {top}"
            )


class Nonlinearity:
    """F_Q(u) projected back onto a fixed mode list, with cached basis tables."""

    def __init__(self, modes: Sequence[MultiIndex], dim: int, q=math.inf, grid: DesignGrid | None = None):
        self.modes = tuple(tuple(p) for p in modes)
        self.grid = grid if grid is not None else collocation_grid(self.modes, dim)
        check_collocation(self.modes, self.grid)
        self.q = q.q if isinstance(q, TruncationLevel) else float(q)
        self._basis = basis_matrix(self.modes, self.grid)
        self._weighted = self.grid.weight * self._basis

    def __call__(self, coeffs: np.ndarray) -> np.ndarray:
        u = coeffs @ self._basis
        return self._weighted @ truncated_nonlinearity(u, self.q)


def nonlinearity_field(
    u: SpectralField,
    q: TruncationLevel | float,
    grid: DesignGrid | None = None,
    modes: Sequence[MultiIndex] | None = None,
) -> SpectralField:
    """F_Q(u) on ``modes`` (default: the support of ``u``).

    ``grid`` must have at least ``2 m + 1`` points on every axis where ``m`` is
    the largest component present; then retained coefficients of ``u - u^3``
    are exact.
    """
    modes = tuple(modes) if modes is not None else u.modes()
    support = tuple(sorted(set(modes) | set(u.modes())))
    grid = grid if grid is not None else collocation_grid(support, u.dim)
    check_collocation(support, grid)
    values = u.values(support) @ basis_matrix(support, grid)
    Q = q.q if isinstance(q, TruncationLevel) else float(q)
    coeffs = analyze(truncated_nonlinearity(values, Q), grid, modes)
    return SpectralField.from_arrays(u.dim, modes, coeffs)
