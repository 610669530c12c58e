"""Dirichlet sine eigenbasis on (0, pi)^d, midpoint design grids and norms.

Every function on the box is carried as a :class:`SpectralField`, a sparse map
from multi-indices ``p = (p_1, ..., p_d)`` (all components >= 1) to the
coefficient of the orthonormal eigenfunction

    psi_p(x) = (2/pi)^(d/2) * prod_k sin(p_k x_k),   -Laplace psi_p = |p|^2 psi_p.

Midpoint quadrature on the design grid is exact for ``psi_p * psi_q`` as long
as every component of ``p`` and ``q`` is at most ``n_k - 1``.  Above that the
sampled sines alias: on a grid of ``n`` points ``sin((2n - q) x_i) = sin(q x_i)``
and ``sin((2n + q) x_i) = -sin(q x_i)``, while index ``n`` itself samples to
``(-1)^(i+1)`` and carries discrete norm 2.  The estimators evaluate the
quadrature for every index in a ball regardless, so the identity is documented
here rather than forbidden.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from itertools import product
from typing import Iterable, Mapping, Sequence

import numpy as np

MultiIndex = tuple[int, ...]

_NORMALIZATION = math.sqrt(2.0 / math.pi)


def _check_index(p: Sequence[int], dim: int | None = None) -> MultiIndex:
    p = tuple(int(c) for c in p)
    if not p:
        raise ValueError("multi-index must have at least one component")
    if any(c < 1 for c in p):
        raise ValueError(f"multi-index components must be >= 1, got {p}")
    if dim is not None and len(p) != dim:
        raise ValueError(f"multi-index {p} does not have dimension {dim}")
    return p


def eigenvalue(p: Sequence[int]) -> int:
    """|p|^2, exact in integer arithmetic."""
    return sum(int(c) * int(c) for c in p)


@dataclass(frozen=True)
class SpectralField:
    """Finite sine expansion; missing keys are zero coefficients."""

    dim: int
    coeffs: Mapping[MultiIndex, float] = field(default_factory=dict)

    def __post_init__(self):
        if self.dim < 1:
            raise ValueError("dimension must be >= 1")
        clean = {}
        for p, c in self.coeffs.items():
            clean[_check_index(p, self.dim)] = float(c)
        object.__setattr__(self, "coeffs", clean)

    @classmethod
    def zero(cls, dim: int) -> SpectralField:
        return cls(dim, {})

    @classmethod
    def from_arrays(cls, dim: int, modes: Sequence[MultiIndex], values) -> SpectralField:
        values = np.asarray(values, dtype=float)
        if values.shape != (len(modes),):
            raise ValueError("one value per mode is required")
        return cls(dim, dict(zip((tuple(m) for m in modes), values.tolist())))

    def modes(self) -> tuple[MultiIndex, ...]:
        return tuple(sorted(self.coeffs))

    def values(self, modes: Sequence[MultiIndex]) -> np.ndarray:
        """Coefficients on ``modes`` in order, zero where absent."""
        return np.array([self.coeffs.get(tuple(m), 0.0) for m in modes], dtype=float)

    def __getitem__(self, p) -> float:
        if isinstance(p, int):
            p = (p,)
        return self.coeffs.get(tuple(p), 0.0)

    def __sub__(self, other: SpectralField) -> SpectralField:
        if other.dim != self.dim:
            raise ValueError("dimension mismatch")
        keys = set(self.coeffs) | set(other.coeffs)
        return SpectralField(self.dim, {p: self[p] - other[p] for p in keys})

    def l2_norm(self) -> float:
        return sobolev_norm(self, 0.0)


@dataclass(frozen=True)
class DesignGrid:
    """Tensor midpoint grid x_{i_k} = pi (2 i_k - 1) / (2 n_k)."""

    counts: tuple[int, ...]

    def __post_init__(self):
        counts = tuple(int(n) for n in self.counts)
        if not counts or any(n < 1 for n in counts):
            raise ValueError(f"grid counts must be positive integers, got {self.counts}")
        object.__setattr__(self, "counts", counts)

    @property
    def dim(self) -> int:
        return len(self.counts)

    @property
    def size(self) -> int:
        return math.prod(self.counts)

    @property
    def axes(self) -> tuple[np.ndarray, ...]:
        return tuple(np.pi * (2.0 * np.arange(1, n + 1) - 1.0) / (2.0 * n) for n in self.counts)

    @property
    def points(self) -> np.ndarray:
        """All grid points, shape (size, d), lexicographic in the index i."""
        mesh = np.meshgrid(*self.axes, indexing="ij")
        return np.stack([m.ravel() for m in mesh], axis=-1)

    @property
    def weight(self) -> float:
        return math.pi ** self.dim / self.size


def design_grid(counts: int | Sequence[int]) -> DesignGrid:
    if isinstance(counts, (int, np.integer)):
        counts = (int(counts),)
    return DesignGrid(tuple(counts))


def eigenfunction_eval(p: Sequence[int], x) -> float:
    p = _check_index(p)
    x = np.atleast_1d(np.asarray(x, dtype=float))
    if x.shape != (len(p),):
        raise ValueError(f"point of dimension {x.size} does not match index {p}")
    # sin(k pi) is not exactly zero in floating point
    on_boundary = np.any((x == 0.0) | (x == np.pi))
    if on_boundary:
        return 0.0
    return float(_NORMALIZATION ** len(p) * np.prod(np.sin(np.asarray(p) * x)))


@dataclass(frozen=True)
class ModeSet:
    """Ball {p : |p|^2 <= beta}, members in lexicographic order."""

    dim: int
    beta: float
    members: tuple[MultiIndex, ...]

    def __len__(self):
        return len(self.members)

    def __iter__(self):
        return iter(self.members)

    def __contains__(self, p) -> bool:
        return tuple(p) in set(self.members)

    @property
    def eigenvalues(self) -> np.ndarray:
        return np.array([eigenvalue(p) for p in self.members], dtype=float)

    @property
    def max_component(self) -> int:
        return max((max(p) for p in self.members), default=0)


def mode_set(d: int, beta: float) -> ModeSet:
    if d < 1:
        raise ValueError("dimension must be >= 1")
    if beta < 0:
        raise ValueError("beta must be nonnegative")

    members: list[MultiIndex] = []

    def extend(prefix: tuple[int, ...], budget: float):
        remaining = d - len(prefix)
        if remaining == 0:
            members.append(prefix)
            return
        # the other remaining-1 components need at least 1 each
        top = math.isqrt(int(math.floor(budget - (remaining - 1)))) if budget >= remaining else 0
        for c in range(1, top + 1):
            extend(prefix + (c,), budget - c * c)

    extend((), float(beta))
    return ModeSet(d, float(beta), tuple(members))


def ball_volume_factor(d: int) -> float:
    """2 pi^(d/2) / (d Gamma(d/2)), the volume of the unit d-ball."""
    return 2.0 * math.pi ** (d / 2) / (d * math.gamma(d / 2))


def mode_count_bound(d: int, beta: float) -> float:
    """Upper bound on card{p : |p|^2 <= beta}."""
    return ball_volume_factor(d) * beta ** (d / 2)


def basis_matrix(modes: Sequence[MultiIndex], grid: DesignGrid) -> np.ndarray:
    """psi_p at every grid point, shape (len(modes), grid.size)."""
    modes = list(modes)
    if not modes:
        return np.zeros((0, grid.size))
    idx = np.asarray(modes, dtype=int)
    if idx.shape[1] != grid.dim:
        raise ValueError("mode dimension does not match grid")
    out = np.ones((len(modes),) + grid.counts)
    for k, axis in enumerate(grid.axes):
        shape = [len(modes)] + [1] * grid.dim
        shape[k + 1] = axis.size
        out = out * np.sin(np.outer(idx[:, k], axis)).reshape(shape)
    return (_NORMALIZATION ** grid.dim) * out.reshape(len(modes), grid.size)


def _flatten_samples(samples, grid: DesignGrid) -> np.ndarray:
    samples = np.asarray(samples, dtype=float)
    if samples.shape[: grid.dim] == grid.counts and samples.ndim >= grid.dim:
        return samples.reshape((grid.size,) + samples.shape[grid.dim:])
    if samples.shape[:1] == (grid.size,):
        return samples
    raise ValueError(
        f"samples of shape {samples.shape} do not cover the grid {grid.counts}"
    )


def analyze(samples, grid: DesignGrid, modes: Sequence[MultiIndex]) -> np.ndarray:
    """Quadrature coefficients (pi^d / prod n) sum_i f(x_i) psi_p(x_i) for all modes.

    ``samples`` may carry trailing axes (e.g. time); the result then has shape
    ``(len(modes),) + trailing``.
    """
    flat = _flatten_samples(samples, grid)
    return grid.weight * (basis_matrix(modes, grid) @ flat)


def quadrature_coefficient(samples, grid: DesignGrid, p: Sequence[int]) -> float:
    p = _check_index(p, grid.dim)
    return float(analyze(samples, grid, [p])[0])


def synthesize(f: SpectralField, x) -> float:
    x = np.atleast_1d(np.asarray(x, dtype=float))
    if x.shape != (f.dim,):
        raise ValueError("point dimension does not match field")
    return float(sum(c * eigenfunction_eval(p, x) for p, c in f.coeffs.items()))


def synthesize_on_grid(f: SpectralField, grid: DesignGrid) -> np.ndarray:
    """Field values at every grid point (flat, lexicographic)."""
    if f.dim != grid.dim:
        raise ValueError("field dimension does not match grid")
    modes = f.modes()
    return f.values(modes) @ basis_matrix(modes, grid)


def sobolev_norm(f: SpectralField, gamma: float) -> float:
    if gamma < 0:
        raise ValueError("gamma must be nonnegative")
    if not f.coeffs:
        return 0.0
    modes = f.modes()
    lam = np.array([eigenvalue(p) for p in modes], dtype=float)
    c = f.values(modes)
    return float(np.sqrt(np.sum(lam**gamma * c**2)))


def log_gevrey_norm(f: SpectralField, gamma: float, B: float) -> float:
    """log of :func:`gevrey_norm`, finite even where the norm overflows."""
    if gamma < 0 or B < 0:
        raise ValueError("gamma and B must be nonnegative")
    modes = [p for p in f.modes() if f.coeffs[p] != 0.0]
    if not modes:
        return -math.inf
    lam = np.array([eigenvalue(p) for p in modes], dtype=float)
    c = np.abs(f.values(modes))
    logs = (1.0 + gamma) * np.log(lam) + 2.0 * B * lam + 2.0 * np.log(c)
    top = logs.max()
    return float(0.5 * (top + np.log(np.sum(np.exp(logs - top)))))


def gevrey_norm(f: SpectralField, gamma: float, B: float) -> float:
    """sqrt(sum |p|^(2+2 gamma) e^(2 B |p|^2) c_p^2); inf when it overflows."""
    log_norm = log_gevrey_norm(f, gamma, B)
    if log_norm == -math.inf:
        return 0.0
    if log_norm > math.log(np.finfo(float).max):
        return math.inf
    return math.exp(log_norm)


@dataclass(frozen=True)
class Trajectory:
    """Coefficients of a field on fixed modes at a sequence of times.

    ``values[m, j]`` is the coefficient of ``modes[j]`` at ``times[m]``.
    """

    dim: int
    times: np.ndarray
    modes: tuple[MultiIndex, ...]
    values: np.ndarray

    def __post_init__(self):
        times = np.asarray(self.times, dtype=float)
        values = np.asarray(self.values, dtype=float)
        modes = tuple(_check_index(p, self.dim) for p in self.modes)
        if values.shape != (times.size, len(modes)):
            raise ValueError(
                f"values shape {values.shape} does not match "
                f"{times.size} times x {len(modes)} modes"
            )
        object.__setattr__(self, "times", times)
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "modes", modes)

    def __len__(self):
        return self.times.size

    def field(self, m: int) -> SpectralField:
        return SpectralField.from_arrays(self.dim, self.modes, self.values[m])

    def at(self, t: float) -> np.ndarray:
        """Coefficients at time t, linear in time between stored nodes."""
        if self.times.size == 1:
            return self.values[0].copy()
        return np.array(
            [np.interp(t, self.times, self.values[:, j]) for j in range(len(self.modes))]
        )

    def on_modes(self, modes: Sequence[MultiIndex]) -> np.ndarray:
        """Coefficient array re-indexed onto ``modes`` (zero where absent)."""
        lookup = {p: j for j, p in enumerate(self.modes)}
        out = np.zeros((self.times.size, len(modes)))
        for i, p in enumerate(modes):
            j = lookup.get(tuple(p))
            if j is not None:
                out[:, i] = self.values[:, j]
        return out


def iter_indices(counts: Iterable[int]):
    """Multi-indices of a box 1..n_k, lexicographic."""
    return product(*(range(1, n + 1) for n in counts))
