"""Spectral Galerkin solvers for the forward problem and the regularized
backward problem.

Both reduce to a diagonal modal system

    y_p' = a_p(s) y_p + N_p(y, s)

with ``a_p(s) = coef_p * Lambda(s) + shift_p``.  Each step integrates the
diagonal part exactly (``exp`` of the trapezoid integral of the piecewise-linear
coefficient path) and treats ``N`` with a two-stage exponential Heun update
(ETD2RK), which is second order in the step.

The backward problem is never stepped in negative time.  With
``V(tau) = U(T - tau)`` it becomes a forward problem from ``V(0) = H_hat``:

    kept modes     V_p' =  Lambda_eps(T - tau) lambda_p V_p - (F_Q(V) + G_hat)_p
    dropped modes  V_p' = (Lambda_eps(T - tau) - A1) lambda_p V_p - (F_Q(V) + G_hat)_p

where a mode is kept when ``A1 lambda_p <= rho``.  Kept modes grow by at most
``e^(rho T)``; dropped modes are damped since ``Lambda_eps < A1``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import BlowUpError
from .noise import CoefficientPath
from .operators import Nonlinearity, OperatorBand, TruncationLevel
from .spectral import DesignGrid, ModeSet, MultiIndex, SpectralField, Trajectory, eigenvalue

BLOW_UP = 1e12


@dataclass(frozen=True)
class TimeGrid:
    T: float
    steps: int

    def __post_init__(self):
        if not self.T > 0:
            raise ValueError("horizon T must be positive")
        if self.steps < 1:
            raise ValueError("need at least one time step")

    @classmethod
    def from_dt(cls, T: float, dt: float) -> TimeGrid:
        steps = round(T / dt)
        if steps < 1 or not math.isclose(steps * dt, T, rel_tol=1e-9):
            raise ValueError(f"dt={dt} does not divide T={T}")
        return cls(T, steps)

    @property
    def dt(self) -> float:
        return self.T / self.steps

    @property
    def nodes(self) -> np.ndarray:
        return np.linspace(0.0, self.T, self.steps + 1)


@dataclass(frozen=True)
class SolveSpec:
    """Everything a solve needs besides the initial/final datum.

    ``trunc=None`` means no truncation (Q = inf).  ``source=None`` means no
    source.  ``band`` is required for the backward solve and ignored forward
    except for ``frac_beta``.
    """

    modes: tuple[MultiIndex, ...]
    coefficient: CoefficientPath
    band: OperatorBand | None = None
    trunc: TruncationLevel | None = None
    nonlinear: bool = True
    source: Trajectory | None = None
    collocation: DesignGrid | None = None

    def __post_init__(self):
        modes = self.modes.members if isinstance(self.modes, ModeSet) else self.modes
        modes = tuple(tuple(int(c) for c in p) for p in modes)
        if len({len(p) for p in modes}) > 1:
            raise ValueError("modes of mixed dimension")
        object.__setattr__(self, "modes", modes)

    @property
    def dim(self) -> int:
        return len(self.modes[0]) if self.modes else 0

    @property
    def frac_beta(self) -> float:
        return self.band.frac_beta if self.band is not None else 1.0

    @property
    def q(self) -> float:
        return self.trunc.q if self.trunc is not None else math.inf

    def symbols(self) -> np.ndarray:
        return np.array([float(eigenvalue(p)) ** self.frac_beta for p in self.modes])

    def source_on_modes(self) -> Trajectory | None:
        if self.source is None:
            return None
        return Trajectory(self.dim, self.source.times, self.modes, self.source.on_modes(self.modes))


def _phi1(z):
    z = np.asarray(z, dtype=float)
    small = np.abs(z) < 1e-5
    safe = np.where(small, 1.0, z)
    return np.where(small, 1.0 + z / 2 + z * z / 6, np.expm1(safe) / safe)


def _phi2(z):
    z = np.asarray(z, dtype=float)
    small = np.abs(z) < 1e-3
    safe = np.where(small, 1.0, z)
    return np.where(small, 0.5 + z / 6 + z * z / 24 + z**3 / 120, (np.expm1(safe) - safe) / safe**2)


class ModalSystem:
    """y' = (coef * Lambda(t_of(s)) + shift) y + sign * (F_Q(y) + G(t_of(s)))."""

    def __init__(self, spec: SolveSpec, coef, shift, sign: float, reverse_T: float | None):
        self.spec = spec
        self.coef = np.asarray(coef, dtype=float)
        self.shift = np.asarray(shift, dtype=float)
        self.sign = sign
        self.reverse_T = reverse_T
        self.source = spec.source_on_modes()
        self.nonlinearity = (
            Nonlinearity(spec.modes, spec.dim, spec.q, spec.collocation) if spec.nonlinear else None
        )

    def physical_time(self, s: float) -> float:
        return s if self.reverse_T is None else self.reverse_T - s

    def lambda_integral(self, s0: float, s1: float) -> float:
        t0, t1 = self.physical_time(s0), self.physical_time(s1)
        return self.spec.coefficient.integral(min(t0, t1), max(t0, t1))

    def forcing(self, y: np.ndarray, s: float) -> np.ndarray:
        out = np.zeros_like(y)
        if self.nonlinearity is not None:
            out += self.nonlinearity(y)
        if self.source is not None:
            out += self.source.at(self.physical_time(s))
        return self.sign * out

    def step(self, y: np.ndarray, s: float, ds: float) -> np.ndarray:
        """One ETD2RK step from s to s + ds."""
        exponent = self.coef * self.lambda_integral(s, s + ds) + self.shift * ds
        decay = np.exp(exponent)
        if self.nonlinearity is None and self.source is None:
            return decay * y
        n0 = self.forcing(y, s)
        predictor = decay * y + ds * _phi1(exponent) * n0
        n1 = self.forcing(predictor, s + ds)
        return predictor + ds * _phi2(exponent) * (n1 - n0)


def _integrate(system: ModalSystem, y0: np.ndarray, grid: TimeGrid) -> np.ndarray:
    s_nodes = grid.nodes
    out = np.empty((s_nodes.size, y0.size))
    out[0] = y0
    y = y0
    for m in range(grid.steps):
        y = system.step(y, s_nodes[m], grid.dt)
        top = float(np.max(np.abs(y))) if y.size else 0.0
        if not np.isfinite(top) or top > BLOW_UP:
            raise BlowUpError(system.physical_time(s_nodes[m + 1]), top)
        out[m + 1] = y
    return out


def forward_system(spec: SolveSpec) -> ModalSystem:
    lam = spec.symbols()
    return ModalSystem(spec, -lam, np.zeros_like(lam), +1.0, None)


def backward_system(spec: SolveSpec, T: float) -> ModalSystem:
    if spec.band is None:
        raise ValueError("the backward solve needs an operator band")
    band = spec.band
    if not spec.coefficient.within(band.a0, band.a1):
        raise ValueError(
            f"coefficient path (sup {spec.coefficient.sup:.6g}) violates "
            f"{band.a0} <= sup < {band.a1}"
        )
    lam = spec.symbols()
    kept = band.kept_mask(spec.modes)
    shift = np.where(kept, 0.0, -band.a1 * lam)
    return ModalSystem(spec, lam, shift, -1.0, T)


def forward_solve(u0: SpectralField, spec: SolveSpec, grid: TimeGrid) -> Trajectory:
    """Integrate u_t - Lambda(t) Laplace u = F(u) + G from u(0) = u0 to u(T)."""
    _check_support(u0, spec.modes)
    values = _integrate(forward_system(spec), u0.values(spec.modes), grid)
    return Trajectory(u0.dim, grid.nodes, spec.modes, values)


def backward_regularized_solve(
    h_hat: SpectralField, g_hat: Trajectory | None, spec: SolveSpec, grid: TimeGrid
) -> Trajectory:
    """Regularized solution at every node of ``grid`` (physical time, ascending).

    ``g_hat`` overrides ``spec.source`` when given.
    """
    if g_hat is not None:
        spec = _replace(spec, source=g_hat)
    _check_support(h_hat, spec.modes)
    system = backward_system(spec, grid.T)
    reversed_values = _integrate(system, h_hat.values(spec.modes), grid)
    return Trajectory(h_hat.dim, grid.nodes, spec.modes, reversed_values[::-1].copy())


def modal_step(state: SpectralField, tau: float, dtau: float, spec: SolveSpec, T: float) -> SpectralField:
    """Advance the reversed-time regularized system by one step from ``tau``."""
    if not dtau > 0:
        raise ValueError("step must be positive")
    system = backward_system(spec, T)
    y = system.step(state.values(spec.modes), tau, dtau)
    return SpectralField.from_arrays(state.dim, spec.modes, y)


def amplification_probe(p: Sequence[int], spec: SolveSpec, grid: TimeGrid) -> float:
    """|U_p(0)| / |H_p| for a linear solve from the single-mode datum psi_p."""
    p = tuple(p)
    probe = _replace(spec, modes=(p,), nonlinear=False, source=None)
    h = SpectralField(len(p), {p: 1.0})
    out = backward_regularized_solve(h, None, probe, grid)
    return abs(float(out.values[0, 0]))


def _replace(spec: SolveSpec, **changes) -> SolveSpec:
    from dataclasses import replace

    return replace(spec, **changes)


def _check_support(f: SpectralField, modes: Sequence[MultiIndex]):
    allowed = set(modes)
    outside = [p for p, c in f.coeffs.items() if c != 0.0 and p not in allowed]
    if outside:
        raise ValueError(f"field has coefficients outside the Galerkin modes: {outside[:5]}")
