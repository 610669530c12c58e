"""Regularization parameter schedules, admissibility checks and theoretical
error orders.

The schedule follows one explicit choice:

    beta_n = N^(1/(2 alpha0 + d/2)),     rho_n = alpha0 log(N) / (T (2 alpha0 + d/2)),
    Q_n chosen so that exp(c Q_n^2) = pi_bar(n)^(delta0 - 1),

with ``N = prod n_k``, ``c = 6T`` for the L2 estimate and ``c = 48T/(A1 - A0)``
for the H1 estimate.  ``pi_bar`` takes the maximum of the three error-order
terms at t = 0, using ``rho_n`` itself as the growth argument.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field
from typing import Sequence

L2, H1 = "L2", "H1"


def _prod(n: Sequence[int]) -> float:
    return float(math.prod(int(k) for k in n))


def beta_schedule(n: Sequence[int], alpha0: float) -> float:
    if alpha0 <= 0:
        raise ValueError("alpha0 must be positive")
    d = len(n)
    return _prod(n) ** (1.0 / (2 * alpha0 + d / 2))


def rho_schedule(n: Sequence[int], alpha0: float, T: float) -> float:
    if alpha0 <= 0 or T <= 0:
        raise ValueError("alpha0 and T must be positive")
    d = len(n)
    return alpha0 / (T * (2 * alpha0 + d / 2)) * math.log(_prod(n))


def q_exponent(T: float, mode: str = L2, a0: float | None = None, a1: float | None = None) -> float:
    """Constant c in exp(c Q^2): 6T for L2, 48T/(A1 - A0) for H1."""
    if mode == L2:
        return 6.0 * T
    if mode == H1:
        if a0 is None or a1 is None or not a1 > a0:
            raise ValueError("the H1 schedule needs a0 < a1")
        return 48.0 * T / (a1 - a0)
    raise ValueError(f"unknown mode {mode!r}")


def q_schedule(pi_bar: float, delta0: float, T: float, mode: str = L2, a0=None, a1=None) -> float:
    """Q with exp(c Q^2) = pi_bar^(delta0 - 1); needs 0 < pi_bar < 1."""
    if not 0 < delta0 < 1:
        raise ValueError("delta0 must lie in (0, 1)")
    if not 0 < pi_bar < 1:
        raise ValueError(f"pi_bar must lie in (0, 1) for a real Q, got {pi_bar:.6g}")
    return math.sqrt((delta0 - 1) * math.log(pi_bar) / q_exponent(T, mode, a0, a1))


def _mu_vector(mu, d: int) -> tuple[float, ...]:
    mu = tuple(float(m) for m in (mu if isinstance(mu, (list, tuple)) else [mu]))
    if len(mu) == 1:
        return mu * d
    if len(mu) != d:
        raise ValueError(f"{len(mu)} smoothness indices for dimension {d}")
    return mu


def _order_terms(n, beta, rho, mu, mu0, gamma, T, t, mode):
    """The three error-order terms at time t."""
    d = len(n)
    mu = _mu_vector(mu, d)
    growth = math.exp(2 * rho * (T - t))
    power = (d + 2) / 2 if mode == H1 else d / 2
    sampling = math.prod(float(nk) ** (-4 * m) for nk, m in zip(n, mu))
    first = growth * beta**power * sampling
    second = math.exp(-2 * rho * t) * (rho ** (-2 * gamma) if rho > 0 else (1.0 if gamma == 0 else math.inf))
    third = growth * beta ** (-mu0)
    return first, second, third


def pi_bar(n, beta, rho, mu, mu0, gamma, T, mode: str = L2) -> float:
    """max(e^{2T rho} beta^{d/2} prod n^{-4 mu}, e^{2T rho} beta^{-mu0}, rho^{-2 gamma})."""
    return max(_order_terms(n, beta, rho, mu, mu0, gamma, T, 0.0, mode))


@dataclass(frozen=True)
class RegularizationSchedule:
    n: tuple[int, ...]
    eps: float
    T: float
    alpha0: float
    delta0: float
    m0: float
    m1: float
    gamma: float
    mu: tuple[float, ...]
    mu0: float
    mode: str
    a0: float
    a1: float
    beta: float
    rho: float
    q: float
    pi_bar: float
    E: float
    E0: float
    nu: float = field(init=False)

    def __post_init__(self):
        object.__setattr__(self, "nu", self.rho)

    @property
    def d(self) -> int:
        return len(self.n)

    def as_dict(self) -> dict:
        out = asdict(self)
        out["n"] = list(self.n)
        out["mu"] = list(self.mu)
        return out


def make_schedule(
    n: Sequence[int],
    eps: float,
    *,
    T: float = 1.0,
    alpha0: float = 1.0,
    delta0: float = 0.5,
    m0: float = 0.3,
    m1: float = 0.3,
    gamma: float = 1.0,
    mu=1.0,
    mu0: float = 1.0,
    mode: str = L2,
    a0: float = 0.5,
    a1: float = 2.0,
) -> RegularizationSchedule:
    """Schedule for grid ``n`` and noise level ``eps``.

    ``q`` is NaN when ``pi_bar >= 1`` (no real Q exists); the admissibility
    check reports it.
    """
    n = tuple(int(k) for k in n)
    mu = _mu_vector(mu, len(n))
    beta = beta_schedule(n, alpha0)
    rho = rho_schedule(n, alpha0, T)
    pb = pi_bar(n, beta, rho, mu, mu0, gamma, T, mode)
    try:
        q = q_schedule(pb, delta0, T, mode, a0, a1)
    except ValueError:
        q = math.nan
    E = eps**m0 if eps > 0 else 0.0
    E0 = eps**m1 if eps > 0 else 0.0
    return RegularizationSchedule(
        n, float(eps), T, alpha0, delta0, m0, m1, gamma, mu, mu0, mode, a0, a1,
        beta, rho, q, pb, E, E0,
    )


@dataclass(frozen=True)
class Admissibility:
    reasons: tuple[str, ...]

    @property
    def ok(self) -> bool:
        return not self.reasons

    def __bool__(self):
        return self.ok


def rho_ceiling(s: RegularizationSchedule) -> float:
    return math.log(1.0 / s.E) / s.T if 0 < s.E < 1 else (math.inf if s.E == 0 else -math.inf)


def q_ceiling(s: RegularizationSchedule, mode: str | None = None) -> float:
    mode = mode or s.mode
    if s.E0 == 0:
        return math.inf
    if not 0 < s.E0 < 1:
        return -math.inf
    return math.sqrt(math.log(1.0 / s.E0) / q_exponent(s.T, mode, s.a0, s.a1))


def admissibility_check(s: RegularizationSchedule, mode: str | None = None) -> Admissibility:
    """Every violated constraint, by name."""
    mode = mode or s.mode
    reasons = []
    if not 0 < s.delta0 < 1:
        reasons.append("delta0 range: need 0 < delta0 < 1")
    if not (0 < s.m0 < 1 and 0 < s.m1 < 1):
        reasons.append("m range: need 0 < m0, m1 < 1")
    if not s.m1 < 1 - s.m0:
        reasons.append(f"m0+m1: need m0 + m1 < 1 so that eps/(E E0) -> 0, got {s.m0 + s.m1:.6g}")
    if not s.a0 < s.a1:
        reasons.append("band: need a0 < a1")
    if any(m <= 0.5 for m in s.mu):
        reasons.append("mu: every mu_k must exceed 1/2")
    if s.mu0 < s.d * max(s.mu):
        reasons.append("mu0: need mu0 >= d max(mu)")
    if s.rho > rho_ceiling(s):
        reasons.append(
            f"rho bound: rho={s.rho:.6g} exceeds log(1/E)/T={rho_ceiling(s):.6g}"
        )
    if not s.pi_bar < 1:
        reasons.append(f"pi_bar: need pi_bar < 1 for a real Q, got {s.pi_bar:.6g}")
    elif s.q > q_ceiling(s, mode):
        reasons.append(f"q bound: Q={s.q:.6g} exceeds {q_ceiling(s, mode):.6g}")
    # decay of the order terms along the schedule, as exponents of N = prod n
    width = 2 * s.alpha0 + s.d / 2
    if not s.mu0 > 2 * s.alpha0:
        reasons.append("beta decay: e^{2 rho T} beta^{-mu0} -> 0 needs mu0 > 2 alpha0")
    power = (s.d + 2) / 2 if mode == H1 else s.d / 2
    if not (2 * s.alpha0 + power) / width < 4 * min(s.mu):
        reasons.append("sampling decay: e^{2 rho T} beta^{power} prod n^{-4 mu} does not vanish")
    if not s.gamma > 0:
        reasons.append("gamma: rho^{-2 gamma} -> 0 needs gamma > 0")
    return Admissibility(tuple(reasons))


def eps_threshold(s: RegularizationSchedule, mode: str | None = None) -> float:
    """Largest eps for which the rho and Q bounds hold with this (rho, Q)."""
    mode = mode or s.mode
    by_rho = math.exp(-s.rho * s.T / s.m0)
    if math.isnan(s.q):
        return 0.0
    by_q = math.exp(-q_exponent(s.T, mode, s.a0, s.a1) * s.q**2 / s.m1)
    return min(by_rho, by_q)


def _rate(t, s: RegularizationSchedule, mode: str) -> float:
    if not 0 <= t <= s.T:
        raise ValueError("t must lie in [0, T]")
    terms = _order_terms(s.n, s.beta, s.rho, s.mu, s.mu0, s.gamma, s.T, t, mode)
    log_amp = q_exponent(s.T, mode, s.a0, s.a1) * (0.0 if math.isnan(s.q) else s.q**2)
    top = max(terms)
    noise = s.eps / (s.E * s.E0) if s.eps > 0 else 0.0
    if top == 0:
        return noise
    # saturate to inf rather than overflow
    log_main = log_amp + math.log(top)
    main = math.exp(log_main) if log_main < 709.0 else math.inf
    return main + noise


def theoretical_rate_L2(t: float, s: RegularizationSchedule) -> float:
    """e^{6 Q^2 T} max(order terms at t) + eps / (E E0)."""
    return _rate(t, s, L2)


def theoretical_rate_H1(t: float, s: RegularizationSchedule) -> float:
    """exp(48 T Q^2 / (A1 - A0)) max(H1 order terms at t) + eps / (E E0)."""
    return _rate(t, s, H1)
