"""Closed-form value functions, thresholds and the optimal strategy.

Everything here is an explicit formula plus one bisection (for the free
boundary t_star). Exponential-of-exponential quantities are computed in
log space; each value function has a log_* twin so callers can stay in
log space when eta*x*e^{RT} is large.

Notation used throughout (m is a ModelParams):
    e(t)   = exp(R*(T-t))
    psi(t) = eta*e(t)*(q-p) - q^2/(2*sigma0^2)          running rate with reinsurance
    h(t)   = eta*e(t)*(eta*e(t)*sigma0^2/2 - p)         running rate without reinsurance
    H(t)   = int_t^T (psi-h) ds + eta*K*e(t)            stop-vs-wait comparison
The subscription threshold k_star and the free boundary t_star are both
derived from the sign structure of H.
"""

from __future__ import annotations

import enum
import functools
import math
from dataclasses import dataclass
from typing import Callable, Optional

from .params import ModelParams

#: bisection bracket width for t_star
T_STAR_XTOL = 1e-12
#: residual tolerance |H(t_star)|
T_STAR_RESID = 1e-10


class NoThresholdError(ValueError):
    """q_star: the defining quadratic has no real root for these inputs."""


class Regime(enum.Enum):
    """Which of the two solution cases holds."""

    NO_REINSURANCE = "no_reinsurance"          # K >= K*: never subscribe
    IMMEDIATE_BEFORE_T_STAR = "immediate"      # K < K*: subscribe iff t <= t*


@dataclass(frozen=True)
class CaseDecision:
    """Threshold cost, regime, and the associated boundary times."""

    k_star: float
    regime: Regime
    t_a: float
    t_star: Optional[float]
    q_star: Optional[float]


@dataclass(frozen=True)
class Strategy:
    """A deterministic stopping rule plus retention schedule.

    stop_time = T encodes "never subscribe" (the null strategy, u == 1).
    For non-null strategies retention(s) = (q/(eta*sigma0^2))*e^{-R(T-s)}
    on [stop_time, T].
    """

    stop_time: float
    retention: Callable[[float], float]
    is_null: bool


def _check_t(t: float, m: ModelParams) -> None:
    if not 0.0 <= t <= m.big_t:
        raise ValueError(f"t={t} outside [0, T={m.big_t}]")


def _e(t: float, m: ModelParams) -> float:
    return math.exp(m.big_r * (m.big_t - t))


def psi(t: float, m: ModelParams) -> float:
    """Running exponent rate under the optimal retention schedule."""
    _check_t(t, m)
    return m.eta * _e(t, m) * (m.q - m.p) - m.q**2 / (2.0 * m.sigma0**2)


def h_rate(t: float, m: ModelParams) -> float:
    """Running exponent rate with no reinsurance at all."""
    _check_t(t, m)
    e = _e(t, m)
    return m.eta * e * (0.5 * m.eta * e * m.sigma0**2 - m.p)


def u_star(t: float, m: ModelParams) -> float:
    """Optimal retention level; in (0,1) whenever q < eta*sigma0^2."""
    _check_t(t, m)
    return m.q / (m.eta * m.sigma0**2) * math.exp(-m.big_r * (m.big_t - t))


def _int_psi(t: float, m: ModelParams) -> float:
    """int_t^T psi(s) ds in closed form (exact antiderivative)."""
    e = _e(t, m)
    return m.eta * (m.q - m.p) / m.big_r * (e - 1.0) - m.q**2 / (2.0 * m.sigma0**2) * (
        m.big_t - t
    )


def _int_h(t: float, m: ModelParams) -> float:
    """int_t^T h(s) ds in closed form (exact antiderivative)."""
    e = _e(t, m)
    return (
        m.eta**2 * m.sigma0**2 / (4.0 * m.big_r) * (e * e - 1.0)
        - m.eta * m.p / m.big_r * (e - 1.0)
    )


def log_v_bar(t: float, x: float, m: ModelParams) -> float:
    """log of the pure-reinsurance value function."""
    _check_t(t, m)
    return -m.eta * x * _e(t, m) + _int_psi(t, m)


def v_bar(t: float, x: float, m: ModelParams) -> float:
    """Pure-reinsurance value function; equals exp(-eta*x) at t = T."""
    return math.exp(log_v_bar(t, x, m))


def log_g(t: float, x: float, m: ModelParams) -> float:
    """log of the no-reinsurance value E[exp(-eta*X_T)]."""
    _check_t(t, m)
    return -m.eta * x * _e(t, m) + _int_h(t, m)


def g_value(t: float, x: float, m: ModelParams) -> float:
    """No-reinsurance value E[exp(-eta*X_T)] starting from (t, x)."""
    return math.exp(log_g(t, x, m))


def big_h(t: float, m: ModelParams) -> float:
    """Stop-vs-wait comparison function H(t); H(T) = eta*K > 0."""
    _check_t(t, m)
    e = _e(t, m)
    return (
        m.eta * m.q / m.big_r * (e - 1.0)
        - m.q**2 / (2.0 * m.sigma0**2) * (m.big_t - t)
        - m.eta**2 * m.sigma0**2 / (4.0 * m.big_r) * (e * e - 1.0)
        + m.eta * m.k * e
    )


def t_a(m: ModelParams) -> tuple[float, int]:
    """Right boundary of the interval where H increases, clamped to [0, T].

    Returns (t_A, case) with case 1: t_A = 0, case 2: 0 < t_A < T,
    case 3: t_A = T. The unclamped value is
        T - ln(y*)/R,  y* = (q + R*K + sqrt((q+R*K)^2 - q^2)) / (eta*sigma0^2).
    """
    s = m.q + m.big_r * m.k
    y = (s + math.sqrt(s * s - m.q * m.q)) / (m.eta * m.sigma0**2)
    raw = m.big_t - math.log(y) / m.big_r
    if raw <= 0.0:
        return 0.0, 1
    if raw >= m.big_t:
        return m.big_t, 3
    return raw, 2


def k_star(m: ModelParams) -> float:
    """Maximum subscription cost at which reinsurance is ever purchased.

    Depends on (q, eta, sigma0, R, T) only; strictly positive.
    """
    e = math.exp(m.big_r * m.big_t)
    return (
        -m.q / m.big_r * (1.0 - 1.0 / e)
        + m.q**2 * m.big_t / (2.0 * m.eta * m.sigma0**2) / e
        + m.eta * m.sigma0**2 / (4.0 * m.big_r) * (e - 1.0 / e)
    )


@functools.lru_cache(maxsize=256)
def t_star(m: ModelParams) -> Optional[float]:
    """Free boundary: unique root of H in (0, t_A), or None if H(0) >= 0.

    Bisection (unconditionally convergent; H increases on [0, t_A]) down
    to bracket width T_STAR_XTOL, then |H(root)| <= T_STAR_RESID is
    asserted.
    """
    if big_h(0.0, m) >= 0.0:
        return None
    hi, _ = t_a(m)
    lo = 0.0
    f_lo, f_hi = big_h(lo, m), big_h(hi, m)
    if not (f_lo < 0.0 < f_hi):
        raise RuntimeError(
            f"H sign pattern violated on [0, t_A]: H(0)={f_lo}, H(t_A)={f_hi}; "
            "parameter validation was bypassed?"
        )
    while hi - lo > T_STAR_XTOL:
        mid = 0.5 * (lo + hi)
        if big_h(mid, m) < 0.0:
            lo = mid
        else:
            hi = mid
    root = 0.5 * (lo + hi)
    resid = big_h(root, m)
    if abs(resid) > T_STAR_RESID:
        raise RuntimeError(f"bisection residual |H({root})| = {abs(resid)} > {T_STAR_RESID}")
    return root


def q_star(k: float, m: ModelParams) -> float:
    """Maximum reinsurer net profit rate at which the insurer subscribes.

    Smaller root of
        (T/(2*sigma0^2)) q^2 + (1-e^{RT})(eta/R) q
        + (eta^2 sigma0^2/(4R))(e^{2RT}-1) - eta*k*e^{RT} = 0,
    using eta, sigma0, R, T from m (m.q and m.k are ignored). Satisfies
    0 < q* < eta*sigma0^2. Raises NoThresholdError if the discriminant
    is negative.
    """
    if k <= 0.0:
        raise ValueError(f"k={k} must be > 0")
    e = math.exp(m.big_r * m.big_t)
    a = m.big_t / (2.0 * m.sigma0**2)
    b = (1.0 - e) * m.eta / m.big_r
    c = m.eta**2 * m.sigma0**2 / (4.0 * m.big_r) * (e * e - 1.0) - m.eta * k * e
    disc = b * b - 4.0 * a * c
    if disc < 0.0:
        raise NoThresholdError(f"discriminant {disc} < 0: no real q threshold for k={k}")
    return (-b - math.sqrt(disc)) / (2.0 * a)


def decide_case(m: ModelParams) -> CaseDecision:
    """Classify the regime and collect every threshold in one record.

    The boundary K = K* (H(0) = 0) counts as NO_REINSURANCE (weak
    inequality). q_star is None when its discriminant is negative.
    """
    ks = k_star(m)
    ta, _ = t_a(m)
    ts = t_star(m)
    try:
        qs = q_star(m.k, m)
    except NoThresholdError:
        qs = None
    regime = Regime.NO_REINSURANCE if ts is None else Regime.IMMEDIATE_BEFORE_T_STAR
    return CaseDecision(k_star=ks, regime=regime, t_a=ta, t_star=ts, q_star=qs)


def log_value(t: float, x: float, m: ModelParams) -> float:
    """log of the full value function V(t, x)."""
    _check_t(t, m)
    ts = t_star(m)
    if ts is not None and t <= ts:
        return log_v_bar(t, x - m.k, m)
    return log_g(t, x, m)


def value(t: float, x: float, m: ModelParams) -> float:
    """Full value function: V_bar(t, x-K) for t <= t*, g(t, x) after."""
    return math.exp(log_value(t, x, m))


def null_strategy(m: ModelParams) -> Strategy:
    """Never subscribe: stop_time = T, retention identically 1."""
    return Strategy(stop_time=m.big_t, retention=lambda s: 1.0, is_null=True)


def optimal_schedule(m: ModelParams) -> Callable[[float], float]:
    """The retention schedule s -> u_star(s) as a plain callable."""
    return lambda s: u_star(s, m)


def decide(t: float, x: float, m: ModelParams) -> Strategy:
    """Optimal strategy seen from state (t, x).

    x is accepted for interface symmetry but cannot influence the
    decision: the stopping boundary is purely temporal.

    K >= K*            -> null strategy;
    K <  K*, t <= t*   -> subscribe now, follow u_star on [t, T]
                          (t = t* exactly still subscribes);
    K <  K*, t >  t*   -> null strategy.
    """
    _check_t(t, m)
    ts = t_star(m)
    if ts is None or t > ts:
        return null_strategy(m)
    return Strategy(stop_time=t, retention=optimal_schedule(m), is_null=False)
