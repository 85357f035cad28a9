"""Monte Carlo simulation of the wealth processes and the claim surplus.

Normal variates come from the Philox counter-based generator through
inverse-CDF transformation (uniforms on the open unit interval mapped by
ndtri). That pipeline is fixed so identical (seed, config) reproduce
bit-identical sample arrays on any platform.

The default ExactGaussian scheme exploits that, for deterministic
retention schedules, terminal wealth is exactly Gaussian per segment:
no time discretization, no bias. Euler-Maruyama is kept as an
independent cross-check.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np
from scipy.integrate import quad
from scipy.special import ndtri

from .closed_form import Strategy
from .params import ActuarialParams, ModelParams, validate_actuarial

_QUAD_TOL = 1e-10


class Scheme(enum.Enum):
    EXACT_GAUSSIAN = "exact"
    EULER_MARUYAMA = "euler"


@dataclass(frozen=True)
class PathConfig:
    """How many paths, how fine a grid, which seed, which scheme."""

    n_paths: int = 100_000
    n_steps: int = 1_000
    seed: int = 0
    scheme: Scheme = Scheme.EXACT_GAUSSIAN
    antithetic: bool = False

    def __post_init__(self):
        if self.n_paths < 1 or self.n_steps < 1:
            raise ValueError("n_paths and n_steps must be >= 1")
        if self.antithetic and self.n_paths % 2:
            raise ValueError("antithetic sampling needs an even n_paths")


@dataclass(frozen=True)
class McEstimate:
    """Monte Carlo mean with its uncertainty; ci95 = mean +- 1.96 se."""

    mean: float
    std_error: float
    ci95_low: float
    ci95_high: float
    n_paths: int
    seed: int


def _rng(seed: int) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(seed))


def _normal(rng: np.random.Generator, size) -> np.ndarray:
    # inversion from uniforms on the open interval; integers avoid u=0
    u = rng.integers(1, 1 << 53, size=size) / float(1 << 53)
    return ndtri(u)


def _mirror(z: np.ndarray) -> np.ndarray:
    """Antithetic layout: first half raw draws, second half negated."""
    return np.concatenate([z, -z], axis=0)


def _mean_var(t: float, s: float, x, m: ModelParams) -> tuple[np.ndarray, float]:
    """Exact Gaussian law of the uncontrolled wealth at time s from (t, x)."""
    a = math.exp(m.big_r * (s - t))
    mean = x * a + m.p / m.big_r * (a - 1.0)
    var = m.sigma0**2 / (2.0 * m.big_r) * (a * a - 1.0)
    return mean, var


def simulate_uncontrolled(
    t: float, x: float, m: ModelParams, c: PathConfig
) -> np.ndarray:
    """Samples of terminal wealth X_T with no reinsurance ever bought."""
    if not t < m.big_t:
        raise ValueError(f"t={t} must be < T={m.big_t}")
    rng = _rng(c.seed)
    if c.scheme is Scheme.EXACT_GAUSSIAN:
        n = c.n_paths // 2 if c.antithetic else c.n_paths
        z = _normal(rng, n)
        if c.antithetic:
            z = _mirror(z)
        mean, var = _mean_var(t, m.big_t, x, m)
        return mean + math.sqrt(var) * z
    tgrid = np.linspace(t, m.big_t, c.n_steps + 1)
    n = c.n_paths // 2 if c.antithetic else c.n_paths
    dw = _normal(rng, (n, c.n_steps)) * np.sqrt(np.diff(tgrid))
    if c.antithetic:
        dw = _mirror(dw)
    return _euler_terminal(x, tgrid, dw, m, u_fn=None, pay_k_at=None)


def _euler_terminal(x0, tgrid, dw, m: ModelParams, u_fn, pay_k_at) -> np.ndarray:
    """Euler-Maruyama stepping; u_fn=None means the uncontrolled SDE.

    u_fn applies from pay_k_at onward (K deducted once at that time).
    Used both by the public simulators and by convergence tests that
    supply their own Brownian increments.
    """
    xcur = np.full(dw.shape[0], float(x0))
    dt = np.diff(tgrid)
    controlled = False
    for i in range(len(dt)):
        s = tgrid[i]
        if pay_k_at is not None and not controlled and s >= pay_k_at - 1e-15:
            xcur = xcur - m.k
            controlled = True
        if controlled and u_fn is not None:
            u = u_fn(s)
            drift = m.big_r * xcur + m.p - m.q + m.q * u
            vol = m.sigma0 * u
        else:
            drift = m.big_r * xcur + m.p
            vol = m.sigma0
        xcur = xcur + drift * dt[i] + vol * dw[:, i]
    return xcur


def _schedule_integrals(tau: float, m: ModelParams, u_fn) -> tuple[float, float]:
    """(drift integral, variance integral) of the controlled segment [tau, T]."""
    big_t = m.big_t

    def drift(s):
        return math.exp(m.big_r * (big_t - s)) * (m.p - m.q + m.q * u_fn(s))

    def var(s):
        return math.exp(2.0 * m.big_r * (big_t - s)) * (m.sigma0 * u_fn(s)) ** 2

    a2 = quad(drift, tau, big_t, epsabs=_QUAD_TOL, epsrel=_QUAD_TOL, limit=200)[0]
    v2 = quad(var, tau, big_t, epsabs=_QUAD_TOL, epsrel=_QUAD_TOL, limit=200)[0]
    return a2, v2


def simulate_strategy(
    t: float, x: float, s: Strategy, m: ModelParams, c: PathConfig
) -> np.ndarray:
    """Terminal wealth under a deterministic strategy.

    Uncontrolled on [t, stop_time); K paid at stop_time if stop_time < T;
    controlled with the retention schedule on [stop_time, T]. A null
    strategy is exactly simulate_uncontrolled (same draws, same seed).
    """
    if not t <= s.stop_time <= m.big_t:
        raise ValueError(f"need t <= stop_time <= T, got t={t}, stop={s.stop_time}")
    if s.is_null or s.stop_time >= m.big_t:
        return simulate_uncontrolled(t, x, m, c)

    tau = s.stop_time
    if c.scheme is Scheme.EXACT_GAUSSIAN:
        rng = _rng(c.seed)
        n = c.n_paths // 2 if c.antithetic else c.n_paths
        z = _normal(rng, (n, 2))
        if c.antithetic:
            z = _mirror(z)
        # segment 1: exact Gaussian X_tau
        m1, v1 = _mean_var(t, tau, x, m)
        x_tau = m1 + math.sqrt(max(v1, 0.0)) * z[:, 0]
        # segment 2: controlled, conditionally Gaussian given X_tau
        a2, v2 = _schedule_integrals(tau, m, s.retention)
        growth = math.exp(m.big_r * (m.big_t - tau))
        return (x_tau - m.k) * growth + a2 + math.sqrt(max(v2, 0.0)) * z[:, 1]

    tgrid = np.linspace(t, m.big_t, c.n_steps + 1)
    # snap one grid node onto tau so K is paid at the right time
    idx = int(np.argmin(np.abs(tgrid - tau)))
    tgrid[idx] = tau
    rng = _rng(c.seed)
    n = c.n_paths // 2 if c.antithetic else c.n_paths
    dw = _normal(rng, (n, c.n_steps)) * np.sqrt(np.diff(tgrid))
    if c.antithetic:
        dw = _mirror(dw)
    return _euler_terminal(x, tgrid, dw, m, u_fn=s.retention, pay_k_at=tau)


def mc_exp_utility(
    samples: np.ndarray, eta: float, seed: int = 0, antithetic: bool = False
) -> McEstimate:
    """Estimate E[exp(-eta * X_T)] from terminal wealth samples.

    With antithetic=True the array is assumed laid out as produced by
    the simulators (second half mirrors the first) and the standard
    error is computed on pair averages.
    """
    samples = np.asarray(samples, dtype=float)
    if samples.size == 0:
        raise ValueError("empty sample array")
    payoff = np.exp(-eta * samples)
    n = payoff.size
    mean = float(payoff.mean())
    if antithetic:
        half = n // 2
        pairs = 0.5 * (payoff[:half] + payoff[half:])
        se = float(pairs.std(ddof=1) / math.sqrt(half)) if half > 1 else 0.0
    else:
        se = float(payoff.std(ddof=1) / math.sqrt(n)) if n > 1 else 0.0
    return McEstimate(
        mean=mean,
        std_error=se,
        ci95_low=mean - 1.96 * se,
        ci95_high=mean + 1.96 * se,
        n_paths=n,
        seed=seed,
    )


def simulate_cramer_lundberg(
    t: float, a: ActuarialParams, c: PathConfig
) -> np.ndarray:
    """Samples of aggregate claims sum_{n <= N_t} Z_n over [0, t].

    The claim law must reproduce (mu, mu2): an exponential law forces
    mu2 = 2*mu^2; the lognormal is fitted to both moments.
    """
    validate_actuarial(a)
    if t <= 0.0:
        raise ValueError(f"t={t} must be > 0")
    if a.claim_dist == "exponential":
        if abs(a.mu2 - 2.0 * a.mu**2) > 1e-9 * a.mu2:
            raise ValueError(
                f"exponential claims force mu2 = 2*mu^2 = {2*a.mu**2}, got mu2={a.mu2}"
            )
    rng = _rng(c.seed)
    counts = rng.poisson(a.lam * t, size=c.n_paths)
    total = int(counts.sum())
    if a.claim_dist == "exponential":
        u = rng.integers(1, 1 << 53, size=total) / float(1 << 53)
        claims = -a.mu * np.log(u)
    else:
        s2 = math.log(a.mu2 / a.mu**2)
        mu_log = math.log(a.mu) - 0.5 * s2
        claims = np.exp(mu_log + math.sqrt(s2) * _normal(rng, total))
    return np.bincount(
        np.repeat(np.arange(c.n_paths), counts), weights=claims, minlength=c.n_paths
    )


def dump_samples(samples: np.ndarray, path) -> None:
    """One terminal wealth per line, plain decimal text."""
    np.savetxt(path, np.asarray(samples, dtype=float), fmt="%.17g")
