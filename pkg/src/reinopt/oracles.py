"""Independent numerical solvers that cross-check every closed form.

hjb_pure_reinsurance   finite-difference solve of the control HJB
stopping_lattice       trinomial backward induction for the stopping problem
utility_of_schedule    exact value of any deterministic schedule (quadrature)
deterministic_stop_value  exact value of stopping at a fixed time

The HJB solver touches no closed-form internals: only the PDE
coefficients, the terminal condition, and the exponential-affine shape
of the solution in x (used for lateral boundary conditions). The
lattice uses closed-form v_bar for the stopping reward, which is how
the stopping problem is posed.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np
from scipy.integrate import quad
from scipy.linalg import solve_banded

from . import closed_form as cf
from .params import ModelParams

_QUAD_TOL = 1e-10
#: retention candidates for the pointwise Hamiltonian minimization
N_U_CANDIDATES = 101


class GridError(ValueError):
    """Grid too coarse or transition probabilities irreparably invalid."""


@dataclass(frozen=True)
class GridSpec:
    n_t: int = 400
    n_x: int = 800
    x_lo: float = -5.0
    x_hi: float = 10.0

    def __post_init__(self):
        if self.n_t < 100 or self.n_x < 200:
            raise GridError(f"grid too coarse: need n_t >= 100, n_x >= 200, got {self}")
        if self.x_hi <= self.x_lo:
            raise GridError("x_hi must exceed x_lo")


@dataclass(frozen=True)
class ValueSurface:
    """Gridded (t, x) -> value array, optionally with a policy layer.

    values[i, j] corresponds to (t_grid[i], x_grid[j]). policy holds
    retention levels (HJB) or stop flags as 0/1 floats (lattice).
    """

    t_grid: np.ndarray
    x_grid: np.ndarray
    values: np.ndarray
    policy: Optional[np.ndarray] = None

    def interior_mask(self, frac: float = 0.8) -> np.ndarray:
        """Boolean x-mask for the central `frac` share of the domain."""
        lo, hi = self.x_grid[0], self.x_grid[-1]
        pad = 0.5 * (1.0 - frac) * (hi - lo)
        return (self.x_grid >= lo + pad) & (self.x_grid <= hi - pad)

    def to_csv(self, path) -> None:
        """Rows `t,x,value[,policy]`, row-major by t then x."""
        with open(path, "w") as f:
            cols = "t,x,value" + (",policy" if self.policy is not None else "")
            f.write(cols + "\n")
            for i, t in enumerate(self.t_grid):
                for j, x in enumerate(self.x_grid):
                    row = f"{float(t)!r},{float(x)!r},{float(self.values[i, j])!r}"
                    if self.policy is not None:
                        row += f",{float(self.policy[i, j])!r}"
                    f.write(row + "\n")


def _check_positive(values: np.ndarray) -> None:
    if not np.all(values > 0.0):
        raise GridError("solver produced non-positive values; grid unstable")


def hjb_pure_reinsurance(
    m: ModelParams, grid: GridSpec = GridSpec(), keep_every: int = 1
) -> ValueSurface:
    """Finite-difference solve of min_u L^u V = 0, V(T, x) = exp(-eta*x).

    Crank-Nicolson in time (implicit, unconditionally stable) with two
    policy-improvement passes per step. The retention minimizer is found
    on a uniform grid of N_U_CANDIDATES values in [0, 1], refined by a
    parabolic fit through the argmin and its neighbors. Lateral
    boundaries impose the exponential-affine x-shape via ratio rows, so
    no closed-form solution values enter.

    keep_every thins the stored time slices (the solve always uses the
    full grid).
    """
    x = np.linspace(grid.x_lo, grid.x_hi, grid.n_x + 1)
    dx = x[1] - x[0]
    dt = m.big_t / grid.n_t
    ugrid = np.linspace(0.0, 1.0, N_U_CANDIDATES)
    v = np.exp(-m.eta * x)

    kept_t = [m.big_t]
    kept_v = [v.copy()]
    kept_u = [_pointwise_argmin(v, x, dx, m, ugrid)]

    for n in range(grid.n_t):
        t_new = m.big_t - (n + 1) * dt
        v_new = v
        for _ in range(2):  # policy improvement
            u = _pointwise_argmin(v_new, x, dx, m, ugrid)
            v_new = _theta_step(v, u, x, dx, dt, t_new, m, theta=0.5)
        v = v_new
        if (n + 1) % keep_every == 0 or n == grid.n_t - 1:
            kept_t.append(t_new)
            kept_v.append(v.copy())
            kept_u.append(_pointwise_argmin(v, x, dx, m, ugrid))

    order = np.argsort(kept_t)
    values = np.array(kept_v)[order]
    _check_positive(values)
    return ValueSurface(
        t_grid=np.array(kept_t)[order],
        x_grid=x,
        values=values,
        policy=np.array(kept_u)[order],
    )


def _pointwise_argmin(
    v: np.ndarray, x: np.ndarray, dx: float, m: ModelParams, ugrid: np.ndarray
) -> np.ndarray:
    """Minimize the Hamiltonian over u at every node, given a value slice.

    Discrete scan over ugrid followed by a local parabolic fit (exact
    here: the Hamiltonian is quadratic in u).
    """
    vx = np.gradient(v, dx)
    vxx = np.zeros_like(v)
    vxx[1:-1] = (v[2:] - 2.0 * v[1:-1] + v[:-2]) / dx**2
    vxx[0], vxx[-1] = vxx[1], vxx[-2]
    # H(u) = q*u*vx + 0.5*sigma0^2*u^2*vxx  (u-dependent part only)
    ham = (
        m.q * ugrid[:, None] * vx[None, :]
        + 0.5 * m.sigma0**2 * ugrid[:, None] ** 2 * vxx[None, :]
    )
    idx = np.argmin(ham, axis=0)
    u = ugrid[idx]
    interior = (idx > 0) & (idx < len(ugrid) - 1)
    ii = idx[interior]
    cols = np.flatnonzero(interior)
    y0 = ham[ii - 1, cols]
    y1 = ham[ii, cols]
    y2 = ham[ii + 1, cols]
    denom = y0 - 2.0 * y1 + y2
    shift = np.where(denom > 0.0, 0.5 * (y0 - y2) / np.where(denom == 0.0, 1.0, denom), 0.0)
    du = ugrid[1] - ugrid[0]
    u[interior] = np.clip(u[interior] + shift * du, 0.0, 1.0)
    return u


def _theta_step(
    v_old: np.ndarray,
    u: np.ndarray,
    x: np.ndarray,
    dx: float,
    dt: float,
    t_new: float,
    m: ModelParams,
    theta: float,
) -> np.ndarray:
    """One theta-scheme step of L^u with frozen policy u.

    Boundary rows encode v[0] = v[1]*exp(eta*e*dx) and the mirrored
    relation at the top (exponential-affine x-shape).
    """
    drift = m.big_r * x + m.p - m.q + m.q * u
    diff = 0.5 * m.sigma0**2 * u * u
    lo = diff / dx**2 - drift / (2.0 * dx)
    up = diff / dx**2 + drift / (2.0 * dx)
    dg = -2.0 * diff / dx**2

    n = len(x)
    ab = np.zeros((3, n))
    ab[0, 1:] = -theta * dt * up[:-1]
    ab[1, :] = 1.0 - theta * dt * dg
    ab[2, :-1] = -theta * dt * lo[1:]
    rhs = v_old.copy()
    if theta < 1.0:
        w = (1.0 - theta) * dt
        rhs[1:-1] = v_old[1:-1] + w * (
            lo[1:-1] * v_old[:-2] + dg[1:-1] * v_old[1:-1] + up[1:-1] * v_old[2:]
        )
    e = math.exp(m.big_r * (m.big_t - t_new))
    ab[1, 0], ab[0, 1], rhs[0] = 1.0, -math.exp(m.eta * e * dx), 0.0
    ab[1, -1], ab[2, -2], rhs[-1] = 1.0, -math.exp(-m.eta * e * dx), 0.0
    return solve_banded((1, 1), ab, rhs)


def stopping_lattice(m: ModelParams, grid: GridSpec = GridSpec(200, 600, -6.0, 11.0)) -> ValueSurface:
    """Trinomial backward induction for the subscription-timing problem.

    W(t_i, x_j) = min( v_bar(t_i, x_j - K), E[W(t_{i+1}, X_{t_{i+1}})] )
    with the exact one-step Gaussian transition of the uncontrolled
    wealth matched in mean and variance by a trinomial stencil of width
    k cells. Nodes whose stencil leaves the grid read values from an
    exponential-affine tail extension of the edge node; probabilities
    are clipped and renormalized only as a guard (a step that would need
    more than 1e-6 of clipping on interior nodes is rejected).

    policy holds stop flags: 1.0 where immediate subscription is optimal
    (ties stop).
    """
    x = np.linspace(grid.x_lo, grid.x_hi, grid.n_x + 1)
    dx = x[1] - x[0]
    dt = m.big_t / grid.n_t
    a = math.exp(m.big_r * dt)
    b = m.p / m.big_r * (a - 1.0)
    var = m.sigma0**2 / (2.0 * m.big_r) * (a * a - 1.0)
    k = max(1, math.ceil(math.sqrt(2.0 * var) / dx))

    mean = x * a + b
    pad = k + math.ceil(max(mean[-1] - x[-1], 0.0) / dx) + 2
    j0 = np.round((mean - x[0]) / dx).astype(int) + pad
    beta = (mean - (x[0] + (j0 - pad) * dx)) / (k * dx)
    vr = var / (k * dx) ** 2
    pu = 0.5 * (vr + beta * beta + beta)
    pd = 0.5 * (vr + beta * beta - beta)
    pm = 1.0 - pu - pd
    probs = np.stack([pu, pm, pd])
    if probs.min() < -1e-6:
        raise GridError(
            f"trinomial probabilities invalid (min {probs.min()}); refine the time grid"
        )
    probs = np.clip(probs, 0.0, None)
    probs /= probs.sum(axis=0)
    pu, pm, pd = probs

    tg = np.linspace(0.0, m.big_t, grid.n_t + 1)
    values = np.zeros((grid.n_t + 1, grid.n_x + 1))
    stop = np.zeros_like(values)
    values[-1] = np.exp(-m.eta * x)
    off = np.arange(1, pad + 1) * dx
    for i in range(grid.n_t - 1, -1, -1):
        e_next = math.exp(m.big_r * (m.big_t - tg[i + 1]))
        w = values[i + 1]
        ext = np.concatenate(
            [w[0] * np.exp(m.eta * e_next * off[::-1]), w, w[-1] * np.exp(-m.eta * e_next * off)]
        )
        cont = pu * ext[j0 + k] + pm * ext[j0] + pd * ext[j0 - k]
        reward = np.exp(cf.log_v_bar(tg[i], 0.0, m) - m.eta * (x - m.k) * math.exp(m.big_r * (m.big_t - tg[i])))
        values[i] = np.minimum(reward, cont)
        stop[i] = (reward <= cont).astype(float)
    _check_positive(values)
    return ValueSurface(t_grid=tg, x_grid=x, values=values, policy=stop)


def lattice_stop_boundary(surface: ValueSurface) -> Optional[float]:
    """Latest grid time at which stopping is optimal anywhere interior, or None.

    The stop region is purely temporal, so this is the lattice estimate
    of the time threshold. Near the threshold the discrete stop flags
    thin out over at most one step, hence the "any node" convention.
    """
    msk = surface.interior_mask()
    stops = surface.policy[:-1, msk].any(axis=1)  # exclude t=T (terminal, no decision)
    idx = np.flatnonzero(stops)
    return float(surface.t_grid[idx[-1]]) if idx.size else None


def utility_of_schedule(
    t: float,
    x: float,
    stop_time: float,
    schedule: Callable[[float], float],
    m: ModelParams,
) -> float:
    """Exact E[exp(-eta*X_T)] for a deterministic stop time and schedule.

    Terminal wealth is Gaussian: uncontrolled segment [t, stop_time)
    via its explicit solution, K deducted at stop_time if < T, then the
    controlled segment with drift/variance integrals done by adaptive
    quadrature. stop_time = T means the null strategy (no K).
    """
    if not t <= stop_time <= m.big_t:
        raise ValueError(f"need t <= stop_time <= T, got {t}, {stop_time}")
    a1 = math.exp(m.big_r * (stop_time - t))
    m1 = x * a1 + m.p / m.big_r * (a1 - 1.0)
    v1 = m.sigma0**2 / (2.0 * m.big_r) * (a1 * a1 - 1.0)
    if stop_time >= m.big_t:
        mean, var = m1, v1
    else:
        big_t = m.big_t

        def drift(s):
            return math.exp(m.big_r * (big_t - s)) * (m.p - m.q + m.q * schedule(s))

        def varia(s):
            return math.exp(2.0 * m.big_r * (big_t - s)) * (m.sigma0 * schedule(s)) ** 2

        a2 = quad(drift, stop_time, big_t, epsabs=_QUAD_TOL, epsrel=_QUAD_TOL, limit=200)[0]
        v2 = quad(varia, stop_time, big_t, epsabs=_QUAD_TOL, epsrel=_QUAD_TOL, limit=200)[0]
        growth = math.exp(m.big_r * (big_t - stop_time))
        mean = (m1 - m.k) * growth + a2
        var = v1 * growth * growth + v2
    return math.exp(-m.eta * mean + 0.5 * m.eta**2 * var)


def deterministic_stop_value(t: float, x: float, s: float, m: ModelParams) -> float:
    """Exact E[v_bar(s, X_s - K)] for a fixed candidate stop time s.

    X_s is Gaussian under the uncontrolled dynamics; v_bar is
    exponential-affine in x, so the expectation is a single lognormal
    moment. s = T returns g(t, x): never stopping pays no K.
    """
    if not t <= s <= m.big_t:
        raise ValueError(f"need t <= s <= T, got {t}, {s}")
    if s >= m.big_t:
        return cf.g_value(t, x, m)
    a1 = math.exp(m.big_r * (s - t))
    m1 = x * a1 + m.p / m.big_r * (a1 - 1.0)
    v1 = m.sigma0**2 / (2.0 * m.big_r) * (a1 * a1 - 1.0)
    coef = m.eta * math.exp(m.big_r * (m.big_t - s))
    log_val = cf.log_v_bar(s, 0.0, m) - coef * (m1 - m.k) + 0.5 * coef * coef * v1
    return math.exp(log_val)
