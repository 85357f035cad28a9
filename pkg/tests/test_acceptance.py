"""End-to-end acceptance gate.

Nine criteria, each printed as a single PASS/FAIL line with the measured
quantity, its tolerance, and the runtime bound. Run with `pytest -s` to
see all lines; under capture they still appear for failing tests.
"""

import math
import time

import numpy as np
import pytest
from scipy.integrate import quad

import reinopt.closed_form as cf
import reinopt.oracles as orc
import reinopt.sensitivity as sens
import reinopt.simulate as sim
from reinopt import ActuarialParams, PathConfig, validate
from tests.conftest import TABLE1

KSTAR_TABLE1 = 0.10704271517750452


def _report(num: int, label: str, ok: bool, detail: str, elapsed: float, bound: float):
    status = "PASS" if ok and elapsed < bound else "FAIL"
    print(
        f"{status} criterion {num} ({label}): {detail} "
        f"[runtime {elapsed:.2f}s < {bound:.0f}s]"
    )
    assert ok, f"criterion {num}: {detail}"
    assert elapsed < bound, f"criterion {num}: runtime {elapsed:.2f}s over {bound}s"


def test_criterion_1_threshold_vs_quadrature():
    start = time.perf_counter()
    m = validate(TABLE1)
    integral = quad(
        lambda s: cf.psi(s, m) - cf.h_rate(s, m), 0.0, m.big_t,
        epsabs=1e-12, epsrel=1e-12, limit=200,
    )[0]
    k_quad = -math.exp(-m.big_r * m.big_t) / m.eta * integral
    k = cf.k_star(m)
    gap = abs(k - k_quad)
    ok = gap <= 1e-6 and abs(k - KSTAR_TABLE1) <= 1e-12
    _report(
        1, "subscription cost threshold", ok,
        f"k_star={k:.10f}, |closed form - quadrature|={gap:.2e} (tol 1e-6)",
        time.perf_counter() - start, 1.0,
    )


def test_criterion_2_identity_over_random_draws():
    start = time.perf_counter()
    rng = np.random.default_rng(2024)
    worst = 0.0
    for _ in range(1000):
        eta = rng.uniform(0.1, 2.0)
        sigma0 = rng.uniform(0.2, 1.0)
        q = rng.uniform(0.05, 0.95) * eta * sigma0**2
        m = validate(dict(
            p=rng.uniform(0.05, 0.95) * q, q=q, sigma0=sigma0, eta=eta,
            big_r=rng.uniform(0.01, 0.2), big_t=rng.uniform(1.0, 15.0),
            k=rng.uniform(0.01, 1.0), r0=1.0,
        ))
        lhs = cf.big_h(0.0, m)
        rhs = m.eta * math.exp(m.big_r * m.big_t) * (m.k - cf.k_star(m))
        worst = max(worst, abs(lhs - rhs))
    _report(
        2, "threshold identity at t=0", worst <= 1e-10,
        f"max |H(0) - eta*e^(RT)*(K - k_star)| = {worst:.2e} over 1000 draws (tol 1e-10)",
        time.perf_counter() - start, 5.0,
    )


def test_criterion_3_free_boundary():
    start = time.perf_counter()
    m = validate({**TABLE1, "k": 0.08})
    ts = cf.t_star(m)
    resid = abs(cf.big_h(ts, m))
    worst_rel = 0.0
    for x in (0.0, 1.0, 5.0):
        a = cf.g_value(ts, x, m)
        b = cf.v_bar(ts, x - m.k, m)
        worst_rel = max(worst_rel, abs(a - b) / abs(b))
    ok = resid <= 1e-10 and worst_rel <= 1e-9
    _report(
        3, "stopping time threshold", ok,
        f"t_star={ts:.6f}, |H(t_star)|={resid:.2e} (tol 1e-10), "
        f"value-matching rel err {worst_rel:.2e} (tol 1e-9)",
        time.perf_counter() - start, 1.0,
    )


def test_criterion_4_hjb_oracle():
    start = time.perf_counter()
    m = validate(TABLE1)
    surf = orc.hjb_pure_reinsurance(m, orc.GridSpec(400, 800, -5.0, 10.0), keep_every=20)
    msk = surf.interior_mask()
    xs = surf.x_grid[msk]
    rel = 0.0
    pol = 0.0
    for i, t in enumerate(surf.t_grid):
        exact = np.exp([cf.log_v_bar(float(t), float(x), m) for x in xs])
        rel = max(rel, float(np.max(np.abs(surf.values[i][msk] - exact) / exact)))
        pol = max(pol, float(np.max(np.abs(surf.policy[i][msk] - cf.u_star(float(t), m)))))
    du = 1.0 / (orc.N_U_CANDIDATES - 1)
    ok = rel <= 1e-3 and pol <= 2 * du
    _report(
        4, "finite-difference control equation", ok,
        f"max rel err {rel:.2e} (tol 1e-3), max policy err {pol:.2e} (tol {2*du:g})",
        time.perf_counter() - start, 60.0,
    )


def test_criterion_5_stopping_lattice():
    start = time.perf_counter()
    m = validate({**TABLE1, "k": 0.08})
    surf = orc.stopping_lattice(m)
    msk = surf.interior_mask()
    xs = surf.x_grid[msk]
    rel = 0.0
    for i, t in enumerate(surf.t_grid):
        exact = np.array([cf.value(float(t), float(x), m) for x in xs])
        rel = max(rel, float(np.max(np.abs(surf.values[i][msk] - exact) / exact)))
    boundary = orc.lattice_stop_boundary(surf)
    dt = float(surf.t_grid[1] - surf.t_grid[0])
    ts = cf.t_star(m)
    boundary_ok = boundary is not None and abs(boundary - ts) <= dt + 1e-12

    m2 = validate({**TABLE1, "k": 0.2})
    surf2 = orc.stopping_lattice(m2)
    never_stops = not surf2.policy[:-1, surf2.interior_mask()].any()

    ok = rel <= 5e-3 and boundary_ok and never_stops
    _report(
        5, "backward-induction stopping grid", ok,
        f"max rel err {rel:.2e} (tol 5e-3), boundary {boundary:.3f} vs "
        f"t_star {ts:.3f} (tol {dt:g}), high-cost case never stops: {never_stops}",
        time.perf_counter() - start, 120.0,
    )


@pytest.mark.parametrize("case", ["null", "optimal", "constant_half"])
def test_criterion_6_monte_carlo_consistency(case):
    start = time.perf_counter()
    cfg = PathConfig(n_paths=100_000, seed=606)
    if case == "null":
        m = validate(TABLE1)
        strat = cf.null_strategy(m)
        exact = cf.g_value(0.0, m.r0, m)
    elif case == "optimal":
        m = validate({**TABLE1, "k": 0.08})
        strat = cf.decide(0.0, m.r0, m)
        exact = cf.value(0.0, m.r0, m)
    else:
        m = validate(TABLE1)
        strat = cf.Strategy(stop_time=0.0, retention=lambda s: 0.5, is_null=False)
        exact = orc.utility_of_schedule(0.0, m.r0, 0.0, strat.retention, m)
    samples = sim.simulate_strategy(0.0, m.r0, strat, m, cfg)
    est = sim.mc_exp_utility(samples, m.eta, seed=cfg.seed)
    z = (est.mean - exact) / est.std_error
    _report(
        6, f"simulation agreement, {case} strategy", abs(z) <= 3.0,
        f"mc {est.mean:.6f} vs exact {exact:.6f}, z={z:+.2f} (tol 3 SE)",
        time.perf_counter() - start, 30.0,
    )


def test_criterion_7_dominance_inequality():
    start = time.perf_counter()
    ts_grid = np.linspace(0.0, 10.0, 101)
    xs_grid = np.linspace(-5.0, 5.0, 101)
    worst = -np.inf
    for k in (0.05, 0.08, 0.2):
        m = validate({**TABLE1, "k": k})
        for t in ts_grid:
            for x in xs_grid:
                v = cf.value(float(t), float(x), m)
                cap = min(cf.v_bar(float(t), float(x) - k, m), cf.g_value(float(t), float(x), m))
                worst = max(worst, v - cap)
    _report(
        7, "value dominated by both pure alternatives", worst <= 1e-12,
        f"max (value - min(subscribe-now, never)) = {worst:.2e} (tol 1e-12)",
        time.perf_counter() - start, 5.0,
    )


def test_criterion_8_sensitivity_and_break_even():
    start = time.perf_counter()
    m = validate(TABLE1)
    verdicts = {}
    import warnings

    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        for param, (lo, hi) in sens.PANEL_RANGES.items():
            recs = sens.sweep(param, lo, hi, 50, m)
            verdicts[param] = sens.monotonicity_report([r.k_star for r in recs])
    directions_ok = all(
        v.strict and v.direction == "strictly " + sens.EXPECTED_DIRECTION[p]
        for p, v in verdicts.items()
    )
    qs = cf.q_star(m.k, m)
    bounds_ok = 0.0 < qs < m.eta * m.sigma0**2
    gap = abs(cf.k_star(m.replace(q=qs, p=0.5 * qs)) - m.k)
    ok = directions_ok and bounds_ok and gap <= 1e-6
    _report(
        8, "threshold monotonicity and break-even rate", ok,
        f"directions {'ok' if directions_ok else 'WRONG'}, q_star={qs:.6f} "
        f"in (0, {m.eta * m.sigma0**2:g}), |k_star(q_star) - K|={gap:.2e} (tol 1e-6)",
        time.perf_counter() - start, 5.0,
    )


def test_criterion_9_compound_poisson_moments():
    start = time.perf_counter()
    a = ActuarialParams(lam=1.0, mu=0.1, mu2=0.02, theta_i=0.5, theta=1.0,
                        claim_dist="exponential")
    t = 10.0
    s = sim.simulate_cramer_lundberg(t, a, PathConfig(n_paths=100_000, seed=909))
    n = len(s)
    mean_exact = a.lam * a.mu * t
    var_exact = a.lam * a.mu2 * t
    se_mean = s.std(ddof=1) / math.sqrt(n)
    z_mean = (s.mean() - mean_exact) / se_mean
    # SE of the sample variance from the fourth central moment
    m4 = np.mean((s - s.mean()) ** 4)
    se_var = math.sqrt((m4 - s.var(ddof=1) ** 2 * (n - 3) / (n - 1)) / n)
    z_var = (s.var(ddof=1) - var_exact) / se_var
    ok = abs(z_mean) <= 4.0 and abs(z_var) <= 4.0
    _report(
        9, "claim-process moments", ok,
        f"mean z={z_mean:+.2f}, variance z={z_var:+.2f} (tol 4 SE)",
        time.perf_counter() - start, 10.0,
    )
