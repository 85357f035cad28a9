import math

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from reinopt import (
    ActuarialParams,
    ModelParams,
    ValidationError,
    from_actuarial,
    params_from_config,
    parse_config,
    validate,
)
from tests.conftest import TABLE1, admissible_params


def test_table1_accepted(table1):
    assert table1.q == 0.1 and table1.big_t == 10.0


def test_q_above_volatility_bound_rejected():
    with pytest.raises(ValidationError) as exc:
        validate({**TABLE1, "q": 0.13})
    names = [v.name for v in exc.value.violations]
    assert "q" in names
    assert any("eta*sigma0^2" in v.bound for v in exc.value.violations)


def test_cheap_reinsurance_rejected():
    with pytest.raises(ValidationError) as exc:
        validate({**TABLE1, "p": 0.1, "q": 0.1})
    assert any("non-cheap" in v.bound for v in exc.value.violations)


def test_zero_interest_rate_rejected():
    with pytest.raises(ValidationError):
        validate({**TABLE1, "big_r": 0.0})


def test_nonfinite_rejected():
    with pytest.raises(ValidationError):
        validate({**TABLE1, "sigma0": float("inf")})


def test_all_violations_reported():
    with pytest.raises(ValidationError) as exc:
        validate({**TABLE1, "k": -1.0, "r0": -2.0})
    assert len(exc.value.violations) == 2


def test_unknown_key_rejected():
    with pytest.raises(ValidationError):
        validate({**TABLE1, "bogus": 1.0})


def test_from_actuarial_matches_table1():
    a = ActuarialParams(lam=1.0, mu=0.1, mu2=0.25, theta_i=0.5, theta=1.0)
    m = from_actuarial(a, eta=0.5, big_r=0.05, big_t=10.0, k=0.1, r0=1.0)
    assert m.p == pytest.approx(0.05)
    assert m.q == pytest.approx(0.1)
    assert m.sigma0 == pytest.approx(0.5)


def test_equal_loadings_rejected():
    a = ActuarialParams(lam=1.0, mu=0.1, mu2=0.25, theta_i=1.0, theta=1.0)
    with pytest.raises(ValidationError):
        from_actuarial(a, eta=0.5, big_r=0.05, big_t=10.0, k=0.1, r0=1.0)


def test_jensen_violation_rejected():
    a = ActuarialParams(lam=1.0, mu=0.5, mu2=0.2, theta_i=0.5, theta=1.0)
    with pytest.raises(ValidationError):
        from_actuarial(a, eta=0.5, big_r=0.05, big_t=10.0, k=0.1, r0=1.0)


@given(
    lam=st.floats(0.5, 5.0),
    mu=st.floats(0.05, 0.5),
    ratio=st.floats(1.0, 4.0),
    theta_i=st.floats(0.1, 1.0),
    bump=st.floats(0.05, 1.0),
    eta_scale=st.floats(1.1, 5.0),
)
@settings(max_examples=200)
def test_from_actuarial_never_violates_invariants(lam, mu, ratio, theta_i, bump, eta_scale):
    # eta chosen above theta*mu/mu2 so q < eta*sigma0^2 always holds
    mu2 = ratio * mu * mu
    theta = theta_i + bump
    eta = eta_scale * theta * mu / mu2
    a = ActuarialParams(lam=lam, mu=mu, mu2=mu2, theta_i=theta_i, theta=theta)
    m = from_actuarial(a, eta=eta, big_r=0.05, big_t=10.0, k=0.1, r0=1.0)
    assert 0 < m.p < m.q < m.eta * m.sigma0**2


@pytest.mark.parametrize("c", [0.5, 2.0, 7.0])
def test_intensity_scaling(c):
    a = ActuarialParams(lam=1.0, mu=0.1, mu2=0.25, theta_i=0.5, theta=1.0)
    base = from_actuarial(a, eta=0.5, big_r=0.05, big_t=10.0, k=0.1, r0=1.0)
    kw = dict(eta=0.5, big_r=0.05, big_t=10.0, k=0.1, r0=1.0)
    scaled = from_actuarial(ActuarialParams(c * a.lam, a.mu, a.mu2, a.theta_i, a.theta), **kw)
    assert scaled.p == pytest.approx(c * base.p)
    assert scaled.q == pytest.approx(c * base.q)
    assert scaled.sigma0 == pytest.approx(math.sqrt(c) * base.sigma0)


@given(admissible_params())
@settings(max_examples=100)
def test_admissible_draws_validate(m):
    assert isinstance(m, ModelParams)


def test_parse_config_roundtrip(tmp_path):
    cfg = tmp_path / "model.cfg"
    cfg.write_text(
        "# reference parameters\n"
        "p = 0.05\nq = 0.1\nsigma0 = 0.5\neta = 0.5\n"
        "big_r = 0.05\nbig_t = 10\nk = 0.1\nr0 = 1\n"
    )
    m = params_from_config(parse_config(cfg))
    assert m == validate(TABLE1)


def test_parse_config_unknown_key(tmp_path):
    cfg = tmp_path / "model.cfg"
    cfg.write_text("p = 0.05\nwhatever = 3\n")
    with pytest.raises(ValidationError) as exc:
        parse_config(cfg)
    assert exc.value.violations[0].name == "whatever"


def test_missing_key_names_field(tmp_path):
    cfg = tmp_path / "model.cfg"
    cfg.write_text("p = 0.05\nsigma0 = 0.5\neta = 0.5\nbig_r = 0.05\nbig_t = 10\n")
    with pytest.raises(ValidationError) as exc:
        params_from_config(parse_config(cfg))
    assert any(v.name == "q" for v in exc.value.violations)


def test_actuarial_config(tmp_path):
    cfg = tmp_path / "model.cfg"
    cfg.write_text(
        "lam = 1\nmu = 0.1\nmu2 = 0.25\ntheta_i = 0.5\ntheta = 1.0\neta = 0.5\n"
        "big_r = 0.05\nbig_t = 10\nk = 0.1\nr0 = 1\n"
    )
    m = params_from_config(parse_config(cfg))
    assert m.sigma0 == pytest.approx(0.5)


def test_overrides_beat_config(tmp_path):
    cfg = tmp_path / "model.cfg"
    cfg.write_text("q = 0.1\nsigma0 = 0.5\neta = 0.5\nbig_r = 0.05\nbig_t = 10\n")
    m = params_from_config(parse_config(cfg), {"k": 0.08})
    assert m.k == 0.08 and m.p == 0.05  # default p fills in


def test_replace_revalidates(table1):
    with pytest.raises(ValidationError):
        table1.replace(q=0.2)
