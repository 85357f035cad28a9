import pytest
from hypothesis import strategies as st

from reinopt import ModelParams, validate

TABLE1 = dict(p=0.05, q=0.1, sigma0=0.5, eta=0.5, big_r=0.05, big_t=10.0, k=0.1, r0=1.0)


@pytest.fixture
def table1() -> ModelParams:
    return validate(TABLE1)


@pytest.fixture
def table1_k008() -> ModelParams:
    return validate({**TABLE1, "k": 0.08})


@pytest.fixture
def table1_k02() -> ModelParams:
    return validate({**TABLE1, "k": 0.2})


@st.composite
def admissible_params(draw):
    """Random parameter sets satisfying every model constraint.

    Ranges kept moderate (eta*K*e^{RT} bounded) so double-precision
    identities hold at tight absolute tolerances.
    """
    eta = draw(st.floats(0.1, 2.0))
    sigma0 = draw(st.floats(0.2, 1.0))
    big_r = draw(st.floats(0.01, 0.2))
    big_t = draw(st.floats(1.0, 15.0))
    q = draw(st.floats(0.05, 0.95)) * eta * sigma0**2
    p = draw(st.floats(0.05, 0.95)) * q
    k = draw(st.floats(0.01, 1.0))
    r0 = draw(st.floats(0.1, 5.0))
    return validate(
        dict(p=p, q=q, sigma0=sigma0, eta=eta, big_r=big_r, big_t=big_t, k=k, r0=r0)
    )
