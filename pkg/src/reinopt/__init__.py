"""Optimal proportional reinsurance under a fixed subscription cost.

Closed-form solver (value functions, thresholds, optimal strategy) plus
independent numerical verifiers: Monte Carlo, a finite-difference HJB
solver, and a trinomial stopping lattice.
"""

__version__ = "0.1.0"

from .closed_form import (
    CaseDecision,
    NoThresholdError,
    Regime,
    Strategy,
    big_h,
    decide,
    decide_case,
    g_value,
    h_rate,
    k_star,
    log_g,
    log_v_bar,
    log_value,
    null_strategy,
    psi,
    q_star,
    t_a,
    t_star,
    u_star,
    v_bar,
    value,
)
from .params import (
    ActuarialParams,
    ConstraintViolation,
    ModelParams,
    ValidationError,
    from_actuarial,
    params_from_config,
    parse_config,
    validate,
)
from .simulate import (
    McEstimate,
    PathConfig,
    Scheme,
    mc_exp_utility,
    simulate_cramer_lundberg,
    simulate_strategy,
    simulate_uncontrolled,
)

__all__ = [name for name in dir() if not name.startswith("_")]
