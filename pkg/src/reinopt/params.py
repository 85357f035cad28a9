"""Model parameters: validation, actuarial derivation, config loading.

Single source of truth for every symbol used by the other modules.
All quantities are plain finite floats; units are documented only.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, fields
from pathlib import Path
from typing import Mapping


@dataclass(frozen=True)
class ConstraintViolation:
    """One failed parameter constraint: which field, its value, the bound it broke."""

    name: str
    value: float
    bound: str

    def __str__(self) -> str:
        return f"{self.name}={self.value!r} violates {self.bound}"


class ValidationError(ValueError):
    """Raised by validate(); carries every violated constraint, not just the first."""

    def __init__(self, violations: list[ConstraintViolation]):
        self.violations = violations
        super().__init__("; ".join(str(v) for v in violations))


@dataclass(frozen=True)
class ModelParams:
    """Economic/market parameters of the diffusion model.

    p       insurer net profit rate            (money / time)
    q       reinsurer net profit rate          (money / time)
    sigma0  diffusion volatility               (money / sqrt(time))
    eta     CARA risk aversion                 (1 / money)
    big_r   risk-free interest rate R          (1 / time)
    big_t   horizon T                          (time)
    k       fixed subscription cost K          (money)
    r0      initial capital                    (money)

    Immutable after construction; safe for concurrent reads.
    Use :func:`validate` to construct a checked instance.
    """

    p: float
    q: float
    sigma0: float
    eta: float
    big_r: float
    big_t: float
    k: float
    r0: float

    def replace(self, **changes) -> "ModelParams":
        """Validated copy with some fields changed."""
        vals = {f.name: getattr(self, f.name) for f in fields(self)}
        vals.update(changes)
        return validate(vals)


@dataclass(frozen=True)
class ActuarialParams:
    """Claim-level parameters of the compound-Poisson surplus.

    lam      claim arrival intensity (1/time)
    mu       mean claim size (money)
    mu2      second moment of claim size (money^2)
    theta_i  insurer safety loading (dimensionless)
    theta    reinsurer safety loading (dimensionless)
    claim_dist  'exponential' or 'lognormal'; used only by the simulator
    """

    lam: float
    mu: float
    mu2: float
    theta_i: float
    theta: float
    claim_dist: str = "exponential"


_MODEL_FIELDS = ("p", "q", "sigma0", "eta", "big_r", "big_t", "k", "r0")
_ACTUARIAL_FIELDS = ("lam", "mu", "mu2", "theta_i", "theta", "claim_dist")

#: Repo defaults for p, K, and r0. They satisfy every constraint when
#: combined with the reference point used throughout the tests (q=0.1,
#: sigma0=0.5, eta=0.5, big_r=0.05, big_t=10).
DEFAULTS = {"p": 0.05, "k": 0.1, "r0": 1.0}


def validate(raw: Mapping[str, float]) -> ModelParams:
    """Check every invariant of a candidate parameter set.

    Returns a ModelParams or raises ValidationError listing *all*
    violated constraints. big_r = 0 is rejected: the closed forms
    divide by R.
    """
    missing = [n for n in _MODEL_FIELDS if n not in raw]
    if missing:
        raise ValidationError(
            [ConstraintViolation(n, float("nan"), "required key missing") for n in missing]
        )
    unknown = [n for n in raw if n not in _MODEL_FIELDS]
    if unknown:
        raise ValidationError(
            [ConstraintViolation(n, float(raw[n]), "unknown parameter") for n in unknown]
        )

    v: list[ConstraintViolation] = []
    vals = {}
    for n in _MODEL_FIELDS:
        x = float(raw[n])
        vals[n] = x
        if not math.isfinite(x):
            v.append(ConstraintViolation(n, x, "must be finite"))
    if v:
        raise ValidationError(v)

    for n in _MODEL_FIELDS:
        if vals[n] <= 0.0:
            v.append(ConstraintViolation(n, vals[n], f"{n} > 0"))
    if vals["q"] <= vals["p"]:
        v.append(ConstraintViolation("q", vals["q"], f"q > p (non-cheap reinsurance, p={vals['p']})"))
    bound = vals["eta"] * vals["sigma0"] ** 2
    if vals["q"] >= bound:
        v.append(ConstraintViolation("q", vals["q"], f"q < eta*sigma0^2 = {bound}"))
    if v:
        raise ValidationError(v)
    return ModelParams(**vals)


def validate_actuarial(a: ActuarialParams) -> ActuarialParams:
    """Check the actuarial invariants; raise ValidationError otherwise."""
    v: list[ConstraintViolation] = []
    for n in ("lam", "mu", "mu2"):
        x = float(getattr(a, n))
        if not math.isfinite(x) or x <= 0.0:
            v.append(ConstraintViolation(n, x, f"{n} > 0 and finite"))
    if math.isfinite(a.mu) and math.isfinite(a.mu2) and a.mu2 < a.mu**2:
        v.append(ConstraintViolation("mu2", a.mu2, f"mu2 >= mu^2 = {a.mu**2} (Jensen)"))
    if not (0.0 < a.theta_i < a.theta):
        v.append(ConstraintViolation("theta_i", a.theta_i, f"0 < theta_i < theta = {a.theta}"))
    if a.claim_dist not in ("exponential", "lognormal"):
        v.append(ConstraintViolation("claim_dist", float("nan"), "one of {exponential, lognormal}"))
    if v:
        raise ValidationError(v)
    return a


def from_actuarial(
    a: ActuarialParams, *, eta: float, big_r: float, big_t: float, k: float, r0: float
) -> ModelParams:
    """Derive the diffusion parameters from claim-level data.

    Under the expected value premium principle:
        sigma0 = sqrt(lam * mu2),  p = theta_i*lam*mu,  q = theta*lam*mu.
    The result passes full validation.
    """
    validate_actuarial(a)
    return validate(
        {
            "p": a.theta_i * a.lam * a.mu,
            "q": a.theta * a.lam * a.mu,
            "sigma0": math.sqrt(a.lam * a.mu2),
            "eta": eta,
            "big_r": big_r,
            "big_t": big_t,
            "k": k,
            "r0": r0,
        }
    )


def parse_config(path: str | Path) -> dict[str, float | str]:
    """Read a flat key-value config file.

    Format: one `key = value` per line, '#' starts a comment, blank
    lines ignored. Keys must be model or actuarial field names;
    anything else is an error.
    """
    known = set(_MODEL_FIELDS) | set(_ACTUARIAL_FIELDS)
    out: dict[str, float | str] = {}
    bad: list[ConstraintViolation] = []
    for lineno, line in enumerate(Path(path).read_text().splitlines(), start=1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValidationError(
                [ConstraintViolation(f"line {lineno}", float("nan"), "expected 'key = value'")]
            )
        key, _, val = line.partition("=")
        key, val = key.strip(), val.strip()
        if key not in known:
            bad.append(ConstraintViolation(key, float("nan"), "unknown config key"))
            continue
        if key == "claim_dist":
            out[key] = val
        else:
            try:
                out[key] = float(val)
            except ValueError:
                bad.append(ConstraintViolation(key, float("nan"), f"not a number: {val!r}"))
    if bad:
        raise ValidationError(bad)
    return out


def params_from_config(
    config: Mapping[str, float | str], overrides: Mapping[str, float] | None = None
) -> ModelParams:
    """Build validated ModelParams from a parsed config plus CLI overrides.

    Precedence: overrides > config > repo defaults. If actuarial keys are
    present, (p, q, sigma0) are derived from them and must not also be
    given directly.
    """
    merged: dict[str, float | str] = dict(DEFAULTS)
    merged.update(config)
    if overrides:
        merged.update(overrides)

    actuarial = {n: merged.pop(n) for n in _ACTUARIAL_FIELDS if n in merged}
    if actuarial and any(n in actuarial for n in ("lam", "mu", "theta")):
        for n in ("p", "q", "sigma0"):
            if n in config or (overrides and n in overrides):
                raise ValidationError(
                    [ConstraintViolation(n, float(merged[n]), "given both directly and actuarially")]
                )
            merged.pop(n, None)
        needed = [n for n in ("lam", "mu", "mu2", "theta_i", "theta") if n not in actuarial]
        needed += [n for n in ("eta", "big_r", "big_t", "k", "r0") if n not in merged]
        if needed:
            raise ValidationError(
                [ConstraintViolation(n, float("nan"), "required key missing") for n in needed]
            )
        a = ActuarialParams(
            lam=float(actuarial["lam"]),
            mu=float(actuarial["mu"]),
            mu2=float(actuarial["mu2"]),
            theta_i=float(actuarial["theta_i"]),
            theta=float(actuarial["theta"]),
            claim_dist=str(actuarial.get("claim_dist", "exponential")),
        )
        return from_actuarial(
            a,
            eta=float(merged["eta"]),
            big_r=float(merged["big_r"]),
            big_t=float(merged["big_t"]),
            k=float(merged["k"]),
            r0=float(merged["r0"]),
        )
    return validate({k: float(v) for k, v in merged.items()})
