"""Parameter sweeps over the thresholds, plus monotonicity reports.

Reproduces the four sensitivity panels (k_star against q, eta, sigma0
and the horizon) and checks the claimed monotone directions.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from . import closed_form as cf
from .params import ModelParams, ValidationError

SWEEPABLE = ("q", "eta", "sigma0", "big_t", "k")

#: default ranges for the four panels, centered on the reference table
PANEL_RANGES = {
    "q": (0.02, 0.12),
    "eta": (0.1, 2.0),
    "sigma0": (0.3, 1.0),
    "big_t": (1.0, 20.0),
}

#: claimed monotone direction of k_star in each swept parameter
EXPECTED_DIRECTION = {"q": "decreasing", "eta": "increasing", "sigma0": "increasing", "big_t": "increasing"}


@dataclass(frozen=True)
class SweepRecord:
    param: str
    value: float
    k_star: float
    t_star: Optional[float]
    q_star: Optional[float]
    regime: cf.Regime


@dataclass(frozen=True)
class MonotonicityVerdict:
    direction: str          # "strictly increasing" / "strictly decreasing" / "violation at index i"
    strict: bool
    first_violation: Optional[int]


def sweep(
    param: str,
    lo: float,
    hi: float,
    n: int,
    base: ModelParams,
    log_spacing: bool = False,
) -> list[SweepRecord]:
    """Evaluate the thresholds along a 1-D parameter grid.

    Grid points whose parameter set fails validation (e.g. q crossing
    eta*sigma0^2) are skipped with a warning rather than aborting the
    sweep, so a feasible band can be plotted from a generous range.
    """
    if param not in SWEEPABLE:
        raise ValueError(f"cannot sweep {param!r}; one of {SWEEPABLE}")
    if n < 2:
        raise ValueError("need n >= 2 grid points")
    if log_spacing:
        if lo <= 0:
            raise ValueError("log spacing needs lo > 0")
        grid = np.geomspace(lo, hi, n)
    else:
        grid = np.linspace(lo, hi, n)

    records: list[SweepRecord] = []
    skipped = 0
    for val in grid:
        try:
            m = base.replace(**{param: float(val)})
        except ValidationError as err:
            skipped += 1
            warnings.warn(f"sweep {param}={val:.6g} skipped: {err}", stacklevel=2)
            continue
        dec = cf.decide_case(m)
        records.append(
            SweepRecord(
                param=param,
                value=float(val),
                k_star=dec.k_star,
                t_star=dec.t_star,
                q_star=dec.q_star,
                regime=dec.regime,
            )
        )
    if not records:
        raise ValidationError([])
    return records


def monotonicity_report(values: Sequence[float]) -> MonotonicityVerdict:
    """Strict-monotonicity verdict with the first violating pair if any."""
    if len(values) < 3:
        raise ValueError("need at least 3 records")
    diffs = np.diff(np.asarray(values, dtype=float))
    if np.all(diffs > 0):
        return MonotonicityVerdict("strictly increasing", True, None)
    if np.all(diffs < 0):
        return MonotonicityVerdict("strictly decreasing", True, None)
    # first index where neither strict direction survives
    inc_bad = np.flatnonzero(diffs <= 0)
    dec_bad = np.flatnonzero(diffs >= 0)
    i = int(min(inc_bad[0] if inc_bad.size else len(diffs), dec_bad[0] if dec_bad.size else len(diffs)))
    # report against the direction the series started with
    if diffs[0] > 0:
        i = int(inc_bad[0])
    elif diffs[0] < 0:
        i = int(dec_bad[0])
    return MonotonicityVerdict(f"violation at index {i + 1}", False, i + 1)


def write_csv(records: Sequence[SweepRecord], path) -> None:
    """Header `param,value,k_star,t_star,q_star,regime`; full precision."""
    with open(path, "w") as f:
        f.write("param,value,k_star,t_star,q_star,regime\n")
        for r in records:
            ts = "" if r.t_star is None else repr(r.t_star)
            qs = "" if r.q_star is None else repr(r.q_star)
            f.write(f"{r.param},{r.value!r},{r.k_star!r},{ts},{qs},{r.regime.value}\n")


def write_svg(records: Sequence[SweepRecord], path) -> None:
    """One line chart: swept parameter on x, k_star on y."""
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    xs = [r.value for r in records]
    ys = [r.k_star for r in records]
    fig, ax = plt.subplots(figsize=(5, 3.5))
    ax.plot(xs, ys)
    ax.set_xlabel(records[0].param)
    ax.set_ylabel("k_star")
    ax.grid(True, alpha=0.3)
    fig.tight_layout()
    fig.savefig(path, format="svg")
    plt.close(fig)


def all_panels(base: ModelParams, out_dir, n: int = 50) -> list[Path]:
    """Emit the four standard panels as CSV + SVG pairs; returns the paths."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    written: list[Path] = []
    for param, (lo, hi) in PANEL_RANGES.items():
        recs = sweep(param, lo, hi, n, base)
        csv_path = out / f"sweep_{param}.csv"
        svg_path = out / f"sweep_{param}.svg"
        write_csv(recs, csv_path)
        write_svg(recs, svg_path)
        written += [csv_path, svg_path]
    return written
