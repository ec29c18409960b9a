"""Evaluate Q_{p,q} on a t-grid and classify its monotonicity."""

from __future__ import annotations

import csv
import io
import json
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from ..errors import HeatmonoError, SweepPointError
from ..measure import DiscreteMeasure, ExponentPair
from .control import DEFAULT_CONTROL, QuadratureControl
from .routes import (
    Difference,
    LogReal,
    _as_pair,
    _factors,
    q_derivative_scaled,
    q_direct,
    q_direct_power,
    q_series,
    q_series_power,
    richardson_derivative,
    series_difference,
)

NONDECREASING = "nondecreasing"
DECREASING_INITIALLY = "strictly-decreasing-initially"
MIXED = "mixed"
VERDICTS = (NONDECREASING, DECREASING_INITIALLY, MIXED)

# an initial prefix of at least this many points must decrease
MIN_PREFIX_POINTS = 3


def log_grid(tmin: float, tmax: float, count: int) -> list[float]:
    if not 0 < tmin < tmax or count < 2:
        raise ValueError("need 0 < tmin < tmax and count >= 2")
    return [float(x) for x in np.geomspace(tmin, tmax, count)]


def linear_grid(tmin: float, tmax: float, count: int) -> list[float]:
    if not 0 < tmin < tmax or count < 2:
        raise ValueError("need 0 < tmin < tmax and count >= 2")
    return [float(x) for x in np.linspace(tmin, tmax, count)]


@dataclass(frozen=True)
class SweepPoint:
    t: float
    Q: float
    dQq_dt: float
    dQq_dt_log: LogReal
    route: str


@dataclass(frozen=True)
class StepRecord:
    """One successive difference Q(t_{i+1}) - Q(t_i) and how it was classified.

    ``threshold_log`` is the log of the size a decrease must exceed: the
    propagated noise bound for ``kind == "resolved"``, the monotonicity
    tolerance for ``kind == "tolerance"``.
    """

    index: int
    delta_log: LogReal
    threshold_log: float
    kind: str

    @property
    def delta(self) -> float:
        return self.delta_log.value

    @property
    def threshold(self) -> float:
        return math.exp(self.threshold_log) if self.threshold_log > -745 else 0.0

    @property
    def decrease(self) -> bool:
        """Counts against monotonicity and towards an initial decrease."""
        return self.delta_log.sign < 0 and self.delta_log.log_abs > self.threshold_log


@dataclass(frozen=True)
class SweepReport:
    pq: ExponentPair
    measure: DiscreteMeasure
    points: tuple[SweepPoint, ...]
    steps: tuple[StepRecord, ...]
    verdict: str
    tolerance: float
    rtol: float

    @property
    def grid(self) -> list[float]:
        return [pt.t for pt in self.points]

    @property
    def values(self) -> list[float]:
        return [pt.Q for pt in self.points]

    @property
    def derivatives(self) -> list[float]:
        return [pt.dQq_dt for pt in self.points]

    @property
    def decreasing_interval(self) -> tuple[float, float] | None:
        """[t_0, t_j] spanned by the initial run of decreasing steps, if it has >= 3 points."""
        j = 0
        while j < len(self.steps) and self.steps[j].decrease:
            j += 1
        if j + 1 < MIN_PREFIX_POINTS:
            return None
        return self.points[0].t, self.points[j].t

    def to_dict(self) -> dict:
        interval = self.decreasing_interval
        return {
            "p": str(self.pq.p),
            "q": str(self.pq.q),
            "measure": self.measure.to_dict(),
            "verdict": self.verdict,
            "tolerance": self.tolerance,
            "rtol": self.rtol,
            "decreasing_interval": list(interval) if interval else None,
            "points": [
                {"t": p.t, "Q": p.Q, "dQq_dt": p.dQq_dt, "dQq_dt_sign": p.dQq_dt_log.sign,
                 "dQq_dt_log10_abs": _finite_or_none(p.dQq_dt_log.log10_abs), "route": p.route}
                for p in self.points
            ],
            "steps": [
                {"i": s.index, "delta": s.delta, "delta_sign": s.delta_log.sign,
                 "delta_log10_abs": _finite_or_none(s.delta_log.log10_abs),
                 "threshold_log10": _finite_or_none(s.threshold_log / math.log(10)), "kind": s.kind, "decrease": s.decrease}
                for s in self.steps
            ],
        }

    def to_json(self, **kw) -> str:
        return json.dumps(self.to_dict(), **kw)

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["t", "Q", "dQq_dt", "route"])
        for p in self.points:
            w.writerow([repr(p.t), repr(p.Q), repr(p.dQq_dt), p.route])
        return buf.getvalue()


def _finite_or_none(x: float):
    return x if math.isfinite(x) else None


def classify(steps) -> str:
    """Verdict from classified steps: no decrease anywhere, a decreasing initial prefix, or neither."""
    steps = list(steps)
    if not any(s.decrease for s in steps):
        return NONDECREASING
    need = MIN_PREFIX_POINTS - 1
    if len(steps) >= need and all(s.decrease for s in steps[:need]):
        return DECREASING_INITIALLY
    return MIXED


def _uses_series(mu: DiscreteMeasure, pq: ExponentPair) -> bool:
    return pq.p == 1 and mu.dim == 1 and mu.integer_supported


def _evaluate_point(mu: DiscreteMeasure, pq: ExponentPair, t: float, ctrl: QuadratureControl,
                    derivative: bool) -> SweepPoint:
    if _uses_series(mu, pq):
        Q = q_series(mu, pq.q, t, ctrl)
        d = q_derivative_scaled(mu, pq.q, t, ctrl) if derivative else LogReal(0, -math.inf)
        return SweepPoint(t, Q, d.value if derivative else math.nan, d, "series")
    if pq.p == 1 and all(f.integer_supported for f in _factors(mu)):
        Q = q_series(mu, pq.q, t, ctrl)
        route = "series"
        power = lambda s: q_series_power(mu, pq.q, s, ctrl)  # noqa: E731
    else:
        Q = q_direct(mu, pq, t, ctrl)
        route = "direct"
        power = lambda s: q_direct_power(mu, pq, s, ctrl)  # noqa: E731
    if derivative:
        dv = richardson_derivative(power, t)
        return SweepPoint(t, Q, dv, LogReal.from_float(dv), route)
    return SweepPoint(t, Q, math.nan, LogReal(0, -math.inf), route)


def sweep(mu: DiscreteMeasure, pq: ExponentPair | tuple, grid, ctrl: QuadratureControl = DEFAULT_CONTROL,
          *, workers: int = 1, derivative: bool = True) -> SweepReport:
    """Q_{p,q}(t) over an increasing grid, per-point derivative estimates, and a monotonicity verdict.

    Differences on the p = 1 integer-support path come from
    :func:`series_difference`; a step counts as a decrease only when it is
    negative by more than its propagated noise bound.  Every other path
    subtracts values directly and uses ``ctrl.monotonicity_tol(Q)``.
    Points may be evaluated by ``workers`` threads; the report is the same
    regardless because each point is computed independently.
    """
    pq = _as_pair(pq)
    grid = [float(t) for t in grid]
    if len(grid) < 2:
        raise ValueError("grid needs at least two points")
    if any(not t > 0 for t in grid) or any(b <= a for a, b in zip(grid, grid[1:])):
        raise ValueError("grid must be strictly increasing and positive")

    def point(i):
        try:
            return _evaluate_point(mu, pq, grid[i], ctrl, derivative)
        except HeatmonoError as exc:
            raise SweepPointError(i, grid[i], exc) from exc

    series = _uses_series(mu, pq)

    def step(i):
        a, b = points[i], points[i + 1]
        if series:
            try:
                diff: Difference = series_difference(mu, pq.q, a.t, b.t, ctrl)
            except HeatmonoError as exc:
                raise SweepPointError(i, a.t, exc) from exc
            return StepRecord(i, diff.delta, diff.noise.log_abs, "resolved")
        thr = ctrl.monotonicity_tol(max(abs(a.Q), abs(b.Q)))
        return StepRecord(i, LogReal.from_float(b.Q - a.Q), math.log(thr), "tolerance")

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            points = list(pool.map(point, range(len(grid))))
            steps = list(pool.map(step, range(len(grid) - 1)))
    else:
        points = [point(i) for i in range(len(grid))]
        steps = [step(i) for i in range(len(grid) - 1)]

    tolerance = ctrl.monotonicity_tol(1.0)
    return SweepReport(pq, mu, tuple(points), tuple(steps), classify(steps), tolerance, ctrl.rtol)
