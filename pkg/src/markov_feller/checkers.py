"""Probe-based checks of the e-property, the asymptotic e-property and ASF.

Limits and limsups cannot be decided from finitely many probes, so a check
returns one of three verdicts:

``HoldsOnProbes``
    every probed quantity behaves as the property requires, within ``tol``;
    this is evidence, not a proof.
``FailsWithCertificate``
    the failure is backed by a replayable certificate whose key quantities
    are exact rationals (a growth slope, or a separation lower bound).
``Inconclusive``
    neither of the above.

Balls are probed in their closure. Every function probed here is continuous
in ``x``, and in a normed space the supremum over an open ball equals the
maximum over its closure, so boundary probes realise the supremum exactly.
"""

from __future__ import annotations

import csv
import io
import json
import math
import random
from dataclasses import dataclass, field
from enum import Enum
from fractions import Fraction
from typing import Iterable, Sequence

from markov_feller.errors import DimensionMismatch, FellerError, NotALimitPoint
from markov_feller.hamel import SpanPoint, format_rational
from markov_feller.semigroups import Identity, MarkovSemigroup, Scaling
from markov_feller.spaces import (
    FiniteMeasure,
    Metric,
    Point,
    PseudoMetricFamily,
    family_eval,
    metric_eval,
    metric_log,
    safe_exp,
)
from markov_feller.transport import wasserstein

TOL = 1e-6
EPS0 = 1.0
TAIL_WINDOW = 10
ASF_LOWER_BOUND = Fraction(1, 2)

CSV_COLUMNS = ("property", "gamma", "n_or_m", "value", "exact_exponent")


class Verdict(str, Enum):
    HOLDS_ON_PROBES = "HoldsOnProbes"
    FAILS_WITH_CERTIFICATE = "FailsWithCertificate"
    INCONCLUSIVE = "Inconclusive"


def fmt_float(v: float) -> str:
    return format(float(v), ".17g")


def _json_float(v):
    if v is None:
        return None
    v = float(v)
    return v if math.isfinite(v) else fmt_float(v)


# -- test functions -----------------------------------------------------------


@dataclass(frozen=True)
class TestFunction:
    """A Lipschitz probe function ``f`` for the e-property checks.

    ``distance``            ``x -> rho(x, z)``, Lipschitz 1, unbounded.
    ``truncated_distance``  ``x -> min(1, rho(x, z))``, Lipschitz 1, bounded.
    ``table``               explicit values on a finite point set.
    ``constant``            ``x -> c``.
    """

    __test__ = False

    kind: str
    lipschitz: float
    bounded: bool
    metric: Metric | None = None
    anchor: Point | None = None
    table_values: tuple[tuple[Point, float], ...] = ()
    constant: float = 0.0
    label: str = ""

    @classmethod
    def distance(cls, metric: Metric, anchor: Point) -> "TestFunction":
        return cls("distance", 1.0, False, metric=metric, anchor=anchor)

    @classmethod
    def truncated_distance(cls, metric: Metric, anchor: Point) -> "TestFunction":
        return cls("truncated_distance", 1.0, True, metric=metric, anchor=anchor)

    @classmethod
    def const(cls, c: float) -> "TestFunction":
        return cls("constant", 0.0, True, constant=float(c))

    @classmethod
    def table(
        cls,
        values: Iterable[tuple[Point, float]],
        metric: Metric,
        lipschitz: float | None = None,
    ) -> "TestFunction":
        """Table function; ``lipschitz`` defaults to the smallest valid constant."""
        values = tuple((p, float(v)) for p, v in values)
        if len({p for p, _ in values}) != len(values):
            raise ValueError("table test function has repeated points")
        best = 0.0
        for i, (p, a) in enumerate(values):
            for q, b in values[i + 1 :]:
                d = metric_eval(metric, p, q)
                if d:
                    best = max(best, abs(a - b) / d)
        if lipschitz is None:
            lipschitz = best
        elif best > lipschitz * (1 + 1e-12):
            raise ValueError(f"declared Lipschitz constant {lipschitz} is below the table's {best}")
        return cls("table", float(lipschitz), True, metric=metric, table_values=values)

    @property
    def name(self) -> str:
        if self.label:
            return self.label
        if self.kind in ("distance", "truncated_distance"):
            z = list(self.anchor.coords)
            return f"{self.kind}{z}"
        if self.kind == "constant":
            return f"constant[{self.constant!r}]"
        return "table"

    @property
    def homogeneous(self) -> bool:
        """``f(c x) = c f(x)`` for ``c > 0``: the norm ``rho(., 0)`` of a normed space."""
        return (
            self.kind == "distance"
            and self.metric.kind == "pnorm"
            and all(c == 0 for c in self.anchor.coords)
        )

    def __call__(self, x: Point) -> float:
        if self.kind == "distance":
            return metric_eval(self.metric, x, self.anchor)
        if self.kind == "truncated_distance":
            return min(1.0, metric_eval(self.metric, x, self.anchor))
        if self.kind == "constant":
            return self.constant
        for p, v in self.table_values:
            if p == x:
                return v
        raise FellerError(f"{x} is outside the table test function's domain")

    def check_lipschitz(self, pairs: Iterable[tuple[Point, Point]]) -> bool:
        metric = self.metric
        for p, q in pairs:
            if metric is None:
                continue
            if abs(self(p) - self(q)) > self.lipschitz * metric_eval(metric, p, q) * (1 + 1e-12) + 1e-15:
                return False
        return True

    def to_json(self) -> dict:
        out = {"kind": self.kind, "lipschitz": self.lipschitz, "bounded": self.bounded}
        if self.anchor is not None:
            out["anchor"] = self.anchor.to_json()
        if self.kind == "constant":
            out["value"] = self.constant
        if self.kind == "table":
            out["values"] = [{"point": p.to_json(), "value": v} for p, v in self.table_values]
        return out


# -- probe schedules ----------------------------------------------------------


@dataclass(frozen=True)
class ProbeSchedule:
    """Times, shrinking radii and, per radius, probe points in the closed ball."""

    times: tuple[SpanPoint, ...]
    radii: tuple[float, ...]
    probes: tuple[tuple[Point, ...], ...]
    tail_start: int = 0
    tail_window: int = TAIL_WINDOW

    def __post_init__(self):
        object.__setattr__(self, "times", tuple(self.times))
        object.__setattr__(self, "radii", tuple(float(r) for r in self.radii))
        object.__setattr__(self, "probes", tuple(tuple(p) for p in self.probes))
        if not self.times:
            raise ValueError("schedule has no times")
        if not self.radii:
            raise ValueError("schedule has no radii")
        if any(r <= 0 for r in self.radii):
            raise ValueError("radii must be positive")
        if any(b >= a for a, b in zip(self.radii, self.radii[1:])):
            raise ValueError("radii must be strictly decreasing")
        if len(self.probes) != len(self.radii):
            raise ValueError(f"{len(self.probes)} probe sets for {len(self.radii)} radii")
        if not 0 <= self.tail_start < len(self.times):
            raise ValueError(f"tail_start {self.tail_start} outside the schedule")
        if self.tail_window < 1:
            raise ValueError("tail_window must be >= 1")

    @property
    def tail(self) -> tuple[SpanPoint, ...]:
        return self.times[self.tail_start :]

    @property
    def window(self) -> tuple[SpanPoint, ...]:
        return self.tail[-self.tail_window :]

    def validate(self, metric: Metric, y: Point) -> None:
        for gamma, pts in zip(self.radii, self.probes):
            for x in pts:
                if metric_eval(metric, x, y) > gamma:
                    raise ValueError(f"probe {list(x.coords)} lies outside the ball of radius {gamma}")


def _into_ball(metric: Metric, y: Point, x: Point, gamma: float) -> Point:
    """Pull ``x`` towards ``y`` until rounding leaves it inside the closed ball."""
    if metric_eval(metric, x, y) <= gamma:
        return x
    t = 1.0
    delta = [a - b for a, b in zip(x.coords, y.coords)]
    for _ in range(10_000):
        t = math.nextafter(t, 0.0)
        cand = Point(tuple(b + t * d for b, d in zip(y.coords, delta)))
        if metric_eval(metric, cand, y) <= gamma:
            return cand
    return Point(tuple(b + 0.5 * d for b, d in zip(y.coords, delta)))


def _unit(metric: Metric, v: Sequence[float]) -> list[float]:
    n = metric.norm(Point(tuple(v)))
    return [c / n for c in v]


def radial_probes(y: Point, radii: Sequence[float], metric: Metric, count: int = 8) -> list[list[Point]]:
    """``x_n = (1 + gamma / (n |y|)) y`` for ``n = 1..count``: ``|x_n| != |y|``, ``rho(x_n, y) = gamma / n``."""
    r = metric.norm(y)
    if r == 0:
        raise ValueError("radial probes need y != 0")
    out = []
    for gamma in radii:
        pts = []
        for n in range(1, count + 1):
            c = 1 + gamma / (n * r)
            pts.append(_into_ball(metric, y, Point(tuple(c * v for v in y.coords)), gamma))
        out.append(pts)
    return out


def default_probes(
    y: Point,
    radii: Sequence[float],
    metric: Metric,
    seed: int = 0,
    n_random: int = 4,
    n_radial: int = 0,
) -> list[list[Point]]:
    """Axis probes ``y +- gamma * j/(j+1) * e_i`` (``j = 1, 2``) and ``y +- gamma * e_i``,
    then ``n_radial`` radial probes and ``n_random`` seeded uniform-direction probes."""
    if metric.kind != "pnorm":
        raise ValueError("default probes need a p-norm metric; give explicit probes for table metrics")
    rng = random.Random(seed)
    radial = radial_probes(y, radii, metric, n_radial) if n_radial else [[] for _ in radii]
    out = []
    for gamma, extra in zip(radii, radial):
        pts: list[Point] = []
        for factor in (1.0, 2.0 / 3.0, 0.5):
            for i in range(y.dim):
                for sign in (1.0, -1.0):
                    c = list(y.coords)
                    c[i] += sign * gamma * factor
                    pts.append(_into_ball(metric, y, Point(tuple(c)), gamma))
        pts.extend(extra)
        for _ in range(n_random):
            v = _unit(metric, [rng.gauss(0.0, 1.0) for _ in range(y.dim)])
            s = gamma * rng.random()
            pts.append(_into_ball(metric, y, Point(tuple(b + s * d for b, d in zip(y.coords, v))), gamma))
        uniq = []
        for p in pts:
            if p not in uniq and p != y:
                uniq.append(p)
        out.append(uniq)
    return out


def state_probes(states: Sequence[Point], y: Point, radii: Sequence[float], metric: Metric) -> list[list[Point]]:
    """All states other than ``y`` inside each closed ball (finite spaces)."""
    return [[s for s in states if s != y and metric_eval(metric, s, y) <= g] for g in radii]


# -- reports ------------------------------------------------------------------


@dataclass(frozen=True)
class TraceRow:
    property: str
    gamma: float
    n_or_m: int
    value: float
    exact_exponent: Fraction | None = None

    def csv_cells(self) -> list[str]:
        exp = "" if self.exact_exponent is None else format_rational(self.exact_exponent)
        return [self.property, fmt_float(self.gamma), str(self.n_or_m), fmt_float(self.value), exp]

    def to_json(self) -> dict:
        return {
            "property": self.property,
            "gamma": _json_float(self.gamma),
            "n_or_m": self.n_or_m,
            "value": _json_float(self.value),
            "exact_exponent": None if self.exact_exponent is None else format_rational(self.exact_exponent),
        }


@dataclass
class PropertyReport:
    property: str
    verdict: Verdict
    trace: list[TraceRow]
    radius_values: list[tuple[float, float]]
    certificate: object | None = None
    notes: list[str] = field(default_factory=list)

    def to_json(self) -> dict:
        return {
            "property": self.property,
            "verdict": self.verdict.value,
            "radius_values": [{"gamma": _json_float(g), "value": _json_float(v)} for g, v in self.radius_values],
            "trace": [row.to_json() for row in self.trace],
            "certificate": None if self.certificate is None else self.certificate.to_json(),
            "notes": list(self.notes),
        }

    def json_text(self) -> str:
        return json.dumps(self.to_json(), indent=2, sort_keys=True) + "\n"

    def csv_text(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(CSV_COLUMNS)
        for row in self.trace:
            writer.writerow(row.csv_cells())
        return buf.getvalue()


PROBE_NOTE = "verdict is relative to the probed points, radii and times only"
SPAN_NOTE = "times are restricted to the rational span of the chosen basis"


# -- certificates -------------------------------------------------------------


@dataclass(frozen=True)
class BlowupCertificate:
    """``|f(S_m y) - f(S_m x)| = c * exp(offset + m * slope)`` for the norm ``f``."""

    base_gap: float
    slope: Fraction
    offset: Fraction
    m: int
    exponent: Fraction
    value: float
    target: float | None = None
    threshold: int | None = None

    def log_value(self, m: int) -> float:
        return math.log(self.base_gap) + float(self.offset + m * self.slope)

    def to_json(self) -> dict:
        return {
            "base_gap": self.base_gap,
            "slope": format_rational(self.slope),
            "offset": format_rational(self.offset),
            "m": self.m,
            "exponent": format_rational(self.exponent),
            "value": _json_float(self.value),
            "target": self.target,
            "threshold": self.threshold,
        }


def blowup_threshold(base_gap: float, slope: Fraction, target: float, offset: Fraction = Fraction(0)) -> int:
    """Smallest ``m >= 0`` with ``base_gap * exp(offset + m * slope) >= target``."""
    if slope <= 0:
        raise ValueError("slope must be positive")
    need = (math.log(target) - math.log(base_gap) - float(offset)) / float(slope)
    return max(0, math.ceil(need))


def blowup_certificate(
    y: Point,
    x: Point,
    m: int,
    s2: Fraction,
    target: float | None = None,
    metric: Metric | None = None,
    offset: Fraction = Fraction(0),
) -> BlowupCertificate:
    """Growth of ``|U_t rho^0(y) - U_t rho^0(x)|`` along times ``(0, m)``.

    The exponent ``offset + m * s2`` is exact; ``value`` is its floating-point
    image (``inf`` past the float range, where the exponent still certifies).
    """
    s2 = Fraction(s2)
    if s2 <= 0:
        raise ValueError(f"s2 must be positive, got {format_rational(s2)}")
    metric = metric or Metric.euclidean()
    gap = abs(metric.norm(y) - metric.norm(x))
    if gap == 0:
        raise ValueError("need |y| != |x| for a blow-up witness")
    exponent = Fraction(offset) + m * s2
    value = gap * safe_exp(exponent)
    threshold = None if target is None else blowup_threshold(gap, s2, target, Fraction(offset))
    return BlowupCertificate(gap, s2, Fraction(offset), m, exponent, value, target, threshold)


@dataclass(frozen=True)
class GrowthWitness:
    gamma: float
    probe: Point
    base_gap: float
    threshold: int


@dataclass(frozen=True)
class GrowthCertificate:
    """Unbounded growth of ``|U_t f(y) - U_t f(x)|`` along an arithmetic run of times.

    Along ``u_j = start + j * step`` the scaling exponent is
    ``offset + j * slope`` with ``slope > 0``; for the homogeneous witness
    function the difference is ``base_gap * exp(offset + j * slope)``, which
    exceeds any bound. ``threshold`` is the first ``j`` reaching ``eps0``.
    """

    function: str
    bounded: bool
    start: SpanPoint
    step: SpanPoint
    offset: Fraction
    slope: Fraction
    eps0: float
    witnesses: tuple[GrowthWitness, ...]

    def threshold(self, target: float, witness: int = 0) -> int:
        return blowup_threshold(self.witnesses[witness].base_gap, self.slope, target, self.offset)

    def time_at(self, j: int) -> SpanPoint:
        return self.start + j * self.step

    def replay(self, sg: MarkovSemigroup, metric: Metric, y: Point) -> bool:
        """Recompute every witness from scratch against ``sg``."""
        s0 = sg.scale(self.start)
        s1 = sg.scale(self.time_at(1))
        if s0 is None or s0.exponent != self.offset or s1.exponent - s0.exponent != self.slope:
            return False
        if self.slope <= 0 or not self.step.is_nonnegative():
            return False
        for w in self.witnesses:
            if metric_eval(metric, w.probe, y) > w.gamma:
                return False
            gap = abs(metric.norm(y) - metric.norm(w.probe))
            if gap != w.base_gap or gap == 0:
                return False
            exponent = sg.scale(self.time_at(w.threshold)).exponent
            if math.log(gap) + float(exponent) < math.log(self.eps0):
                return False
        return True

    def to_json(self) -> dict:
        return {
            "kind": "growth",
            "function": self.function,
            "bounded": self.bounded,
            "start": self.start.to_json(),
            "step": self.step.to_json(),
            "offset": format_rational(self.offset),
            "slope": format_rational(self.slope),
            "eps0": self.eps0,
            "witnesses": [
                {
                    "gamma": w.gamma,
                    "probe": w.probe.to_json(),
                    "base_gap": w.base_gap,
                    "threshold": w.threshold,
                }
                for w in self.witnesses
            ],
        }


@dataclass(frozen=True)
class RefutationCertificate:
    """Lower bound for the identity semigroup: ``sigma_n(z, y) >= 1/2`` for ``n >= n0``."""

    z: Point
    distance: float
    n0: int | None
    values: tuple[tuple[int, float], ...]
    lower_bound: Fraction = ASF_LOWER_BOUND

    @property
    def holds(self) -> bool:
        return self.n0 is not None and all(v >= self.lower_bound for n, v in self.values if n >= self.n0)

    @property
    def reaches_one_at(self) -> int | None:
        return next((n for n, v in self.values if v == 1.0), None)

    def to_json(self) -> dict:
        return {
            "kind": "separation",
            "z": self.z.to_json(),
            "distance": self.distance,
            "n0": self.n0,
            "lower_bound": format_rational(self.lower_bound),
            "reaches_one_at": self.reaches_one_at,
            "values": [{"n": n, "value": v} for n, v in self.values],
        }


@dataclass(frozen=True)
class DecayCertificate:
    """Every probed ``G(gamma, n)`` lies below ``gamma * n * exp(n * s1)``."""

    s1: Fraction
    rows_checked: int
    exact: bool
    all_within_bound: bool

    def to_json(self) -> dict:
        return {
            "kind": "decay-bound",
            "s1": format_rational(self.s1),
            "rows_checked": self.rows_checked,
            "exact": self.exact,
            "all_within_bound": self.all_within_bound,
        }


@dataclass(frozen=True)
class CertificateList:
    items: tuple

    def to_json(self) -> dict:
        return {"kind": "per-radius", "items": [c.to_json() for c in self.items]}


# -- e-property and asymptotic e-property --------------------------------------


def _diff(sg: MarkovSemigroup, u: SpanPoint, fn: TestFunction, y: Point, x: Point) -> float:
    if fn.kind == "constant":
        return 0.0
    if fn.homogeneous and sg.is_map:
        scale = sg.scale(u)
        if scale is not None:
            gap = abs(fn.metric.norm(y) - fn.metric.norm(x))
            return 0.0 if gap == 0 else safe_exp(scale.exponent) * gap
    a = sg.dual_apply(u, fn, y)
    b = sg.dual_apply(u, fn, x)
    return float(abs(a - b))


def _grid(sg, y, sched: ProbeSchedule, fns, times):
    """``grid[f][k][p][t] = |U_t f(y) - U_t f(x_p)|`` for probes of radius ``k``."""
    return [
        [[[_diff(sg, u, fn, y, x) for u in times] for x in pts] for pts in sched.probes]
        for fn in fns
    ]


def inner_values(
    sg: MarkovSemigroup,
    y: Point,
    sched: ProbeSchedule,
    fns: Sequence[TestFunction],
    tail_only: bool = False,
) -> list[list[list[float]]]:
    """``[f][k][p]`` maxima over the full schedule, or over the tail window only."""
    times = sched.window if tail_only else sched.times
    grid = _grid(sg, y, sched, fns, times)
    return [[[max(ts) for ts in per_k] for per_k in per_f] for per_f in grid]


def _arithmetic_run(times: Sequence[SpanPoint]) -> tuple[SpanPoint, SpanPoint, int] | None:
    """Longest arithmetic run ending at the last time: ``(start, step, length)``."""
    if len(times) < 2:
        return None
    step = times[-1] - times[-2]
    i = len(times) - 2
    while i > 0 and times[i] - times[i - 1] == step:
        i -= 1
    return times[i], step, len(times) - i


def _growth_certificate(sg, y, sched, fns, times, eps0) -> GrowthCertificate | None:
    run = _arithmetic_run(times)
    if run is None or not isinstance(sg, Scaling):
        return None
    start, step, _ = run
    if not step.is_nonnegative() or all(c == 0 for c in step.coords):
        return None
    # Index the progression from its earliest nonnegative member.
    back = min(math.floor(a / d) for a, d in zip(start.coords, step.coords) if d > 0)
    start = start - back * step
    offset = sg.scale(start).exponent
    slope = sg.scale(start + step).exponent - offset
    if slope <= 0:
        return None
    for fn in fns:
        if not fn.homogeneous:
            continue
        witnesses = []
        for gamma, pts in zip(sched.radii, sched.probes):
            best = None
            for x in pts:
                gap = abs(fn.metric.norm(y) - fn.metric.norm(x))
                if gap > 0 and (best is None or gap > best[1]):
                    best = (x, gap)
            if best is None:
                break
            x, gap = best
            witnesses.append(GrowthWitness(gamma, x, gap, blowup_threshold(gap, slope, eps0, offset)))
        else:
            return GrowthCertificate(fn.name, fn.bounded, start, step, offset, slope, eps0, tuple(witnesses))
    return None


def _trend_vanishes(values: Sequence[float], tol: float) -> bool:
    nonincreasing = all(b <= a + tol for a, b in zip(values, values[1:]))
    return nonincreasing and values[-1] <= tol


def _e_check(prop, sg, y, sched, fns, times, tol, eps0, notes) -> PropertyReport:
    if not fns:
        raise ValueError("no test functions given")
    grid = _grid(sg, y, sched, fns, times)
    trace = []
    per_radius = []
    for k, gamma in enumerate(sched.radii):
        for t, u in enumerate(times):
            vals = [grid[f][k][p][t] for f in range(len(fns)) for p in range(len(sched.probes[k]))]
            scale = sg.scale(u) if sg.is_map else None
            trace.append(
                TraceRow(prop, gamma, t + 1, max(vals, default=0.0), None if scale is None else scale.exponent)
            )
        per_radius.append(
            max((grid[f][k][p][t] for f in range(len(fns)) for p in range(len(sched.probes[k])) for t in range(len(times))), default=0.0)
        )
    cert = _growth_certificate(sg, y, sched, fns, times, eps0)
    if cert is not None:
        verdict = Verdict.FAILS_WITH_CERTIFICATE
        if not cert.bounded:
            notes = notes + ["witness function is Lipschitz but unbounded"]
    elif _trend_vanishes(per_radius, tol):
        verdict = Verdict.HOLDS_ON_PROBES
    else:
        verdict = Verdict.INCONCLUSIVE
    return PropertyReport(prop, verdict, trace, list(zip(sched.radii, per_radius)), cert, [PROBE_NOTE, SPAN_NOTE] + notes)


def check_e_property(
    sg: MarkovSemigroup,
    y: Point,
    sched: ProbeSchedule,
    fns: Sequence[TestFunction],
    tol: float = TOL,
    eps0: float = EPS0,
) -> PropertyReport:
    """Equicontinuity of ``{U_t f}`` at ``y``: ``D_k = max |U_t f(y) - U_t f(x)|`` over
    all times and the probes of radius ``gamma_k``."""
    return _e_check("e", sg, y, sched, fns, sched.times, tol, eps0, [])


def check_asymptotic_e_property(
    sg: MarkovSemigroup,
    y: Point,
    sched: ProbeSchedule,
    fns: Sequence[TestFunction],
    tol: float = TOL,
    eps0: float = EPS0,
) -> PropertyReport:
    """As :func:`check_e_property`, with the limsup over t replaced by the max over the
    last ``tail_window`` times of the tail."""
    if len(sched.tail) < sched.tail_window:
        raise ValueError(f"tail has {len(sched.tail)} times, window needs {sched.tail_window}")
    return _e_check(
        "asymptotic-e", sg, y, sched, fns, sched.window, tol, eps0,
        [f"limsup over t estimated by the max over the last {sched.tail_window} tail times"],
    )


# -- asymptotic strong Feller -------------------------------------------------


def scaling_asf_bound(n: int, gamma: float, s1: Fraction) -> float:
    """``gamma * n * exp(n * s1)``: upper bound on ``G(gamma, n)`` for the scaling semigroup."""
    s1 = Fraction(s1)
    if s1 >= 0:
        raise ValueError(f"the bound needs s1 < 0, got {format_rational(s1)}")
    if n < 1:
        raise ValueError("n must be >= 1")
    if gamma < 0:
        raise ValueError("gamma must be >= 0")
    if gamma == 0:
        return 0.0
    return gamma * n * safe_exp(n * s1)


@dataclass(frozen=True)
class _AsfEntry:
    value: float
    exponent: Fraction | None
    base: float | None


def _asf_entry(sg, u, fam: PseudoMetricFamily, n: int, y: Point, x: Point) -> _AsfEntry:
    if sg.is_map:
        sy, sx = sg.apply_map(u, y), sg.apply_map(u, x)
        if fam.base.kind == "pnorm" and sy.log_scale == sx.log_scale:
            s, base = metric_log(fam.base, sy, sx)
            value = fam.truncate(n, safe_exp(s) * base if base else 0.0)
            return _AsfEntry(value, s, base)
        return _AsfEntry(family_eval(fam, n, sy, sx), None, None)
    res = wasserstein(
        sg.pushforward(u, FiniteMeasure.dirac(y)),
        sg.pushforward(u, FiniteMeasure.dirac(x)),
        lambda a, b: family_eval(fam, n, a, b),
    )
    if not res.consistent:
        raise FellerError(f"transport duality gap {res.gap} at n={n}")
    return _AsfEntry(float(res.primal), None, None)


def _scaling_bound_schedule(sg, t_sched) -> Fraction | None:
    """``s1`` when ``t_n = n * e_i`` for the contracting basis index ``i``."""
    if not isinstance(sg, Scaling):
        return None
    try:
        i = sg.f.contracting_index()
    except FellerError:
        return None
    for n, u in enumerate(t_sched, start=1):
        if u != SpanPoint.axis(u.dim, i, n):
            return None
    return sg.f.weights[i]


def check_asf(
    sg: MarkovSemigroup,
    y: Point,
    t_sched: Sequence[SpanPoint],
    fam: PseudoMetricFamily,
    radii: Sequence[float],
    probes: Sequence[Sequence[Point]],
    tail_window: int = TAIL_WINDOW,
    tol: float = TOL,
) -> PropertyReport:
    """``G(gamma, n) = max_x W_{sigma_n}(P_{t_n} delta_y, P_{t_n} delta_x)``, then the max over
    the last ``tail_window`` values of ``n``, then the trend as ``gamma`` shrinks."""
    t_sched = tuple(t_sched)
    N = len(t_sched)
    if N == 0:
        raise ValueError("empty time schedule")
    if not isinstance(fam.schedule, str) and isinstance(fam.schedule, Sequence) and len(fam.schedule) != N:
        raise DimensionMismatch(f"family has {len(fam.schedule)} terms for {N} times")
    fam.validate(N)
    sched = ProbeSchedule(t_sched, radii, probes, 0, min(tail_window, N))
    sched.validate(fam.base, y)
    window = sched.tail_window
    s1 = _scaling_bound_schedule(sg, t_sched)
    trace, per_radius = [], []
    rows = 0
    exact_all, within_all = True, True
    for gamma, pts in zip(sched.radii, sched.probes):
        tail_vals = []
        for n, u in enumerate(t_sched, start=1):
            entries = [_asf_entry(sg, u, fam, n, y, x) for x in pts]
            best = max(entries, key=lambda e: e.value, default=_AsfEntry(0.0, None, None))
            trace.append(TraceRow("asf", gamma, n, best.value, best.exponent))
            if n > N - window:
                tail_vals.append(best.value)
            if s1 is not None:
                bound = scaling_asf_bound(n, gamma, s1)
                for e in entries:
                    rows += 1
                    if e.exponent == n * s1 and fam.a(n) == n and e.base is not None:
                        # min(1, n e^{n s1} b) <= n e^{n s1} gamma  <=>  b <= gamma
                        ok = e.base <= gamma
                    else:
                        exact_all = False
                        ok = e.value <= bound * (1 + 1e-12)
                    within_all = within_all and ok
        per_radius.append(max(tail_vals))
    notes = [PROBE_NOTE, SPAN_NOTE, f"limsup over n estimated by the max over the last {window} indices"]
    cert = None
    if _trend_vanishes(per_radius, tol):
        verdict = Verdict.HOLDS_ON_PROBES
        if s1 is not None:
            cert = DecayCertificate(s1, rows, exact_all, within_all)
    elif isinstance(sg, Identity) and all(v >= ASF_LOWER_BOUND for v in per_radius):
        certs = tuple(identity_asf_refutation(fam, y, g, pts, N, closed=True) for g, pts in zip(sched.radii, sched.probes))
        if all(c.holds for c in certs):
            verdict = Verdict.FAILS_WITH_CERTIFICATE
            cert = CertificateList(certs)
        else:
            verdict = Verdict.INCONCLUSIVE
    else:
        verdict = Verdict.INCONCLUSIVE
    return PropertyReport("asf", verdict, trace, list(zip(sched.radii, per_radius)), cert, notes)


def identity_asf_refutation(
    fam: PseudoMetricFamily,
    y: Point,
    gamma: float,
    candidates: Sequence[Point],
    N: int,
    closed: bool = False,
) -> RefutationCertificate:
    """Certificate that ``limsup_n sup_x ||delta_y - delta_x||_{sigma_n} >= 1/2`` for the
    identity semigroup: a point ``z != y`` of the ball whose separation reaches 1/2.

    The farthest candidate inside the ball is used (the open ball unless
    ``closed``). Raises :class:`NotALimitPoint` when the ball holds no other candidate.
    """
    inside = []
    for z in candidates:
        if z == y:
            continue
        d = metric_eval(fam.base, z, y)
        if d < gamma or (closed and d <= gamma):
            if d > 0:
                inside.append((d, z))
    if not inside:
        raise NotALimitPoint(
            f"no candidate other than y within distance {gamma} of y: y is not a limit point of the probed set"
        )
    d, z = max(inside, key=lambda pair: pair[0])
    values = tuple((n, fam.truncate(n, d)) for n in range(1, N + 1))
    n0 = next((n for n, v in values if v >= ASF_LOWER_BOUND), None)
    return RefutationCertificate(z, d, n0, values)
