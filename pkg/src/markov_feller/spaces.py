"""Points of R^d, metrics, pseudo-metric families and finite-support measures.

A :class:`Point` stores base coordinates plus an exact rational log-scale, so
``Point(c, s)`` sits at ``exp(s) * c``. Scaling semigroups only ever touch the
log-scale, which keeps their compositions exact and lets certificates reason
about points whose floating-point position would overflow.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Iterable, Sequence, Union

from markov_feller.errors import DimensionMismatch, FellerError
from markov_feller.hamel import format_rational, parse_rational

Mass = Union[Fraction, float]

_BELOW_ONE = math.nextafter(1.0, 0.0)


def safe_exp(x) -> float:
    try:
        return math.exp(x)
    except OverflowError:
        return math.inf


@dataclass(frozen=True)
class Point:
    coords: tuple[float, ...]
    log_scale: Fraction = Fraction(0)

    def __post_init__(self):
        coords = tuple(float(c) for c in self.coords)
        if not coords:
            raise ValueError("points need at least one coordinate")
        if not all(math.isfinite(c) for c in coords):
            raise ValueError(f"non-finite coordinate in {coords}")
        object.__setattr__(self, "coords", coords)
        object.__setattr__(self, "log_scale", Fraction(self.log_scale))

    @classmethod
    def of(cls, *coords: float) -> "Point":
        return cls(tuple(coords))

    @property
    def dim(self) -> int:
        return len(self.coords)

    def scale_factor(self) -> float:
        return safe_exp(self.log_scale)

    def position(self) -> tuple[float, ...]:
        """Floating-point coordinates ``exp(log_scale) * coords`` (may be inf)."""
        if self.log_scale == 0:
            return self.coords
        k = self.scale_factor()
        return tuple(0.0 if c == 0 else k * c for c in self.coords)

    def rescaled(self, exponent: Fraction) -> "Point":
        return Point(self.coords, self.log_scale + exponent)

    def to_json(self):
        if self.log_scale == 0:
            return list(self.coords)
        return {"coords": list(self.coords), "log_scale": format_rational(self.log_scale)}

    @classmethod
    def from_json(cls, data) -> "Point":
        if isinstance(data, dict):
            return cls(tuple(data["coords"]), parse_rational(data.get("log_scale", 0)))
        return cls(tuple(data))


def _pnorm(v: Sequence[float], p: float) -> float:
    if p == math.inf:
        return max(abs(c) for c in v)
    if p == 1:
        return math.fsum(abs(c) for c in v)
    if p == 2:
        return math.hypot(*v)
    return math.fsum(abs(c) ** p for c in v) ** (1.0 / p)


@dataclass(frozen=True)
class Metric:
    """Either a p-norm metric on R^d or a user table on a finite point set.

    Use :meth:`pnorm` and :meth:`table` rather than the raw constructor.
    """

    kind: str
    p: float = 2.0
    points: tuple[Point, ...] = ()
    distances: tuple[tuple[float, ...], ...] = ()
    _index: dict = field(default_factory=dict, compare=False, repr=False, hash=False)

    @classmethod
    def pnorm(cls, p: float = 2.0) -> "Metric":
        p = float(p)
        if not (p >= 1):
            raise ValueError(f"p must lie in [1, inf], got {p}")
        return cls("pnorm", p=p)

    @classmethod
    def euclidean(cls) -> "Metric":
        return cls.pnorm(2.0)

    @classmethod
    def table(cls, points: Sequence[Point], distances: Sequence[Sequence[float]]) -> "Metric":
        points = tuple(points)
        k = len(points)
        if len(set(points)) != k:
            raise ValueError("table metric points must be distinct")
        rows = tuple(tuple(float(d) for d in row) for row in distances)
        if len(rows) != k or any(len(r) != k for r in rows):
            raise DimensionMismatch(f"distance table must be {k}x{k}")
        for i in range(k):
            if rows[i][i] != 0:
                raise ValueError(f"table metric: nonzero diagonal at {i}")
            for j in range(k):
                d = rows[i][j]
                if not math.isfinite(d) or d < 0:
                    raise ValueError(f"table metric: bad entry ({i},{j})={d}")
                if d != rows[j][i]:
                    raise ValueError(f"table metric: asymmetric at ({i},{j})")
                if i != j and d == 0:
                    raise ValueError(f"table metric: distinct points {i},{j} at distance 0")
        for i in range(k):
            for j in range(k):
                for l in range(k):
                    if rows[i][l] > rows[i][j] + rows[j][l] + 1e-12:
                        raise ValueError(f"table metric: triangle inequality fails at ({i},{j},{l})")
        return cls("table", points=points, distances=rows, _index={p: i for i, p in enumerate(points)})

    def norm(self, x: Point) -> float:
        """Distance to the origin; only meaningful for p-norm metrics."""
        if self.kind != "pnorm":
            raise FellerError("norm is only defined for p-norm metrics")
        return x.scale_factor() * _pnorm(x.coords, self.p) if x.log_scale else _pnorm(x.coords, self.p)

    def __call__(self, x: Point, y: Point) -> float:
        return metric_eval(self, x, y)

    def to_json(self) -> dict:
        if self.kind == "pnorm":
            return {"kind": "pnorm", "p": "inf" if self.p == math.inf else self.p}
        return {
            "kind": "table",
            "points": [p.to_json() for p in self.points],
            "distances": [list(r) for r in self.distances],
        }


def metric_log(rho: Metric, x: Point, y: Point) -> tuple[Fraction, float]:
    """``(s, b)`` with ``rho(x, y) = exp(s) * b`` for points sharing a log-scale.

    This factorisation is exact in ``s``; callers use it to compare distances
    of scaled points without ever forming ``exp(s)``.
    """
    if rho.kind != "pnorm":
        raise FellerError("log-factored distances need a p-norm metric")
    if x.log_scale != y.log_scale:
        raise FellerError("points have different log-scales")
    if x.dim != y.dim:
        raise DimensionMismatch(f"metric: dimension {x.dim} != {y.dim}")
    return x.log_scale, _pnorm([a - b for a, b in zip(x.coords, y.coords)], rho.p)


def metric_eval(rho: Metric, x: Point, y: Point) -> float:
    if x.dim != y.dim:
        raise DimensionMismatch(f"metric: dimension {x.dim} != {y.dim}")
    if rho.kind == "table":
        try:
            return rho.distances[rho._index[x]][rho._index[y]]
        except KeyError as exc:
            raise FellerError(f"point {exc.args[0]} is not in the metric table") from None
    if x.log_scale == y.log_scale:
        s, base = metric_log(rho, x, y)
        if base == 0:
            return 0.0
        return safe_exp(s) * base if s else base
    px, py = x.position(), y.position()
    return _pnorm([a - b for a, b in zip(px, py)], rho.p)


def _schedule_fn(schedule) -> Callable[[int], Union[int, float]]:
    if schedule == "linear":
        return lambda n: n
    if schedule == "geometric":
        return lambda n: 2**n
    if callable(schedule):
        return schedule
    if isinstance(schedule, Sequence) and not isinstance(schedule, str):
        values = tuple(schedule)
        return lambda n: values[n - 1]
    raise ValueError(f"unknown separating schedule {schedule!r}")


@dataclass(frozen=True)
class PseudoMetricFamily:
    """``sigma_n(x, y) = min(1, a_n * rho(x, y))`` for a nondecreasing ``a_n -> inf``.

    ``schedule`` is ``"linear"`` (a_n = n), ``"geometric"`` (a_n = 2^n), a
    callable ``n -> a_n`` or an explicit sequence ``a_1, a_2, ...``.
    """

    base: Metric
    schedule: object = "linear"

    @property
    def name(self) -> str:
        return self.schedule if isinstance(self.schedule, str) else "custom"

    def a(self, n: int) -> Union[int, float]:
        if n < 1:
            raise ValueError(f"family index must be >= 1, got {n}")
        value = _schedule_fn(self.schedule)(n)
        if not value > 0:
            raise ValueError(f"a_{n} = {value} is not positive")
        return value

    def validate(self, N: int) -> None:
        """Check positivity and monotonicity of ``a_1..a_N`` (unboundedness is not checkable)."""
        prev = None
        for n in range(1, N + 1):
            value = self.a(n)
            if prev is not None and value < prev:
                raise ValueError(f"schedule decreases at n={n}: {prev} -> {value}")
            prev = value

    def truncate(self, n: int, d: float) -> float:
        """``min(1, a_n * d)``; equals 1.0 exactly when the real product is >= 1."""
        if d == 0:
            return 0.0
        if d == math.inf:
            return 1.0
        a = self.a(n)
        if Fraction(a) * Fraction(d) >= 1:
            return 1.0
        return min(float(a * d), _BELOW_ONE)

    def __call__(self, n: int, x: Point, y: Point) -> float:
        return family_eval(self, n, x, y)

    def to_json(self) -> dict:
        return {"schedule": self.name, "metric": self.base.to_json()}


def family_eval(fam: PseudoMetricFamily, n: int, x: Point, y: Point) -> float:
    return fam.truncate(n, metric_eval(fam.base, x, y))


def totally_separating_probe(
    fam: PseudoMetricFamily,
    pairs: Iterable[tuple[Point, Point]],
    N: int,
    eps: float,
) -> list[int | None]:
    """For each pair, the first ``n <= N`` with ``sigma_n >= 1 - eps`` (``None`` if never)."""
    if not 0 <= eps < 1:
        raise ValueError(f"eps must lie in [0, 1), got {eps}")
    out: list[int | None] = []
    for x, y in pairs:
        if x == y:
            raise ValueError("separation is undefined for a pair of equal points")
        d = metric_eval(fam.base, x, y)
        hit = None
        for n in range(1, N + 1):
            if fam.truncate(n, d) >= 1 - eps:
                hit = n
                break
        out.append(hit)
    return out


def _as_mass(m) -> Mass:
    if isinstance(m, bool):
        raise TypeError("booleans are not masses")
    if isinstance(m, float):
        return m
    return parse_rational(m)


@dataclass(frozen=True)
class FiniteMeasure:
    """Positive measure with finitely many atoms; equal points are merged."""

    atoms: tuple[tuple[Point, Mass], ...]

    def __post_init__(self):
        merged: dict[Point, Mass] = {}
        for point, mass in self.atoms:
            mass = _as_mass(mass)
            if isinstance(mass, float) and not math.isfinite(mass):
                raise ValueError(f"non-finite mass {mass}")
            if mass < 0:
                raise ValueError(f"negative mass {mass} at {point}")
            merged[point] = merged.get(point, 0) + mass
        object.__setattr__(self, "atoms", tuple(merged.items()))

    @classmethod
    def dirac(cls, y: Point) -> "FiniteMeasure":
        return cls(((y, Fraction(1)),))

    @classmethod
    def empty(cls) -> "FiniteMeasure":
        return cls(())

    @property
    def exact(self) -> bool:
        return all(isinstance(m, Fraction) for _, m in self.atoms)

    @property
    def support(self) -> tuple[Point, ...]:
        return tuple(p for p, _ in self.atoms)

    def as_dict(self) -> dict[Point, Mass]:
        return dict(self.atoms)

    def mass_at(self, p: Point) -> Mass:
        return self.as_dict().get(p, 0)

    def __eq__(self, other):
        if not isinstance(other, FiniteMeasure):
            return NotImplemented
        a = {p: m for p, m in self.atoms if m != 0}
        b = {p: m for p, m in other.atoms if m != 0}
        return a == b

    def __hash__(self):
        return hash(frozenset((p, m) for p, m in self.atoms if m != 0))

    def to_json(self) -> dict:
        return {
            "atoms": [
                {"point": p.to_json(), "mass": format_rational(m) if isinstance(m, Fraction) else m}
                for p, m in self.atoms
            ]
        }

    @classmethod
    def from_json(cls, data: dict) -> "FiniteMeasure":
        return cls(tuple((Point.from_json(a["point"]), _as_mass(a["mass"])) for a in data["atoms"]))


def measure_total(mu: FiniteMeasure) -> Mass:
    if mu.exact:
        return sum((m for _, m in mu.atoms), Fraction(0))
    return math.fsum(float(m) for _, m in mu.atoms)


def integrate(mu: FiniteMeasure, phi: Callable[[Point], float]) -> Mass:
    """``sum mass_i * phi(point_i)``; exact (Fraction) when every mass is rational.

    Function values are converted to Fractions without rounding, so two
    integrals of the same values with the same rational masses agree exactly.
    """
    values = []
    for p, m in mu.atoms:
        v = phi(p)
        if isinstance(v, float) and not math.isfinite(v):
            raise ValueError(f"integrand is not finite at {p}: {v}")
        values.append((m, v))
    if mu.exact:
        return sum((m * Fraction(v) for m, v in values), Fraction(0))
    return math.fsum(float(m) * float(v) for m, v in values)
