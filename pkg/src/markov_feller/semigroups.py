"""Markov semigroups acting on finite measures, with their dual action on functions.

Four variants share one interface:

* :class:`Scaling` -- ``S_u(x) = exp(f(u)) x`` for an additive ``f``;
* :class:`Identity` -- ``P_u mu = mu``;
* :class:`DeterministicMap` -- pushforward semigroup of a user rule ``(u, x) -> S_u x``;
* :class:`FiniteKernel` -- powers of a row-stochastic rational matrix.

Times are :class:`~markov_feller.hamel.SpanPoint` values. A kernel uses a
single integer coordinate (the number of steps).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Sequence

from markov_feller.errors import FellerError, InvalidTime
from markov_feller.hamel import AdditiveFunction, SpanPoint, eval_additive, format_rational, parse_rational
from markov_feller.spaces import FiniteMeasure, Mass, Point, integrate, safe_exp

TestFn = Callable[[Point], float]


@dataclass(frozen=True)
class LogScaleFactor:
    """``exp(exponent)`` with the exponent kept exactly."""

    exponent: Fraction

    @property
    def magnitude(self) -> float:
        return safe_exp(self.exponent)

    def __mul__(self, other: "LogScaleFactor") -> "LogScaleFactor":
        return LogScaleFactor(self.exponent + other.exponent)

    def to_json(self) -> dict:
        return {"exponent": format_rational(self.exponent), "magnitude": self.magnitude}


def _check_time(u: SpanPoint) -> None:
    if not u.is_nonnegative():
        raise InvalidTime(f"time coordinates must be nonnegative, got {u.to_json()}")


class MarkovSemigroup:
    """Common interface; subclasses implement :meth:`apply_map` or override the rest."""

    variant = "abstract"
    is_map = True

    def apply_map(self, u: SpanPoint, x: Point) -> Point:
        raise NotImplementedError

    def pushforward(self, u: SpanPoint, mu: FiniteMeasure) -> FiniteMeasure:
        self.check_time(u)
        return FiniteMeasure(tuple((self.apply_map(u, p), m) for p, m in mu.atoms))

    def dual_apply(self, u: SpanPoint, phi: TestFn, x: Point) -> float:
        return phi(self.apply_map(u, x))

    def check_time(self, u: SpanPoint) -> None:
        _check_time(u)

    def scale(self, u: SpanPoint) -> LogScaleFactor | None:
        """Exact log-scale of ``S_u`` when the semigroup is a pure dilation."""
        return None

    def to_json(self) -> dict:
        return {"variant": self.variant}


@dataclass(frozen=True, eq=False)
class Scaling(MarkovSemigroup):
    """``S_u(x) = exp(f(u)) * x`` on R^d.

    ``f`` must have a negative and a positive weight unless
    ``allow_sign_violation`` is set (used to build control cases).
    """

    f: AdditiveFunction
    dimension: int = 2
    allow_sign_violation: bool = False

    variant = "scaling"

    def __post_init__(self):
        if self.dimension < 1:
            raise ValueError("dimension must be >= 1")
        if not self.allow_sign_violation:
            self.f.require_mixed_signs()

    def scale(self, u: SpanPoint) -> LogScaleFactor:
        _check_time(u)
        return LogScaleFactor(eval_additive(self.f, u))

    def apply_map(self, u: SpanPoint, x: Point) -> Point:
        if x.dim != self.dimension:
            raise FellerError(f"point of dimension {x.dim} in a {self.dimension}-dimensional space")
        return x.rescaled(self.scale(u).exponent)

    def lipschitz(self, u: SpanPoint) -> LogScaleFactor:
        return self.scale(u)

    def to_json(self) -> dict:
        out = {
            "variant": "scaling",
            "weights": [format_rational(w) for w in self.f.weights],
            "dimension": self.dimension,
        }
        if self.allow_sign_violation:
            out["allow_sign_violation"] = True
        return out


class Identity(MarkovSemigroup):
    variant = "identity"

    def apply_map(self, u: SpanPoint, x: Point) -> Point:
        _check_time(u)
        return x

    def pushforward(self, u: SpanPoint, mu: FiniteMeasure) -> FiniteMeasure:
        _check_time(u)
        return mu

    def scale(self, u: SpanPoint) -> LogScaleFactor:
        _check_time(u)
        return LogScaleFactor(Fraction(0))


@dataclass(frozen=True, eq=False)
class DeterministicMap(MarkovSemigroup):
    """Pushforward semigroup of ``rule(u, x)``; the semigroup law is the caller's promise."""

    rule: Callable[[SpanPoint, Point], Point]
    name: str = "custom"

    variant = "map"

    def apply_map(self, u: SpanPoint, x: Point) -> Point:
        _check_time(u)
        return self.rule(u, x)

    def validate_law(self, samples: Sequence[tuple[SpanPoint, SpanPoint, Point]]) -> list[int]:
        """Indices of sampled ``(u, v, x)`` where ``S_u S_v x != S_{u+v} x``."""
        bad = []
        for k, (u, v, x) in enumerate(samples):
            if self.apply_map(u, self.apply_map(v, x)) != self.apply_map(u + v, x):
                bad.append(k)
        return bad

    def to_json(self) -> dict:
        return {"variant": "map", "name": self.name}


def _matmul(a, b):
    n, m = len(a), len(b[0])
    inner = len(b)
    return tuple(
        tuple(sum((a[i][k] * b[k][j] for k in range(inner)), Fraction(0)) for j in range(m))
        for i in range(n)
    )


@dataclass(frozen=True, eq=False)
class FiniteKernel(MarkovSemigroup):
    """Discrete-time chain on ``states`` with transition matrix ``matrix``."""

    states: tuple[Point, ...]
    matrix: tuple[tuple[Fraction, ...], ...]
    _powers: dict = field(default_factory=dict, repr=False)

    variant = "kernel"
    is_map = False

    def __post_init__(self):
        states = tuple(self.states)
        k = len(states)
        if k == 0:
            raise ValueError("kernel needs at least one state")
        if len(set(states)) != k:
            raise ValueError("kernel states must be distinct")
        rows = tuple(tuple(parse_rational(p) for p in row) for row in self.matrix)
        if len(rows) != k or any(len(r) != k for r in rows):
            raise ValueError(f"kernel matrix must be {k}x{k}")
        for i, row in enumerate(rows):
            if any(p < 0 for p in row):
                raise ValueError(f"negative transition probability in row {i}")
            if sum(row) != 1:
                raise ValueError(f"row {i} sums to {sum(row)}, not 1")
        object.__setattr__(self, "states", states)
        object.__setattr__(self, "matrix", rows)
        object.__setattr__(self, "_index", {s: i for i, s in enumerate(states)})

    def steps(self, u: SpanPoint) -> int:
        if u.dim != 1:
            raise InvalidTime(f"kernel times have one coordinate, got {u.dim}")
        c = u.coords[0]
        if c < 0 or c.denominator != 1:
            raise InvalidTime(f"kernel time must be a nonnegative integer, got {format_rational(c)}")
        return int(c)

    def check_time(self, u: SpanPoint) -> None:
        self.steps(u)

    def power(self, k: int):
        if k in self._powers:
            return self._powers[k]
        if k == 0:
            n = len(self.states)
            result = tuple(tuple(Fraction(int(i == j)) for j in range(n)) for i in range(n))
        elif k % 2:
            result = _matmul(self.power(k - 1), self.matrix)
        else:
            half = self.power(k // 2)
            result = _matmul(half, half)
        self._powers[k] = result
        return result

    def index(self, x: Point) -> int:
        try:
            return self._index[x]
        except KeyError:
            raise FellerError(f"{x} is not a state of the kernel") from None

    def apply_map(self, u: SpanPoint, x: Point) -> Point:
        raise FellerError("a stochastic kernel has no pointwise map")

    def transition_row(self, u: SpanPoint, x: Point) -> tuple[Fraction, ...]:
        return self.power(self.steps(u))[self.index(x)]

    def pushforward(self, u: SpanPoint, mu: FiniteMeasure) -> FiniteMeasure:
        P = self.power(self.steps(u))
        out = [0] * len(self.states)
        for p, m in mu.atoms:
            row = P[self.index(p)]
            for j, pj in enumerate(row):
                out[j] = out[j] + (m * pj if isinstance(m, Fraction) else m * float(pj))
        return FiniteMeasure(tuple((s, out[j]) for j, s in enumerate(self.states) if out[j] != 0))

    def dual_apply(self, u: SpanPoint, phi: TestFn, x: Point) -> Fraction:
        row = self.transition_row(u, x)
        return sum((pj * Fraction(phi(s)) for pj, s in zip(row, self.states) if pj), Fraction(0))

    def to_json(self) -> dict:
        return {
            "variant": "kernel",
            "states": [s.to_json() for s in self.states],
            "matrix": [[format_rational(p) for p in row] for row in self.matrix],
        }


@dataclass(frozen=True)
class DualityCheck:
    lhs: Mass
    rhs: Mass
    exact: bool
    equal: bool


def duality_check(sg: MarkovSemigroup, u: SpanPoint, phi: TestFn, mu: FiniteMeasure) -> DualityCheck:
    """Compare ``int U_u phi dmu`` with ``int phi d(P_u mu)``, computed independently."""
    lhs = integrate(mu, lambda x: sg.dual_apply(u, phi, x))
    rhs = integrate(sg.pushforward(u, mu), phi)
    exact = isinstance(lhs, Fraction) and isinstance(rhs, Fraction)
    if exact:
        equal = lhs == rhs
    else:
        equal = abs(float(lhs) - float(rhs)) <= 1e-12 * (1 + abs(float(lhs)))
    return DualityCheck(lhs, rhs, exact, equal)
