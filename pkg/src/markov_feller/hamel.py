"""Additive (Cauchy-equation) functions on the rational span of a finite basis.

A discontinuous additive function ``f: R -> R`` is fixed by its values on a
Hamel basis, and every real number is a finite rational combination of basis
elements. Only finitely many basis elements ever matter to a computation, so
here a point of R is represented by its rational coordinates over a finite,
labelled basis and ``f`` by its values (weights) on that basis. Everything is
exact: ``fractions.Fraction`` carries arbitrary-precision numerators and
denominators, always in lowest terms.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from numbers import Rational as _RationalABC
from typing import Iterable, Sequence, Union

from markov_feller.errors import DimensionMismatch, SignConstraintError

Rational = Fraction
RationalLike = Union[Fraction, int, str]

DEFAULT_LABELS = ("|b1|", "|b2|")
DEFAULT_WEIGHTS = (Fraction(-1), Fraction(1))


def parse_rational(value: RationalLike) -> Fraction:
    """Parse ``"p/q"``, ``"p"``, an int or a Fraction into a Fraction.

    Floats are refused on purpose: config rationals must round-trip exactly.
    """
    if isinstance(value, bool):
        raise TypeError("booleans are not rationals")
    if isinstance(value, _RationalABC):
        return Fraction(value)
    if isinstance(value, str):
        text = value.strip()
        if not text:
            raise ValueError("empty rational")
        try:
            return Fraction(text)
        except (ValueError, ZeroDivisionError) as exc:
            raise ValueError(f"not a rational: {value!r}") from exc
    raise TypeError(f"expected a 'p/q' string or an integer, got {type(value).__name__}")


def format_rational(q: Fraction) -> str:
    """Render as ``"p/q"``; integers keep an explicit ``/1``."""
    q = Fraction(q)
    return f"{q.numerator}/{q.denominator}"


@dataclass(frozen=True)
class SpanPoint:
    """Rational coordinates of a real number over a finite basis."""

    coords: tuple[Fraction, ...]

    def __post_init__(self):
        object.__setattr__(self, "coords", tuple(parse_rational(c) for c in self.coords))

    @classmethod
    def of(cls, *coords: RationalLike) -> "SpanPoint":
        return cls(tuple(coords))

    @classmethod
    def zero(cls, dim: int) -> "SpanPoint":
        return cls((Fraction(0),) * dim)

    @classmethod
    def axis(cls, dim: int, index: int, value: RationalLike = 1) -> "SpanPoint":
        coords = [Fraction(0)] * dim
        coords[index] = parse_rational(value)
        return cls(tuple(coords))

    @property
    def dim(self) -> int:
        return len(self.coords)

    def is_nonnegative(self) -> bool:
        return all(c >= 0 for c in self.coords)

    def __add__(self, other: "SpanPoint") -> "SpanPoint":
        return span_add(self, other)

    def __sub__(self, other: "SpanPoint") -> "SpanPoint":
        return span_add(self, span_scale(-1, other))

    def __rmul__(self, q: RationalLike) -> "SpanPoint":
        return span_scale(q, self)

    def to_json(self) -> list[str]:
        return [format_rational(c) for c in self.coords]

    @classmethod
    def from_json(cls, data: Iterable[RationalLike]) -> "SpanPoint":
        return cls(tuple(data))


@dataclass(frozen=True)
class AdditiveFunction:
    """Weights of an additive function on a labelled finite basis.

    ``weights[i]`` is the value at basis element ``i``; the function extends to
    the rational span by additivity, which is all :func:`eval_additive` does.
    """

    labels: tuple[str, ...]
    weights: tuple[Fraction, ...]

    def __post_init__(self):
        object.__setattr__(self, "labels", tuple(str(l) for l in self.labels))
        object.__setattr__(self, "weights", tuple(parse_rational(w) for w in self.weights))
        if len(self.labels) != len(self.weights):
            raise DimensionMismatch(
                f"{len(self.labels)} labels but {len(self.weights)} weights"
            )
        if len(set(self.labels)) != len(self.labels):
            raise ValueError(f"basis labels must be distinct: {self.labels}")
        if not self.labels:
            raise ValueError("basis must be nonempty")

    @classmethod
    def from_weights(
        cls, weights: Sequence[RationalLike], labels: Sequence[str] | None = None
    ) -> "AdditiveFunction":
        if labels is None:
            labels = tuple(f"|b{i + 1}|" for i in range(len(weights)))
        return cls(tuple(labels), tuple(weights))

    @classmethod
    def default(cls) -> "AdditiveFunction":
        return cls(DEFAULT_LABELS, DEFAULT_WEIGHTS)

    @property
    def dim(self) -> int:
        return len(self.weights)

    def __call__(self, u: SpanPoint) -> Fraction:
        return eval_additive(self, u)

    def has_mixed_signs(self) -> bool:
        return any(w < 0 for w in self.weights) and any(w > 0 for w in self.weights)

    def contracting_index(self) -> int:
        """Index of the first negative weight (the role of |b_1|)."""
        for i, w in enumerate(self.weights):
            if w < 0:
                return i
        raise SignConstraintError("no negative weight")

    def expanding_index(self) -> int:
        """Index of the first positive weight (the role of |b_2|)."""
        for i, w in enumerate(self.weights):
            if w > 0:
                return i
        raise SignConstraintError("no positive weight")

    def require_mixed_signs(self) -> None:
        if not self.has_mixed_signs():
            raise SignConstraintError(
                "weights need one negative and one positive entry, got "
                + ", ".join(format_rational(w) for w in self.weights)
            )


def _check_dims(a: int, b: int, what: str) -> None:
    if a != b:
        raise DimensionMismatch(f"{what}: dimension {a} != {b}")


def eval_additive(f: AdditiveFunction, u: SpanPoint) -> Fraction:
    """Exact value ``sum_i u_i * f(basis_i)``."""
    _check_dims(u.dim, f.dim, "eval_additive")
    return sum((c * w for c, w in zip(u.coords, f.weights)), Fraction(0))


def span_add(u: SpanPoint, v: SpanPoint) -> SpanPoint:
    _check_dims(u.dim, v.dim, "span_add")
    return SpanPoint(tuple(a + b for a, b in zip(u.coords, v.coords)))


def span_scale(q: RationalLike, u: SpanPoint) -> SpanPoint:
    q = parse_rational(q)
    return SpanPoint(tuple(q * c for c in u.coords))
