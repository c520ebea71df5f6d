"""Wasserstein pseudo-metric between equal-mass finite measures.

The distance ``||mu1 - mu2||_sigma`` is computed two independent ways:

* primal: minimum-cost transport plan (transportation simplex);
* dual: maximum of ``sum_i phi_i (mu1 - mu2)(x_i)`` over potentials with
  ``|phi_i - phi_j| <= sigma(x_i, x_j)`` on the union support.

Rational mode (all masses are Fractions and the union support has at most
``EXACT_LIMIT`` points) runs both sides in exact arithmetic, costs being the
exact rational values of the floating-point pseudo-metric. Real mode runs the
primal simplex in floats and solves the dual with HiGHS.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Sequence

import numpy as np
from scipy.optimize import linprog

from markov_feller.errors import FellerError, UnequalMass
from markov_feller.lp import simplex_max, transport_simplex
from markov_feller.spaces import FiniteMeasure, Mass, Point, measure_total

EXACT_LIMIT = 64
REAL_GAP_TOL = 1e-9
TRIANGLE_SLACK = 1e-12


@dataclass(frozen=True)
class CostMatrix:
    """Pseudo-metric ``sigma`` tabulated on a finite point set."""

    points: tuple[Point, ...]
    entries: tuple[tuple[Mass, ...], ...]

    @classmethod
    def build(
        cls,
        points: Sequence[Point],
        sigma: Callable[[Point, Point], float],
        exact: bool = True,
    ) -> "CostMatrix":
        """Tabulate ``sigma`` and validate the pseudo-metric axioms.

        Floating-point pseudo-metrics can break the triangle inequality by a
        few ulps. Violations up to ``TRIANGLE_SLACK`` are repaired by taking the
        shortest-path closure (the largest pseudo-metric below the table);
        anything larger is rejected.
        """
        pts: list[Point] = []
        for p in points:
            if p not in pts:
                pts.append(p)
        k = len(pts)
        raw = [[0.0] * k for _ in range(k)]
        for i in range(k):
            for j in range(i + 1, k):
                d = sigma(pts[i], pts[j])
                if not (d >= 0 and math.isfinite(d)):
                    raise FellerError(f"cost {d} between {pts[i]} and {pts[j]} is not a finite nonnegative number")
                back = sigma(pts[j], pts[i])
                if back != d:
                    raise FellerError(f"cost is not symmetric: {d} vs {back}")
                raw[i][j] = raw[j][i] = d
        conv = Fraction if exact else float
        table = [[conv(d) for d in row] for row in raw]
        worst = 0.0
        for a, b, c in itertools.permutations(range(k), 3):
            excess = table[a][c] - table[a][b] - table[b][c]
            if excess > 0:
                worst = max(worst, float(excess))
        if worst > TRIANGLE_SLACK:
            raise FellerError(f"cost violates the triangle inequality by {worst:.3g}")
        if worst > 0:
            for mid in range(k):
                for a in range(k):
                    for c in range(k):
                        via = table[a][mid] + table[mid][c]
                        if via < table[a][c]:
                            table[a][c] = via
        return cls(tuple(pts), tuple(tuple(r) for r in table))

    @property
    def exact(self) -> bool:
        return all(isinstance(v, Fraction) for row in self.entries for v in row)

    def index(self, p: Point) -> int:
        try:
            return self.points.index(p)
        except ValueError:
            raise FellerError(f"{p} is not covered by the cost matrix") from None

    def __call__(self, x: Point, y: Point) -> Mass:
        return self.entries[self.index(x)][self.index(y)]


def cost_for(
    mu1: FiniteMeasure,
    mu2: FiniteMeasure,
    sigma: Callable[[Point, Point], float],
    exact: bool | None = None,
) -> CostMatrix:
    """Cost matrix on the union support, exact when both measures are rational and small."""
    points = list(mu1.support) + [p for p in mu2.support if p not in mu1.as_dict()]
    if exact is None:
        exact = mu1.exact and mu2.exact and len(points) <= EXACT_LIMIT
    return CostMatrix.build(points, sigma, exact=exact)


def _check_masses(mu1: FiniteMeasure, mu2: FiniteMeasure, exact: bool):
    t1, t2 = measure_total(mu1), measure_total(mu2)
    if exact:
        if Fraction(t1) != Fraction(t2):
            raise UnequalMass(f"total masses differ: {t1} vs {t2}")
    elif abs(float(t1) - float(t2)) > 1e-12 * max(1.0, abs(float(t1))):
        raise UnequalMass(f"total masses differ: {t1} vs {t2}")


def _masses(mu: FiniteMeasure, exact: bool):
    conv = Fraction if exact else float
    return [conv(m) for _, m in mu.atoms if m != 0], [p for p, m in mu.atoms if m != 0]


@dataclass(frozen=True)
class TransportPlan:
    sources: tuple[Point, ...]
    sinks: tuple[Point, ...]
    matrix: tuple[tuple[Mass, ...], ...]


@dataclass(frozen=True)
class Potential:
    points: tuple[Point, ...]
    values: tuple[Mass, ...]

    def __call__(self, p: Point) -> Mass:
        return self.values[self.points.index(p)]


def wasserstein_primal(cost: CostMatrix, mu1: FiniteMeasure, mu2: FiniteMeasure):
    """Minimum transport cost and an optimal plan."""
    exact = cost.exact
    _check_masses(mu1, mu2, exact)
    zero = Fraction(0) if exact else 0.0
    a, src = _masses(mu1, exact)
    b, dst = _masses(mu2, exact)
    if not a:
        return zero, TransportPlan((), (), ())
    C = [[cost(x, y) for y in dst] for x in src]
    value, plan = transport_simplex(a, b, C, tol=0.0 if exact else 1e-13)
    return value, TransportPlan(tuple(src), tuple(dst), tuple(tuple(r) for r in plan))


def _dual_exact(cost: CostMatrix, d: list[Fraction]):
    # With phi_0 = 0, substitute psi_i = phi_i + sigma_i0 >= 0. The Lipschitz
    # constraints become psi_i - psi_j <= sigma_ij + sigma_i0 - sigma_j0, whose
    # right-hand sides are >= 0 by the triangle inequality, so the origin is a
    # feasible starting vertex.
    S = cost.entries
    k = len(cost.points)
    if k == 1:
        return Fraction(0), [Fraction(0)]
    nv = k - 1
    A, rhs = [], []
    for i in range(1, k):
        for j in range(k):
            if i == j:
                continue
            row = [Fraction(0)] * nv
            row[i - 1] = Fraction(1)
            if j:
                row[j - 1] = Fraction(-1)
            A.append(row)
            rhs.append(S[i][j] + S[i][0] - S[j][0])
    c = d[1:]
    value, psi = simplex_max(c, A, rhs)
    phi = [Fraction(0)] + [psi[i - 1] - S[i][0] for i in range(1, k)]
    offset = sum((d[i] * S[i][0] for i in range(1, k)), Fraction(0))
    return value - offset, phi


def _dual_real(cost: CostMatrix, d: list[float]):
    S = np.array(cost.entries, dtype=float)
    k = len(cost.points)
    if k == 1:
        return 0.0, [0.0]
    rows, rhs = [], []
    for i in range(k):
        for j in range(k):
            if i != j:
                row = np.zeros(k)
                row[i], row[j] = 1.0, -1.0
                rows.append(row)
                rhs.append(S[i, j])
    bounds = [(0.0, 0.0)] + [(None, None)] * (k - 1)
    res = linprog(-np.asarray(d), A_ub=np.array(rows), b_ub=np.array(rhs), bounds=bounds, method="highs")
    if not res.success:
        raise FellerError(f"dual LP failed: {res.message}")
    return float(-res.fun), [float(v) for v in res.x]


def wasserstein_dual(cost: CostMatrix, mu1: FiniteMeasure, mu2: FiniteMeasure):
    """Supremum of ``int phi d(mu1 - mu2)`` over ``sigma``-1-Lipschitz potentials."""
    exact = cost.exact
    _check_masses(mu1, mu2, exact)
    conv = Fraction if exact else float
    d1, d2 = mu1.as_dict(), mu2.as_dict()
    for p in list(d1) + list(d2):
        cost.index(p)
    pts = cost.points
    d = [conv(d1.get(p, 0)) - conv(d2.get(p, 0)) for p in pts]
    value, phi = (_dual_exact if exact else _dual_real)(cost, d)
    return value, Potential(pts, tuple(phi))


def duality_gap(cost: CostMatrix, mu1: FiniteMeasure, mu2: FiniteMeasure) -> Mass:
    primal, _ = wasserstein_primal(cost, mu1, mu2)
    dual, _ = wasserstein_dual(cost, mu1, mu2)
    return primal - dual


@dataclass(frozen=True)
class WassersteinResult:
    primal: Mass
    dual: Mass
    gap: Mass
    exact: bool

    @property
    def value(self) -> Mass:
        return self.primal

    @property
    def consistent(self) -> bool:
        return self.gap == 0 if self.exact else abs(self.gap) <= REAL_GAP_TOL


def dirac_distance(sigma: Callable[[Point, Point], float], x: Point, y: Point) -> float:
    """``||delta_x - delta_y||_sigma = sigma(x, y)``; the optimal potential is ``sigma(., y)``."""
    return sigma(x, y)


def wasserstein(
    mu1: FiniteMeasure,
    mu2: FiniteMeasure,
    sigma: Callable[[Point, Point], float],
    exact: bool | None = None,
    fast_path: bool = True,
) -> WassersteinResult:
    """Primal, dual and gap for ``||mu1 - mu2||_sigma``."""
    if fast_path and len(mu1.atoms) == 1 and len(mu2.atoms) == 1:
        (x, m1), = mu1.atoms
        (y, m2), = mu2.atoms
        if m1 == 1 and m2 == 1:
            v = dirac_distance(sigma, x, y)
            if exact is not False and mu1.exact and mu2.exact:
                v = Fraction(v)
                return WassersteinResult(v, v, Fraction(0), True)
            return WassersteinResult(v, v, 0.0, False)
    cost = cost_for(mu1, mu2, sigma, exact)
    primal, _ = wasserstein_primal(cost, mu1, mu2)
    dual, _ = wasserstein_dual(cost, mu1, mu2)
    return WassersteinResult(primal, dual, primal - dual, cost.exact)
