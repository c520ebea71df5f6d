"""Small simplex solvers, generic over ``Fraction`` (exact) and ``float``.

Both use Bland's rule (smallest eligible index enters; smallest index among
tied ratios leaves), so they terminate on degenerate problems, and both are
deterministic: equal inputs give identical bases.
"""

from __future__ import annotations

from fractions import Fraction
from typing import Sequence


class LPError(ArithmeticError):
    pass


def _zero_like(x):
    return Fraction(0) if isinstance(x, Fraction) else 0.0


def simplex_max(c: Sequence, A: Sequence[Sequence], b: Sequence, tol: float = 0.0):
    """Maximise ``c @ x`` subject to ``A @ x <= b``, ``x >= 0``, with ``b >= 0``.

    The slack basis is feasible because ``b >= 0``, so no phase one is needed.
    Returns ``(value, x)``. Raises :class:`LPError` if unbounded.
    """
    m, n = len(A), len(c)
    if any(bi < 0 for bi in b):
        raise LPError("right-hand side must be nonnegative")
    zero = _zero_like(c[0]) if n else Fraction(0)
    one = zero + 1
    # Row i: A[i] | identity | b[i]; objective row holds reduced profits c_j - z_j.
    T = [list(A[i]) + [one if k == i else zero for k in range(m)] + [b[i]] for i in range(m)]
    obj = list(c) + [zero] * m + [zero]
    basis = [n + i for i in range(m)]
    width = n + m
    while True:
        enter = next((j for j in range(width) if obj[j] > tol), None)
        if enter is None:
            break
        leave, best = None, None
        for i in range(m):
            a = T[i][enter]
            if a > tol:
                ratio = T[i][-1] / a
                if best is None or ratio < best - tol or (
                    abs(ratio - best) <= tol and basis[i] < basis[leave]
                ):
                    leave, best = i, ratio
        if leave is None:
            raise LPError("objective is unbounded")
        piv = T[leave][enter]
        row = [v / piv for v in T[leave]]
        T[leave] = row
        for i in range(m):
            if i != leave:
                f = T[i][enter]
                if f:
                    T[i] = [v - f * r for v, r in zip(T[i], row)]
        f = obj[enter]
        obj = [v - f * r for v, r in zip(obj, row)]
        basis[leave] = enter
    x = [zero] * n
    for i, j in enumerate(basis):
        if j < n:
            x[j] = T[i][-1]
    value = sum((ci * xi for ci, xi in zip(c, x)), zero)
    return value, x


def _northwest_corner(supply, demand):
    m, n = len(supply), len(demand)
    a, b = list(supply), list(demand)
    zero = _zero_like(a[0])
    plan = {}
    i = j = 0
    while True:
        q = min(a[i], b[j])
        plan[(i, j)] = q
        a[i] -= q
        b[j] -= q
        if i == m - 1 and j == n - 1:
            break
        if (a[i] == 0 or j == n - 1) and i < m - 1:
            i += 1
        else:
            j += 1
    # Clamp float residue; exact mode is untouched.
    return {k: (v if v > 0 else zero) for k, v in plan.items()}


def _tree_potentials(basis, cost, m, n):
    """Solve ``u_i + v_j = c_ij`` on the basis tree with ``u_0 = 0``."""
    rows = [[] for _ in range(m)]
    cols = [[] for _ in range(n)]
    for i, j in basis:
        rows[i].append(j)
        cols[j].append(i)
    u = [None] * m
    v = [None] * n
    u[0] = _zero_like(cost[0][0])
    stack = [("r", 0)]
    while stack:
        kind, k = stack.pop()
        if kind == "r":
            for j in rows[k]:
                if v[j] is None:
                    v[j] = cost[k][j] - u[k]
                    stack.append(("c", j))
        else:
            for i in cols[k]:
                if u[i] is None:
                    u[i] = cost[i][k] - v[k]
                    stack.append(("r", i))
    if any(x is None for x in u) or any(x is None for x in v):
        raise LPError("basis is not a spanning tree")
    return u, v


def _tree_path(basis, m, n, start_row, end_col):
    """Cells on the unique tree path from row node ``start_row`` to column node ``end_col``."""
    adj: dict = {}
    for i, j in basis:
        adj.setdefault(("r", i), []).append(("c", j))
        adj.setdefault(("c", j), []).append(("r", i))
    for nbrs in adj.values():
        nbrs.sort()
    start, goal = ("r", start_row), ("c", end_col)
    parent = {start: None}
    stack = [start]
    while stack:
        node = stack.pop()
        if node == goal:
            break
        for nb in adj.get(node, []):
            if nb not in parent:
                parent[nb] = node
                stack.append(nb)
    if goal not in parent:
        raise LPError("no tree path")
    nodes = []
    node = goal
    while node is not None:
        nodes.append(node)
        node = parent[node]
    nodes.reverse()
    cells = []
    for a, b in zip(nodes, nodes[1:]):
        cells.append((a[1], b[1]) if a[0] == "r" else (b[1], a[1]))
    return cells


def transport_simplex(supply: Sequence, demand: Sequence, cost: Sequence[Sequence], tol: float = 0.0):
    """Minimum-cost transportation plan by the u-v (MODI) simplex method.

    ``supply`` and ``demand`` must have equal totals. Returns ``(value, plan)``
    where ``plan[i][j]`` is the mass sent from source ``i`` to sink ``j``.
    """
    m, n = len(supply), len(demand)
    if m == 0 or n == 0:
        raise LPError("empty marginal")
    zero = _zero_like(supply[0])
    x = _northwest_corner(supply, demand)
    basis = set(x)
    while True:
        u, v = _tree_potentials(basis, cost, m, n)
        enter = None
        for i in range(m):
            for j in range(n):
                if (i, j) not in basis and cost[i][j] - u[i] - v[j] < -tol:
                    enter = (i, j)
                    break
            if enter:
                break
        if enter is None:
            break
        # Cycle: enter (+), then alternate along the tree path column_j -> row_i.
        path = _tree_path(basis, m, n, enter[0], enter[1])
        # path runs row_i -> ... -> col_j; walking it backwards from col_j gives
        # the cells adjacent to the entering cell first.
        cycle = list(reversed(path))
        minus = cycle[0::2]
        plus = cycle[1::2]
        theta = min(x[c] for c in minus)
        leave = min(c for c in minus if x[c] - theta <= tol)
        for c in minus:
            x[c] = x[c] - theta
        for c in plus:
            x[c] = x[c] + theta
        x[enter] = theta
        basis.remove(leave)
        del x[leave]
        basis.add(enter)
        if tol:
            for c in minus:
                if c in x and x[c] < 0:
                    x[c] = zero
    plan = [[zero] * n for _ in range(m)]
    for (i, j), q in x.items():
        plan[i][j] = q
    value = sum((plan[i][j] * cost[i][j] for i in range(m) for j in range(n)), zero)
    return value, plan
