"""Linear programming: a float backend (HiGHS via scipy) and a small exact
rational simplex for instances where the certificate must be exact.

Standard form throughout: min c.x subject to A x = b, x >= 0.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

EXACT_NONZERO_LIMIT = 5000


@dataclass
class LPSolution:
    x: list
    value: object
    status: str  # optimal | infeasible | unbounded | error
    dual: list = None
    duality_gap: float = None
    exact: bool = False


def lp_solve(c, a_eq, b_eq, method="auto"):
    """Solve min c.x, A x = b, x >= 0.

    method "highs" uses scipy's HiGHS; "exact" runs a rational simplex with
    Bland's rule (deterministic; ties broken by smallest variable index).
    "auto" picks exact when the data is rational and small enough.
    """
    if method == "auto":
        nnz = sum(1 for row in a_eq for v in row if v != 0)
        rational = all(isinstance(v, (int, Fraction)) for row in a_eq for v in row)
        rational = rational and all(isinstance(v, (int, Fraction)) for v in list(b_eq) + list(c))
        method = "exact" if rational and nnz <= EXACT_NONZERO_LIMIT else "highs"
    if method == "exact":
        return _simplex_exact(c, a_eq, b_eq)
    return _solve_highs(c, a_eq, b_eq)


def _solve_highs(c, a_eq, b_eq):
    from scipy.optimize import linprog

    res = linprog(
        np.asarray(c, dtype=float),
        A_eq=np.asarray(a_eq, dtype=float),
        b_eq=np.asarray(b_eq, dtype=float),
        bounds=(0, None),
        method="highs",
    )
    if res.status == 2:
        return LPSolution(None, None, "infeasible")
    if res.status == 3:
        return LPSolution(None, None, "unbounded")
    if not res.success:
        return LPSolution(None, None, "error")
    dual = list(res.eqlin.marginals) if res.eqlin is not None else None
    gap = None
    if dual is not None:
        gap = abs(float(res.fun) - float(np.dot(dual, np.asarray(b_eq, dtype=float))))
    return LPSolution(list(res.x), float(res.fun), "optimal", dual, gap, exact=False)


# ---------------------------------------------------------------------------
# exact rational simplex (Bland's rule, two phases)


def _simplex_exact(c, a_eq, b_eq):
    a = [[Fraction(v) for v in row] for row in a_eq]
    b = [Fraction(v) for v in b_eq]
    c = [Fraction(v) for v in c]
    m = len(a)
    n = len(c)
    # make b >= 0
    for i in range(m):
        if b[i] < 0:
            a[i] = [-v for v in a[i]]
            b[i] = -b[i]
    # phase I: add artificials
    tab = [row[:] + [Fraction(1) if j == i else Fraction(0) for j in range(m)] + [b[i]] for i, row in enumerate(a)]
    basis = [n + i for i in range(m)]
    cost1 = [Fraction(0)] * n + [Fraction(1)] * m
    status = _simplex_core(tab, basis, cost1, n + m)
    if status != "optimal":
        return LPSolution(None, None, "error")
    if _objective(tab, basis, cost1) != 0:
        return LPSolution(None, None, "infeasible")
    # drive artificials out of the basis where possible
    for i in range(m):
        if basis[i] >= n:
            piv = next((j for j in range(n) if tab[i][j] != 0), None)
            if piv is not None:
                _pivot(tab, basis, i, piv)
    # drop artificial columns (rows whose artificial stayed basic are redundant)
    keep_rows = [i for i in range(m) if basis[i] < n]
    tab = [[tab[i][j] for j in range(n)] + [tab[i][-1]] for i in keep_rows]
    basis = [basis[i] for i in keep_rows]
    cost2 = c
    status = _simplex_core(tab, basis, cost2, n)
    if status == "unbounded":
        return LPSolution(None, None, "unbounded")
    x = [Fraction(0)] * n
    for i, bi in enumerate(basis):
        x[bi] = tab[i][-1]
    value = sum(ci * xi for ci, xi in zip(c, x))
    return LPSolution(x, value, "optimal", dual=None, duality_gap=0.0, exact=True)


def _objective(tab, basis, cost):
    return sum(cost[bi] * tab[i][-1] for i, bi in enumerate(basis))


def _pivot(tab, basis, row, col):
    pr = tab[row]
    pv = pr[col]
    tab[row] = [v / pv for v in pr]
    pr = tab[row]
    for i in range(len(tab)):
        if i != row and tab[i][col] != 0:
            f = tab[i][col]
            tab[i] = [v - f * w for v, w in zip(tab[i], pr)]
    basis[row] = col


def _simplex_core(tab, basis, cost, ncols):
    while True:
        # reduced costs: c_j - c_B B^-1 A_j
        y = {}
        entering = None
        for j in range(ncols):
            if j in basis:
                continue
            red = cost[j] - sum(cost[basis[i]] * tab[i][j] for i in range(len(tab)))
            if red < 0:
                entering = j  # Bland: first (smallest) improving index
                break
        if entering is None:
            return "optimal"
        # ratio test, Bland tie-break by smallest basis index
        best = None
        for i in range(len(tab)):
            if tab[i][entering] > 0:
                ratio = tab[i][-1] / tab[i][entering]
                key = (ratio, basis[i])
                if best is None or key < best[0]:
                    best = (key, i)
        if best is None:
            return "unbounded"
        _pivot(tab, basis, best[1], entering)
