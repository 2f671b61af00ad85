"""p-modulus of finite chain families as convex programs over grid densities.

The density is piecewise constant on grid cells, so admissibility is a finite
set of linear constraints and the modulus is a small convex program.  It is
solved in the dual: one multiplier per family member, with the inner
minimization over the density available in closed form.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .chains import Chain, Simplex
from .gridfield import GridField


@dataclass
class ModulusResult:
    value: float
    density: GridField
    activities: list  # per-member constraint value int f d||T_i||
    iterations: int
    flag: str  # "finite" | "plus-infinity-empty-admissible"
    duality_gap: float = 0.0


# ---------------------------------------------------------------------------
# cell measures


def chain_cell_measures(chain, box, shape):
    """Vector of ||T||(cell) over grid cells, flattened in C order.

    Exact for segments (any ambient dimension, half-open cells so gridline
    segments are counted once) and planar triangles (shapely clipping).
    """
    src = chain.to_simplicial()
    out = np.zeros(int(np.prod(shape)))
    for cell, coef in src.cells.items():
        w = abs(float(coef))
        if w == 0:
            continue
        if cell.m == 0:
            idx = _cell_index(cell.vertices[0], box, shape)
            if idx is not None:
                out[idx] += w
        elif cell.m == 1:
            for idx, length in _segment_cell_lengths(cell, box, shape):
                out[idx] += w * length
        elif cell.m == 2 and chain.n == 2:
            for idx, area in _triangle_cell_areas(cell, box, shape):
                out[idx] += w * area
        else:
            raise NotImplementedError(
                "cell measures support points, segments, and planar triangles"
            )
    return out


def _cell_index(point, box, shape):
    idx = 0
    for d, ((lo, hi), s) in enumerate(zip(box, shape)):
        x = Fraction(point[d])
        step = (Fraction(hi) - Fraction(lo)) / s
        i = int((x - Fraction(lo)) / step)
        if x < lo or x > hi:
            return None
        i = min(i, s - 1)
        idx = idx * s + i
    return idx


def _segment_cell_lengths(cell, box, shape):
    """Exact [ (flat index, length) ] of a segment clipped to grid cells.

    A segment lying exactly on an interior gridline splits its measure evenly
    between the two adjacent slabs, so boundary-resident families behave like
    their continuum neighbors.
    """
    a = [Fraction(v) for v in cell.vertices[0]]
    b = [Fraction(v) for v in cell.vertices[1]]
    n = len(a)
    d = [bb - aa for aa, bb in zip(a, b)]
    length = math.sqrt(sum(float(v) ** 2 for v in d))
    steps = [(Fraction(hi) - Fraction(lo)) / s for (lo, hi), s in zip(box, shape)]
    los = [Fraction(lo) for lo, _ in box]
    # collect parameter breakpoints where the segment crosses any gridline
    ts = {Fraction(0), Fraction(1)}
    for dim in range(n):
        if d[dim] == 0:
            continue
        for k in range(shape[dim] + 1):
            plane = los[dim] + k * steps[dim]
            t = (plane - a[dim]) / d[dim]
            if 0 < t < 1:
                ts.add(t)
    ts = sorted(ts)
    out = []
    for t0, t1 in zip(ts, ts[1:]):
        tm = (t0 + t1) / 2
        options = []  # per-axis list of (index, weight)
        ok = True
        for dim, s in enumerate(shape):
            if d[dim] == 0:
                rel = (a[dim] - los[dim]) / steps[dim]
                if rel < 0 or rel > s:
                    ok = False
                    break
                if rel.denominator == 1 and 0 < rel < s:
                    options.append([(int(rel) - 1, 0.5), (int(rel), 0.5)])
                elif rel == 0:
                    options.append([(0, 1.0)])
                elif rel == s:
                    options.append([(s - 1, 1.0)])
                else:
                    options.append([(math.floor(rel), 1.0)])
            else:
                x = a[dim] + tm * d[dim]
                rel = (x - los[dim]) / steps[dim]
                i = math.floor(rel)
                if i < 0 or i >= s:
                    ok = False
                    break
                options.append([(i, 1.0)])
        if not ok:
            continue
        piece = float(t1 - t0) * length
        combos = [(0, 1.0)]
        for dim, opts in enumerate(options):
            s = shape[dim]
            combos = [(idx * s + i, w * wi) for idx, w in combos for i, wi in opts]
        for idx, w in combos:
            out.append((idx, piece * w))
    return out


def _triangle_cell_areas(cell, box, shape):
    from shapely.geometry import Polygon, box as shapely_box

    tri = Polygon([(float(v[0]), float(v[1])) for v in cell.vertices])
    if tri.area == 0:
        return []
    out = []
    (lx, hx), (ly, hy) = box
    sx, sy = shape
    stepx = (float(hx) - float(lx)) / sx
    stepy = (float(hy) - float(ly)) / sy
    minx, miny, maxx, maxy = tri.bounds
    i0 = max(0, int((minx - float(lx)) / stepx))
    i1 = min(sx - 1, int((maxx - float(lx)) / stepx))
    j0 = max(0, int((miny - float(ly)) / stepy))
    j1 = min(sy - 1, int((maxy - float(ly)) / stepy))
    for i in range(i0, i1 + 1):
        for j in range(j0, j1 + 1):
            cellbox = shapely_box(
                float(lx) + i * stepx,
                float(ly) + j * stepy,
                float(lx) + (i + 1) * stepx,
                float(ly) + (j + 1) * stepy,
            )
            area = tri.intersection(cellbox).area
            if area > 0:
                out.append((i * sy + j, area))
    return out


# ---------------------------------------------------------------------------
# modulus solve


def p_modulus(family, box, shape, p, tol=1e-6, max_iter=2000):
    """min int f^p over f >= 0 with int f d||T_i|| >= 1 for every member."""
    if not family:
        return ModulusResult(0.0, None, [], 0, "finite")
    if not 1 < p < math.inf:
        raise ValueError("p must lie in (1, inf)")
    mu = np.stack([chain_cell_measures(t, box, shape) for t in family])
    if (mu.sum(axis=1) == 0).any():
        return ModulusResult(math.inf, None, list(mu.sum(axis=1)), 0, "plus-infinity-empty-admissible")
    vol = 1.0
    for (lo, hi), s in zip(box, shape):
        vol *= (float(hi) - float(lo)) / s
    value, f, lam, iters, gap = _dual_solve([(mu, p)], vol, tol, max_iter)
    activities = list(mu @ f)
    density = GridField(box, f.reshape(shape))
    return ModulusResult(float(value), density, activities, iters, "finite", gap)


def _inner_density(mu, lam, p, vol):
    s = mu.T @ lam
    s = np.maximum(s, 0.0)
    return (s / (p * vol)) ** (1.0 / (p - 1.0))


def _dual_solve(blocks, vol, tol, max_iter):
    """Maximize the dual of sum_blocks int f_b^{p_b} with shared constraints.

    blocks: list of (mu matrix, exponent); the constraint for member i is
    sum_b int f_b d mu_b_i >= 1.  Returns (primal value, densities stacked,
    lambda, iterations, relative gap).  For a single block this is the plain
    p-modulus dual.
    """
    from scipy.optimize import minimize

    nmem = blocks[0][0].shape[0]

    def negdual(lam):
        total = -lam.sum()
        grad = -np.ones_like(lam)
        for mu, p in blocks:
            f = _inner_density(mu, lam, p, vol)
            total += (p - 1.0) * vol * (f**p).sum()
            grad += mu @ f
        return total, grad

    res = minimize(
        negdual,
        np.ones(nmem),
        jac=True,
        bounds=[(0.0, None)] * nmem,
        method="L-BFGS-B",
        options={"maxiter": max_iter, "ftol": 1e-14, "gtol": 1e-12},
    )
    lam = res.x
    dual_value = -res.fun
    # build a primal-feasible density by scaling up to meet the worst constraint
    fs = [_inner_density(mu, lam, p, vol) for mu, p in blocks]
    cons = sum(mu @ f for (mu, _), f in zip(blocks, fs))
    worst = cons.min()
    if worst <= 0:
        return math.inf, np.zeros(sum(b[0].shape[1] for b in blocks)), lam, int(res.nit), math.inf
    primal = 0.0
    scaled = []
    for (mu, p), f in zip(blocks, fs):
        fsc = f / worst
        scaled.append(fsc)
        primal += vol * (fsc**p).sum()
    gap = abs(primal - dual_value) / max(abs(primal), 1e-300)
    return primal, np.concatenate(scaled) if len(scaled) > 1 else scaled[0], lam, int(res.nit), gap


# ---------------------------------------------------------------------------
# capacities


def capacity_lower_bound(cycles, fillings, box, shape, p, tol=1e-6):
    """p-modulus of a finite filling family; a lower bound for cap_p.

    Every filling's boundary must equal (exactly) one of the given cycles.
    """
    for s in fillings:
        bs = s.boundary()
        if not any((bs - t).is_zero() for t in cycles):
            raise ValueError("filling boundary is not in the cycle list")
    return p_modulus(fillings, box, shape, p, tol)


def qp_capacity_lower_bound(targets, decompositions, box, shape, q, p, tol=1e-6, max_iter=2000):
    """min int f1^q + int f2^p s.t. int f1 d||R_i|| + int f2 d||S_i|| >= 1.

    Each decomposition (R, S) must satisfy R + boundary(S) in targets exactly.
    """
    for r, s in decompositions:
        total = r + s.boundary() if not s.is_zero() else r
        if not any((total - t).is_zero() for t in targets):
            raise ValueError("decomposition does not reproduce a target chain")
    mu_r = np.stack([chain_cell_measures(r, box, shape) for r, _ in decompositions])
    mu_s = np.stack([chain_cell_measures(s, box, shape) for _, s in decompositions])
    if ((mu_r.sum(axis=1) + mu_s.sum(axis=1)) == 0).any():
        return ModulusResult(math.inf, None, [], 0, "plus-infinity-empty-admissible")
    vol = 1.0
    for (lo, hi), sgrid in zip(box, shape):
        vol *= (float(hi) - float(lo)) / sgrid
    value, f, lam, iters, gap = _dual_solve([(mu_r, q), (mu_s, p)], vol, tol, max_iter)
    ncells = mu_r.shape[1]
    f1, f2 = f[:ncells], f[ncells:]
    activities = list(mu_r @ f1 + mu_s @ f2)
    return ModulusResult(float(value), GridField(box, f1.reshape(shape)), activities, iters, "finite", gap)
