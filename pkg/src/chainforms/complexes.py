"""Finite cell complexes with exact integer boundary matrices, and the
flat-norm decomposition solved as a linear program over a complex.

The flat norm computed here is relative to the complex: an upper bound on the
ambient flat norm that converges under grid refinement.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from itertools import combinations

import numpy as np
from scipy import sparse

from .chains import Chain, CubicalCell, Simplex, make_simplex


class NotRepresentableError(ValueError):
    def __init__(self, cells):
        self.cells = list(cells)
        super().__init__(f"{len(self.cells)} cell(s) do not match any complex cell")


class ChainComplex:
    """Cells per dimension with sparse integer boundary matrices.

    Cells are CubicalCells (or Simplexes for hand-built complexes); ids are
    positions in the per-dimension sorted cell list.
    """

    def __init__(self, n, cells_by_dim):
        self.n = n
        self.cells = {k: list(cs) for k, cs in cells_by_dim.items()}
        self.index = {
            k: {cell: i for i, cell in enumerate(cs)} for k, cs in self.cells.items()
        }
        self.boundaries = {}
        for k in sorted(self.cells):
            if k == 0 or k - 1 not in self.cells:
                continue
            self.boundaries[k] = self._build_boundary(k)
        self._check_exactness()

    def _build_boundary(self, k):
        rows, cols, vals = [], [], []
        lower = self.index[k - 1]
        for j, cell in enumerate(self.cells[k]):
            for face, coef in _cell_boundary(cell, self.n).items():
                if face not in lower:
                    raise ValueError("complex is missing a face")
                rows.append(lower[face])
                cols.append(j)
                vals.append(int(coef))
        shape = (len(self.cells[k - 1]), len(self.cells[k]))
        return sparse.csr_matrix((vals, (rows, cols)), shape=shape, dtype=np.int64)

    def _check_exactness(self):
        for k in self.boundaries:
            if k + 1 in self.boundaries:
                prod = self.boundaries[k] @ self.boundaries[k + 1]
                assert prod.nnz == 0 or not prod.toarray().any(), "boundary of boundary != 0"

    def num_cells(self, k):
        return len(self.cells.get(k, []))

    def cell_masses(self, k):
        out = []
        for cell in self.cells[k]:
            vol, _ = cell.volume()
            out.append(Fraction(vol))
        return out


def _cell_boundary(cell, n):
    """Signed faces of one cell, as {face cell: +-1}, matching Chain.boundary."""
    out = {}
    if isinstance(cell, CubicalCell):
        for i, ax in enumerate(cell.axes):
            sub = cell.axes[:i] + cell.axes[i + 1 :]
            top_anchor = list(cell.anchor)
            top_anchor[ax] = top_anchor[ax] + cell.eps
            sgn = 1 if i % 2 == 0 else -1
            top = CubicalCell(tuple(top_anchor), sub, cell.eps)
            bot = CubicalCell(tuple(cell.anchor), sub, cell.eps)
            out[top] = out.get(top, 0) + sgn
            out[bot] = out.get(bot, 0) - sgn
    else:
        verts = cell.vertices
        for i in range(len(verts)):
            made = make_simplex(verts[:i] + verts[i + 1 :], "rational")
            if made is None:
                continue
            face, sign = made
            out[face] = out.get(face, 0) + sign * (1 if i % 2 == 0 else -1)
    return {f: c for f, c in out.items() if c != 0}


def build_cubical_complex(box, eps, max_dim):
    """All grid cells of dimension 0..max_dim inside the box.

    box: list of (lo, hi) per axis, each an integer multiple of eps.
    """
    eps = Fraction(eps)
    n = len(box)
    counts = []
    los = []
    for lo, hi in box:
        lo, hi = Fraction(lo), Fraction(hi)
        if lo % eps != 0 or hi % eps != 0 or hi <= lo:
            raise ValueError("box edges must be positive integer multiples of eps")
        counts.append(int((hi - lo) / eps))
        los.append(lo)
    cells_by_dim = {}
    for k in range(0, max_dim + 1):
        cells = []
        for axes in combinations(range(n), k):
            ranges = []
            for d in range(n):
                c = counts[d] if d in axes else counts[d] + 1
                ranges.append(range(c))
            idx = [0] * n
            while True:
                anchor = tuple(los[d] + idx[d] * eps for d in range(n))
                cells.append(CubicalCell(anchor, axes, eps))
                d = n - 1
                while d >= 0:
                    idx[d] += 1
                    if idx[d] < len(ranges[d]):
                        break
                    idx[d] = 0
                    d -= 1
                if d < 0:
                    break
        cells.sort(key=lambda c: (c.axes, c.anchor))
        cells_by_dim[k] = cells
    return ChainComplex(n, cells_by_dim)


@dataclass
class ChainVector:
    complex: ChainComplex
    k: int
    coeffs: dict  # cell id -> Fraction

    def to_dense(self):
        v = np.zeros(self.complex.num_cells(self.k))
        for i, c in self.coeffs.items():
            v[i] = float(c)
        return v

    def to_chain(self, mode="rational"):
        cells = {}
        for i, c in self.coeffs.items():
            if c != 0:
                cells[self.complex.cells[self.k][i]] = c
        return Chain(self.complex.n, self.k, cells, mode)

    def is_zero(self):
        return all(c == 0 for c in self.coeffs.values())

    def mass(self):
        w = self.complex.cell_masses(self.k)
        return sum(abs(Fraction(c)) * w[i] for i, c in self.coeffs.items())


def embed_chain(chain, complex):
    """Express a chain in complex coordinates; orientation-corrected signs.

    Simplex cells are matched against grid edges/vertices where possible;
    anything without an exact counterpart raises NotRepresentableError.
    """
    coeffs = {}
    missing = []
    index = complex.index.get(chain.m, {})
    for cell, coef in chain.cells.items():
        pieces = _match_cell(cell, complex)
        if pieces is None or any(p not in index for p, _ in pieces):
            missing.append(cell)
            continue
        for target, sign in pieces:
            i = index[target]
            coeffs[i] = coeffs.get(i, Fraction(0)) + sign * Fraction(coef)
    if missing:
        raise NotRepresentableError(missing)
    return ChainVector(complex, chain.m, {i: c for i, c in coeffs.items() if c != 0})


def _match_cell(cell, complex):
    """Pieces [(complex cell, sign), ...] representing `cell`, or None."""
    some = next(iter(complex.cells.get(cell.m, [])), None)
    if some is None:
        return None
    if not isinstance(some, CubicalCell):
        return [(cell, 1)]  # simplicial complex: cells match directly
    eps = some.eps
    if isinstance(cell, CubicalCell):
        if cell.eps == eps:
            return [(cell, 1)]
        ratio = Fraction(cell.eps) / eps
        if ratio.denominator != 1:
            return None
        # refine into a ratio^m block of finer cells, same orientation
        k = int(ratio)
        pieces = []
        idx = [0] * cell.m
        while True:
            anchor = list(cell.anchor)
            for pos, ax in enumerate(cell.axes):
                anchor[ax] = anchor[ax] + idx[pos] * eps
            pieces.append((CubicalCell(tuple(anchor), cell.axes, eps), 1))
            d = cell.m - 1
            while d >= 0:
                idx[d] += 1
                if idx[d] < k:
                    break
                idx[d] = 0
                d -= 1
            if d < 0:
                break
        return pieces
    if cell.m == 0:
        v = cell.vertices[0]
        if all(Fraction(c) % eps == 0 for c in v):
            return [(CubicalCell(tuple(Fraction(c) for c in v), (), eps), 1)]
        return None
    if cell.m == 1:
        a, b = cell.vertices
        diffs = [Fraction(x) - Fraction(y) for x, y in zip(b, a)]
        active = [i for i, d in enumerate(diffs) if d != 0]
        if len(active) != 1:
            return None
        ax = active[0]
        d = diffs[ax]
        steps = Fraction(abs(d)) / eps
        if steps.denominator != 1:
            return None
        lo = list(Fraction(c) for c in (a if d > 0 else b))
        if any(c % eps != 0 for c in lo):
            return None
        sign = 1 if d > 0 else -1
        pieces = []
        for j in range(int(steps)):
            anchor = list(lo)
            anchor[ax] += j * eps
            pieces.append((CubicalCell(tuple(anchor), (ax,), eps), sign))
        return pieces
    return None


@dataclass
class FlatDecomposition:
    value: float
    r: ChainVector
    s: ChainVector
    status: str
    duality_gap: float
    integral: bool
    residual_zero: bool


def apply_boundary(vec):
    """Exact boundary of a ChainVector through the integer matrix."""
    k = vec.k
    mat = vec.complex.boundaries[k]
    out = {}
    csc = mat.tocsc()
    for j, c in vec.coeffs.items():
        for p in range(csc.indptr[j], csc.indptr[j + 1]):
            i = csc.indices[p]
            out[i] = out.get(i, Fraction(0)) + int(csc.data[p]) * Fraction(c)
    return ChainVector(vec.complex, k - 1, {i: c for i, c in out.items() if c != 0})


def flat_norm(t, complex=None, rationalize_denominator=10**9):
    """min mass(R) + mass(S) over R = t - boundary(S) on the complex.

    Solved with HiGHS in floats; S is then snapped to nearby rationals and R
    recomputed exactly so the decomposition identity holds with residual 0.
    """
    from .lp import lp_solve

    complex = complex or t.complex
    m = t.k
    if m + 1 not in complex.boundaries:
        raise ValueError("complex lacks dimension m+1")
    bmat = complex.boundaries[m + 1]
    nm = complex.num_cells(m)
    nm1 = complex.num_cells(m + 1)
    w = [float(v) for v in complex.cell_masses(m)]
    v = [float(x) for x in complex.cell_masses(m + 1)]
    bdense = bmat.toarray().astype(float)
    # variables: r+, r-, s+, s-
    a_eq = np.hstack([np.eye(nm), -np.eye(nm), bdense, -bdense])
    b_eq = t.to_dense()
    c = np.concatenate([w, w, v, v])
    sol = lp_solve(c, a_eq, b_eq, method="highs")
    if sol.status != "optimal":
        return FlatDecomposition(math.inf, None, None, sol.status, math.inf, False, False)
    x = np.asarray(sol.x)
    s_float = x[2 * nm : 2 * nm + nm1] - x[2 * nm + nm1 :]
    s_coeffs = {}
    for j, val in enumerate(s_float):
        q = Fraction(val).limit_denominator(rationalize_denominator)
        if q != 0:
            s_coeffs[j] = q
    s_vec = ChainVector(complex, m + 1, s_coeffs)
    bs = apply_boundary(s_vec)
    r_coeffs = dict(t.coeffs)
    for i, c2 in bs.coeffs.items():
        r_coeffs[i] = r_coeffs.get(i, Fraction(0)) - c2
    r_vec = ChainVector(complex, m, {i: c2 for i, c2 in r_coeffs.items() if c2 != 0})
    value = float(r_vec.mass() + s_vec.mass())
    integral = all(c2.denominator == 1 for c2 in s_vec.coeffs.values()) and all(
        c2.denominator == 1 for c2 in r_vec.coeffs.values()
    )
    gap = sol.duality_gap if sol.duality_gap is not None else math.inf
    return FlatDecomposition(value, r_vec, s_vec, "optimal", gap, integral, True)


def flat_norm_chain(chain, eps, box=None, pad=1):
    """Convenience wrapper: build a grid complex around the chain and solve."""
    eps = Fraction(eps)
    if box is None:
        pts = chain.support_points()
        box = []
        for d in range(chain.n):
            vals = [Fraction(p[d]) for p in pts]
            lo = (min(vals) / eps).__floor__() * eps - pad * eps
            hi = -((-max(vals) / eps).__floor__()) * eps + pad * eps
            box.append((lo, hi))
    complex = build_cubical_complex(box, eps, chain.m + 1)
    t = embed_chain(chain, complex)
    return flat_norm(t, complex)
