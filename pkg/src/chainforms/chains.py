"""Polyhedral chains in R^n with exact (rational) or float coefficients.

A chain is a finite formal sum of oriented cells (simplices or axis-aligned
cubical cells) with scalar coefficients.  In rational mode every algebraic
identity (boundary of boundary, homotopy identity, push-forward naturality)
holds exactly; float mode uses a drop tolerance for canonicalization.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from fractions import Fraction
from itertools import permutations

from .polynomial import Polynomial, affine_exprs, integrate_over_std_simplex

FLOAT_DROP_TOL = 1e-12
OVERLAP_CHECK_MAX_CELLS = 64


# ---------------------------------------------------------------------------
# scalar helpers


def _perm_sign(seq):
    """Sign of the permutation sorting `seq` (indices assumed distinct)."""
    seq = list(seq)
    sign = 1
    for i in range(len(seq)):
        j = min(range(i, len(seq)), key=lambda k: seq[k])
        if j != i:
            seq[i], seq[j] = seq[j], seq[i]
            sign = -sign
    return sign


def exact_rank(rows):
    """Rank of a matrix with Fraction entries, by Gaussian elimination."""
    rows = [list(r) for r in rows]
    if not rows:
        return 0
    ncols = len(rows[0])
    rank = 0
    col = 0
    while rank < len(rows) and col < ncols:
        piv = next((i for i in range(rank, len(rows)) if rows[i][col] != 0), None)
        if piv is None:
            col += 1
            continue
        rows[rank], rows[piv] = rows[piv], rows[rank]
        prow = rows[rank]
        for i in range(rank + 1, len(rows)):
            if rows[i][col] != 0:
                f = rows[i][col] / prow[col]
                rows[i] = [a - f * b for a, b in zip(rows[i], prow)]
        rank += 1
        col += 1
    return rank


def float_rank(rows, tol=1e-9):
    import numpy as np

    a = np.asarray(rows, dtype=float)
    if a.size == 0:
        return 0
    s = np.linalg.svd(a, compute_uv=False)
    if s.size == 0 or s[0] == 0:
        return 0
    return int((s > tol * s[0]).sum())


def sqrt_fraction(q, rel_tol=Fraction(1, 10**15)):
    """Square root of a nonnegative Fraction.

    Returns (value, exact_flag); when the root is irrational, value is a
    Fraction within rel_tol of the true root (certified by integer isqrt
    bracketing).
    """
    q = Fraction(q)
    if q < 0:
        raise ValueError("negative radicand")
    if q == 0:
        return Fraction(0), True
    num, den = q.numerator, q.denominator
    rn, rd = math.isqrt(num), math.isqrt(den)
    if rn * rn == num and rd * rd == den:
        return Fraction(rn, rd), True
    # scale so that the integer sqrt gives ~18 correct digits
    scale = 10**18
    val = Fraction(math.isqrt(num * scale * scale // den), scale)
    return val, False


def gram_det(vectors):
    """Exact Gram determinant of a list of Fraction vectors."""
    m = len(vectors)
    g = [[sum(a * b for a, b in zip(vectors[i], vectors[j])) for j in range(m)] for i in range(m)]
    # Bareiss-free plain fraction elimination; m is tiny
    det = Fraction(1)
    g = [row[:] for row in g]
    for c in range(m):
        piv = next((i for i in range(c, m) if g[i][c] != 0), None)
        if piv is None:
            return Fraction(0)
        if piv != c:
            g[c], g[piv] = g[piv], g[c]
            det = -det
        det *= g[c][c]
        for i in range(c + 1, m):
            f = g[i][c] / g[c][c]
            g[i] = [a - f * b for a, b in zip(g[i], g[c])]
    return det


# ---------------------------------------------------------------------------
# cells


@dataclass(frozen=True)
class Simplex:
    """Oriented m-simplex given by m+1 vertices in canonical (sorted) order."""

    vertices: tuple

    @property
    def m(self):
        return len(self.vertices) - 1

    @property
    def n(self):
        return len(self.vertices[0])

    def edge_vectors(self):
        v0 = self.vertices[0]
        return [tuple(a - b for a, b in zip(v, v0)) for v in self.vertices[1:]]

    def volume(self):
        """(value, exact_flag): m-dimensional volume, exact when rational."""
        if self.m == 0:
            return Fraction(1), True
        edges = self.edge_vectors()
        if isinstance(edges[0][0], Fraction):
            det = gram_det(edges)
            root, exact = sqrt_fraction(det)
            f = Fraction(1, math.factorial(self.m))
            return root * f, exact
        import numpy as np

        e = np.asarray(edges, dtype=float)
        det = np.linalg.det(e @ e.T)
        return math.sqrt(max(det, 0.0)) / math.factorial(self.m), False

    def wedge_coefficients(self, n):
        """Coefficients of (v1-v0)^...^(vm-v0) in the basis e_alpha, alpha in Lambda(m,n).

        Returned as {alpha tuple (0-based, increasing): coefficient}.
        """
        from itertools import combinations

        edges = self.edge_vectors()
        m = self.m
        out = {}
        for alpha in combinations(range(n), m):
            sub = [[edges[i][a] for a in alpha] for i in range(m)]
            out[alpha] = _det(sub)
        return out

    def centroid(self):
        k = len(self.vertices)
        if isinstance(self.vertices[0][0], Fraction):
            return tuple(sum(v[i] for v in self.vertices) / k for i in range(len(self.vertices[0])))
        return tuple(sum(v[i] for v in self.vertices) / k for i in range(len(self.vertices[0])))


def _det(rows):
    m = len(rows)
    if m == 0:
        return Fraction(1) if True else 1
    if m == 1:
        return rows[0][0]
    if m == 2:
        return rows[0][0] * rows[1][1] - rows[0][1] * rows[1][0]
    total = 0
    for j in range(m):
        minor = [r[:j] + r[j + 1 :] for r in rows[1:]]
        term = rows[0][j] * _det(minor)
        total = total + (term if j % 2 == 0 else -term)
    return total


@dataclass(frozen=True)
class CubicalCell:
    """Axis-aligned m-cell of the eps-grid: anchor + [0,eps]^axes.

    Orientation is dx^{axes[0]} ^ ... ^ dx^{axes[m-1]} with axes strictly
    increasing (0-based).
    """

    anchor: tuple
    axes: tuple
    eps: Fraction

    def __post_init__(self):
        assert tuple(sorted(self.axes)) == self.axes
        for a in self.anchor:
            if Fraction(a) % Fraction(self.eps) != 0:
                raise ValueError("cubical anchor must lie on the eps-grid")

    @property
    def m(self):
        return len(self.axes)

    @property
    def n(self):
        return len(self.anchor)

    def volume(self):
        return Fraction(self.eps) ** self.m, True

    def vertices(self):
        verts = [self.anchor]
        for ax in self.axes:
            new = []
            for v in verts:
                w = list(v)
                w[ax] = w[ax] + self.eps
                new.append(tuple(w))
            verts = verts + new
        return verts

    def triangulate(self):
        """Kuhn triangulation as [(vertex tuple list, sign)] matching the cube's orientation."""
        out = []
        for perm in permutations(range(self.m)):
            sign = _perm_sign(perm)
            verts = [tuple(self.anchor)]
            cur = list(self.anchor)
            for i in perm:
                cur[self.axes[i]] = cur[self.axes[i]] + self.eps
                verts.append(tuple(cur))
            out.append((verts, sign))
        return out


# ---------------------------------------------------------------------------
# chain


def make_simplex(vertices, mode="rational"):
    """Canonicalize a vertex list into (Simplex, sign); None if degenerate."""
    if mode == "rational":
        vertices = [tuple(Fraction(x) for x in v) for v in vertices]
    else:
        vertices = [tuple(float(x) for x in v) for v in vertices]
    m = len(vertices) - 1
    if m >= 1:
        edges = [[a - b for a, b in zip(v, vertices[0])] for v in vertices[1:]]
        rank = exact_rank(edges) if mode == "rational" else float_rank(edges)
        if rank < m:
            return None
    order = sorted(range(len(vertices)), key=lambda i: vertices[i])
    sign = _perm_sign(order)
    return Simplex(tuple(vertices[i] for i in order)), sign


class Chain:
    """Formal sum of cells with coefficients; immutable after construction."""

    def __init__(self, n, m, cells=None, mode="rational", meta=None):
        self.n = n
        self.m = m
        self.mode = mode
        self.meta = meta or {}
        data = {}
        for cell, coef in (cells or {}).items():
            coef = Fraction(coef) if mode == "rational" else float(coef)
            if cell in data:
                data[cell] = data[cell] + coef
            else:
                data[cell] = coef
        if mode == "rational":
            self.cells = {c: a for c, a in data.items() if a != 0}
        else:
            self.cells = {c: a for c, a in data.items() if abs(a) > FLOAT_DROP_TOL}

    # -- constructors ------------------------------------------------------

    @classmethod
    def zero(cls, n, m, mode="rational"):
        return cls(n, m, {}, mode)

    @classmethod
    def from_simplices(cls, n, simplices, mode="rational"):
        """simplices: iterable of (vertex list, coefficient)."""
        m = None
        data = {}
        dropped = 0
        for verts, coef in simplices:
            if m is None:
                m = len(verts) - 1
            assert len(verts) - 1 == m, "mixed degrees"
            made = make_simplex(verts, mode)
            if made is None:
                dropped += 1
                continue
            cell, sign = made
            c = sign * (Fraction(coef) if mode == "rational" else float(coef))
            data[cell] = data.get(cell, 0) + c
        assert m is not None, "empty cell list needs explicit degree; use Chain.zero"
        meta = {"degenerate_dropped": dropped} if dropped else None
        return cls(n, m, data, mode, meta)

    @classmethod
    def point(cls, x, coef=1, mode="rational"):
        return cls.from_simplices(len(x), [([tuple(x)], coef)], mode)

    @classmethod
    def segment(cls, a, b, coef=1, mode="rational"):
        return cls.from_simplices(len(a), [([tuple(a), tuple(b)], coef)], mode)

    @classmethod
    def simplex(cls, vertices, coef=1, mode="rational"):
        return cls.from_simplices(len(vertices[0]), [(list(vertices), coef)], mode)

    @classmethod
    def from_cubes(cls, n, cubes, mode="rational"):
        """cubes: iterable of (CubicalCell, coefficient)."""
        cubes = list(cubes)
        m = cubes[0][0].m
        data = {}
        for cell, coef in cubes:
            assert cell.m == m and cell.n == n
            data[cell] = data.get(cell, 0) + (Fraction(coef) if mode == "rational" else float(coef))
        return cls(n, m, data, mode)

    # -- algebra -----------------------------------------------------------

    def _check_compatible(self, other):
        if (self.n, self.m, self.mode) != (other.n, other.m, other.mode):
            raise ValueError("incompatible chains")

    def __add__(self, other):
        self._check_compatible(other)
        data = dict(self.cells)
        for c, a in other.cells.items():
            data[c] = data.get(c, 0) + a
        return Chain(self.n, self.m, data, self.mode)

    def __sub__(self, other):
        return self + (-other)

    def __neg__(self):
        return Chain(self.n, self.m, {c: -a for c, a in self.cells.items()}, self.mode)

    def scale(self, a):
        a = Fraction(a) if self.mode == "rational" else float(a)
        return Chain(self.n, self.m, {c: a * v for c, v in self.cells.items()}, self.mode)

    __rmul__ = scale

    def __mul__(self, a):
        return self.scale(a)

    def is_zero(self):
        return not self.cells

    def __eq__(self, other):
        return (
            isinstance(other, Chain)
            and (self.n, self.m, self.mode) == (other.n, other.m, other.mode)
            and self.cells == other.cells
        )

    def __hash__(self):
        return hash((self.n, self.m, self.mode, frozenset(self.cells.items())))

    def num_cells(self):
        return len(self.cells)

    def to_simplicial(self):
        """Replace every cubical cell by its Kuhn triangulation."""
        if all(isinstance(c, Simplex) for c in self.cells):
            return self
        pieces = []
        for cell, coef in self.cells.items():
            if isinstance(cell, Simplex):
                pieces.append((list(cell.vertices), coef))
            else:
                for verts, sign in cell.triangulate():
                    pieces.append((verts, sign * coef))
        return Chain.from_simplices(self.n, pieces, self.mode)

    def support_points(self):
        pts = set()
        for cell in self.cells:
            if isinstance(cell, Simplex):
                pts.update(cell.vertices)
            else:
                pts.update(cell.vertices())
        return pts

    # -- boundary ----------------------------------------------------------

    def boundary(self):
        if self.m == 0:
            raise ValueError("boundary of a 0-chain is not a chain; use is_cycle")
        data = {}
        dropped = 0
        for cell, coef in self.cells.items():
            if isinstance(cell, Simplex):
                verts = cell.vertices
                for i in range(len(verts)):
                    face = verts[:i] + verts[i + 1 :]
                    made = make_simplex(face, self.mode)
                    if made is None:
                        dropped += 1
                        continue
                    fcell, sign = made
                    s = coef * sign * (1 if i % 2 == 0 else -1)
                    data[fcell] = data.get(fcell, 0) + s
            else:
                for i, ax in enumerate(cell.axes):
                    sub_axes = cell.axes[:i] + cell.axes[i + 1 :]
                    top_anchor = list(cell.anchor)
                    top_anchor[ax] = top_anchor[ax] + cell.eps
                    sgn = 1 if i % 2 == 0 else -1
                    if sub_axes:
                        top = CubicalCell(tuple(top_anchor), sub_axes, cell.eps)
                        bot = CubicalCell(tuple(cell.anchor), sub_axes, cell.eps)
                        data[top] = data.get(top, 0) + sgn * coef
                        data[bot] = data.get(bot, 0) - sgn * coef
                    else:
                        for verts, s in [([tuple(top_anchor)], sgn), ([tuple(cell.anchor)], -sgn)]:
                            sc, ssign = make_simplex(verts, self.mode)
                            data[sc] = data.get(sc, 0) + s * ssign * coef
        out = Chain(self.n, self.m - 1, data, self.mode)
        if dropped:
            out.meta["degenerate_dropped"] = dropped
        return out

    def is_cycle(self):
        if self.m == 0:
            total = sum(self.cells.values())
            if self.mode == "rational":
                return total == 0
            return abs(total) <= FLOAT_DROP_TOL
        return self.boundary().is_zero()

    # -- mass --------------------------------------------------------------

    def mass_interval(self):
        """(lo, hi) Fractions bracketing the mass of the stored representation."""
        lo = Fraction(0)
        hi = Fraction(0)
        for cell, coef in self.cells.items():
            vol, exact = cell.volume()
            vol = Fraction(vol) if not isinstance(vol, Fraction) else vol
            a = abs(Fraction(coef) if self.mode == "rational" else Fraction(coef))
            if exact:
                lo += a * vol
                hi += a * vol
            else:
                pad = vol * Fraction(1, 10**14)
                lo += a * (vol - pad)
                hi += a * (vol + pad)
        return lo, hi

    def mass(self):
        """Mass of the stored representation; exact Fraction when possible."""
        _warn_if_overlapping(self)
        exact_total = Fraction(0)
        all_exact = True
        for cell, coef in self.cells.items():
            vol, exact = cell.volume()
            if not exact or self.mode != "rational":
                all_exact = False
                break
            exact_total += abs(coef) * vol
        if all_exact:
            return exact_total
        lo, hi = self.mass_interval()
        return float((lo + hi) / 2)

    def mass_measure(self):
        return MassMeasure(self)

    # -- maps --------------------------------------------------------------

    def pushforward(self, amap):
        """Push the chain through an affine map; degenerate images are dropped."""
        mode = self.mode if amap.is_rational() else "f64"
        src = self.to_simplicial()
        pieces = []
        for cell, coef in src.cells.items():
            pieces.append(([amap(v) for v in cell.vertices], coef))
        if not pieces:
            return Chain.zero(self.n, self.m, mode)
        return Chain.from_simplices(self.n, pieces, mode)

    def translate(self, x):
        return self.pushforward(AffineMap.translation(x))

    # -- integration -------------------------------------------------------

    def integrate_measure(self, f, tol=1e-8):
        """Integral of a scalar field against the mass measure ||T||.

        `f` may be a Polynomial (integrated exactly up to the sqrt volume
        factor) or any callable on points (adaptive quadrature to `tol`).
        """
        _warn_if_overlapping(self)
        total = Fraction(0)
        all_exact = True
        src = self.to_simplicial()
        for cell, coef in src.cells.items():
            if isinstance(f, Polynomial):
                val, exact = _integrate_poly_over_simplex_measure(f, cell)
                all_exact = all_exact and exact
            else:
                val = _adaptive_simplex_quadrature(f, list(cell.vertices), tol)
                if not math.isfinite(val):
                    raise ValueError("field is not finite on the chain support")
                all_exact = False
            total = total + abs(Fraction(coef)) * Fraction(val)
        if all_exact and self.mode == "rational":
            return total
        return float(total)

    def __repr__(self):
        return f"Chain(n={self.n}, m={self.m}, cells={len(self.cells)}, mode={self.mode!r})"


class MassMeasure:
    """The measure ||T||: integrates scalar fields against the stored cells."""

    def __init__(self, chain):
        self.chain = chain

    def integrate(self, f, tol=1e-8):
        return self.chain.integrate_measure(f, tol)

    def total(self):
        return self.chain.mass()


class AffineMap:
    """x -> A x + b with rational or float entries."""

    def __init__(self, matrix, offset):
        self.matrix = [tuple(row) for row in matrix]
        self.offset = tuple(offset)

    @classmethod
    def translation(cls, x):
        n = len(x)
        xs = [Fraction(v) if isinstance(v, (int, Fraction)) else float(v) for v in x]
        eye = [[Fraction(1) if i == j else Fraction(0) for j in range(n)] for i in range(n)]
        return cls(eye, xs)

    @classmethod
    def linear(cls, matrix):
        n = len(matrix)
        return cls(matrix, [Fraction(0)] * n)

    def is_rational(self):
        vals = [v for row in self.matrix for v in row] + list(self.offset)
        return all(isinstance(v, (int, Fraction)) for v in vals)

    def __call__(self, v):
        out = []
        for i, row in enumerate(self.matrix):
            s = self.offset[i]
            for a, x in zip(row, v):
                s = s + a * x
            out.append(s)
        return tuple(out)


# ---------------------------------------------------------------------------
# operations in the module namespace (the public surface)


def boundary(chain):
    return chain.boundary()


def mass(chain):
    return chain.mass()


def pushforward(chain, amap):
    return chain.pushforward(amap)


def translate(chain, x):
    return chain.translate(x)


def integrate_measure(chain, f, tol=1e-8):
    return chain.integrate_measure(f, tol)


def is_cycle(chain):
    return chain.is_cycle()


def prism(chain, x):
    """Triangulated prism chain over `chain` swept by the translation x.

    Satisfies boundary(prism(T, x)) = translate(T, x) - T - prism(boundary(T), x)
    exactly (the classical simplicial homotopy identity).
    """
    mode = chain.mode if all(isinstance(v, (int, Fraction)) for v in x) else "f64"
    src = chain.to_simplicial()
    pieces = []
    for cell, coef in src.cells.items():
        verts = list(cell.vertices)
        shifted = [tuple(a + b for a, b in zip(v, x)) for v in verts]
        for i in range(len(verts)):
            prism_verts = verts[: i + 1] + shifted[i:]
            sign = 1 if i % 2 == 0 else -1
            pieces.append((prism_verts, sign * coef))
    if not pieces:
        return Chain.zero(chain.n, chain.m + 1, mode)
    return Chain.from_simplices(chain.n, pieces, mode)


def homotopy_chains(chain, x):
    """(U, V) with translate(T, x) - T = U - boundary(V).

    V is (up to orientation) the swept prism over T, U the prism over
    boundary(T); for 0-chains U = 0.
    """
    if chain.m == 0:
        u = Chain.zero(chain.n, 0, chain.mode)
    else:
        u = prism(chain.boundary(), x)
    v = -prism(chain, x)
    return u, v


@dataclass
class ThetaEstimate:
    value: float
    samples: int

    def __float__(self):
        return self.value


def theta_growth(chain, centers=40, dyadic_range=(-6, 3), seed=0, interior_samples=2048):
    """Sampled lower estimate of sup_{x,r} ||T||(B(x,r)) / r^m.

    Centers are drawn on the support of T; radii run over the dyadic range.
    """
    import numpy as np

    if chain.is_zero():
        raise ValueError("theta_growth of the zero chain")
    src = chain.to_simplicial()
    rng = np.random.default_rng(seed)
    cells = [(np.array([[float(x) for x in v] for v in c.vertices]), abs(float(a))) for c, a in src.cells.items()]
    pts = []
    for verts, _ in cells:
        pts.extend(verts)
        k = max(1, centers // len(cells))
        w = rng.dirichlet(np.ones(verts.shape[0]), size=k)
        pts.extend(w @ verts)
    best = 0.0
    count = 0
    radii = [2.0**k for k in range(dyadic_range[0], dyadic_range[1] + 1)]
    # fixed quasi-random barycentric samples for the in-ball measure estimate
    bary = {}
    for verts, _ in cells:
        key = verts.shape[0]
        if key not in bary:
            bary[key] = rng.dirichlet(np.ones(key), size=interior_samples)
    for x in pts:
        x = np.asarray(x, dtype=float)
        for r in radii:
            meas = 0.0
            for verts, a in cells:
                m = verts.shape[0] - 1
                if m == 0:
                    inside = np.linalg.norm(verts[0] - x) < r
                    meas += a * float(inside)
                elif m == 1:
                    meas += a * _segment_ball_length(verts[0], verts[1], x, r)
                else:
                    vol = _float_simplex_volume(verts)
                    samples = bary[verts.shape[0]] @ verts
                    frac = np.mean(np.linalg.norm(samples - x, axis=1) < r)
                    meas += a * vol * frac
            count += 1
            best = max(best, meas / r**chain.m)
    return ThetaEstimate(best, count)


def _segment_ball_length(p, q, x, r):
    import numpy as np

    d = q - p
    L = np.linalg.norm(d)
    if L == 0:
        return 0.0
    u = d / L
    # |p + t u - x| < r  for t in [0, L]
    w = p - x
    b = np.dot(u, w)
    c = np.dot(w, w) - r * r
    disc = b * b - c
    if disc <= 0:
        return 0.0
    s = math.sqrt(disc)
    t0, t1 = max(0.0, -b - s), min(L, -b + s)
    return max(0.0, t1 - t0)


def _float_simplex_volume(verts):
    import numpy as np

    e = verts[1:] - verts[0]
    g = e @ e.T
    det = np.linalg.det(g)
    return math.sqrt(max(det, 0.0)) / math.factorial(e.shape[0])


def dist2_point_simplex(p, vertices):
    """Exact squared distance from p to the convex hull of `vertices` (Fractions)."""
    if len(vertices) == 1:
        return sum((a - b) ** 2 for a, b in zip(p, vertices[0]))
    v0 = vertices[0]
    edges = [tuple(a - b for a, b in zip(v, v0)) for v in vertices[1:]]
    m = len(edges)
    g = [[sum(a * b for a, b in zip(edges[i], edges[j])) for j in range(m)] for i in range(m)]
    rhs = [sum(e * (a - b) for e, a, b in zip(edges[i], p, v0)) for i in range(m)]
    sol = _solve_fraction_system(g, rhs)
    if sol is not None and all(u >= 0 for u in sol) and sum(sol) <= 1:
        proj = list(v0)
        for u, e in zip(sol, edges):
            proj = [a + u * b for a, b in zip(proj, e)]
        return sum((a - b) ** 2 for a, b in zip(p, proj))
    best = None
    for i in range(len(vertices)):
        face = vertices[:i] + vertices[i + 1 :]
        d = dist2_point_simplex(p, face)
        best = d if best is None or d < best else best
    return best


def _solve_fraction_system(a, b):
    n = len(b)
    aug = [list(a[i]) + [b[i]] for i in range(n)]
    for c in range(n):
        piv = next((i for i in range(c, n) if aug[i][c] != 0), None)
        if piv is None:
            return None
        aug[c], aug[piv] = aug[piv], aug[c]
        pr = aug[c]
        for i in range(n):
            if i != c and aug[i][c] != 0:
                f = aug[i][c] / pr[c]
                aug[i] = [x - f * y for x, y in zip(aug[i], pr)]
    return [aug[i][-1] / aug[i][i] for i in range(n)]


def support_neighborhood(chain, R, r=0):
    """Membership predicate for the open R-neighborhood minus the closed r-one."""
    if not (0 <= r < R):
        raise ValueError("need 0 <= r < R")
    src = chain.to_simplicial()
    cells = [list(c.vertices) for c in src.cells]
    R2, r2 = Fraction(R) ** 2, Fraction(r) ** 2

    def member(x):
        if all(isinstance(v, (int, Fraction)) for v in x) and src.mode == "rational":
            p = tuple(Fraction(v) for v in x)
            d2 = min(dist2_point_simplex(p, verts) for verts in cells)
            return d2 < R2 and d2 > r2
        p = tuple(Fraction(v).limit_denominator(10**12) for v in x)
        verts_f = [[tuple(Fraction(c).limit_denominator(10**12) for c in v) for v in vs] for vs in cells]
        d2 = min(dist2_point_simplex(p, vs) for vs in verts_f)
        return d2 < R2 and d2 > r2

    return member


# ---------------------------------------------------------------------------
# JSON codec


def _num_to_json(x, mode):
    if mode == "rational":
        f = Fraction(x)
        return f"{f.numerator}/{f.denominator}"
    return float(x)


def _num_from_json(s, mode):
    if mode == "rational":
        if isinstance(s, str):
            return Fraction(s)
        return Fraction(s)
    return float(Fraction(s) if isinstance(s, str) else s)


def chain_to_json(chain):
    mode = "rational" if chain.mode == "rational" else "f64"
    vertex_index = {}
    vertices = []

    def vid(v):
        if v not in vertex_index:
            vertex_index[v] = len(vertices)
            vertices.append([_num_to_json(x, mode) for x in v])
        return vertex_index[v]

    cells = []
    for cell, coef in sorted(chain.cells.items(), key=lambda kv: repr(kv[0])):
        if isinstance(cell, Simplex):
            cells.append(
                {
                    "type": "simplex",
                    "verts": [vid(v) for v in cell.vertices],
                    "coef": _num_to_json(coef, mode),
                }
            )
        else:
            cells.append(
                {
                    "type": "cube",
                    "verts": {
                        "anchor": [_num_to_json(x, mode) for x in cell.anchor],
                        "axes": [a + 1 for a in cell.axes],
                        "eps": _num_to_json(cell.eps, "rational"),
                    },
                    "coef": _num_to_json(coef, mode),
                }
            )
    return {"n": chain.n, "m": chain.m, "scalar": mode, "vertices": vertices, "cells": cells}


def chain_from_json(doc):
    mode = "rational" if doc["scalar"] == "rational" else "f64"
    verts = [tuple(_num_from_json(x, mode) for x in v) for v in doc["vertices"]]
    data = {}
    for cd in doc["cells"]:
        coef = _num_from_json(cd["coef"], mode)
        if cd["type"] == "simplex":
            made = make_simplex([verts[i] for i in cd["verts"]], mode)
            if made is None:
                raise ValueError("degenerate simplex in chain JSON")
            cell, sign = made
            data[cell] = data.get(cell, 0) + sign * coef
        else:
            cube = cd["verts"]
            cell = CubicalCell(
                tuple(Fraction(x) if mode == "rational" else float(Fraction(x)) for x in cube["anchor"]),
                tuple(a - 1 for a in cube["axes"]),
                Fraction(cube["eps"]),
            )
            data[cell] = data.get(cell, 0) + coef
    return Chain(doc["n"], doc["m"], data, mode)


# ---------------------------------------------------------------------------
# quadrature / exact integration helpers


def _integrate_poly_over_simplex_measure(poly, simplex):
    """Integral of |.|-free scalar polynomial over a simplex against H^m.

    Returns (value, exact_flag); value is sqrt(Gram) * int_std p(x(u)) du.
    """
    m = simplex.m
    rational = isinstance(simplex.vertices[0][0], Fraction)
    if m == 0:
        val = poly(simplex.vertices[0])
        return Fraction(val), rational
    # float coordinates convert to Fractions exactly, so one exact path suffices
    v0 = [Fraction(x) for x in simplex.vertices[0]]
    edges = [[Fraction(x) for x in e] for e in simplex.edge_vectors()]
    exprs = affine_exprs(v0, edges, m)
    inner = integrate_over_std_simplex(poly.substitute(exprs))
    root, exact = sqrt_fraction(gram_det(edges))
    return inner * root, exact and rational


_GL8_NODES = None


def _gauss_legendre8():
    global _GL8_NODES
    if _GL8_NODES is None:
        import numpy as np

        x, w = np.polynomial.legendre.leggauss(8)
        _GL8_NODES = ((x + 1) / 2, w / 2)
    return _GL8_NODES


# degree-5 symmetric 7-point rule on the triangle (barycentric, weights sum to 1)
_TRI7 = [
    ((Fraction(1, 3), Fraction(1, 3), Fraction(1, 3)), 0.225),
    ((0.0597158717, 0.4701420641, 0.4701420641), 0.1323941527),
    ((0.4701420641, 0.0597158717, 0.4701420641), 0.1323941527),
    ((0.4701420641, 0.4701420641, 0.0597158717), 0.1323941527),
    ((0.7974269853, 0.1012865073, 0.1012865073), 0.1259391805),
    ((0.1012865073, 0.7974269853, 0.1012865073), 0.1259391805),
    ((0.1012865073, 0.1012865073, 0.7974269853), 0.1259391805),
]


def _adaptive_simplex_quadrature(f, vertices, tol, max_level=12):
    import numpy as np

    verts = np.array([[float(x) for x in v] for v in vertices])
    m = verts.shape[0] - 1
    if m == 0:
        return float(f(tuple(verts[0])))
    if m == 1:
        return _adaptive_segment(f, verts[0], verts[1], tol, max_level)
    if m == 2:
        return _adaptive_triangle(f, verts, tol, max_level)
    # higher degrees: barycentric lattice rule, refined once for an error check
    coarse = _lattice_simplex_rule(f, verts, 6)
    fine = _lattice_simplex_rule(f, verts, 12)
    if abs(fine - coarse) > max(tol, 1e-3) * max(1.0, abs(fine)):
        fine = _lattice_simplex_rule(f, verts, 24)
    return fine


def _lattice_simplex_rule(f, verts, k):
    """Riemann-type rule: average f over the interior barycentric lattice of order k."""
    from itertools import combinations_with_replacement

    import numpy as np

    m = verts.shape[0] - 1
    vol = _float_simplex_volume(verts)
    total = 0.0
    count = 0
    for combo in combinations_with_replacement(range(m + 1), k):
        bary = np.bincount(np.array(combo), minlength=m + 1).astype(float)
        bary = (bary + 1.0 / (m + 1)) / (k + 1)
        p = bary @ verts
        total += float(f(tuple(p)))
        count += 1
    return total / count * vol


def _segment_rule(f, a, b):
    nodes, weights = _gauss_legendre8()
    L = math.dist(tuple(a), tuple(b))
    total = 0.0
    for t, w in zip(nodes, weights):
        total += w * float(f(tuple(a + t * (b - a))))
    return total * L


def _adaptive_segment(f, a, b, tol, max_level):
    coarse = _segment_rule(f, a, b)
    stack = [(a, b, coarse, 0)]
    total = 0.0
    while stack:
        a, b, coarse, lvl = stack.pop()
        mid = (a + b) / 2
        left = _segment_rule(f, a, mid)
        right = _segment_rule(f, mid, b)
        if abs(left + right - coarse) <= tol * max(1.0, abs(left + right)) or lvl >= max_level:
            total += left + right
        else:
            stack.append((a, mid, left, lvl + 1))
            stack.append((mid, b, right, lvl + 1))
    return total


def _triangle_rule(f, verts):
    import numpy as np

    area = _float_simplex_volume(np.asarray(verts))
    total = 0.0
    for bary, w in _TRI7:
        p = sum(float(bi) * verts[i] for i, bi in enumerate(bary))
        total += w * float(f(tuple(p)))
    return total * area


def _adaptive_triangle(f, verts, tol, max_level):
    coarse = _triangle_rule(f, verts)
    stack = [(verts, coarse, 0)]
    total = 0.0
    while stack:
        v, coarse, lvl = stack.pop()
        mids = [(v[0] + v[1]) / 2, (v[1] + v[2]) / 2, (v[0] + v[2]) / 2]
        subs = [
            [v[0], mids[0], mids[2]],
            [mids[0], v[1], mids[1]],
            [mids[2], mids[1], v[2]],
            [mids[0], mids[1], mids[2]],
        ]
        import numpy as np

        subs = [np.array(s) for s in subs]
        fine = [_triangle_rule(f, s) for s in subs]
        if abs(sum(fine) - coarse) <= tol * max(1.0, abs(sum(fine))) or lvl >= max_level:
            total += sum(fine)
        else:
            for s, val in zip(subs, fine):
                stack.append((s, val, lvl + 1))
    return total


# ---------------------------------------------------------------------------
# overlap detection (stored-representation contract)


def _warn_if_overlapping(chain):
    if len(chain.cells) > OVERLAP_CHECK_MAX_CELLS or chain.m == 0:
        return
    if detect_overlaps(chain):
        warnings.warn(
            "chain has same-degree cells overlapping in positive measure; "
            "mass is computed from the stored representation",
            stacklevel=3,
        )


def detect_overlaps(chain):
    """Pairwise check for distinct cells overlapping in positive H^m measure."""
    src = chain.to_simplicial()
    cells = list(src.cells)
    for i in range(len(cells)):
        for j in range(i + 1, len(cells)):
            if _cells_overlap(cells[i], cells[j]):
                return True
    return False


def _cells_overlap(a, b):
    import numpy as np

    va = np.array([[float(x) for x in v] for v in a.vertices])
    vb = np.array([[float(x) for x in v] for v in b.vertices])
    m = va.shape[0] - 1
    # same affine hull?
    stacked = np.vstack([va[1:] - va[0], vb - va[0]])
    if float_rank(stacked) > m:
        return False
    if m == 1:
        d = va[1] - va[0]
        L2 = float(d @ d)
        ta = sorted([0.0, 1.0])
        tb = sorted([float((p - va[0]) @ d) / L2 for p in vb])
        lo, hi = max(ta[0], tb[0]), min(ta[1], tb[1])
        return hi - lo > 1e-12
    if m == 2:
        from shapely.geometry import Polygon

        e1 = va[1] - va[0]
        e1 = e1 / np.linalg.norm(e1)
        e2 = va[2] - va[0] - (va[2] - va[0]) @ e1 * e1
        e2 = e2 / np.linalg.norm(e2)

        def uv(pts):
            return [((p - va[0]) @ e1, (p - va[0]) @ e2) for p in pts]

        pa, pb = Polygon(uv(va)), Polygon(uv(vb))
        return pa.intersection(pb).area > 1e-12
    return False  # higher-degree overlap detection not supported
