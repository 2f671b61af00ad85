"""Constructive deformation of a polyhedral chain onto the eps-grid.

Returns T = P + R + dS with P cubical.  The pipeline:

1. subdivide simplices to diameter <= eps/4 and cut along all grid
   hyperplanes, so every piece lies in a single closed grid cube;
2. for k = n down to m+1, per k-cube: pick a rational center, partition the
   cube's pieces into facet cones, and project each piece radially onto the
   cube boundary.  The bookkeeping uses the cone operator K_c with the formal
   identity  d[c, s] = s - [c, ds],  so the invariant T = W + R + dS is
   maintained exactly (as formal sums) through every projection;
3. on the m-skeleton, read off one rational multiplicity per grid m-face to
   form P; any non-uniform leftovers go to R.

Only step 1 changes the stored representation of the chain (a subdivision is
equal to the original as a polyhedral chain but not as a formal sum); that
equality is checked by exact integration of random polynomial forms.
"""

from __future__ import annotations

import math
import random
from dataclasses import dataclass, field
from fractions import Fraction

from .chains import Chain, CubicalCell, Simplex, dist2_point_simplex, exact_rank
from .forms import PolyForm, exterior_derivative, integrate_over_chain
from .polynomial import Polynomial


class DeformationError(RuntimeError):
    pass


@dataclass
class DeformationResult:
    p: Chain
    r: Chain
    s: Chain
    eps: Fraction
    rho_r: float
    rho_s: float
    centers: list = field(default_factory=list)

    def chains(self):
        return self.p, self.r, self.s


# ---------------------------------------------------------------------------
# step 1: subdivision and grid cutting


def _diam2(verts):
    best = Fraction(0)
    for i in range(len(verts)):
        for j in range(i + 1, len(verts)):
            d = sum((a - b) ** 2 for a, b in zip(verts[i], verts[j]))
            best = max(best, d)
    return best


def _bisect_to_diameter(verts, coef, limit2, out):
    if _diam2(verts) <= limit2:
        out.append((verts, coef))
        return
    # split the longest edge at its midpoint; orientation is preserved
    besti, bestj, best = 0, 1, Fraction(-1)
    for i in range(len(verts)):
        for j in range(i + 1, len(verts)):
            d = sum((a - b) ** 2 for a, b in zip(verts[i], verts[j]))
            if d > best:
                besti, bestj, best = i, j, d
    mid = tuple((a + b) / 2 for a, b in zip(verts[besti], verts[bestj]))
    va = list(verts)
    va[bestj] = mid
    vb = list(verts)
    vb[besti] = mid
    _bisect_to_diameter(va, coef, limit2, out)
    _bisect_to_diameter(vb, coef, limit2, out)


def _clip_piece(verts, func, side):
    """Intersect an oriented m-simplex (m <= 2) with {x: side*func(x) >= 0}.

    func is affine with exact rational values; returns a list of oriented
    vertex tuples covering the intersection.
    """
    g = [side * func(v) for v in verts]
    m = len(verts) - 1
    if all(v >= 0 for v in g):
        return [tuple(verts)]
    if all(v <= 0 for v in g):
        return []
    if m == 1:
        (a, b), (ga, gb) = verts, g
        t = ga / (ga - gb)
        cut = tuple(x + t * (y - x) for x, y in zip(a, b))
        if ga > 0:
            return [(a, cut)]
        return [(cut, b)]
    if m == 2:
        # Sutherland-Hodgman keeps the cyclic order, hence the orientation
        poly = []
        for i in range(3):
            a, b = verts[i], verts[(i + 1) % 3]
            ga, gb = g[i], g[(i + 1) % 3]
            if ga >= 0:
                poly.append(a)
            if (ga > 0 > gb) or (gb > 0 > ga):
                t = ga / (ga - gb)
                poly.append(tuple(x + t * (y - x) for x, y in zip(a, b)))
        poly = [p for i, p in enumerate(poly) if p != poly[i - 1]]
        if len(poly) < 3:
            return []
        return [(poly[0], poly[i], poly[i + 1]) for i in range(1, len(poly) - 1)]
    raise NotImplementedError("clipping supports pieces of dimension <= 2")


def _cut_by_grid(pieces, eps, n):
    """Split pieces along every grid hyperplane they cross."""
    out = []
    queue = list(pieces)
    while queue:
        verts, coef = queue.pop()
        split = None
        for d in range(n):
            lo = min(v[d] for v in verts)
            hi = max(v[d] for v in verts)
            k = (lo / eps).__floor__() + 1
            plane = k * eps
            if lo < plane < hi:
                split = (d, plane)
                break
        if split is None:
            out.append((verts, coef))
            continue
        d, plane = split
        for side in (1, -1):
            for piece in _clip_piece(verts, lambda v: v[d] - plane, side):
                if not _degenerate(piece):
                    queue.append((piece, coef))
    return out


def _degenerate(verts):
    m = len(verts) - 1
    if m == 0:
        return False
    edges = [[a - b for a, b in zip(v, verts[0])] for v in verts[1:]]
    return exact_rank(edges) < m


# ---------------------------------------------------------------------------
# carriers


def _carrier(verts, eps):
    """(anchor, axes) of the minimal grid face containing the piece."""
    n = len(verts[0])
    anchor = []
    axes = []
    for d in range(n):
        vals = {v[d] for v in verts}
        if len(vals) == 1:
            val = next(iter(vals))
            if val % eps == 0:
                anchor.append(val)
                continue
        lo = min(vals)
        k = (lo / eps).__floor__()
        if lo == k * eps and max(vals) == lo:
            anchor.append(lo)
            continue
        # pinned at the upper boundary of the previous cell
        if max(vals) == k * eps:
            anchor.append(k * eps)
            continue
        anchor.append(k * eps)
        axes.append(d)
    return tuple(anchor), tuple(axes)


# ---------------------------------------------------------------------------
# cone bookkeeping


def _cone_chain(chain, c):
    """K_c applied to a simplicial chain: each cell becomes [c, cell]."""
    pieces = []
    for cell, coef in chain.cells.items():
        pieces.append(([tuple(c)] + list(cell.vertices), coef))
    if not pieces:
        return Chain.zero(chain.n, chain.m + 1, chain.mode)
    return Chain.from_simplices(chain.n, pieces, chain.mode)


def _cone_pieces(pieces, c, n, m):
    raw = [([tuple(c)] + list(v), coef) for v, coef in pieces]
    if not raw:
        return Chain.zero(n, m + 1)
    return Chain.from_simplices(n, raw, "rational")


def _pieces_chain(pieces, n, m):
    if not pieces:
        return Chain.zero(n, m)
    return Chain.from_simplices(n, [(list(v), c) for v, c in pieces], "rational")


# ---------------------------------------------------------------------------
# projection at one cube


def _grid_key(anchor, eps):
    return tuple(int(a / eps) for a in anchor)


def _select_center(anchor, axes, eps, pieces, seed, attempts=64):
    rng = random.Random((seed, _grid_key(anchor, eps), axes, 0xC3).__hash__())
    candidates = []
    fverts = [[tuple(map(float, v)) for v in verts] for verts, _ in pieces]
    for _ in range(attempts):
        c = list(anchor)
        for d in axes:
            c[d] = anchor[d] + eps * Fraction(rng.randrange(65, 193), 257)
        c = tuple(c)
        fc = tuple(map(float, c))
        score = min(
            (
                sum((a - b) ** 2 for a, b in zip(fc, v))
                for verts in fverts
                for v in verts
            ),
            default=1.0,
        )
        candidates.append((score, c))
    candidates.sort(key=lambda sc: -sc[0])
    for _, c in candidates:
        ok = True
        for verts, _ in pieces:
            if dist2_point_simplex(c, list(verts)) == 0:
                ok = False
                break
            rows = [[a - b for a, b in zip(v, verts[0])] for v in verts[1:]]
            rows.append([a - b for a, b in zip(c, verts[0])])
            if exact_rank(rows) < len(rows):
                ok = False  # center in the affine hull of a piece
                break
        if ok:
            return c
    raise DeformationError(
        f"no admissible projection center in cube anchor={anchor} axes={axes}"
    )


def _facet_functionals(anchor, axes, eps, c):
    """[(facet id, b, u) ...] with u(x) = (x_j - c_j)/(b_j - c_j)."""
    out = []
    for j in axes:
        for b in (anchor[j], anchor[j] + eps):
            denom = b - c[j]
            out.append(((j, b), lambda v, j=j, d=denom, cj=c[j]: (v[j] - cj) / d))
    return out


def _project_cube(pieces, anchor, axes, eps, c):
    """Radially project pieces from c onto the cube boundary.

    Returns (projected pieces, D pieces) with D = projected - original.
    """
    facets = _facet_functionals(anchor, axes, eps, c)
    projected = []
    d_pieces = []
    for verts, coef in pieces:
        for fi, (fid, uf) in enumerate(facets):
            sub = [tuple(verts)]
            for gi, (gid, ug) in enumerate(facets):
                if gi == fi:
                    continue
                nxt = []
                for piece in sub:
                    nxt.extend(_clip_piece(piece, lambda v, a=uf, b=ug: a(v) - b(v), 1))
                sub = nxt
            for piece in sub:
                if _degenerate(piece):
                    continue
                # keep exactly one copy of pieces sitting on cone boundaries
                cent = tuple(sum(col) / len(piece) for col in zip(*piece))
                vals = [ug(cent) for _, ug in facets]
                mx = max(vals)
                if vals.index(mx) != fi:
                    continue
                j, b = fid
                img = []
                for v in piece:
                    t = (b - c[j]) / (v[j] - c[j])
                    img.append(tuple(cv + t * (vv - cv) for cv, vv in zip(c, v)))
                if _degenerate(img):
                    # flat image: still account for the moved piece in D
                    d_pieces.append((piece, -coef))
                    continue
                projected.append((tuple(img), coef))
                d_pieces.append((tuple(img), coef))
                d_pieces.append((piece, -coef))
    return projected, d_pieces


# ---------------------------------------------------------------------------
# skeleton extraction


def _restricted_det(verts, axes):
    m = len(verts) - 1
    rows = [[verts[i + 1][a] - verts[0][a] for a in axes] for i in range(m)]
    return _det_fraction(rows)


def _det_fraction(rows):
    m = len(rows)
    if m == 0:
        return Fraction(1)
    if m == 1:
        return rows[0][0]
    if m == 2:
        return rows[0][0] * rows[1][1] - rows[0][1] * rows[1][0]
    total = Fraction(0)
    for j in range(m):
        minor = [r[:j] + r[j + 1 :] for r in rows[1:]]
        t = rows[0][j] * _det_fraction(minor)
        total += t if j % 2 == 0 else -t
    return total


def _point_in_piece(x, verts, axes):
    """Exact membership of x in the piece, both living in an axes-plane."""
    m = len(verts) - 1
    if m == 0:
        return all(a == b for a, b in zip(x, verts[0]))
    rows = [[verts[i + 1][a] - verts[0][a] for i in range(m)] for a in axes]
    rhs = [x[a] - verts[0][a] for a in axes]
    # solve rows * lam = rhs (least squares is exact here: square after rank)
    aug = [rows[i] + [rhs[i]] for i in range(len(axes))]
    piv_rows = []
    used = []
    for col in range(m):
        p = next(
            (i for i in range(len(aug)) if i not in used and aug[i][col] != 0), None
        )
        if p is None:
            return False
        used.append(p)
        piv_rows.append(p)
        pr = aug[p]
        for i in range(len(aug)):
            if i != p and aug[i][col] != 0:
                f = aug[i][col] / pr[col]
                aug[i] = [a - f * b for a, b in zip(aug[i], pr)]
    lam = []
    for col, p in enumerate(piv_rows):
        lam.append(aug[p][-1] / aug[p][col])
    for i in range(len(aug)):
        if i not in used and aug[i][-1] != 0:
            return False
    return all(l >= 0 for l in lam) and sum(lam) <= 1


def _extract_skeleton(pieces, eps, m, n, seed):
    """(P cubical chain, leftover pieces for R)."""
    by_face = {}
    for verts, coef in pieces:
        anchor, axes = _carrier(verts, eps)
        if len(axes) != m:
            # degenerate leftovers living in lower faces go straight to R
            by_face.setdefault((anchor, axes, False), []).append((verts, coef))
            continue
        by_face.setdefault((anchor, axes, True), []).append((verts, coef))
    p_cells = {}
    leftovers = []
    for key, group in sorted(
        by_face.items(), key=lambda kv: (kv[0][1], _grid_key(kv[0][0], eps), kv[0][2])
    ):
        anchor, axes, proper = key
        if not proper:
            leftovers.extend(group)
            continue
        rng = random.Random((seed, _grid_key(anchor, eps), axes, 0x5E).__hash__())
        signed = Fraction(0)
        for verts, coef in group:
            signed += coef * _restricted_det(verts, axes) / math.factorial(m)
        theta = signed / eps**m
        # certify constant multiplicity by exact sampling in the open face
        uniform = True
        for _ in range(12):
            x = list(anchor)
            for a in axes:
                x[a] = anchor[a] + eps * Fraction(rng.randrange(1, 729), 729)
            x = tuple(x)
            mult = Fraction(0)
            for verts, coef in group:
                if _point_in_piece(x, verts, axes):
                    det = _restricted_det(verts, axes)
                    mult += coef * (1 if det > 0 else -1 if det < 0 else 0)
            if mult != theta:
                uniform = False
                break
        cell = CubicalCell(anchor, axes, eps)
        if theta != 0:
            p_cells[cell] = p_cells.get(cell, Fraction(0)) + theta
        if not uniform:
            leftovers.extend(group)
            if theta != 0:
                # subtract the extracted cubical part from the leftover side
                for tri, sgn in cell.triangulate():
                    leftovers.append((tuple(tri), -theta * sgn))
    p = Chain(n, m, p_cells, "rational")
    return p, leftovers


# ---------------------------------------------------------------------------
# driver


def deform(chain, eps, seed=0):
    """Deform a simplicial rational chain onto the eps-grid: T = P + R + dS."""
    eps = Fraction(eps)
    if chain.mode != "rational":
        raise ValueError("deformation requires rational mode")
    if chain.m > chain.n - 1:
        raise ValueError("degree must be at most n - 1")
    n, m = chain.n, chain.m
    if all(isinstance(c, CubicalCell) and c.eps == eps for c in chain.cells):
        zero_s = Chain.zero(n, m + 1)
        return DeformationResult(chain, Chain.zero(n, m), zero_s, eps, 0.0, 0.0, [])
    src = chain.to_simplicial()
    pieces = []
    limit2 = (eps / 4) ** 2
    for cell, coef in src.cells.items():
        _bisect_to_diameter(list(cell.vertices), Fraction(coef), limit2, pieces)
    pieces = _cut_by_grid(pieces, eps, n)
    s_acc = Chain.zero(n, m + 1)
    r_acc = Chain.zero(n, m)
    centers = []
    for k in range(n, m, -1):
        by_cube = {}
        rest = []
        for verts, coef in pieces:
            anchor, axes = _carrier(verts, eps)
            if len(axes) == k:
                by_cube.setdefault((anchor, axes), []).append((verts, coef))
            else:
                rest.append((verts, coef))
        new_pieces = list(rest)
        for (anchor, axes), group in sorted(
            by_cube.items(), key=lambda kv: (kv[0][1], _grid_key(kv[0][0], eps))
        ):
            c = _select_center(anchor, axes, eps, group, seed)
            centers.append({"level": k, "anchor": anchor, "axes": axes, "center": c})
            projected, d_pieces = _project_cube(group, anchor, axes, eps, c)
            d_chain = _pieces_chain(d_pieces, n, m)
            s_acc = s_acc - _cone_chain(d_chain, c)
            if m >= 1:
                r_acc = r_acc - _cone_chain(d_chain.boundary(), c)
            else:
                total = sum(d_chain.cells.values(), Fraction(0))
                if total != 0:
                    r_acc = r_acc - Chain.point(c, total)
            new_pieces.extend(projected)
        pieces = new_pieces
    p, leftovers = _extract_skeleton(pieces, eps, m, n, seed)
    r_acc = r_acc + _pieces_chain(leftovers, n, m)
    mass_t = _mass_mid(chain)
    bt = chain.boundary() if m >= 1 else None
    mass_bt = _mass_mid(bt) if bt is not None and not bt.is_zero() else 0.0
    mass_r = _mass_mid(r_acc)
    mass_s = _mass_mid(s_acc)
    rho_r = mass_r / (float(eps) * mass_bt) if mass_bt > 0 else (0.0 if mass_r == 0 else math.inf)
    rho_s = mass_s / (float(eps) * mass_t) if mass_t > 0 else 0.0
    return DeformationResult(p, r_acc, s_acc, eps, rho_r, rho_s, centers)


def _mass_mid(chain):
    if chain is None or chain.is_zero():
        return 0.0
    lo, hi = chain.mass_interval()
    return float((lo + hi) / 2)


# ---------------------------------------------------------------------------
# verification and constant tracking


def random_polyform(n, m, degree, rng):
    from .forms import multi_indices

    coeffs = {}
    for alpha in multi_indices(m, n):
        terms = {}
        for _ in range(3):
            exp = [0] * n
            for _ in range(rng.randrange(0, degree + 1)):
                exp[rng.randrange(n)] += 1
            terms[tuple(exp)] = Fraction(rng.randrange(-4, 5))
        coeffs[alpha] = Polynomial(n, terms)
    return PolyForm(n, m, coeffs)


def identity_residuals(chain, result, trials=6, degree=2, seed=0):
    """Exact residuals int_T w - int_P w - int_R w - int_S dw over random w.

    All residuals are Fractions; every one is 0 when T = P + R + dS holds as
    polyhedral chains.
    """
    rng = random.Random(seed)
    out = []
    for _ in range(trials):
        w = random_polyform(chain.n, chain.m, degree, rng)
        lhs = integrate_over_chain(w, chain)
        rhs = integrate_over_chain(w, result.p) + integrate_over_chain(w, result.r)
        if not result.s.is_zero():
            rhs += integrate_over_chain(exterior_derivative(w), result.s)
        out.append(lhs - rhs)
    return out


def empirical_constants(corpus, eps_list, seed=0):
    """Run deform over a corpus and aggregate the mass ratios per (n, m)."""
    rows = []
    for i, chain in enumerate(corpus):
        for eps in eps_list:
            res = deform(chain, eps, seed=seed + i)
            rows.append(
                {
                    "n": chain.n,
                    "m": chain.m,
                    "eps": float(Fraction(eps)),
                    "rho_r": res.rho_r,
                    "rho_s": res.rho_s,
                }
            )
    summary = {}
    for row in rows:
        key = (row["n"], row["m"])
        bucket = summary.setdefault(key, {"rho_r": [], "rho_s": []})
        if math.isfinite(row["rho_r"]):
            bucket["rho_r"].append(row["rho_r"])
        bucket["rho_s"].append(row["rho_s"])
    table = {}
    for key, bucket in summary.items():
        table[key] = {
            "max_rho_r": max(bucket["rho_r"], default=0.0),
            "max_rho_s": max(bucket["rho_s"], default=0.0),
            "median_rho_s": sorted(bucket["rho_s"])[len(bucket["rho_s"]) // 2]
            if bucket["rho_s"]
            else 0.0,
        }
    return {"rows": rows, "summary": table}
