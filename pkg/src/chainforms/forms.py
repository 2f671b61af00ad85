"""Differential m-forms with exact polynomial coefficients.

A PolyForm stores one rational-coefficient polynomial per strictly
increasing multi-index, so the exterior derivative, Stokes pairs, and
integration over polyhedral chains are all exact.  Cutoff products (for
compact support) are sampled forms: numeric evaluation and quadrature
only.
"""

from __future__ import annotations

import math
from fractions import Fraction
from itertools import combinations

from .chains import Chain, Simplex, _adaptive_simplex_quadrature
from .polynomial import Polynomial, affine_exprs, integrate_over_std_simplex


def multi_indices(m, n):
    """All strictly increasing maps {1..m} -> {1..n}, as 0-based tuples."""
    return list(combinations(range(n), m))


def insertion_sign(alpha, j):
    """Sign s with dx_j ^ dx^alpha = s * dx^beta, beta = sorted(alpha + (j,)).

    Returns (sign, beta); None if j already occurs in alpha.
    """
    if j in alpha:
        return None
    pos = sum(1 for a in alpha if a < j)
    beta = tuple(sorted(alpha + (j,)))
    return (1 if pos % 2 == 0 else -1), beta


class PolyForm:
    """m-form sum_alpha w(.,alpha) dx^alpha with polynomial coefficients."""

    def __init__(self, n, m, coeffs=None):
        self.n = n
        self.m = m
        self.coeffs = {}
        for alpha, poly in (coeffs or {}).items():
            alpha = tuple(alpha)
            assert len(alpha) == m and tuple(sorted(alpha)) == alpha
            if not isinstance(poly, Polynomial):
                poly = Polynomial.constant(n, poly)
            if not poly.is_zero():
                self.coeffs[alpha] = poly

    @classmethod
    def zero(cls, n, m):
        return cls(n, m)

    @classmethod
    def basis(cls, n, alpha, coef=1):
        """coef * dx^alpha (alpha 0-based increasing)."""
        return cls(n, len(alpha), {tuple(alpha): Polynomial.constant(n, coef)})

    def coefficient(self, alpha):
        return self.coeffs.get(tuple(alpha), Polynomial.zero(self.n))

    def __add__(self, other):
        assert (self.n, self.m) == (other.n, other.m)
        out = dict(self.coeffs)
        for a, p in other.coeffs.items():
            out[a] = out.get(a, Polynomial.zero(self.n)) + p
        return PolyForm(self.n, self.m, out)

    def __sub__(self, other):
        return self + other.scale(-1)

    def scale(self, c):
        return PolyForm(self.n, self.m, {a: p * Fraction(c) for a, p in self.coeffs.items()})

    __rmul__ = scale

    def is_zero(self):
        return not self.coeffs

    def __eq__(self, other):
        return (
            isinstance(other, PolyForm)
            and (self.n, self.m) == (other.n, other.m)
            and self.coeffs == other.coeffs
        )

    def covector_at(self, x):
        """The covector {alpha: w(x, alpha)} at the point x."""
        return {a: p(x) for a, p in self.coeffs.items()}

    def max_degree(self):
        return max((p.degree() for p in self.coeffs.values()), default=0)

    def __repr__(self):
        return f"PolyForm(n={self.n}, m={self.m}, indices={sorted(self.coeffs)})"


def exterior_derivative(form):
    """Classical d, exact on polynomial coefficients."""
    if form.m >= form.n:
        raise ValueError("no (m+1)-forms beyond the ambient dimension")
    out = {}
    for alpha, poly in form.coeffs.items():
        for j in range(form.n):
            ins = insertion_sign(alpha, j)
            if ins is None:
                continue
            sign, beta = ins
            dp = poly.diff(j)
            if dp.is_zero():
                continue
            cur = out.get(beta, Polynomial.zero(form.n))
            out[beta] = cur + dp * sign
    return PolyForm(form.n, form.m + 1, out)


def evaluate(form, x, frame):
    """Pairing <w(x), xi_1 ^ ... ^ xi_m> for a list of m vectors."""
    cov = form.covector_at(x) if isinstance(form, PolyForm) else form.covector_at(x)
    return pair_covector(cov, frame)


def pair_covector(cov, frame):
    """<nu, xi_1 ^ ... ^ xi_m> with nu given as {alpha: value}."""
    total = 0
    for alpha, val in cov.items():
        sub = [[v[a] for a in alpha] for v in frame]
        total = total + val * _minor_det(sub)
    return total


def _minor_det(rows):
    m = len(rows)
    if m == 0:
        return 1
    if m == 1:
        return rows[0][0]
    if m == 2:
        return rows[0][0] * rows[1][1] - rows[0][1] * rows[1][0]
    total = 0
    for j in range(m):
        minor = [r[:j] + r[j + 1 :] for r in rows[1:]]
        term = rows[0][j] * _minor_det(minor)
        total = total + (term if j % 2 == 0 else -term)
    return total


# ---------------------------------------------------------------------------
# integration over chains


def integrate_over_chain(form, chain):
    """Exact integral of a polynomial m-form over an m-chain.

    Pulls back through the affine simplex parameterization; the wedge of the
    edge vectors absorbs the area factor, so no square roots appear and the
    result is an exact Fraction in rational mode.
    """
    if isinstance(form, CutoffForm):
        return _integrate_cutoff_over_chain(form, chain)
    if form.m != chain.m:
        raise ValueError("form and chain degree mismatch")
    src = chain.to_simplicial()
    total = Fraction(0)
    for cell, coef in src.cells.items():
        total += Fraction(coef) * _integrate_form_over_simplex(form, cell)
    if chain.mode == "rational":
        return total
    return float(total)


def _integrate_form_over_simplex(form, simplex):
    m = form.m
    if m == 0:
        poly = form.coeffs.get((), Polynomial.zero(form.n))
        return Fraction(poly([Fraction(x) for x in simplex.vertices[0]]))
    v0 = [Fraction(x) for x in simplex.vertices[0]]
    edges = [[Fraction(x) for x in e] for e in simplex.edge_vectors()]
    wedge = {}
    for alpha in form.coeffs:
        sub = [[e[a] for a in alpha] for e in edges]
        wedge[alpha] = _minor_det(sub)
    exprs = affine_exprs(v0, edges, m)
    total = Fraction(0)
    for alpha, poly in form.coeffs.items():
        w = wedge[alpha]
        if w == 0:
            continue
        total += w * integrate_over_std_simplex(poly.substitute(exprs))
    return total


def _integrate_cutoff_over_chain(form, chain, tol=1e-10):
    import numpy as np

    if form.m != chain.m:
        raise ValueError("form and chain degree mismatch")
    src = chain.to_simplicial()
    total = 0.0
    for cell, coef in src.cells.items():
        if form.m == 0:
            total += float(coef) * form.evaluate_scalar(cell.vertices[0])
            continue
        verts = np.array([[float(x) for x in v] for v in cell.vertices])
        edges = verts[1:] - verts[0]
        tau = _unit_wedge(edges, form.n)
        if tau is None:
            continue

        def integrand(x, tau=tau):
            return form.pair_at(x, tau)

        total += float(coef) * _adaptive_simplex_quadrature(integrand, list(cell.vertices), tol)
    return total


def _unit_wedge(edges, n):
    """Wedge coefficients of the rows of `edges`, normalized; None if degenerate."""
    m = edges.shape[0]
    coeffs = {}
    norm2 = 0.0
    for alpha in combinations(range(n), m):
        sub = edges[:, alpha]
        import numpy as np

        d = float(np.linalg.det(sub))
        coeffs[alpha] = d
        norm2 += d * d
    if norm2 <= 0:
        return None
    s = math.sqrt(norm2)
    return {a: v / s for a, v in coeffs.items()}


# ---------------------------------------------------------------------------
# comass


def comass(cov, n=None, restarts=32, samples=200_000, seed=0):
    """Comass sup <nu, xi> over simple unit m-vectors.

    `cov` is {alpha: value}.  Closed forms for m in {0, 1, n-1, n}; otherwise
    projected ascent over orthonormal frames, cross-checked by sampling.
    Returns (value, confidence) with confidence "exact" or "ascent"/"LOW_CONFIDENCE".
    """
    if not cov:
        return 0.0, "exact"
    alphas = list(cov)
    m = len(alphas[0])
    if n is None:
        n = max((a for alpha in alphas for a in alpha), default=-1) + 1
    vals = [float(v) for v in cov.values()]
    if m == 0:
        return abs(vals[0]), "exact"
    if m == 1 or m == n - 1 or m == n:
        return math.sqrt(sum(v * v for v in vals)), "exact"
    # normalize so the ascent trajectory (and hence the result) is
    # exactly homogeneous under positive scaling of the covector
    scale = max(abs(v) for v in vals)
    unit = {a: float(v) / scale for a, v in cov.items()}
    ascent = scale * _comass_ascent(unit, n, m, restarts, seed)
    sampled = scale * _comass_sample(unit, n, m, samples, seed)
    if sampled > ascent + 1e-6:
        return max(ascent, sampled), "LOW_CONFIDENCE"
    return ascent, "ascent"


def _frame_value_grad(cov, q):
    """Value and Euclidean gradient of Q -> sum_alpha nu_alpha det(Q[alpha, :])."""
    import numpy as np

    n, m = q.shape
    val = 0.0
    grad = np.zeros_like(q)
    for alpha, nu in cov.items():
        nu = float(nu)
        sub = q[list(alpha), :]
        det = np.linalg.det(sub)
        val += nu * det
        # d det / d sub = det * inv(sub).T (generalized by cofactors when singular)
        if abs(det) > 1e-13:
            cof = det * np.linalg.inv(sub).T
        else:
            cof = _cofactor_matrix(sub)
        grad[list(alpha), :] += nu * cof
    return val, grad


def _cofactor_matrix(a):
    import numpy as np

    m = a.shape[0]
    cof = np.zeros_like(a)
    for i in range(m):
        for j in range(m):
            minor = np.delete(np.delete(a, i, axis=0), j, axis=1)
            cof[i, j] = (-1) ** (i + j) * (np.linalg.det(minor) if m > 1 else 1.0)
    return cof


def _orthonormalize(q):
    import numpy as np

    u, _ = np.linalg.qr(q)
    return u


def _comass_ascent(cov, n, m, restarts, seed):
    import numpy as np

    rng = np.random.default_rng(seed)
    best = 0.0
    for _ in range(restarts):
        q = _orthonormalize(rng.standard_normal((n, m)))
        step = 0.5
        val, grad = _frame_value_grad(cov, q)
        if val < 0:
            q = q.copy()
            q[:, 0] *= -1
            val, grad = _frame_value_grad(cov, q)
        for _ in range(400):
            if np.linalg.norm(grad) < 1e-10:
                break
            qn = _orthonormalize(q + step * grad)
            vn, gn = _frame_value_grad(cov, qn)
            if vn > val:
                q, val, grad = qn, vn, gn
            else:
                step *= 0.5
                if step < 1e-14:
                    break
        best = max(best, val)
    return best


def _comass_sample(cov, n, m, samples, seed):
    import numpy as np

    rng = np.random.default_rng(seed + 1)
    best = 0.0
    batch = 2000
    done = 0
    while done < samples:
        k = min(batch, samples - done)
        gs = rng.standard_normal((k, n, m))
        qs, _ = np.linalg.qr(gs)
        vals = np.zeros(k)
        for alpha, nu in cov.items():
            sub = qs[:, list(alpha), :]
            vals += float(nu) * np.linalg.det(sub)
        best = max(best, float(np.abs(vals).max()))
        done += k
    return best


def comass_field(form):
    """Callable x -> comass(form(x)); usable as an upper-norm field."""

    def field(x):
        if isinstance(form, CutoffForm):
            cov = form.covector_at(x)
        else:
            cov = {a: float(p(x)) for a, p in form.coeffs.items()}
        return comass(cov, form.n)[0]

    return field


# ---------------------------------------------------------------------------
# Lq and Sobolev norms


def lq_norm(form, q, domain, grid=32, tol=1e-6):
    """(int comass(w(x))^q dx)^(1/q) over a box; q == inf gives the grid max.

    domain: list of (lo, hi) per axis.  Midpoint tensor rule with one
    Richardson refinement; returns (value, error_estimate).
    """
    if isinstance(q, str):
        q = math.inf
    coarse = _lq_grid(form, q, domain, grid)
    fine = _lq_grid(form, q, domain, 2 * grid)
    if math.isinf(q):
        return fine, abs(fine - coarse)
    err = abs(fine - coarse)
    if err > tol * max(1.0, abs(fine)):
        finer = _lq_grid(form, q, domain, 4 * grid)
        err = abs(finer - fine)
        fine = finer
    return fine, err


def _lq_grid(form, q, domain, grid):
    import numpy as np

    axes = [np.linspace(lo, hi, grid, endpoint=False) + (hi - lo) / (2 * grid) for lo, hi in domain]
    mesh = np.meshgrid(*axes, indexing="ij")
    pts = np.stack([m.ravel() for m in mesh], axis=-1)
    field = comass_field(form)
    vals = np.array([field(tuple(p)) for p in pts])
    if math.isinf(q):
        return float(vals.max(initial=0.0))
    cellvol = 1.0
    for lo, hi in domain:
        cellvol *= (hi - lo) / grid
    return float((vals**q).sum() * cellvol) ** (1.0 / q)


def sobolev_norm(form, q, p, domain, grid=32):
    """max(||w||_q, ||dw||_p) over the box, with the two quadrature errors."""
    vq, eq = lq_norm(form, q, domain, grid)
    if isinstance(form, CutoffForm):
        dform = form.derivative()
    else:
        dform = exterior_derivative(form)
    vp, ep = lq_norm(dform, p, domain, grid)
    return max(vq, vp), max(eq, ep)


# ---------------------------------------------------------------------------
# cutoff forms


class CutoffForm:
    """w * phi_k with phi_k a radial C^1 bump: 1 on B(0,k), 0 outside B(0,2k).

    The profile is a cubic smoothstep in |x|, so |grad phi_k| <= 2/k.
    Supports numeric evaluation and quadrature; exact integration is not
    available.
    """

    def __init__(self, base, k, _deriv_part=None):
        self.base = base
        self.k = float(k)
        self.n = base.n
        self.m = base.m
        self._deriv_part = _deriv_part

    def _profile(self, rr):
        k = self.k
        if rr <= k:
            return 1.0
        if rr >= 2 * k:
            return 0.0
        u = (rr - k) / k
        return 1.0 - (3 * u * u - 2 * u * u * u)

    def _profile_grad(self, x):
        k = self.k
        rr = math.sqrt(sum(float(v) ** 2 for v in x))
        if rr <= k or rr >= 2 * k or rr == 0:
            return [0.0] * self.n
        u = (rr - k) / k
        ds = -(6 * u - 6 * u * u) / k
        return [ds * float(v) / rr for v in x]

    def covector_at(self, x):
        rr = math.sqrt(sum(float(v) ** 2 for v in x))
        s = self._profile(rr)
        return {a: s * float(p(x)) for a, p in self.base.coeffs.items()}

    def pair_at(self, x, tau):
        cov = self.covector_at(x)
        return sum(cov.get(a, 0.0) * t for a, t in tau.items())

    def evaluate_scalar(self, x):
        cov = self.covector_at(x)
        return cov.get((), 0.0)

    def derivative(self):
        """d(phi w) = phi dw + dphi ^ w, as a sampled (m+1)-form."""
        return _CutoffDerivative(self)

    def max_degree(self):
        return self.base.max_degree()


class _CutoffDerivative:
    """Sampled form d(phi_k w); evaluation only."""

    def __init__(self, cut):
        self.cut = cut
        self.n = cut.n
        self.m = cut.m + 1
        self.dbase = exterior_derivative(cut.base)

    def covector_at(self, x):
        cut = self.cut
        rr = math.sqrt(sum(float(v) ** 2 for v in x))
        s = cut._profile(rr)
        out = {a: s * float(p(x)) for a, p in self.dbase.coeffs.items()}
        grad = cut._profile_grad(x)
        if any(g != 0.0 for g in grad):
            for alpha, p in cut.base.coeffs.items():
                val = float(p(x))
                for j, g in enumerate(grad):
                    if g == 0.0:
                        continue
                    ins = insertion_sign(alpha, j)
                    if ins is None:
                        continue
                    sign, beta = ins
                    out[beta] = out.get(beta, 0.0) + sign * g * val
        return out

    def pair_at(self, x, tau):
        cov = self.covector_at(x)
        return sum(cov.get(a, 0.0) * t for a, t in tau.items())


def apply_cutoff(form, k):
    """Compactly supported product form * phi_k."""
    if k <= 0:
        raise ValueError("cutoff radius must be positive")
    return CutoffForm(form, k)


# ---------------------------------------------------------------------------
# JSON codec


def form_to_json(form):
    base = form.base if isinstance(form, CutoffForm) else form
    coeffs = {}
    for alpha, poly in sorted(base.coeffs.items()):
        key = ",".join(str(a + 1) for a in alpha)
        coeffs[key] = [
            {"exp": list(e), "coef": f"{c.numerator}/{c.denominator}"}
            for e, c in sorted(poly.terms.items())
        ]
    cutoff = None
    if isinstance(form, CutoffForm):
        f = Fraction(form.k).limit_denominator(10**9)
        cutoff = {"k": f"{f.numerator}/{f.denominator}"}
    return {"n": base.n, "m": base.m, "coeffs": coeffs, "cutoff": cutoff}


def form_from_json(doc):
    n, m = doc["n"], doc["m"]
    coeffs = {}
    for key, terms in doc["coeffs"].items():
        alpha = tuple(int(a) - 1 for a in key.split(",")) if key else ()
        poly = Polynomial(n, {tuple(t["exp"]): Fraction(t["coef"]) for t in terms})
        coeffs[alpha] = poly
    form = PolyForm(n, m, coeffs)
    if doc.get("cutoff"):
        form = apply_cutoff(form, float(Fraction(doc["cutoff"]["k"])))
    return form
