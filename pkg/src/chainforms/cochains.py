"""Sobolev cochains: form-induced functionals on chains, coboundary,
ball-averaging, certificates, and pointwise form reconstruction.

Form-induced cochains with polynomial coefficients admit an exact averaging
route: X(translate(T, x)) is a polynomial in the shift x, and its average over
a ball has a closed rational form.  Everything else falls back to seeded
quasi-Monte-Carlo.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from .chains import Chain, homotopy_chains, make_simplex, prism, theta_growth
from .forms import CutoffForm, PolyForm, exterior_derivative, integrate_over_chain
from .gridfield import GridField, maximal_function, riesz_potential  # noqa: F401
from .polynomial import Polynomial, integrate_over_std_simplex


class Cochain:
    """Functional on m-chains; X(0) = 0; +inf propagates through sums."""

    def __init__(self, n, m, eval_fn, provenance="composite", form=None):
        self.n = n
        self.m = m
        self._eval = eval_fn
        self.provenance = provenance
        self.form = form  # PolyForm when the cochain is exactly form-induced

    def __call__(self, chain):
        if chain.m != self.m or chain.n != self.n:
            raise ValueError("cochain degree mismatch")
        if chain.is_zero():
            return Fraction(0) if chain.mode == "rational" else 0.0
        return self._eval(chain)

    def __repr__(self):
        return f"Cochain(n={self.n}, m={self.m}, provenance={self.provenance!r})"


def form_cochain(form):
    """X^w(T) = integral of w over T; exact for polynomial coefficients."""
    poly = form if isinstance(form, PolyForm) else None
    return Cochain(
        form.n,
        form.m,
        lambda t: integrate_over_chain(form, t),
        provenance="form-induced",
        form=poly,
    )


def coboundary(cochain):
    """dX(S) = X(boundary S); stays exactly form-induced via Stokes."""
    if cochain.m >= cochain.n:
        raise ValueError("coboundary beyond the ambient degree")
    dform = exterior_derivative(cochain.form) if cochain.form is not None else None
    return Cochain(
        cochain.n,
        cochain.m + 1,
        lambda s: cochain(s.boundary()),
        provenance="coboundary",
        form=dform,
    )


# ---------------------------------------------------------------------------
# exact averaging machinery


def translate_value_polynomial(form, chain):
    """The polynomial x -> integral of w over translate(T, x), exact.

    Substitutes the shifted affine parameterization into each coefficient and
    integrates out the simplex variables monomial by monomial.
    """
    src = chain.to_simplicial()
    n, m = form.n, form.m
    total = Polynomial.zero(n)
    for cell, coef in src.cells.items():
        v0 = [Fraction(v) for v in cell.vertices[0]]
        edges = [[Fraction(x) for x in e] for e in cell.edge_vectors()] if m else []
        wedge = {}
        for alpha in form.coeffs:
            sub = [[edges[i][a] for a in alpha] for i in range(m)]
            wedge[alpha] = _small_det(sub)
        # coordinates as polynomials in (u_1..u_m, x_1..x_n)
        exprs = []
        for i in range(n):
            terms = {}
            e0 = [0] * (m + n)
            terms[tuple(e0)] = v0[i]
            for j in range(m):
                e = [0] * (m + n)
                e[j] = 1
                terms[tuple(e)] = terms.get(tuple(e), Fraction(0)) + Fraction(edges[j][i])
            ex = [0] * (m + n)
            ex[m + i] = 1
            terms[tuple(ex)] = terms.get(tuple(ex), Fraction(0)) + 1
            exprs.append(Polynomial(m + n, {k: v for k, v in terms.items() if v != 0}))
        for alpha, poly in form.coeffs.items():
            w = wedge.get(alpha, Fraction(1) if m == 0 else None)
            if m == 0:
                w = Fraction(1)
            if w == 0:
                continue
            mixed = poly.substitute(exprs)
            reduced = {}
            for exp, c in mixed.terms.items():
                u_exp, x_exp = exp[:m], exp[m:]
                num = 1
                for k in u_exp:
                    num *= math.factorial(k)
                weight = Fraction(num, math.factorial(m + sum(u_exp)))
                reduced[x_exp] = reduced.get(x_exp, Fraction(0)) + c * weight
            total = total + Polynomial(n, reduced) * (Fraction(coef) * w)
    return total


def _small_det(rows):
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
        term = rows[0][j] * _small_det(minor)
        total += term if j % 2 == 0 else -term
    return total


def _double_factorial_odd(k):
    # (k)!! for odd k >= -1
    out = 1
    while k > 1:
        out *= k
        k -= 2
    return out


def ball_average_polynomial(poly, r, n):
    """Exact mean of a polynomial over the ball B(0, r) in R^n.

    Odd monomials vanish; even ones use the classical moment ratio
    avg x^b = r^{|b|} prod (b_i-1)!! 2^{-b_i/2} / prod_{j<=|b|/2} (n/2 + j).
    """
    r = Fraction(r)
    total = Fraction(0)
    for exp, c in poly.terms.items():
        if any(e % 2 for e in exp):
            continue
        deg = sum(exp)
        num = Fraction(1)
        for e in exp:
            num *= Fraction(_double_factorial_odd(e - 1), 2 ** (e // 2))
        den = Fraction(1)
        for j in range(1, deg // 2 + 1):
            den *= Fraction(n, 2) + j
        total += c * num / den * r**deg
    return total


# ---------------------------------------------------------------------------
# QMC averaging


def _ball_qmc_points(n, r, samples, seed, replicate):
    from scipy.stats import norm, qmc

    sob = qmc.Sobol(d=n + 1, scramble=True, seed=seed * 1000 + replicate)
    u = sob.random(samples)
    z = norm.ppf(np.clip(u[:, :n], 1e-12, 1 - 1e-12))
    norms = np.linalg.norm(z, axis=1)
    norms[norms == 0] = 1.0
    radii = float(r) * np.clip(u[:, n], 1e-12, 1.0) ** (1.0 / n)
    return z / norms[:, None] * radii[:, None]


class AveragedCochain(Cochain):
    """X_r(T) = mean of X(translate(T, x)) over the ball B(0, r)."""

    def __init__(self, base, r, samples=512, replicates=8, seed=0, method="auto"):
        self.base = base
        self.r = r
        self.samples = samples
        self.replicates = replicates
        self.seed = seed
        if method == "auto":
            method = "exact" if base.form is not None else "qmc"
        if method == "exact" and base.form is None:
            raise ValueError("exact averaging needs a polynomial form-induced cochain")
        self.method = method
        super().__init__(base.n, base.m, self._evaluate, provenance="averaged")

    def _evaluate(self, chain):
        return self.evaluate_with_error(chain)[0]

    def evaluate_with_error(self, chain):
        """(value, standard_error); error is 0 for the exact route."""
        if self.method == "exact" and chain.mode == "rational":
            q = translate_value_polynomial(self.base.form, chain)
            return ball_average_polynomial(q, self.r, self.n), Fraction(0)
        means = []
        for rep in range(self.replicates):
            pts = _ball_qmc_points(self.n, self.r, self.samples, self.seed, rep)
            vals = []
            for x in pts:
                v = self.base(chain.translate([float(c) for c in x]))
                if v == math.inf or v == -math.inf:
                    return math.inf, math.inf
                vals.append(float(v))
            means.append(float(np.mean(vals)))
        value = float(np.mean(means))
        se = float(np.std(means, ddof=1) / math.sqrt(len(means))) if len(means) > 1 else 0.0
        return value, se


def average(cochain, r, samples=512, replicates=8, seed=0, method="auto"):
    if r <= 0:
        raise ValueError("averaging radius must be positive")
    return AveragedCochain(cochain, r, samples, replicates, seed, method)


# ---------------------------------------------------------------------------
# certificates


@dataclass
class UpperBoundCertificate:
    role: str
    slack: float
    valid: bool
    family_size: int
    counterexample: object = None
    tolerance: float = 1e-10


def _field_callable(f):
    if isinstance(f, GridField):
        return f.interp
    if isinstance(f, Polynomial):
        return f
    return f


def check_certificate(cochain, candidate, role, family, tolerance=1e-10, quad_tol=1e-8):
    """Evaluate |X(.)| <= int field d||.|| over a finite chain family.

    role "upper-norm": members are m-chains, tested directly.
    role "upper-gradient": members are (m+1)-chains S, tested on X(boundary S).
    """
    if role not in ("upper-norm", "upper-gradient"):
        raise ValueError("role must be upper-norm or upper-gradient")
    f = _field_callable(candidate)
    worst = math.inf
    witness = None
    for member in family:
        if role == "upper-norm":
            value = abs(float(cochain(member)))
            budget = float(member.integrate_measure(f, quad_tol))
        else:
            value = abs(float(cochain(member.boundary())))
            budget = float(member.integrate_measure(f, quad_tol))
        slack = budget - value
        if slack < worst:
            worst = slack
            if slack < -tolerance:
                witness = member
    return UpperBoundCertificate(
        role=role,
        slack=worst,
        valid=worst >= -tolerance,
        family_size=len(family),
        counterexample=witness,
        tolerance=tolerance,
    )


# ---------------------------------------------------------------------------
# reconstruction (cube probes + Richardson)


@dataclass(frozen=True)
class AxisFrame:
    """phi_{alpha,y}(z) = y + sum z_i e_{alpha(i)}; alpha 0-based increasing."""

    alpha: tuple
    base: tuple

    def point(self, z):
        x = [Fraction(v) for v in self.base]
        for zi, a in zip(z, self.alpha):
            x[a] = x[a] + Fraction(zi)
        return tuple(x)


def axis_cube_chain(x, alpha, r, n):
    """Simplicial chain of the cube at x spanned by r e_{alpha(i)} (Kuhn split)."""
    from itertools import permutations

    from .chains import _perm_sign

    x = tuple(Fraction(v) for v in x)
    r = Fraction(r)
    m = len(alpha)
    pieces = []
    for perm in permutations(range(m)):
        sign = _perm_sign(perm)
        verts = [x]
        cur = list(x)
        for i in perm:
            cur[alpha[i]] = cur[alpha[i]] + r
            verts.append(tuple(cur))
        pieces.append((verts, sign))
    return Chain.from_simplices(n, pieces, "rational")


def _richardson(vals):
    """Extrapolate a sequence sampled at radii r, r/2, ...; orders 1 then 2.

    Returns (estimate, error_estimate) as floats.
    """
    t0 = [float(v) for v in vals]
    if len(t0) == 1:
        return t0[0], math.inf
    t1 = [2 * t0[k + 1] - t0[k] for k in range(len(t0) - 1)]
    if len(t1) == 1:
        return t1[0], abs(t1[0] - t0[-1])
    t2 = [(4 * t1[k + 1] - t1[k]) / 3 for k in range(len(t1) - 1)]
    err = abs(t2[-1] - t2[-2]) if len(t2) >= 2 else abs(t2[-1] - t1[-1])
    return t2[-1], err


DEFAULT_RADII = [Fraction(1, 2**k) for k in range(4, 11)]


def reconstruct_coefficient(cochain, frame, z, radii=None):
    """w^X(x, alpha) = lim r^{-m} X(cube probe at x); Richardson extrapolated."""
    radii = list(radii) if radii is not None else list(DEFAULT_RADII)
    x = frame.point(z)
    vals = []
    for r in radii:
        probe = axis_cube_chain(x, frame.alpha, r, cochain.n)
        v = cochain(probe)
        if v == math.inf:
            raise ValueError("probe evaluated to +inf")
        vals.append(Fraction(v) / Fraction(r) ** cochain.m)
    return _richardson(vals)


def reconstruct_dcoefficient(cochain, frame, z, radii=None):
    """dw^X(x, beta) via boundary-of-cube probes of degree m+1."""
    radii = list(radii) if radii is not None else list(DEFAULT_RADII)
    x = frame.point(z)
    vals = []
    for r in radii:
        probe = axis_cube_chain(x, frame.alpha, r, cochain.n).boundary()
        v = cochain(probe)
        if v == math.inf:
            raise ValueError("probe evaluated to +inf")
        vals.append(Fraction(v) / Fraction(r) ** (cochain.m + 1))
    return _richardson(vals)


@dataclass
class ReconstructedForm:
    n: int
    m: int
    points: list
    coefficients: dict  # alpha -> list of (estimate, error) per point
    dcoefficients: dict  # beta -> list of (estimate, error) per point
    converged_tol: float = 1e-8

    def converged(self, alpha, i):
        return self.coefficients[alpha][i][1] <= self.converged_tol

    def as_covector(self, i):
        return {a: vals[i][0] for a, vals in self.coefficients.items()}


def reconstruct_form(cochain, points, radii=None, converged_tol=1e-8):
    from .forms import multi_indices

    coeffs = {}
    dcoeffs = {}
    for alpha in multi_indices(cochain.m, cochain.n):
        rows = []
        for x in points:
            frame = AxisFrame(alpha, tuple(Fraction(v) for v in x))
            rows.append(reconstruct_coefficient(cochain, frame, (0,) * cochain.m, radii))
        coeffs[alpha] = rows
    if cochain.m < cochain.n:
        for beta in multi_indices(cochain.m + 1, cochain.n):
            rows = []
            for x in points:
                frame = AxisFrame(beta, tuple(Fraction(v) for v in x))
                rows.append(reconstruct_dcoefficient(cochain, frame, (0,) * (cochain.m + 1), radii))
            dcoeffs[beta] = rows
    return ReconstructedForm(cochain.n, cochain.m, list(points), coeffs, dcoeffs, converged_tol)


# ---------------------------------------------------------------------------
# experiments


def _pow_with_inf(base, expo):
    if math.isinf(expo):
        return 1.0
    return float(base) ** float(expo)


def continuity_bound(r, m, n, p, q, mass_t, mass_bt, theta_t, theta_bt, norm_g, norm_h, E=1.0):
    """Right-hand side of the averaging-difference estimate.

    E [ Theta_m(T)^{1/p} r^{1+(m-n)/p} M(T)^{(p-1)/p} ||g||_p
        + Theta_{m-1}(dT)^{1/q} r^{1+(m-1-n)/q} M(dT)^{(q-1)/q} ||h||_q ].
    """
    r = float(r)
    t1 = (
        _pow_with_inf(theta_t, 1.0 / p if not math.isinf(p) else 0.0)
        * r ** (1.0 + (m - n) / p if not math.isinf(p) else 1.0)
        * _pow_with_inf(mass_t, (p - 1.0) / p if not math.isinf(p) else 1.0)
        * norm_g
    )
    t2 = 0.0
    if mass_bt > 0:
        t2 = (
            _pow_with_inf(theta_bt, 1.0 / q if not math.isinf(q) else 0.0)
            * r ** (1.0 + (m - 1 - n) / q if not math.isinf(q) else 1.0)
            * _pow_with_inf(mass_bt, (q - 1.0) / q if not math.isinf(q) else 1.0)
            * norm_h
        )
    return E * (t1 + t2)


def fit_loglog_slope(rs, diffs):
    pairs = [(math.log(float(r)), math.log(float(d))) for r, d in zip(rs, diffs) if d > 0]
    if len(pairs) < 2:
        return 0.0
    xs = np.array([a for a, _ in pairs])
    ys = np.array([b for _, b in pairs])
    slope, _ = np.polyfit(xs, ys, 1)
    return float(slope)


def continuity_experiment(
    cochain,
    chain,
    k_range=(2, 8),
    p=2.0,
    q=2.0,
    norm_g=None,
    norm_h=None,
    E=1.0,
    samples=512,
    replicates=8,
    seed=0,
    theta_seed=0,
):
    """Table of |X_r(T) - X(T)| over r = 2^-k plus the theoretical bound.

    Uses exact polynomial averaging when available (zero QMC error), with a
    QMC replicate run retained for the standard-error column.
    """
    base_val = cochain(chain)
    if base_val == math.inf:
        raise ValueError("X(T) must be finite")
    m, n = chain.m, chain.n
    mass_t = float(chain.mass())
    theta_t = theta_growth(chain, seed=theta_seed).value
    if m >= 1:
        bt = chain.boundary()
        mass_bt = float(bt.mass())
        theta_bt = theta_growth(bt, seed=theta_seed).value if not bt.is_zero() else 0.0
    else:
        mass_bt = theta_bt = 0.0
    if norm_g is None or norm_h is None:
        raise ValueError("certified norms ||g||_p and ||h||_q are required")
    rows = []
    for k in range(k_range[0], k_range[1] + 1):
        r = Fraction(1, 2**k)
        avg = average(cochain, r, samples=samples, replicates=replicates, seed=seed)
        value, se = avg.evaluate_with_error(chain)
        diff = abs(float(value) - float(base_val))
        bound = continuity_bound(
            r, m, n, p, q, mass_t, mass_bt, theta_t, theta_bt, norm_g, norm_h, E
        )
        rows.append({"r": float(r), "diff": diff, "se": float(se), "bound": bound})
    slope = fit_loglog_slope([row["r"] for row in rows], [row["diff"] for row in rows])
    return {
        "value": float(base_val),
        "rows": rows,
        "slope": slope,
        "all_below_bound": all(row["diff"] <= row["bound"] for row in rows),
        "params": {"p": p, "q": q, "E": E, "norm_g": norm_g, "norm_h": norm_h},
    }


def unit_ball_volume(n):
    return math.pi ** (n / 2) / math.gamma(n / 2 + 1)


def riesz_lemma_check(chain, u, r, samples=128, seed=0, quad_tol=1e-3):
    """Compare both sides of the truncated Riesz potential inequality.

    LHS: mean over x in B(0,r) of int u d||S_x||, S_x the swept prism.
    RHS: (n-1)^{-1} vol(B^n(1))^{-1} int I_r(u) d||T||.
    """
    n = chain.n
    pts = _ball_qmc_points(n, r, samples, seed, 0)
    lhs_vals = []
    for x in pts:
        sx = prism(chain, [Fraction(c).limit_denominator(10**9) for c in x])
        if sx.is_zero():
            lhs_vals.append(0.0)
            continue
        lhs_vals.append(float(sx.integrate_measure(u.interp, quad_tol)))
    lhs = float(np.mean(lhs_vals))
    rhs_integrand = lambda y: riesz_potential(u, r, y, rel_tol=quad_tol)
    rhs = float(chain.integrate_measure(rhs_integrand, quad_tol))
    rhs *= 1.0 / ((n - 1) * unit_ball_volume(n))
    return {"lhs": lhs, "rhs": rhs, "margin": rhs - lhs, "holds": lhs <= rhs * 1.05}
