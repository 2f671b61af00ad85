"""Exact multivariate polynomials with rational coefficients.

Kept deliberately small: only the operations needed for exterior calculus
and exact integration over simplices (add/mul, partial derivatives, affine
substitution, evaluation in rational or float arithmetic).
"""

from __future__ import annotations

from fractions import Fraction
from math import factorial


class Polynomial:
    """Polynomial in `nvars` variables, terms stored as {exponent tuple: Fraction}."""

    __slots__ = ("nvars", "terms")

    def __init__(self, nvars, terms=None):
        self.nvars = nvars
        self.terms = {}
        if terms:
            for exp, c in terms.items():
                c = Fraction(c)
                if c != 0:
                    exp = tuple(int(e) for e in exp)
                    assert len(exp) == nvars
                    self.terms[exp] = self.terms.get(exp, Fraction(0)) + c
            self.terms = {e: c for e, c in self.terms.items() if c != 0}

    @classmethod
    def zero(cls, nvars):
        return cls(nvars)

    @classmethod
    def constant(cls, nvars, c):
        return cls(nvars, {(0,) * nvars: Fraction(c)})

    @classmethod
    def variable(cls, nvars, i):
        """The coordinate polynomial x_i (0-based index)."""
        exp = [0] * nvars
        exp[i] = 1
        return cls(nvars, {tuple(exp): Fraction(1)})

    def is_zero(self):
        return not self.terms

    def degree(self):
        return max((sum(e) for e in self.terms), default=0)

    def __eq__(self, other):
        return isinstance(other, Polynomial) and self.terms == other.terms

    def __hash__(self):
        return hash((self.nvars, frozenset(self.terms.items())))

    def __add__(self, other):
        if not isinstance(other, Polynomial):
            other = Polynomial.constant(self.nvars, other)
        out = dict(self.terms)
        for e, c in other.terms.items():
            out[e] = out.get(e, Fraction(0)) + c
        return Polynomial(self.nvars, out)

    __radd__ = __add__

    def __neg__(self):
        return Polynomial(self.nvars, {e: -c for e, c in self.terms.items()})

    def __sub__(self, other):
        if not isinstance(other, Polynomial):
            other = Polynomial.constant(self.nvars, other)
        return self + (-other)

    def __mul__(self, other):
        if not isinstance(other, Polynomial):
            q = Fraction(other)
            return Polynomial(self.nvars, {e: c * q for e, c in self.terms.items()})
        out = {}
        for e1, c1 in self.terms.items():
            for e2, c2 in other.terms.items():
                e = tuple(a + b for a, b in zip(e1, e2))
                out[e] = out.get(e, Fraction(0)) + c1 * c2
        return Polynomial(self.nvars, out)

    __rmul__ = __mul__

    def __pow__(self, k):
        out = Polynomial.constant(self.nvars, 1)
        base = self
        k = int(k)
        while k > 0:
            if k & 1:
                out = out * base
            base = base * base
            k >>= 1
        return out

    def diff(self, i):
        """Partial derivative with respect to x_i (0-based)."""
        out = {}
        for e, c in self.terms.items():
            if e[i] == 0:
                continue
            ne = list(e)
            ne[i] -= 1
            out[tuple(ne)] = out.get(tuple(ne), Fraction(0)) + c * e[i]
        return Polynomial(self.nvars, out)

    def __call__(self, point):
        """Evaluate at a point; exact if the coordinates are Fractions/ints."""
        exact = all(isinstance(x, (Fraction, int)) for x in point)
        total = Fraction(0) if exact else 0.0
        for e, c in self.terms.items():
            t = c if exact else float(c)
            for x, k in zip(point, e):
                for _ in range(k):
                    t = t * x
            total += t
        return total

    def substitute(self, exprs):
        """Substitute x_i -> exprs[i], each a Polynomial (possibly in other variables)."""
        assert len(exprs) == self.nvars
        nv = exprs[0].nvars
        out = Polynomial.zero(nv)
        for e, c in self.terms.items():
            term = Polynomial.constant(nv, c)
            for i, k in enumerate(e):
                if k:
                    term = term * (exprs[i] ** k)
            out = out + term
        return out

    def __repr__(self):
        if not self.terms:
            return "Polynomial(0)"
        bits = []
        for e in sorted(self.terms):
            mono = "*".join(f"x{i}^{k}" for i, k in enumerate(e) if k)
            bits.append(f"{self.terms[e]}{'*' + mono if mono else ''}")
        return "Polynomial(" + " + ".join(bits) + ")"


def integrate_over_std_simplex(poly):
    """Exact integral of a polynomial over the standard simplex {u >= 0, sum u <= 1}.

    Uses the monomial formula  int u^a du = prod(a_i!) / (m + |a|)!.
    """
    m = poly.nvars
    total = Fraction(0)
    for e, c in poly.terms.items():
        num = 1
        for k in e:
            num *= factorial(k)
        total += c * Fraction(num, factorial(m + sum(e)))
    return total


def affine_exprs(base, matrix_cols, nvars_in):
    """Polynomials for the affine map u -> base + sum u_j * matrix_cols[j].

    Returns one polynomial per output coordinate, in `nvars_in` variables.
    """
    nout = len(base)
    exprs = []
    for i in range(nout):
        terms = {(0,) * nvars_in: Fraction(base[i])}
        for j in range(nvars_in):
            exp = [0] * nvars_in
            exp[j] = 1
            terms[tuple(exp)] = terms.get(tuple(exp), Fraction(0)) + Fraction(matrix_cols[j][i])
        exprs.append(Polynomial(nvars_in, terms))
    return exprs
