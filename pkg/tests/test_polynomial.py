from fractions import Fraction

from chainforms.polynomial import Polynomial, affine_exprs, integrate_over_std_simplex


def test_arithmetic_and_eval():
    x = Polynomial.variable(2, 0)
    y = Polynomial.variable(2, 1)
    p = (x + y) * (x - y)
    assert p(( Fraction(3), Fraction(2) )) == 5
    assert p((3.0, 2.0)) == 5.0
    assert (x**3).diff(0) == 3 * x * x


def test_diff_product_rule():
    x = Polynomial.variable(1, 0)
    p = x**2 + 3 * x + 1
    q = x - 2
    lhs = (p * q).diff(0)
    rhs = p.diff(0) * q + p * q.diff(0)
    assert lhs == rhs


def test_integrate_std_simplex_monomials():
    # 1D: int_0^1 u^k du = 1/(k+1)
    u = Polynomial.variable(1, 0)
    assert integrate_over_std_simplex(u**3) == Fraction(1, 4)
    # 2D: int over triangle of u1 = 1/6, of u1*u2 = 1/24
    u1 = Polynomial.variable(2, 0)
    u2 = Polynomial.variable(2, 1)
    assert integrate_over_std_simplex(u1) == Fraction(1, 6)
    assert integrate_over_std_simplex(u1 * u2) == Fraction(1, 24)
    assert integrate_over_std_simplex(Polynomial.constant(2, 1)) == Fraction(1, 2)


def test_substitute_affine():
    # x(u) = 1 + 2u over [0,1]; integrate x^2 du = int_0^1 (1+2u)^2 du = 13/3
    exprs = affine_exprs([Fraction(1)], [[Fraction(2)]], 1)
    x = Polynomial.variable(1, 0)
    comp = (x**2).substitute(exprs)
    assert integrate_over_std_simplex(comp) == Fraction(13, 3)
