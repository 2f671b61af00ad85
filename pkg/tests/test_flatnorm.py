import math
from fractions import Fraction

import pytest

from chainforms import Chain, CubicalCell
from chainforms.complexes import (
    ChainVector,
    NotRepresentableError,
    apply_boundary,
    build_cubical_complex,
    embed_chain,
    flat_norm,
    flat_norm_chain,
)


def square_boundary(L, eps):
    sq = Chain.from_cubes(
        2,
        [
            (CubicalCell((Fraction(i) * eps, Fraction(j) * eps), (0, 1), Fraction(eps)), 1)
            for i in range(int(L / eps))
            for j in range(int(L / eps))
        ],
    )
    return sq.boundary()


def test_build_counts():
    k = build_cubical_complex([(0, 1), (0, 1)], 1, 2)
    assert k.num_cells(0) == 4 and k.num_cells(1) == 4 and k.num_cells(2) == 1
    col = k.boundaries[2].toarray()[:, 0]
    assert sorted(abs(v) for v in col if v) == [1, 1, 1, 1]
    k2 = build_cubical_complex([(0, 2), (0, 1)], 1, 2)
    assert k2.num_cells(0) == 6 and k2.num_cells(1) == 7 and k2.num_cells(2) == 2


def test_boundary_of_boundary_matrix():
    k = build_cubical_complex([(0, 2), (0, 2)], Fraction(1, 2), 2)
    prod = k.boundaries[1] @ k.boundaries[2]
    assert not prod.toarray().any()


def test_embed_chain():
    k = build_cubical_complex([(0, 1), (0, 1)], 1, 2)
    edge = Chain.segment([0, 0], [1, 0])
    vec = embed_chain(edge, k)
    assert len(vec.coeffs) == 1 and list(vec.coeffs.values()) == [Fraction(1)]
    rev = embed_chain(Chain.segment([1, 0], [0, 0]), k)
    assert list(rev.coeffs.values()) == [Fraction(-1)]
    with pytest.raises(NotRepresentableError):
        embed_chain(Chain.segment([0, 0], [1, 1]), k)


def test_embed_commutes_with_boundary():
    k = build_cubical_complex([(0, 2), (0, 2)], Fraction(1, 2), 2)
    sq = Chain.from_cubes(2, [(CubicalCell((Fraction(0), Fraction(1, 2)), (0, 1), Fraction(1, 2)), 2)])
    lhs = apply_boundary(embed_chain(sq, k)).coeffs
    rhs = embed_chain(sq.boundary(), k).coeffs
    assert lhs == rhs


def test_flat_norm_zero():
    k = build_cubical_complex([(0, 1), (0, 1)], Fraction(1, 2), 2)
    t = ChainVector(k, 1, {})
    out = flat_norm(t, k)
    assert out.value == 0 and out.r.is_zero() and out.s.is_zero()


def test_flat_norm_unit_square():
    t = square_boundary(1, Fraction(1, 4))
    out = flat_norm_chain(t, Fraction(1, 4))
    assert abs(out.value - 1.0) < 1e-8
    assert out.residual_zero
    # check identity exactly: t = r + boundary(s)
    complexK = out.r.complex
    lhs = embed_chain(t, complexK).coeffs
    rb = dict(out.r.coeffs)
    for i, c in apply_boundary(out.s).coeffs.items():
        rb[i] = rb.get(i, Fraction(0)) + c
    assert {i: c for i, c in rb.items() if c != 0} == lhs


def test_flat_norm_big_square_perimeter_wins():
    t = square_boundary(5, 1)
    out = flat_norm_chain(t, 1)
    assert abs(out.value - 20.0) < 1e-8


def test_flat_norm_upper_bounds_and_subadditivity():
    k = build_cubical_complex([(0, 2), (0, 2)], Fraction(1, 2), 2)
    a = embed_chain(Chain.segment([0, 0], [Fraction(1, 2), 0]), k)
    b = embed_chain(Chain.segment([Fraction(1, 2), 0], [1, 0]), k)
    fa, fb = flat_norm(a, k), flat_norm(b, k)
    assert fa.value <= float(a.mass()) + 1e-9
    ab = ChainVector(k, 1, {**a.coeffs, **b.coeffs})
    fab = flat_norm(ab, k)
    assert fab.value <= fa.value + fb.value + 1e-8


def test_flat_norm_refinement_monotone():
    t = square_boundary(1, Fraction(1, 2))
    coarse = flat_norm_chain(t, Fraction(1, 2)).value
    fine = flat_norm_chain(t, Fraction(1, 4)).value
    assert fine <= coarse + 1e-8
