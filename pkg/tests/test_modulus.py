import math
from fractions import Fraction

import numpy as np
import pytest

from chainforms import Chain, CubicalCell
from chainforms.modulus import (
    capacity_lower_bound,
    chain_cell_measures,
    p_modulus,
    qp_capacity_lower_bound,
)


def hseg(y, x0=0, x1=1):
    return Chain.segment([Fraction(x0), Fraction(y)], [Fraction(x1), Fraction(y)])


BOX = [(0, 1), (0, 1)]


def test_cell_measures_total():
    t = hseg(Fraction(1, 3))
    mu = chain_cell_measures(t, BOX, (8, 8))
    assert abs(mu.sum() - 1.0) < 1e-12
    # gridline segment splits between the two adjacent rows
    t2 = hseg(Fraction(1, 2))
    mu2 = chain_cell_measures(t2, BOX, (8, 8)).reshape(8, 8)
    assert abs(mu2.sum() - 1.0) < 1e-12
    assert abs(mu2[:, 3].sum() - 0.5) < 1e-12 and abs(mu2[:, 4].sum() - 0.5) < 1e-12


def test_cell_measures_triangle():
    tri = Chain.simplex([(0, 0), (1, 0), (0, 1)])
    mu = chain_cell_measures(tri, BOX, (16, 16))
    assert abs(mu.sum() - 0.5) < 1e-9


def test_spanning_segments_oracle():
    family = [hseg(Fraction(j, 64)) for j in range(65)]
    out = p_modulus(family, BOX, (128, 128), 2)
    assert abs(out.value - 1.0) < 0.02
    assert all(a >= 1 - 1e-6 for a in out.activities)
    assert out.duality_gap < 1e-4


def test_duplicate_member_same_value():
    fam = [hseg(Fraction(1, 4))]
    a = p_modulus(fam, BOX, (32, 32), 2)
    b = p_modulus(fam + fam, BOX, (32, 32), 2)
    assert abs(a.value - b.value) < 1e-6


def test_zero_chain_infinite():
    out = p_modulus([Chain.zero(2, 1)], BOX, (16, 16), 2)
    assert out.value == math.inf and out.flag == "plus-infinity-empty-admissible"
    assert p_modulus([], BOX, (16, 16), 2).value == 0.0


def test_monotone_in_family():
    small = [hseg(Fraction(1, 4))]
    big = small + [hseg(Fraction(3, 4))]
    a = p_modulus(small, BOX, (32, 32), 2)
    b = p_modulus(big, BOX, (32, 32), 2)
    assert a.value <= b.value + 1e-8


def test_scaling_law():
    fam = [hseg(Fraction(1, 4))]
    p = 2
    a = p_modulus(fam, BOX, (32, 32), p)
    b = p_modulus([t.scale(2) for t in fam], BOX, (32, 32), p)
    assert abs(b.value - a.value / 2**p) < 1e-6 * max(1, a.value)


def test_repeat_solves_agree():
    fam = [hseg(Fraction(j, 8)) for j in range(1, 8)]
    a = p_modulus(fam, BOX, (64, 64), 2)
    b = p_modulus(fam, BOX, (64, 64), 2)
    assert abs(a.value - b.value) < 1e-10
    assert np.allclose(a.density.values, b.density.values, atol=1e-8)


def square_chain():
    return Chain.from_cubes(2, [(CubicalCell((Fraction(0), Fraction(0)), (0, 1), Fraction(1)), 1)])


def test_capacity_lower_bound():
    sq = square_chain()
    cyc = sq.boundary()
    out = capacity_lower_bound([cyc], [sq], [(-1, 2), (-1, 2)], (32, 32), 2)
    assert out.value > 0
    with pytest.raises(ValueError):
        capacity_lower_bound([cyc], [sq.scale(2)], [(-1, 2), (-1, 2)], (32, 32), 2)


def test_capacity_monotone_in_fillings():
    sq = square_chain()
    cyc = sq.boundary()
    # an alternative filling: same square plus a zero-boundary bump
    extra = sq + Chain.from_cubes(
        2,
        [
            (CubicalCell((Fraction(1), Fraction(0)), (0, 1), Fraction(1)), 1),
            (CubicalCell((Fraction(1), Fraction(0)), (0, 1), Fraction(1)), -1),
        ],
    )
    one = capacity_lower_bound([cyc], [sq], [(-1, 2), (-1, 2)], (32, 32), 2)
    two = capacity_lower_bound([cyc], [sq, sq], [(-1, 2), (-1, 2)], (32, 32), 2)
    assert two.value >= one.value - 1e-8


def test_qp_capacity_reductions():
    sq = square_chain()
    t = sq.boundary()
    box = [(-1, 2), (-1, 2)]
    # S = 0: reduces to a one-constraint q-modulus of {R}
    a = qp_capacity_lower_bound([t], [(t, Chain.zero(2, 2))], box, (32, 32), 2, 2)
    b = p_modulus([t], box, (32, 32), 2)
    assert abs(a.value - b.value) < 1e-4 * max(1, b.value)
    # R = 0: one-constraint p-modulus of {S}
    c = qp_capacity_lower_bound([t], [(Chain.zero(2, 1), sq)], box, (32, 32), 2, 2)
    d = p_modulus([sq], box, (32, 32), 2)
    assert abs(c.value - d.value) < 1e-4 * max(1, d.value)
    with pytest.raises(ValueError):
        qp_capacity_lower_bound([t], [(t, sq)], box, (32, 32), 2, 2)


def test_qp_capacity_two_decompositions():
    sq = square_chain()
    t = sq.boundary()
    box = [(-1, 2), (-1, 2)]
    out = qp_capacity_lower_bound(
        [t], [(t, Chain.zero(2, 2)), (Chain.zero(2, 1), sq)], box, (64, 64), 2, 2
    )
    assert out.value > 0 and out.flag == "finite"
    single = qp_capacity_lower_bound([t], [(t, Chain.zero(2, 2))], box, (64, 64), 2, 2)
    assert out.value >= single.value - 1e-8
