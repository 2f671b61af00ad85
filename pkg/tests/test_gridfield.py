import math

import numpy as np
import pytest

from chainforms.gridfield import (
    GridField,
    ball_average_bruteforce,
    maximal_function,
    riesz_potential,
)


def test_gridfield_basics():
    u = GridField.constant([(0, 1), (0, 1)], (8, 8), 2.0)
    assert u((0.5, 0.5)) == 2.0
    assert u((2, 0.5)) == 0.0
    assert u.interp((0.5, 0.5)) == 2.0
    with pytest.raises(ValueError):
        GridField([(0, 1)], [-1.0, 2.0])


def test_riesz_constant_2d():
    u = GridField.constant([(-2, 2), (-2, 2)], (64, 64), 1.0)
    val = riesz_potential(u, 0.5, (0, 0))
    assert abs(val - 2 * math.pi * 0.5) < 1e-3


def test_riesz_zero_and_monotone():
    z = GridField.constant([(-2, 2), (-2, 2)], (32, 32), 0.0)
    assert riesz_potential(z, 1.0, (0, 0)) == 0.0
    u = GridField.from_function(
        [(-2, 2), (-2, 2)], (64, 64), lambda p: math.exp(-p[0] ** 2 - p[1] ** 2)
    )
    small = riesz_potential(u, 0.25, (0.1, 0.2))
    big = riesz_potential(u, 1.0, (0.1, 0.2))
    assert small <= big + 1e-9


def test_riesz_constant_3d():
    u = GridField.constant([(-1, 1)] * 3, (24, 24, 24), 1.0)
    # n=3: I_r(1) = int_0^r 4*pi ds = 4*pi*r
    val = riesz_potential(u, 0.4, (0, 0, 0))
    assert abs(val - 4 * math.pi * 0.4) < 2e-2


def test_riesz_outside_point():
    u = GridField.constant([(0, 1), (0, 1)], (8, 8), 1.0)
    with pytest.raises(ValueError):
        riesz_potential(u, 0.5, (2, 2))


def test_maximal_constant():
    u = GridField.constant([(0, 1), (0, 1)], (16, 16), 3.0)
    mu = maximal_function(u, [0.25, 0.5])
    assert np.allclose(mu.values, 3.0)


def test_maximal_dominates():
    rng = np.random.default_rng(0)
    u = GridField([(0, 1), (0, 1)], rng.random((32, 32)))
    mu = maximal_function(u, [2.0 ** (-k) for k in range(1, 5)])
    assert (mu.values >= u.values - 1e-15).all()


def test_maximal_matches_bruteforce():
    u = GridField.from_function(
        [(-1, 2), (-1, 2)],
        (64, 64),
        lambda p: 1.0 if 0 <= p[0] <= 1 and 0 <= p[1] <= 1 else 0.0,
    )
    radii = [2.0 ** (-k) for k in range(-1, 4)]
    mu = maximal_function(u, radii)
    xs, ys = u.centers()
    i, j = 53, 32  # a point near (1.5, 0.5)
    x = (xs[i, j], ys[i, j])
    brute = max([u.values[i, j]] + [ball_average_bruteforce(u, x, r) for r in radii])
    assert abs(mu.values[i, j] - brute) < 1e-12
