"""Nonnegative scalar fields on regular grids, with the two singular-integral
utilities used by the averaging experiments: the truncated Riesz potential and
a restricted Hardy-Littlewood maximal function."""

from __future__ import annotations

import math

import numpy as np


class GridField:
    """Nonnegative samples on a regular grid over a box.

    Samples live at cell centers; evaluation outside the box returns 0.
    """

    def __init__(self, box, values):
        self.box = [(float(lo), float(hi)) for lo, hi in box]
        self.values = np.asarray(values, dtype=float)
        if self.values.ndim != len(self.box):
            raise ValueError("grid rank must match box rank")
        if not np.isfinite(self.values).all():
            raise ValueError("grid samples must be finite")
        if (self.values < 0).any():
            raise ValueError("grid samples must be nonnegative")
        self.shape = self.values.shape
        self.steps = [(hi - lo) / s for (lo, hi), s in zip(self.box, self.shape)]

    @property
    def n(self):
        return len(self.box)

    @classmethod
    def constant(cls, box, shape, c):
        return cls(box, np.full(shape, float(c)))

    @classmethod
    def from_function(cls, box, shape, f):
        axes = [
            np.linspace(lo, hi, s, endpoint=False) + (hi - lo) / (2 * s)
            for (lo, hi), s in zip(box, shape)
        ]
        mesh = np.meshgrid(*axes, indexing="ij")
        pts = np.stack([m.ravel() for m in mesh], axis=-1)
        vals = np.array([float(f(tuple(p))) for p in pts]).reshape(shape)
        return cls(box, vals)

    def centers(self):
        axes = [
            np.linspace(lo, hi, s, endpoint=False) + (hi - lo) / (2 * s)
            for (lo, hi), s in zip(self.box, self.shape)
        ]
        return np.meshgrid(*axes, indexing="ij")

    def cell_volume(self):
        return math.prod(self.steps)

    def __call__(self, x):
        """Nearest-cell sample; 0 outside the box."""
        idx = []
        for xi, (lo, hi), s in zip(x, self.box, self.shape):
            xi = float(xi)
            if not (lo <= xi <= hi):
                return 0.0
            i = int((xi - lo) / (hi - lo) * s)
            idx.append(min(max(i, 0), s - 1))
        return float(self.values[tuple(idx)])

    def interp(self, x):
        """Multilinear interpolation from cell centers; 0 outside the box."""
        pos = []
        for xi, (lo, hi), s in zip(x, self.box, self.shape):
            xi = float(xi)
            if not (lo <= xi <= hi):
                return 0.0
            pos.append((xi - lo) / (hi - lo) * s - 0.5)
        val = 0.0
        n = self.n
        base = [math.floor(p) for p in pos]
        frac = [p - b for p, b in zip(pos, base)]
        for corner in range(1 << n):
            w = 1.0
            idx = []
            for d in range(n):
                bit = (corner >> d) & 1
                w *= frac[d] if bit else 1.0 - frac[d]
                i = min(max(base[d] + bit, 0), self.shape[d] - 1)
                idx.append(i)
            val += w * float(self.values[tuple(idx)])
        return val

    def scale(self, c):
        return GridField(self.box, self.values * float(c))


# ---------------------------------------------------------------------------
# truncated Riesz potential


def riesz_potential(u, r, y, rel_tol=1e-4):
    """I_r(u)(y) = int_{B(y,r)} u(x) |x-y|^{1-n} dx, by polar quadrature.

    In polar coordinates the kernel cancels the Jacobian, leaving
    int_0^r int_{S^{n-1}} u(y + s theta) dtheta ds, which is nonsingular.
    """
    if r <= 0:
        raise ValueError("radius must be positive")
    n = u.n
    y = [float(v) for v in y]
    for yi, (lo, hi) in zip(y, u.box):
        if not (lo < yi < hi):
            raise ValueError("evaluation point must be interior to the grid box")
    if n not in (2, 3):
        raise NotImplementedError("Riesz potential implemented for n in {2, 3}")

    def shell(s, nang):
        if n == 2:
            ang = np.linspace(0.0, 2 * math.pi, nang, endpoint=False)
            pts = np.stack([y[0] + s * np.cos(ang), y[1] + s * np.sin(ang)], axis=-1)
            w = 2 * math.pi / nang
            return sum(u.interp(tuple(p)) for p in pts) * w
        # n == 3: product rule, Gauss in cos(polar) x uniform azimuth
        nodes, weights = np.polynomial.legendre.leggauss(max(4, nang // 4))
        total = 0.0
        ang = np.linspace(0.0, 2 * math.pi, nang, endpoint=False)
        for c, w in zip(nodes, weights):
            sin_t = math.sqrt(max(0.0, 1 - c * c))
            for a in ang:
                p = (
                    y[0] + s * sin_t * math.cos(a),
                    y[1] + s * sin_t * math.sin(a),
                    y[2] + s * c,
                )
                total += w * (2 * math.pi / nang) * u.interp(p)
        return total

    def radial(nrad, nang):
        nodes, weights = np.polynomial.legendre.leggauss(nrad)
        total = 0.0
        for t, w in zip(nodes, weights):
            s = r * (t + 1) / 2
            total += w * (r / 2) * shell(s, nang)
        return total

    coarse = radial(16, 32)
    fine = radial(32, 64)
    if abs(fine - coarse) > rel_tol * max(1.0, abs(fine)):
        coarse, fine = fine, radial(64, 128)
    return fine


# ---------------------------------------------------------------------------
# restricted maximal function


def maximal_function(u, radii):
    """Pointwise max over the given radii of discrete ball averages of u.

    Averages are over grid samples whose centers lie in the closed ball,
    restricted to the box; the point's own sample is always included, so
    Mu >= u everywhere.
    """
    from scipy.ndimage import convolve

    vals = u.values
    out = vals.copy()
    for rad in radii:
        rad = float(rad)
        if rad <= 0:
            raise ValueError("radii must be positive")
        # build the in-ball offset kernel in index space
        half = [int(math.floor(rad / st)) for st in u.steps]
        if all(h == 0 for h in half):
            continue
        grids = np.meshgrid(
            *[np.arange(-h, h + 1) * st for h, st in zip(half, u.steps)], indexing="ij"
        )
        dist2 = sum(g**2 for g in grids)
        kernel = (dist2 <= rad * rad + 1e-12).astype(float)
        sums = convolve(vals, kernel, mode="constant", cval=0.0)
        counts = convolve(np.ones_like(vals), kernel, mode="constant", cval=0.0)
        out = np.maximum(out, sums / counts)
    return GridField(u.box, out)


def ball_average_bruteforce(u, x, rad):
    """Reference implementation of one discrete ball average (for testing)."""
    centers = np.stack([c.ravel() for c in u.centers()], axis=-1)
    vals = u.values.ravel()
    d2 = ((centers - np.asarray(x, dtype=float)) ** 2).sum(axis=1)
    mask = d2 <= rad * rad + 1e-12
    if not mask.any():
        return 0.0
    return float(vals[mask].mean())
