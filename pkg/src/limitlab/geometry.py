"""Euclidean primitives: ball volumes, ball intersections, sphere quadrature.

Everything here treats balls as closed sets, which is the convention the
rest of the package relies on when suprema over radii are realized at
point-mass distances.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Tuple, Union

import numpy as np
from scipy.stats import qmc

__all__ = [
    "SphereRule",
    "unit_ball_volume",
    "sphere_surface_area",
    "ball_volume",
    "ball_intersection_volume",
    "ball_intersection_volume_qmc",
    "sphere_quadrature",
]


def unit_ball_volume(n: int) -> float:
    """Volume of the unit ball in dimension n: pi^(n/2) / Gamma(n/2 + 1).

    The workhorse dimensions 1-3 use their closed forms directly so that
    downstream exactness checks are not polluted by gamma-function
    rounding.
    """
    if n < 1:
        raise ValueError(f"dimension must be >= 1, got {n}")
    if n == 1:
        return 2.0
    if n == 2:
        return math.pi
    if n == 3:
        return 4.0 * math.pi / 3.0
    return math.pi ** (n / 2.0) / math.gamma(n / 2.0 + 1.0)


def sphere_surface_area(n: int) -> float:
    """Surface measure of the unit sphere in R^n: n * unit_ball_volume(n).

    For n = 1 the sphere is the two-point set {+1, -1} carrying counting
    measure, total mass 2.
    """
    return n * unit_ball_volume(n)


def ball_volume(n: int, r: float) -> float:
    if r < 0:
        raise ValueError("radius must be nonnegative")
    return unit_ball_volume(n) * r**n


def _lens_area_2d(d: float, r1: float, r2: float) -> float:
    # circle-circle overlap, 0 < |r1-r2| < d < r1+r2
    a1 = r1 * r1 * math.acos(min(1.0, max(-1.0, (d * d + r1 * r1 - r2 * r2) / (2.0 * d * r1))))
    a2 = r2 * r2 * math.acos(min(1.0, max(-1.0, (d * d + r2 * r2 - r1 * r1) / (2.0 * d * r2))))
    s = max(0.0, (-d + r1 + r2) * (d + r1 - r2) * (d - r1 + r2) * (d + r1 + r2))
    return a1 + a2 - 0.5 * math.sqrt(s)


def _lens_volume_3d(d: float, r1: float, r2: float) -> float:
    # sphere-sphere overlap via two spherical caps
    return (
        math.pi
        * (r1 + r2 - d) ** 2
        * (d * d + 2.0 * d * (r1 + r2) - 3.0 * (r1 - r2) ** 2)
        / (12.0 * d)
    )


def ball_intersection_volume_qmc(
    n: int,
    c1: np.ndarray,
    r1: float,
    c2: np.ndarray,
    r2: float,
    budget: int = 1 << 14,
    seed: int = 0,
    replicates: int = 8,
) -> Tuple[float, float]:
    """Randomized quasi-Monte Carlo estimate of |B(c1,r1) ∩ B(c2,r2)|.

    Scrambled Sobol points fill the bounding cube of the smaller ball;
    the spread over independent scramblings gives the standard error.
    Returns (estimate, std_error).
    """
    c1 = np.asarray(c1, dtype=float).reshape(n)
    c2 = np.asarray(c2, dtype=float).reshape(n)
    if r1 > r2:
        c1, c2, r1, r2 = c2, c1, r2, r1
    m = max(64, budget // replicates)
    m = 1 << int(math.ceil(math.log2(m)))
    cube_vol = (2.0 * r1) ** n
    vals = np.empty(replicates)
    for k in range(replicates):
        sampler = qmc.Sobol(d=n, scramble=True, seed=seed * replicates + k)
        u = sampler.random(m)
        pts = c1 + (2.0 * u - 1.0) * r1
        inside1 = np.sum((pts - c1) ** 2, axis=1) <= r1 * r1
        inside2 = np.sum((pts - c2) ** 2, axis=1) <= r2 * r2
        vals[k] = cube_vol * np.mean(inside1 & inside2)
    est = float(np.mean(vals))
    se = float(np.std(vals, ddof=1) / math.sqrt(replicates))
    return est, se


def ball_intersection_volume(
    n: int,
    c1: Union[float, np.ndarray],
    r1: float,
    c2: Union[float, np.ndarray],
    r2: float,
    budget: int = 1 << 14,
    seed: int = 0,
) -> float:
    """Lebesgue measure of the intersection of two closed balls.

    Closed forms are used for n <= 3 (interval overlap, circular lens,
    spherical lens).  For n >= 4 the value is a randomized quasi-Monte
    Carlo estimate with ``budget`` total points; use
    :func:`ball_intersection_volume_qmc` to also obtain its standard
    error.
    """
    if r1 <= 0 or r2 <= 0:
        raise ValueError("ball radii must be positive")
    c1 = np.atleast_1d(np.asarray(c1, dtype=float))
    c2 = np.atleast_1d(np.asarray(c2, dtype=float))
    d = float(np.linalg.norm(c1 - c2))
    if d >= r1 + r2:
        return 0.0
    if d <= abs(r1 - r2):
        return ball_volume(n, min(r1, r2))
    if n == 1:
        left = max(c1[0] - r1, c2[0] - r2)
        right = min(c1[0] + r1, c2[0] + r2)
        return max(0.0, right - left)
    cap = ball_volume(n, min(r1, r2))
    if n == 2:
        return min(max(_lens_area_2d(d, r1, r2), 0.0), cap)
    if n == 3:
        return min(max(_lens_volume_3d(d, r1, r2), 0.0), cap)
    est, _ = ball_intersection_volume_qmc(n, c1, r1, c2, r2, budget=budget, seed=seed)
    return est


def ball_intersection_profile(
    n: int, dist: np.ndarray, r: np.ndarray, rho: float
) -> np.ndarray:
    """Vectorized |B(x, r) ∩ B(0, rho)| for |x| = dist, n in {1, 2, 3}.

    Shapes of ``dist`` and ``r`` broadcast together.  This is the hot
    path of the radial-density maximal operators, hence array based.
    """
    dist = np.asarray(dist, dtype=float)
    r = np.asarray(r, dtype=float)
    dist, r = np.broadcast_arrays(dist, r)
    out = np.zeros(dist.shape, dtype=float)
    if rho <= 0:
        return out
    separate = dist >= r + rho
    small_in_big = dist <= r - rho  # B(0,rho) inside B(x,r)
    big_in_small = dist <= rho - r  # B(x,r) inside B(0,rho)
    lens = ~(separate | small_in_big | big_in_small)
    out[small_in_big] = ball_volume(n, rho)
    out[big_in_small] = unit_ball_volume(n) * r[big_in_small] ** n
    if np.any(lens):
        d = dist[lens]
        rr = r[lens]
        if n == 1:
            vals = np.maximum(0.0, np.minimum(d + rr, rho) - np.maximum(d - rr, -rho))
        elif n == 2:
            with np.errstate(invalid="ignore"):
                a1 = rr**2 * np.arccos(np.clip((d**2 + rr**2 - rho**2) / (2 * d * rr), -1, 1))
                a2 = rho**2 * np.arccos(np.clip((d**2 + rho**2 - rr**2) / (2 * d * rho), -1, 1))
                s = np.maximum(0.0, (-d + rr + rho) * (d + rr - rho) * (d - rr + rho) * (d + rr + rho))
            vals = a1 + a2 - 0.5 * np.sqrt(s)
        elif n == 3:
            vals = (
                math.pi
                * (rr + rho - d) ** 2
                * (d**2 + 2 * d * (rr + rho) - 3 * (rr - rho) ** 2)
                / (12 * d)
            )
        else:
            raise ValueError("vectorized intersection profile needs n <= 3")
        # near-tangency roundoff must not push past the containment bounds
        cap = np.minimum(unit_ball_volume(n) * rr**n, ball_volume(n, rho))
        out[lens] = np.clip(vals, 0.0, cap)
    return out


@dataclass(frozen=True)
class SphereRule:
    """Quadrature rule on the unit sphere S^(n-1).

    nodes:   (m, n) unit vectors
    weights: (m,) positive weights summing to the surface measure
    """

    dimension: int
    nodes: np.ndarray
    weights: np.ndarray

    def __post_init__(self) -> None:
        norms = np.linalg.norm(self.nodes, axis=1)
        if np.max(np.abs(norms - 1.0)) > 1e-12:
            raise ValueError("sphere rule nodes must be unit vectors")
        if np.any(self.weights <= 0):
            raise ValueError("sphere rule weights must be positive")

    def integrate(self, f: Callable[[np.ndarray], np.ndarray]) -> float:
        """Integrate f over the sphere; f maps (m, n) points to (m,) values."""
        return float(np.dot(self.weights, np.asarray(f(self.nodes), dtype=float)))

    @property
    def total(self) -> float:
        return float(np.sum(self.weights))


def sphere_quadrature(n: int, order: int, seed: int = 0) -> SphereRule:
    """Quadrature rule integrating over S^(n-1) with surface measure.

    n = 1: the two points {+1, -1}, weight 1 each.
    n = 2: ``order`` uniformly spaced angles (exact for trigonometric
           polynomials of degree < order).
    n = 3: Gauss-Legendre in the polar cosine x (order nodes) times
           2*order uniform azimuths.
    n >= 4: order**2 Monte Carlo directions with equal weights.
    """
    if order < 1:
        raise ValueError("quadrature order must be >= 1")
    if n < 1:
        raise ValueError("dimension must be >= 1")
    if n == 1:
        nodes = np.array([[1.0], [-1.0]])
        weights = np.array([1.0, 1.0])
    elif n == 2:
        theta = 2.0 * math.pi * (np.arange(order) + 0.5) / order
        nodes = np.column_stack([np.cos(theta), np.sin(theta)])
        weights = np.full(order, 2.0 * math.pi / order)
    elif n == 3:
        x, w = np.polynomial.legendre.leggauss(order)
        n_az = 2 * order
        phi = 2.0 * math.pi * (np.arange(n_az) + 0.5) / n_az
        sin_t = np.sqrt(np.maximum(0.0, 1.0 - x**2))
        nodes = np.empty((order * n_az, 3))
        weights = np.empty(order * n_az)
        for i in range(order):
            block = slice(i * n_az, (i + 1) * n_az)
            nodes[block, 0] = sin_t[i] * np.cos(phi)
            nodes[block, 1] = sin_t[i] * np.sin(phi)
            nodes[block, 2] = x[i]
            weights[block] = w[i] * (2.0 * math.pi / n_az)
    else:
        from ._rng import substream

        m = order * order
        rng = substream(seed, n, order)
        raw = rng.standard_normal((m, n))
        nodes = raw / np.linalg.norm(raw, axis=1, keepdims=True)
        weights = np.full(m, sphere_surface_area(n) / m)
    return SphereRule(dimension=n, nodes=nodes, weights=weights)
