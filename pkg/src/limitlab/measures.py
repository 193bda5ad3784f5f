"""Finite positive measures, dilations, and the concentration split.

Three concrete families are supported:

* atoms (points with positive weights),
* radial densities (piecewise-constant in |y| on a bounded grid),
* box densities (piecewise-constant on the cells of a rectangular grid).

All measures are immutable after construction.  Dilating by t > 0 pushes
the measure forward under y -> t*y; the split at scale t restricts the
dilated measure to the closed ball of radius sqrt(t) and records the
escaping mass fraction.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np

from .geometry import (
    ball_intersection_profile,
    ball_intersection_volume,
    sphere_quadrature,
    unit_ball_volume,
)

__all__ = [
    "Measure",
    "AtomicMeasure",
    "RadialDensityMeasure",
    "BoxDensityMeasure",
    "SplitMeasure",
    "dilate",
    "split",
    "ball_mass",
]


class Measure:
    """Common interface of the concrete measure families."""

    dimension: int

    @property
    def total_mass(self) -> float:
        raise NotImplementedError

    @property
    def support_radius(self) -> float:
        """Radius of a closed origin-centered ball containing the support."""
        raise NotImplementedError

    def dilate(self, t: float) -> "Measure":
        raise NotImplementedError

    def ball_mass(self, center, radius: float) -> float:
        raise NotImplementedError

    def quadrature_nodes(self, panels: int = 8, gauss: int = 12, sphere_order: int = 64):
        """Discretization (points, weights) representing the measure.

        Used by the operator evaluators for density measures; atomic
        measures return their atoms unchanged.  Node sets are cached per
        parameter triple.
        """
        raise NotImplementedError

    def density_at(self, point) -> float:
        raise NotImplementedError("measure has no pointwise density")

    def normalized(self) -> Tuple["Measure", float]:
        """(probability-rescaled measure, original total mass)."""
        mass = self.total_mass
        if mass <= 0:
            raise ValueError("cannot normalize a measure with zero mass")
        return self.scaled(1.0 / mass), mass

    def scaled(self, factor: float) -> "Measure":
        raise NotImplementedError


class AtomicMeasure(Measure):
    def __init__(self, points, weights):
        points = np.atleast_2d(np.asarray(points, dtype=float))
        weights = np.asarray(weights, dtype=float).reshape(-1)
        if len(points) != len(weights):
            raise ValueError("one weight per atom required")
        if np.any(weights <= 0):
            raise ValueError("atom weights must be positive")
        self.points = points
        self.weights = weights
        self.dimension = points.shape[1]

    @property
    def total_mass(self) -> float:
        return float(np.sum(self.weights))

    @property
    def support_radius(self) -> float:
        return float(np.max(np.linalg.norm(self.points, axis=1)))

    def dilate(self, t: float) -> "AtomicMeasure":
        if t <= 0:
            raise ValueError("dilation factor must be positive")
        return AtomicMeasure(t * self.points, self.weights)

    def scaled(self, factor: float) -> "AtomicMeasure":
        return AtomicMeasure(self.points, factor * self.weights)

    def ball_mass(self, center, radius: float) -> float:
        if radius < 0:
            raise ValueError("radius must be nonnegative")
        center = np.asarray(center, dtype=float).reshape(self.dimension)
        d = np.linalg.norm(self.points - center, axis=1)
        return float(np.sum(self.weights[d <= radius]))

    def quadrature_nodes(self, panels: int = 8, gauss: int = 12, sphere_order: int = 64):
        return self.points, self.weights


class RadialDensityMeasure(Measure):
    """Density f(|y|) piecewise-constant on [edges[k], edges[k+1])."""

    def __init__(self, n: int, edges, values):
        edges = np.asarray(edges, dtype=float)
        values = np.asarray(values, dtype=float)
        if edges.ndim != 1 or values.ndim != 1 or len(edges) != len(values) + 1:
            raise ValueError("need len(edges) == len(values) + 1")
        if edges[0] < 0 or np.any(np.diff(edges) <= 0):
            raise ValueError("edges must be nonnegative and increasing")
        if np.any(values < 0):
            raise ValueError("density values must be nonnegative")
        self.dimension = n
        self.edges = edges
        self.values = values
        self._node_cache: dict = {}

    @classmethod
    def uniform_ball(cls, n: int, radius: float = 1.0, density: float = 1.0) -> "RadialDensityMeasure":
        return cls(n, [0.0, radius], [density])

    @classmethod
    def from_function(cls, n: int, fn, outer_radius: float, bins: int = 256) -> "RadialDensityMeasure":
        """Tabulate fn(|y|) at bin midpoints on [0, outer_radius]."""
        edges = np.linspace(0.0, outer_radius, bins + 1)
        mid = 0.5 * (edges[:-1] + edges[1:])
        return cls(n, edges, np.asarray([float(fn(r)) for r in mid]))

    @property
    def total_mass(self) -> float:
        n = self.dimension
        shells = unit_ball_volume(n) * (self.edges[1:] ** n - self.edges[:-1] ** n)
        return float(np.dot(self.values, shells))

    @property
    def support_radius(self) -> float:
        nz = np.nonzero(self.values)[0]
        if len(nz) == 0:
            return 0.0
        return float(self.edges[nz[-1] + 1])

    def dilate(self, t: float) -> "RadialDensityMeasure":
        if t <= 0:
            raise ValueError("dilation factor must be positive")
        return RadialDensityMeasure(self.dimension, t * self.edges, self.values / t**self.dimension)

    def scaled(self, factor: float) -> "RadialDensityMeasure":
        return RadialDensityMeasure(self.dimension, self.edges, factor * self.values)

    def density_at(self, point) -> float:
        r = float(np.linalg.norm(np.asarray(point, dtype=float)))
        idx = int(np.searchsorted(self.edges, r, side="right")) - 1
        if idx < 0 or idx >= len(self.values):
            return 0.0
        return float(self.values[idx])

    def density_at_many(self, points: np.ndarray) -> np.ndarray:
        r = np.linalg.norm(np.atleast_2d(points), axis=1)
        idx = np.searchsorted(self.edges, r, side="right") - 1
        padded = np.concatenate([self.values, [0.0]])
        idx = np.clip(idx, 0, len(self.values))
        out = padded[idx]
        return np.where(r >= self.edges[-1], 0.0, out)

    def density_jump_radii_from(self, x: np.ndarray) -> np.ndarray:
        """Radii |z| at which f(x - z) can jump: |dist(x) -+ edge|."""
        dist = float(np.linalg.norm(x))
        cand = np.concatenate([np.abs(dist - self.edges), dist + self.edges])
        return np.unique(cand[cand > 0])

    def ball_mass(self, center, radius: float) -> float:
        if radius < 0:
            raise ValueError("radius must be nonnegative")
        if radius == 0:
            return 0.0
        center = np.asarray(center, dtype=float).reshape(self.dimension)
        dist = float(np.linalg.norm(center))
        n = self.dimension
        if dist == 0.0:
            caps = np.minimum(self.edges, radius)
            shells = unit_ball_volume(n) * (caps[1:] ** n - caps[:-1] ** n)
            return float(np.dot(self.values, shells))
        if n <= 3:
            return float(self.ball_mass_many(np.asarray(dist), np.asarray(radius)))
        inter = np.array(
            [
                ball_intersection_volume(n, center, radius, np.zeros(n), e) if e > 0 else 0.0
                for e in self.edges
            ]
        )
        return float(np.dot(self.values, inter[1:] - inter[:-1]))

    def ball_mass_many(self, dist: np.ndarray, radius: np.ndarray) -> np.ndarray:
        """Vectorized mass of closed balls B(x, radius) with |x| = dist, n <= 3."""
        dist = np.asarray(dist, dtype=float)
        radius = np.asarray(radius, dtype=float)
        out = np.zeros(np.broadcast(dist, radius).shape)
        for k, v in enumerate(self.values):
            if v == 0.0:
                continue
            outer = ball_intersection_profile(self.dimension, dist, radius, self.edges[k + 1])
            inner = (
                ball_intersection_profile(self.dimension, dist, radius, self.edges[k])
                if self.edges[k] > 0
                else 0.0
            )
            out += v * (outer - inner)
        return out

    def quadrature_nodes(self, panels: int = 8, gauss: int = 12, sphere_order: int = 64):
        key = (panels, gauss, sphere_order)
        cached = self._node_cache.get(key)
        if cached is not None:
            return cached
        n = self.dimension
        rule = sphere_quadrature(n, sphere_order)
        gl_x, gl_w = np.polynomial.legendre.leggauss(gauss)
        radii = []
        rweights = []
        for k, v in enumerate(self.values):
            if v == 0.0:
                continue
            sub = np.linspace(self.edges[k], self.edges[k + 1], panels + 1)
            for a, b in zip(sub[:-1], sub[1:]):
                mid, half = 0.5 * (a + b), 0.5 * (b - a)
                r = mid + half * gl_x
                radii.append(r)
                rweights.append(v * half * gl_w * r ** (n - 1))
        if not radii:
            pts = np.zeros((0, n))
            return pts, np.zeros(0)
        radii_a = np.concatenate(radii)
        rweights_a = np.concatenate(rweights)
        pts = (radii_a[:, None, None] * rule.nodes[None, :, :]).reshape(-1, n)
        wts = (rweights_a[:, None] * rule.weights[None, :]).reshape(-1)
        self._node_cache[key] = (pts, wts)
        return pts, wts


class BoxDensityMeasure(Measure):
    """Piecewise-constant density on the cells of a rectangular grid."""

    SUBGRID = 4  # per-axis subsampling when a cell straddles a ball boundary

    def __init__(self, lo, hi, values: np.ndarray):
        lo = np.asarray(lo, dtype=float).reshape(-1)
        hi = np.asarray(hi, dtype=float).reshape(-1)
        values = np.asarray(values, dtype=float)
        if values.ndim != len(lo) or len(lo) != len(hi):
            raise ValueError("values must be an n-dimensional grid matching the box corners")
        if np.any(hi <= lo):
            raise ValueError("box corners must satisfy lo < hi componentwise")
        if np.any(values < 0):
            raise ValueError("density values must be nonnegative")
        self.lo = lo
        self.hi = hi
        self.values = values
        self.dimension = len(lo)
        self._centers, self._cell_vol = self._cell_grid()
        self._node_cache: dict = {}

    def _cell_grid(self):
        axes = [
            np.linspace(self.lo[i], self.hi[i], self.values.shape[i] + 1)
            for i in range(self.dimension)
        ]
        mids = [0.5 * (a[:-1] + a[1:]) for a in axes]
        mesh = np.meshgrid(*mids, indexing="ij")
        centers = np.stack([m.reshape(-1) for m in mesh], axis=1)
        widths = [(self.hi[i] - self.lo[i]) / self.values.shape[i] for i in range(self.dimension)]
        return centers, float(np.prod(widths))

    @property
    def cell_widths(self) -> np.ndarray:
        return (self.hi - self.lo) / np.asarray(self.values.shape)

    @property
    def total_mass(self) -> float:
        return float(np.sum(self.values) * self._cell_vol)

    @property
    def support_radius(self) -> float:
        corners = np.abs(np.stack([self.lo, self.hi]))
        return float(np.linalg.norm(np.max(corners, axis=0)))

    def dilate(self, t: float) -> "BoxDensityMeasure":
        if t <= 0:
            raise ValueError("dilation factor must be positive")
        return BoxDensityMeasure(t * self.lo, t * self.hi, self.values / t**self.dimension)

    def scaled(self, factor: float) -> "BoxDensityMeasure":
        return BoxDensityMeasure(self.lo, self.hi, factor * self.values)

    def density_at(self, point) -> float:
        p = np.asarray(point, dtype=float).reshape(self.dimension)
        if np.any(p < self.lo) or np.any(p > self.hi):
            return 0.0
        idx = np.minimum(
            ((p - self.lo) / self.cell_widths).astype(int),
            np.asarray(self.values.shape) - 1,
        )
        return float(self.values[tuple(idx)])

    def density_at_many(self, points: np.ndarray) -> np.ndarray:
        pts = np.atleast_2d(points)
        inside = np.all(pts >= self.lo, axis=1) & np.all(pts <= self.hi, axis=1)
        out = np.zeros(len(pts))
        if np.any(inside):
            idx = np.minimum(
                ((pts[inside] - self.lo) / self.cell_widths).astype(int),
                np.asarray(self.values.shape) - 1,
            )
            out[inside] = self.values[tuple(idx.T)]
        return out

    def _cell_ball_fraction(self, center, radius: float) -> np.ndarray:
        """Fraction of each cell inside the closed ball B(center, radius)."""
        c = np.asarray(center, dtype=float).reshape(self.dimension)
        half = 0.5 * self.cell_widths
        diag = float(np.linalg.norm(half))
        d = np.linalg.norm(self._centers - c, axis=1)
        frac = np.zeros(len(self._centers))
        frac[d + diag <= radius] = 1.0
        boundary = (d - diag <= radius) & (frac == 0.0)
        if np.any(boundary):
            s = self.SUBGRID
            offs = (np.arange(s) + 0.5) / s - 0.5
            mesh = np.meshgrid(*([offs] * self.dimension), indexing="ij")
            sub = np.stack([m.reshape(-1) for m in mesh], axis=1) * self.cell_widths
            for i in np.nonzero(boundary)[0]:
                pts = self._centers[i] + sub
                frac[i] = np.mean(np.linalg.norm(pts - c, axis=1) <= radius)
        return frac

    def ball_mass(self, center, radius: float) -> float:
        if radius < 0:
            raise ValueError("radius must be nonnegative")
        if radius == 0:
            return 0.0
        frac = self._cell_ball_fraction(center, radius)
        return float(np.dot(self.values.reshape(-1), frac) * self._cell_vol)

    def quadrature_nodes(self, panels: int = 8, gauss: int = 12, sphere_order: int = 64):
        key = (panels, gauss, sphere_order)
        cached = self._node_cache.get(key)
        if cached is not None:
            return cached
        wts = self.values.reshape(-1) * self._cell_vol
        keep = wts > 0
        nodes = (self._centers[keep], wts[keep])
        self._node_cache[key] = nodes
        return nodes


@dataclass(frozen=True)
class SplitMeasure:
    """Concentration split of a dilated measure at radius r_t = sqrt(t)."""

    inner: Measure
    outer: Optional[Measure]
    r_t: float
    eps_t: float


def dilate(measure: Measure, t: float) -> Measure:
    """Pushforward of the measure under y -> t*y (mass preserving)."""
    return measure.dilate(t)


def split(measure: Measure, t: float) -> SplitMeasure:
    """Split the dilated measure at the concentration radius sqrt(t).

    Returns the inner part (restriction to the closed ball B(0, sqrt(t))),
    the outer remainder (None when empty), the radius, and the escaping
    mass fraction eps_t = outer mass / total mass.
    """
    if t <= 0:
        raise ValueError("dilation factor must be positive")
    r_t = math.sqrt(t)
    total = measure.total_mass
    dilated = measure.dilate(t)
    if isinstance(dilated, AtomicMeasure):
        d = np.linalg.norm(dilated.points, axis=1)
        inside = d <= r_t
        inner = (
            AtomicMeasure(dilated.points[inside], dilated.weights[inside])
            if np.any(inside)
            else _EmptyMeasure(measure.dimension)
        )
        outer = (
            AtomicMeasure(dilated.points[~inside], dilated.weights[~inside])
            if np.any(~inside)
            else None
        )
        eps = float(np.sum(dilated.weights[~inside]) / total)
    elif isinstance(dilated, RadialDensityMeasure):
        edges = dilated.edges.copy()
        values = dilated.values.copy()
        if edges[0] < r_t < edges[-1] and not np.any(edges == r_t):
            pos = int(np.searchsorted(edges, r_t))
            edges = np.insert(edges, pos, r_t)
            values = np.insert(values, pos - 1, values[pos - 1])
        cut = int(np.sum(edges[1:] <= r_t))  # bins fully inside the core
        inner = (
            RadialDensityMeasure(measure.dimension, edges[: cut + 1], values[:cut])
            if cut >= 1
            else _EmptyMeasure(measure.dimension)
        )
        if cut < len(values):
            outer = RadialDensityMeasure(measure.dimension, edges[cut:], values[cut:])
            eps = outer.total_mass / total
        else:
            outer = None
            eps = 0.0
    elif isinstance(dilated, BoxDensityMeasure):
        frac = dilated._cell_ball_fraction(np.zeros(measure.dimension), r_t)
        frac_grid = frac.reshape(dilated.values.shape)
        inner_vals = dilated.values * frac_grid
        outer_vals = dilated.values * (1.0 - frac_grid)
        inner = BoxDensityMeasure(dilated.lo, dilated.hi, inner_vals)
        outer_mass = float(np.sum(outer_vals) * dilated._cell_vol)
        outer = BoxDensityMeasure(dilated.lo, dilated.hi, outer_vals) if outer_mass > 0 else None
        eps = outer_mass / total
    else:
        raise TypeError(f"unsupported measure type {type(dilated)!r}")
    return SplitMeasure(inner=inner, outer=outer, r_t=r_t, eps_t=float(eps))


class _EmptyMeasure(Measure):
    def __init__(self, n: int):
        self.dimension = n

    @property
    def total_mass(self) -> float:
        return 0.0

    @property
    def support_radius(self) -> float:
        return 0.0

    def dilate(self, t: float) -> "Measure":
        return self

    def scaled(self, factor: float) -> "Measure":
        return self

    def ball_mass(self, center, radius: float) -> float:
        return 0.0

    def quadrature_nodes(self, panels: int = 8, gauss: int = 12, sphere_order: int = 64):
        return np.zeros((0, self.dimension)), np.zeros(0)


def ball_mass(measure: Measure, center, radius: float) -> float:
    """Mass of the closed ball B(center, radius) under the measure."""
    return measure.ball_mass(center, radius)
