"""Point evaluation of the five operator families.

Families (all act on finite positive measures):

* radial maximal:     sup_r r^-(n-a) * integral Phi(|x-y|/r) dmu(y)
* homogeneous maximal: sup_r r^-(n-a) * integral_{B(x,r)} |Omega(x-y)| dmu(y)
* fractional integral: integral Omega(x-y) / |x-y|^(n-a) dmu(y)
* truncated maximal:  sup_e | integral_{|x-y|>e} Omega(x-y) / |x-y|^n dmu(y) |
* convolution:        integral g(x-y) dmu(y)

Atomic measures admit exact algorithms: with closed balls the supremum
over radii is realized at atom distances, so a prefix scan over sorted
distances (maximal families) or a suffix scan (truncated family) is
exact.  Density measures are handled through quadrature nodes plus
one-dimensional search, which yields certified lower bounds for the
suprema; the indicator-profile maximal against radial densities uses
exact ball-intersection volumes instead.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Optional, Union

import numpy as np

from ._search import multistart_max_log
from .geometry import sphere_quadrature
from .kernels import HomogeneousKernel, RadialProfile, check_frac_order, mean_zero_defect
from .measures import AtomicMeasure, Measure, RadialDensityMeasure

__all__ = [
    "SingularPointError",
    "OperatorSpec",
    "maximal_radial",
    "maximal_homog",
    "frac_integral",
    "truncated_maximal",
    "convolve",
    "evaluate",
    "operator_field",
]

FAMILIES = (
    "radial_maximal",
    "homog_maximal",
    "frac_integral",
    "truncated_maximal",
    "convolution",
)


class SingularPointError(ValueError):
    """Raised when an operator is evaluated on top of a point mass."""


@dataclass(frozen=True)
class OperatorSpec:
    """Operator family together with its kernel and fractional order."""

    family: str
    kernel: Union[RadialProfile, HomogeneousKernel, Callable]
    alpha: float = 0.0
    dimension: Optional[int] = None

    def __post_init__(self) -> None:
        if self.family not in FAMILIES:
            raise ValueError(f"unknown operator family {self.family!r}")
        if self.family == "radial_maximal" and not isinstance(self.kernel, RadialProfile):
            raise ValueError("radial maximal operator needs a radial profile kernel")
        if self.family in ("homog_maximal", "frac_integral", "truncated_maximal") and not isinstance(
            self.kernel, HomogeneousKernel
        ):
            raise ValueError(f"{self.family} needs a homogeneous kernel")
        if self.family == "convolution":
            if not callable(self.kernel):
                raise ValueError("convolution needs a callable kernel g")
            if self.dimension is None:
                raise ValueError("convolution spec must state the dimension")
        if self.family == "truncated_maximal" and self.alpha != 0.0:
            raise ValueError("the truncated maximal operator is defined at order 0")
        check_frac_order(self.alpha, self.n)

    @property
    def n(self) -> int:
        if self.dimension is not None:
            return self.dimension
        return self.kernel.dimension  # type: ignore[union-attr]


# ---------------------------------------------------------------------------
# exact atomic scans


def _grouped_distances(dists: np.ndarray, contribs: np.ndarray):
    order = np.argsort(dists)
    d = dists[order]
    c = contribs[order]
    uniq, start = np.unique(d, return_index=True)
    sums = np.add.reduceat(c, start)
    return uniq, sums


def _prefix_max(dists: np.ndarray, contribs: np.ndarray, m_exp: float) -> float:
    """max_k (sum of contribs within distance d_k) / d_k^m over atom distances."""
    uniq, sums = _grouped_distances(dists, contribs)
    if uniq[0] == 0.0:
        raise SingularPointError("evaluation point coincides with an atom")
    prefix = np.cumsum(sums)
    return float(np.max(prefix / uniq**m_exp))


def _suffix_absmax(dists: np.ndarray, terms: np.ndarray) -> float:
    """max over truncation cuts of |sum of terms beyond the cut| (ties merged)."""
    uniq, sums = _grouped_distances(dists, terms)
    if uniq[0] == 0.0:
        raise SingularPointError("evaluation point coincides with an atom")
    suffix = np.cumsum(sums[::-1])
    return float(np.max(np.abs(suffix)))


# ---------------------------------------------------------------------------
# radial maximal


def _atoms_of(mu: Measure):
    pts, wts = mu.quadrature_nodes()
    return np.atleast_2d(pts), np.asarray(wts)


def _indicator_radial_density_max(
    mu: RadialDensityMeasure, dist: float, m_exp: float, rel_tol: float
) -> float:
    edges = mu.edges
    anchors = []
    for e in edges:
        if dist + e > 0:
            anchors.append(dist + e)
        if abs(dist - e) > 0:
            anchors.append(abs(dist - e))
    if dist > 0:
        anchors.append(dist)
    f = lambda r: r ** (-m_exp) * mu.ball_mass_many(np.asarray(dist), np.asarray(r)).item()
    _, val = multistart_max_log(f, anchors, rel_tol=rel_tol)
    return val


def maximal_radial(
    profile: RadialProfile,
    alpha: float,
    mu: Measure,
    x,
    rel_tol: float = 1e-8,
) -> float:
    """Radial maximal operator of the measure at x.

    Indicator profile + atoms: exact prefix scan over atom distances.
    Indicator profile + densities: continuum maximization of
    r^-(n-a) * mu(B(x,r)) with restarts at the geometric kink radii.
    General decreasing profiles: one-dimensional maximization with
    restarts at every atom (or quadrature node) distance.
    """
    n = profile.dimension
    alpha = check_frac_order(alpha, n)
    m_exp = n - alpha
    x = np.asarray(x, dtype=float).reshape(n)
    if mu.total_mass == 0.0:
        return 0.0
    if profile.variant == RadialProfile.INDICATOR:
        if isinstance(mu, AtomicMeasure):
            d = np.linalg.norm(mu.points - x, axis=1)
            return _prefix_max(d, mu.weights, m_exp)
        if isinstance(mu, RadialDensityMeasure) and n <= 3:
            return _indicator_radial_density_max(mu, float(np.linalg.norm(x)), m_exp, rel_tol)
        # box densities and high dimensions: search on ball masses
        dist = float(np.linalg.norm(x))
        s = mu.support_radius
        anchors = [a for a in (abs(dist - s), dist, dist + s, s) if a > 0]
        f = lambda r: r ** (-m_exp) * mu.ball_mass(x, r)
        _, val = multistart_max_log(f, anchors, rel_tol=rel_tol)
        return val
    pts, wts = _atoms_of(mu)
    d = np.linalg.norm(pts - x, axis=1)
    if np.any(d == 0.0) and float(profile(0.0)) > 0:
        raise SingularPointError("evaluation point coincides with an atom")
    sup_rad = profile.support_radius
    anchors = set(d[d > 0])
    if math.isfinite(sup_rad) and sup_rad > 0:
        anchors |= {di / sup_rad for di in d if di > 0}
    if not anchors:
        anchors = {1.0}

    def g(r: float) -> float:
        return r ** (-m_exp) * float(np.dot(wts, profile(d / r)))

    _, val = multistart_max_log(g, anchors, rel_tol=rel_tol)
    return val


# ---------------------------------------------------------------------------
# homogeneous maximal / fractional integral / truncated maximal


def maximal_homog(kernel: HomogeneousKernel, alpha: float, mu: Measure, x) -> float:
    """max over radii of r^-(n-a) * integral_{B(x,r)} |Omega(x-y)| dmu(y).

    Exact for atoms (the supremum is attained at atom distances because
    the ball integral is constant between consecutive distances while the
    prefactor decreases); densities are evaluated on quadrature nodes,
    which makes the result a lower-bound estimate on the node grid.
    """
    n = kernel.dimension
    alpha = check_frac_order(alpha, n)
    x = np.asarray(x, dtype=float).reshape(n)
    if mu.total_mass == 0.0:
        return 0.0
    pts, wts = _atoms_of(mu)
    diffs = x - pts
    d = np.linalg.norm(diffs, axis=1)
    if np.any(d == 0.0):
        raise SingularPointError("evaluation point coincides with an atom")
    contribs = np.abs(kernel(diffs)) * wts
    return _prefix_max(d, contribs, n - alpha)


def _pv_integral(
    kernel: HomogeneousKernel,
    mu: Measure,
    x: np.ndarray,
    rel_tol: float,
    rule_order: int,
) -> float:
    """Principal value of the order-0 integral at an interior point.

    Everything is integrated in polar coordinates around x (radial
    Gauss panels times a sphere rule, with panels split at the radii
    where the density can jump).  The truncated integrals over
    {|x - y| > eps_k} with eps_k = eps0 * 2^-k are extrapolated by a
    two-term Richardson rule; convergence is declared when successive
    extrapolants agree to ``rel_tol``.  Requires a (numerically)
    mean-zero kernel.
    """
    n = kernel.dimension
    rule = sphere_quadrature(n, rule_order)
    defect = mean_zero_defect(kernel, rule)
    if defect >= 1e-8:
        raise ValueError(
            f"principal value needs a mean-zero kernel; sphere integral defect {defect:.3e}"
        )
    kern_sphere = kernel.on_sphere(rule.nodes)
    gl_x, gl_w = np.polynomial.legendre.leggauss(12)
    support = mu.support_radius
    dist = float(np.linalg.norm(x))
    d_max = dist + support
    if hasattr(mu, "density_jump_radii_from"):
        anchors = np.asarray(mu.density_jump_radii_from(x), dtype=float)
    else:
        anchors = np.array([abs(dist - support), d_max])
        anchors = anchors[anchors > 0]
    anchors = anchors[anchors <= d_max * (1 + 1e-12)]
    nearest_jump = float(anchors.min()) if len(anchors) else d_max
    eps0 = max(0.5 * nearest_jump, 1e-9 * max(support, 1.0))

    if hasattr(mu, "density_at_many"):
        density_many = mu.density_at_many
    else:
        density_many = lambda pts: np.array([mu.density_at(p) for p in pts])

    def segment(a: float, b: float) -> float:
        """integral over a < |z| < b of Omega(z)/|z|^n f(x - z) dz."""
        if b <= a:
            return 0.0
        cuts = np.unique(np.concatenate([[a, b], anchors[(anchors > a) & (anchors < b)]]))
        acc = 0.0
        for lo, hi in zip(cuts[:-1], cuts[1:]):
            splits = max(1, int(math.ceil(math.log2(hi / lo))) if lo > 0 else 4)
            sub = np.geomspace(lo, hi, splits + 1) if lo > 0 else np.linspace(lo, hi, splits + 1)
            for p, q in zip(sub[:-1], sub[1:]):
                mid, half = 0.5 * (p + q), 0.5 * (q - p)
                radii = mid + half * gl_x
                pts = x[None, None, :] - radii[:, None, None] * rule.nodes[None, :, :]
                fv = density_many(pts.reshape(-1, n)).reshape(len(radii), -1)
                angular = fv @ (rule.weights * kern_sphere)
                acc += float(np.dot(half * gl_w / radii, angular))
        return acc

    partial = segment(eps0, d_max)  # integral over {|x-y| > eps0}
    prev_extrap = None
    eps = eps0
    for _ in range(40):
        nxt = eps / 2.0
        partial_next = partial + segment(nxt, eps)
        extrap = 2.0 * partial_next - partial
        if prev_extrap is not None and abs(extrap - prev_extrap) <= rel_tol * max(1.0, abs(extrap)):
            return extrap
        prev_extrap = extrap
        partial = partial_next
        eps = nxt
    return prev_extrap if prev_extrap is not None else partial


def frac_integral(
    kernel: HomogeneousKernel,
    alpha: float,
    mu: Measure,
    x,
    pv_rel_tol: float = 1e-6,
    rule_order: int = 64,
) -> float:
    """integral of Omega(x-y) / |x-y|^(n-a) against the measure.

    Atoms: absolutely convergent sum (error on top of an atom).  Density
    measures: quadrature-node sum; at order 0 with x inside the support
    the value is computed as a principal value over shrinking annuli.
    """
    n = kernel.dimension
    alpha = check_frac_order(alpha, n)
    x = np.asarray(x, dtype=float).reshape(n)
    if mu.total_mass == 0.0:
        return 0.0
    if isinstance(mu, AtomicMeasure):
        diffs = x - mu.points
        d = np.linalg.norm(diffs, axis=1)
        if np.any(d == 0.0):
            raise SingularPointError("evaluation point coincides with an atom")
        return float(np.dot(mu.weights, kernel(diffs) / d ** (n - alpha)))
    inside = float(np.linalg.norm(x)) <= mu.support_radius
    if alpha == 0.0 and inside and mu.density_at(x) > 0.0:
        return _pv_integral(kernel, mu, x, pv_rel_tol, rule_order)
    pts, wts = mu.quadrature_nodes()
    diffs = x - pts
    d = np.linalg.norm(diffs, axis=1)
    if np.any(d == 0.0):
        raise SingularPointError("evaluation point lies on a quadrature node")
    return float(np.dot(wts, kernel(diffs) / d ** (n - alpha)))


def truncated_maximal(kernel: HomogeneousKernel, mu: Measure, x) -> float:
    """sup over truncation radii of |integral_{|x-y|>e} Omega(x-y)/|x-y|^n dmu|.

    For atoms the supremum is attained between consecutive distances, so
    a suffix scan over atoms sorted by distance (ties merged, farthest
    first) is exact.  Densities go through their quadrature nodes, which
    aligns the truncation grid with node-distance quantiles.
    """
    n = kernel.dimension
    x = np.asarray(x, dtype=float).reshape(n)
    if mu.total_mass == 0.0:
        return 0.0
    pts, wts = _atoms_of(mu)
    diffs = x - pts
    d = np.linalg.norm(diffs, axis=1)
    if np.any(d == 0.0):
        raise SingularPointError("evaluation point coincides with an atom")
    terms = kernel(diffs) / d**n * wts
    return _suffix_absmax(d, terms)


def convolve(g: Callable, mu: Measure, x) -> float:
    """integral of g(x - y) against the measure; g must be finite there."""
    x = np.asarray(x, dtype=float).reshape(-1)
    if mu.total_mass == 0.0:
        return 0.0
    pts, wts = _atoms_of(mu)
    vals = np.asarray(g(x[None, :] - pts), dtype=float).reshape(-1)
    if not np.all(np.isfinite(vals)):
        raise SingularPointError("convolution kernel is singular at an atom offset")
    return float(np.dot(wts, vals))


def evaluate(spec: OperatorSpec, mu: Measure, x) -> float:
    """Evaluate the operator described by the spec at a single point."""
    if spec.family == "radial_maximal":
        return maximal_radial(spec.kernel, spec.alpha, mu, x)
    if spec.family == "homog_maximal":
        return maximal_homog(spec.kernel, spec.alpha, mu, x)
    if spec.family == "frac_integral":
        return frac_integral(spec.kernel, spec.alpha, mu, x)
    if spec.family == "truncated_maximal":
        return truncated_maximal(spec.kernel, mu, x)
    return convolve(spec.kernel, mu, x)


# ---------------------------------------------------------------------------
# vectorized fields for the level-set estimators


_CHUNK = 1024


def _hl_radial_density_field(
    mu: RadialDensityMeasure, alpha: float, grid_size: int = 192, zooms: int = 3
) -> Callable[[np.ndarray], np.ndarray]:
    """Vectorized indicator-profile maximal against a radial density.

    Per point: evaluate F(r) = r^-(n-a) mu(B(x,r)) on a log radius grid
    that always contains the geometric kink radii |dist +- edge|, then
    zoom the grid around the argmax.  The kink anchors make the flat
    full-containment plateau exact to rounding.
    """
    n = mu.dimension
    m_exp = n - alpha
    edges = mu.edges

    def field(points: np.ndarray) -> np.ndarray:
        points = np.atleast_2d(points)
        out = np.empty(len(points))
        for lo_i in range(0, len(points), _CHUNK):
            chunk = points[lo_i : lo_i + _CHUNK]
            dist = np.linalg.norm(chunk, axis=1)
            anchors = []
            for e in edges:
                anchors.append(np.abs(dist - e))
                anchors.append(dist + e)
            anchors = np.stack(anchors, axis=1)
            pos = np.where(anchors > 0, anchors, np.nan)
            r_lo = np.nanmin(pos, axis=1) * 0.5
            r_hi = np.nanmax(anchors, axis=1) * 2.0 + 1e-300
            r_lo = np.maximum(r_lo, 1e-9 * r_hi)
            lo_log, hi_log = np.log(r_lo), np.log(r_hi)
            best = np.zeros(len(chunk))
            for zoom in range(zooms):
                steps = np.linspace(0.0, 1.0, grid_size)
                radii = np.exp(lo_log[:, None] + (hi_log - lo_log)[:, None] * steps[None, :])
                if zoom == 0:
                    radii = np.concatenate([radii, anchors], axis=1)
                with np.errstate(divide="ignore"):
                    vals = radii ** (-m_exp) * mu.ball_mass_many(dist[:, None], radii)
                vals = np.where(radii > 0, vals, 0.0)
                arg = np.argmax(vals, axis=1)
                best = np.maximum(best, vals[np.arange(len(chunk)), arg])
                # zoom only over the regular part of the grid
                arg_reg = np.argmax(vals[:, :grid_size], axis=1)
                width = (hi_log - lo_log) / (grid_size - 1)
                center = lo_log + width * arg_reg
                lo_log = center - 2.0 * width
                hi_log = center + 2.0 * width
            out[lo_i : lo_i + _CHUNK] = best
        return out

    return field


def _kernel_terms(kernel, chunk: np.ndarray, pts: np.ndarray, guard: float):
    diffs = chunk[:, None, :] - pts[None, :, :]
    d = np.sqrt(np.sum(diffs * diffs, axis=2))
    d = np.maximum(d, guard)
    flat = diffs.reshape(-1, diffs.shape[2])
    norms = np.maximum(np.linalg.norm(flat, axis=1), guard)
    kvals = kernel.on_sphere(flat / norms[:, None]).reshape(d.shape)
    return d, kvals


def _field_over_nodes(mu: Measure, per_chunk: Callable[[np.ndarray], np.ndarray]):
    def field(points: np.ndarray) -> np.ndarray:
        points = np.atleast_2d(points)
        out = np.empty(len(points))
        for lo in range(0, len(points), _CHUNK):
            out[lo : lo + _CHUNK] = per_chunk(points[lo : lo + _CHUNK])
        return out

    return field


def operator_field(spec: OperatorSpec, mu: Measure, guard: float = 0.0) -> Callable:
    """Vectorized map (m, n) points -> (m,) operator values.

    ``guard`` clamps point-to-mass distances away from zero so that the
    Monte Carlo estimators never evaluate exactly on a point mass; the
    clamp only affects a set of measure zero.
    """
    n = spec.n
    if guard == 0.0:
        guard = 1e-12 * max(1.0, mu.support_radius)
    if spec.family == "radial_maximal":
        profile: RadialProfile = spec.kernel
        if (
            profile.variant == RadialProfile.INDICATOR
            and isinstance(mu, RadialDensityMeasure)
            and n <= 3
        ):
            return _hl_radial_density_field(mu, spec.alpha)

        def pointwise(points: np.ndarray) -> np.ndarray:
            points = np.atleast_2d(points)
            return np.array([maximal_radial(profile, spec.alpha, mu, p) for p in points])

        return pointwise
    if spec.family == "convolution":
        g = spec.kernel
        pts, wts = mu.quadrature_nodes()

        def conv_chunk(chunk: np.ndarray) -> np.ndarray:
            diffs = chunk[:, None, :] - pts[None, :, :]
            vals = np.asarray(g(diffs.reshape(-1, n)), dtype=float).reshape(len(chunk), -1)
            return vals @ wts

        return _field_over_nodes(mu, conv_chunk)

    kernel: HomogeneousKernel = spec.kernel
    pts, wts = mu.quadrature_nodes()
    m_exp = n - spec.alpha

    if spec.family == "frac_integral":

        def frac_chunk(chunk: np.ndarray) -> np.ndarray:
            d, kvals = _kernel_terms(kernel, chunk, pts, guard)
            return (kvals / d**m_exp) @ wts

        return _field_over_nodes(mu, frac_chunk)

    if spec.family == "homog_maximal":

        def homog_chunk(chunk: np.ndarray) -> np.ndarray:
            d, kvals = _kernel_terms(kernel, chunk, pts, guard)
            contrib = np.abs(kvals) * wts[None, :]
            order = np.argsort(d, axis=1)
            d_sorted = np.take_along_axis(d, order, axis=1)
            c_sorted = np.take_along_axis(contrib, order, axis=1)
            prefix = np.cumsum(c_sorted, axis=1)
            return np.max(prefix / d_sorted**m_exp, axis=1)

        return _field_over_nodes(mu, homog_chunk)

    def trunc_chunk(chunk: np.ndarray) -> np.ndarray:
        d, kvals = _kernel_terms(kernel, chunk, pts, guard)
        terms = kvals / d**n * wts[None, :]
        order = np.argsort(-d, axis=1)
        t_sorted = np.take_along_axis(terms, order, axis=1)
        suffix = np.cumsum(t_sorted, axis=1)
        return np.max(np.abs(suffix), axis=1)

    return _field_over_nodes(mu, trunc_chunk)
