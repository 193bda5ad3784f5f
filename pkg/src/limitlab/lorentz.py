"""Distribution functions and weak quasi-norms over truncated domains.

The estimators measure super-level sets |{x in D : |f(x)| > lambda}| by
stratified Monte Carlo (radial shells on annular domains) and assemble
the weak quasi-norm sup_lambda lambda * measure^(1/p) on a geometric
lambda grid.  All sampling is driven by counter-based substreams of one
master seed: a (seed, stratum) pair always reproduces the same points,
independent of thread count, and every lambda threshold is applied to
the same shared sample, which makes the reported level-set measures
exactly nonincreasing in lambda.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence, Tuple

import numpy as np

from ._rng import substream
from .geometry import SphereRule, unit_ball_volume
from .kernels import HomogeneousKernel, check_frac_order, sphere_norm
from .measures import AtomicMeasure, BoxDensityMeasure, Measure, RadialDensityMeasure

__all__ = [
    "EvalDomain",
    "LevelSetEstimate",
    "WeakNormEstimate",
    "WeakYoungReport",
    "distribution",
    "distribution_profile",
    "weak_norm",
    "closed_form_levelset",
    "weak_young_check",
]


@dataclass(frozen=True)
class EvalDomain:
    """Region over which level sets are measured.

    exterior:        {rho <= |x| <= outer}
    box:             product of the intervals [lo_i, hi_i]
    fullspace_proxy: box [-outer, outer]^n with the ball B(0, rho) removed
    """

    kind: str
    dimension: int
    rho: float = 0.0
    outer: float = 0.0
    lo: Tuple[float, ...] = ()
    hi: Tuple[float, ...] = ()

    @classmethod
    def exterior(cls, n: int, rho: float, outer: float) -> "EvalDomain":
        if not 0 <= rho < outer:
            raise ValueError("need 0 <= rho < outer")
        return cls("exterior", n, rho=rho, outer=outer)

    @classmethod
    def box(cls, lo: Sequence[float], hi: Sequence[float]) -> "EvalDomain":
        lo_t = tuple(float(v) for v in lo)
        hi_t = tuple(float(v) for v in hi)
        if len(lo_t) != len(hi_t) or any(b <= a for a, b in zip(lo_t, hi_t)):
            raise ValueError("box corners must satisfy lo < hi componentwise")
        return cls("box", len(lo_t), lo=lo_t, hi=hi_t)

    @classmethod
    def fullspace_proxy(cls, n: int, outer: float, guard: float = 0.0) -> "EvalDomain":
        if guard < 0 or guard > outer:
            raise ValueError("guard ball must fit inside the box")
        return cls("fullspace_proxy", n, rho=guard, outer=outer)

    @property
    def measure(self) -> float:
        n = self.dimension
        if self.kind == "exterior":
            return unit_ball_volume(n) * (self.outer**n - self.rho**n)
        if self.kind == "box":
            return float(np.prod(np.asarray(self.hi) - np.asarray(self.lo)))
        return (2.0 * self.outer) ** n - unit_ball_volume(n) * self.rho**n

    def sample_stratum(
        self, index: int, strata: int, count: int, rng: np.random.Generator
    ) -> Tuple[np.ndarray, np.ndarray]:
        """(points, in_domain mask) for equal-measure stratum ``index``.

        Annular domains stratify into radial shells of equal volume with
        inverse-CDF radius sampling; boxes (and the full-space proxy box)
        stratify into slabs along the first axis.  Points of a proxy
        stratum that land in the guard ball are masked out rather than
        resampled, so stratum volumes stay exact.
        """
        n = self.dimension
        if self.kind == "exterior":
            lo_n = self.rho**n + (self.outer**n - self.rho**n) * index / strata
            hi_n = self.rho**n + (self.outer**n - self.rho**n) * (index + 1) / strata
            u = rng.random(count)
            radii = (lo_n + u * (hi_n - lo_n)) ** (1.0 / n)
            dirs = rng.standard_normal((count, n))
            dirs /= np.linalg.norm(dirs, axis=1, keepdims=True)
            return radii[:, None] * dirs, np.ones(count, dtype=bool)
        if self.kind == "box":
            lo = np.asarray(self.lo)
            hi = np.asarray(self.hi)
        else:
            lo = np.full(n, -self.outer)
            hi = np.full(n, self.outer)
        width0 = (hi[0] - lo[0]) / strata
        pts = lo + rng.random((count, n)) * (hi - lo)
        pts[:, 0] = lo[0] + width0 * (index + rng.random(count))
        if self.kind == "fullspace_proxy" and self.rho > 0:
            mask = np.linalg.norm(pts, axis=1) > self.rho
        else:
            mask = np.ones(count, dtype=bool)
        return pts, mask

    def stratum_measure(self, strata: int) -> float:
        if self.kind == "exterior":
            return self.measure / strata
        if self.kind == "box":
            return self.measure / strata
        # proxy strata are box slabs; the guard exclusion is handled by masking
        return (2.0 * self.outer) ** self.dimension / strata


@dataclass(frozen=True)
class LevelSetEstimate:
    """Estimated measure of {x in domain : |f(x)| > lam}."""

    lam: float
    measure_est: float
    std_error: float
    samples: int
    method: str
    seed: Optional[int] = None

    def to_dict(self) -> dict:
        return {
            "lambda": self.lam,
            "estimate": self.measure_est,
            "std_error": self.std_error,
            "method": self.method,
            "samples": self.samples,
            "seed": self.seed,
        }


@dataclass(frozen=True)
class WeakNormEstimate:
    """Grid-limited lower bound for sup_lam lam * |{|f| > lam}|^(1/p)."""

    p: float
    value: float
    argmax_lam: float
    lam_grid: np.ndarray
    estimates: Tuple[LevelSetEstimate, ...] = field(default=(), repr=False)

    def to_dict(self) -> dict:
        return {
            "p": self.p,
            "value": self.value,
            "argmax_lambda": self.argmax_lam,
            "lambda_grid": [float(v) for v in self.lam_grid],
        }


def _evaluate_strata(
    f: Callable[[np.ndarray], np.ndarray],
    domain: EvalDomain,
    budget: int,
    seed: int,
    strata: int,
    threads: int,
    path: Tuple[int, ...] = (),
):
    per = budget // strata
    if per < 1:
        strata = max(1, budget)
        per = 1

    def one(idx: int):
        rng = substream(seed, *path, idx)
        pts, mask = domain.sample_stratum(idx, strata, per, rng)
        vals = np.zeros(per)
        if np.any(mask):
            vals[mask] = np.abs(np.asarray(f(pts[mask]), dtype=float))
        vals[~mask] = -math.inf  # never exceeds any positive threshold
        return vals

    if threads and threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            all_vals = list(pool.map(one, range(strata)))
    else:
        all_vals = [one(i) for i in range(strata)]
    return all_vals, per, strata


def distribution_profile(
    f: Callable[[np.ndarray], np.ndarray],
    lams: Sequence[float],
    domain: EvalDomain,
    budget: int,
    seed: int,
    strata: int = 32,
    threads: int = 1,
    tail: Optional[Callable[[float], float]] = None,
    path: Tuple[int, ...] = (),
) -> Tuple[LevelSetEstimate, ...]:
    """Level-set measures of |f| at several thresholds on one shared sample.

    Sharing the sample across thresholds keeps the estimates exactly
    nonincreasing in lambda.  ``tail(lam)`` may supply the analytic
    measure of the level set outside the truncated domain; it is added
    with zero variance.  ``path`` prefixes the per-stratum stream index,
    letting callers run many independent estimates off one master seed.
    """
    lams = [float(l) for l in lams]
    if any(l <= 0 for l in lams):
        raise ValueError("thresholds must be positive")
    if budget < 100:
        raise ValueError("sampling budget must be at least 100")
    all_vals, per, strata = _evaluate_strata(f, domain, budget, seed, strata, threads, path=path)
    vol = domain.stratum_measure(strata)
    total = per * strata
    floor = domain.measure * 0.5 / (total + 1)  # resolution limit of the sample
    out = []
    for lam in lams:
        est = 0.0
        var = 0.0
        for vals in all_vals:
            p_hat = float(np.mean(vals > lam))
            est += vol * p_hat
            var += vol * vol * p_hat * (1.0 - p_hat) / per
        est = min(est, domain.measure)
        if tail is not None:
            est += max(0.0, float(tail(lam)))
        se = max(math.sqrt(var), floor)
        out.append(
            LevelSetEstimate(
                lam=lam, measure_est=est, std_error=se, samples=total,
                method="monte-carlo", seed=seed,
            )
        )
    return tuple(out)


def distribution(
    f: Callable[[np.ndarray], np.ndarray],
    lam: float,
    domain: EvalDomain,
    budget: int,
    seed: int,
    strata: int = 32,
    threads: int = 1,
) -> LevelSetEstimate:
    """Stratified Monte Carlo estimate of |{x in domain : |f(x)| > lam}|."""
    return distribution_profile(f, [lam], domain, budget, seed, strata=strata, threads=threads)[0]


def geometric_grid(lo: float, hi: float, points: int) -> np.ndarray:
    if not 0 < lo < hi:
        raise ValueError("need 0 < lo < hi for a geometric grid")
    if points < 32:
        raise ValueError("lambda grid needs at least 32 points")
    return np.geomspace(lo, hi, points)


def weak_norm(
    f: Callable[[np.ndarray], np.ndarray],
    p: float,
    domain: EvalDomain,
    lam_range: Tuple[float, float],
    budget: int,
    seed: int,
    grid_points: int = 64,
    strata: int = 32,
    threads: int = 1,
    tail: Optional[Callable[[float], float]] = None,
    path: Tuple[int, ...] = (),
) -> WeakNormEstimate:
    """Grid supremum of lam * measure(lam)^(1/p); a lower-bound estimator.

    The lambda grid is geometric over ``lam_range`` with at least 32
    points; the measures at all thresholds come from one shared sample.
    """
    if p <= 0:
        raise ValueError("exponent p must be positive")
    grid = geometric_grid(lam_range[0], lam_range[1], grid_points)
    ests = distribution_profile(
        f, grid, domain, budget, seed, strata=strata, threads=threads, tail=tail, path=path
    )
    values = np.array([e.lam * e.measure_est ** (1.0 / p) for e in ests])
    k = int(np.argmax(values))
    return WeakNormEstimate(
        p=p, value=float(values[k]), argmax_lam=float(grid[k]), lam_grid=grid, estimates=ests
    )


def closed_form_levelset(
    kernel: HomogeneousKernel, alpha: float, lam: float, rule: SphereRule
) -> float:
    """Exact |{x : |Omega(x)| / |x|^(n-a) > lam}| from the sphere norm.

    The level set of a degree-zero kernel over |x|^(n-a) is star-shaped
    with radial extent (|Omega(u)| / lam)^(1/(n-a)), so its volume equals
    ||Omega||_{L^q(S^{n-1})}^q / (n * lam^q) with q = n/(n-a).
    """
    n = kernel.dimension
    alpha = check_frac_order(alpha, n)
    if lam <= 0:
        raise ValueError("threshold must be positive")
    q = n / (n - alpha)
    return sphere_norm(kernel, q, rule) ** q / (n * lam**q)


def density_lp_norm(mu: Measure, p: float) -> float:
    """L^p norm of the density of an absolutely continuous measure."""
    if p == 1:
        return mu.total_mass
    if isinstance(mu, RadialDensityMeasure):
        n = mu.dimension
        shells = unit_ball_volume(n) * (mu.edges[1:] ** n - mu.edges[:-1] ** n)
        return float(np.dot(mu.values**p, shells)) ** (1.0 / p)
    if isinstance(mu, BoxDensityMeasure):
        return float(np.sum(mu.values.reshape(-1) ** p) * mu._cell_vol) ** (1.0 / p)
    if isinstance(mu, AtomicMeasure):
        raise ValueError("atoms have no L^p density for p != 1")
    raise TypeError(f"unsupported measure type {type(mu)!r}")


@dataclass(frozen=True)
class WeakYoungReport:
    """Single-instance ratio for the weak convolution inequality."""

    ratio: float
    convolution_norm: WeakNormEstimate
    kernel_norm: WeakNormEstimate
    density_norm: float
    exponents: Tuple[float, float, float]  # (p, q, r)

    def to_dict(self) -> dict:
        p, q, r = self.exponents
        return {
            "ratio": self.ratio,
            "convolution_weak_norm": self.convolution_norm.value,
            "kernel_weak_norm": self.kernel_norm.value,
            "density_norm": self.density_norm,
            "p": p,
            "q": q,
            "r": r,
        }


def weak_young_check(
    g: Callable[[np.ndarray], np.ndarray],
    f_density: Measure,
    p: float,
    q: float,
    r: float,
    domain: EvalDomain,
    lam_range: Tuple[float, float],
    budget: int,
    seed: int,
    grid_points: int = 64,
    strata: int = 32,
    threads: int = 1,
) -> WeakYoungReport:
    """Ratio ||f*g||_{q,weak} / (||g||_{r,weak} ||f||_p) for one instance.

    The exponents must satisfy 1 + 1/q = 1/p + 1/r.  The inequality
    itself carries an unspecified constant, so a single ratio is only
    informative when compared across a family of instances (stability,
    not a fixed bound, is the check).
    """
    if abs(1.0 + 1.0 / q - 1.0 / p - 1.0 / r) > 1e-12:
        raise ValueError("exponents must satisfy 1 + 1/q = 1/p + 1/r")
    from .operators import OperatorSpec, operator_field

    n = f_density.dimension
    conv_field = operator_field(OperatorSpec("convolution", g, dimension=n), f_density)
    conv_norm = weak_norm(
        conv_field, q, domain, lam_range, budget, seed, grid_points=grid_points,
        strata=strata, threads=threads, path=(1,),
    )
    g_norm = weak_norm(
        lambda pts: np.asarray(g(pts), dtype=float), r, domain, lam_range, budget,
        seed, grid_points=grid_points, strata=strata, threads=threads, path=(2,),
    )
    f_norm = density_lp_norm(f_density, p)
    denom = g_norm.value * f_norm
    if denom == 0:
        raise ValueError("degenerate instance: zero kernel norm or zero mass")
    return WeakYoungReport(
        ratio=conv_norm.value / denom,
        convolution_norm=conv_norm,
        kernel_norm=g_norm,
        density_norm=f_norm,
        exponents=(p, q, r),
    )
