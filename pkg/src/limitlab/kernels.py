"""Radial profiles and homogeneous degree-zero kernels.

A radial profile Phi: [0, inf) -> [0, inf) is nonincreasing and enters
the operators through its fractional dilation

    dilate(r, x) = r^-(n - alpha) * Phi(|x| / r),    r > 0.

A homogeneous kernel Omega is determined by its restriction to the unit
sphere and extended by Omega(x) = Omega(x / |x|).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Sequence, Tuple

import numpy as np

from ._rng import substream
from ._search import multistart_max_log
from .geometry import SphereRule

__all__ = [
    "RadialProfile",
    "HomogeneousKernel",
    "eval_dilate",
    "sup_dilate",
    "poisson_normalizer",
    "poisson_sup_constant",
    "poisson_critical_radius",
    "heat_sup_constant",
    "heat_critical_radius",
    "mean_zero_defect",
    "sphere_norm",
    "dini_modulus",
    "dini_integral",
    "DiniIntegral",
]


def check_frac_order(alpha: float, n: int) -> float:
    if not 0.0 <= alpha < n:
        raise ValueError(f"fractional order must satisfy 0 <= alpha < n, got alpha={alpha}, n={n}")
    return float(alpha)


def poisson_normalizer(n: int) -> float:
    """c_n with integral of c_n (1+|x|^2)^(-(n+1)/2) over R^n equal to 1."""
    return math.gamma((n + 1) / 2.0) / math.pi ** ((n + 1) / 2.0)


def poisson_sup_constant(n: int) -> float:
    """sup over r of the dilated Poisson profile at a unit point.

    Equals c_n n^(n/2) / (1+n)^((n+1)/2), attained at r = 1/sqrt(n).
    """
    if n < 1:
        raise ValueError("dimension must be >= 1")
    return poisson_normalizer(n) * n ** (n / 2.0) / (1.0 + n) ** ((n + 1) / 2.0)


def poisson_critical_radius(n: int) -> float:
    return 1.0 / math.sqrt(n)


def heat_sup_constant(n: int) -> float:
    """sup over r of the dilated Gauss-Weierstrass profile at a unit point.

    Equals (n / (2 pi e))^(n/2), attained at r = sqrt(2 pi / n).
    """
    if n < 1:
        raise ValueError("dimension must be >= 1")
    return (n / (2.0 * math.pi * math.e)) ** (n / 2.0)


def heat_critical_radius(n: int) -> float:
    return math.sqrt(2.0 * math.pi / n)


@dataclass(frozen=True)
class RadialProfile:
    """Nonincreasing radial profile with named closed-form variants."""

    dimension: int
    variant: str
    table_radii: Optional[np.ndarray] = None
    table_values: Optional[np.ndarray] = None

    INDICATOR = "indicator"
    POISSON = "poisson"
    HEAT = "heat"
    TABLE = "table"

    @classmethod
    def indicator(cls, n: int) -> "RadialProfile":
        return cls(n, cls.INDICATOR)

    @classmethod
    def poisson(cls, n: int) -> "RadialProfile":
        return cls(n, cls.POISSON)

    @classmethod
    def heat(cls, n: int) -> "RadialProfile":
        return cls(n, cls.HEAT)

    @classmethod
    def table(cls, n: int, radii: Sequence[float], values: Sequence[float]) -> "RadialProfile":
        """Piecewise-constant right-continuous profile.

        ``values[k]`` holds on [radii[k], radii[k+1]); the profile is 0 at
        and beyond radii[-1].  Values must be nonincreasing and nonnegative.
        """
        radii_a = np.asarray(radii, dtype=float)
        values_a = np.asarray(values, dtype=float)
        if radii_a.ndim != 1 or values_a.ndim != 1 or len(radii_a) != len(values_a) + 1:
            raise ValueError("need len(radii) == len(values) + 1")
        if radii_a[0] != 0.0 or np.any(np.diff(radii_a) <= 0):
            raise ValueError("radii must start at 0 and increase")
        if np.any(values_a < 0) or np.any(np.diff(values_a) > 0):
            raise ValueError("table values must be nonnegative and nonincreasing")
        return cls(n, cls.TABLE, table_radii=radii_a, table_values=values_a)

    def __call__(self, s):
        """Evaluate Phi at radius s (scalar or array)."""
        s = np.asarray(s, dtype=float)
        if self.variant == self.INDICATOR:
            out = (s <= 1.0).astype(float)
        elif self.variant == self.POISSON:
            out = poisson_normalizer(self.dimension) * (1.0 + s**2) ** (-(self.dimension + 1) / 2.0)
        elif self.variant == self.HEAT:
            out = np.exp(-math.pi * s**2)
        else:
            idx = np.searchsorted(self.table_radii, s, side="right") - 1
            padded = np.concatenate([self.table_values, [0.0]])
            idx = np.clip(idx, 0, len(self.table_values))
            out = padded[idx]
            out = np.where(s >= self.table_radii[-1], 0.0, out)
        return out if out.ndim else float(out)

    @property
    def support_radius(self) -> float:
        """Radius beyond which the profile vanishes (inf if it never does)."""
        if self.variant == self.INDICATOR:
            return 1.0
        if self.variant == self.TABLE:
            return float(self.table_radii[-1])
        return math.inf

    def integral(self) -> float:
        """Integral of the profile over R^n (inf for non-integrable tables)."""
        from .geometry import sphere_surface_area
        from scipy.integrate import quad

        n = self.dimension
        sigma = sphere_surface_area(n)
        if self.variant == self.INDICATOR:
            return sigma / n
        if self.variant == self.TABLE:
            r = self.table_radii
            shell = (r[1:] ** n - r[:-1] ** n) / n
            return sigma * float(np.dot(self.table_values, shell))
        val, _ = quad(lambda s: float(self(s)) * s ** (n - 1), 0.0, math.inf)
        return sigma * val

    def sup_constant(self, alpha: float = 0.0) -> Tuple[float, float]:
        """(S, r*) with S = sup_{r>0} r^-(n-alpha) Phi(1/r) attained near r*.

        Indicator, Poisson and heat variants use closed forms; table
        profiles fall back to bracketed golden-section search on log r.
        """
        n = self.dimension
        alpha = check_frac_order(alpha, n)
        m = n - alpha
        if self.variant == self.INDICATOR:
            # r^-m for r >= 1, zero below: decreasing, so the sup sits at r = 1
            return 1.0, 1.0
        if self.variant == self.POISSON:
            # stationarity of r^-m * c_n (1 + r^-2)^(-(n+1)/2)
            r = math.sqrt((1.0 + alpha) / m)
            s = poisson_normalizer(n) * r ** (-m) * (1.0 + r ** (-2)) ** (-(n + 1) / 2.0)
            return s, r
        if self.variant == self.HEAT:
            r = math.sqrt(2.0 * math.pi / m)
            return (m / (2.0 * math.pi * math.e)) ** (m / 2.0), r
        anchors = [1.0 / s for s in self.table_radii[1:] if s > 0]
        f = lambda r: r ** (-m) * float(self(1.0 / r))
        r_star, s = multistart_max_log(f, anchors, rel_tol=1e-10)
        return s, r_star


def eval_dilate(profile: RadialProfile, alpha: float, r: float, x) -> float:
    """r^-(n-alpha) * Phi(|x| / r); rejects r <= 0."""
    if r <= 0:
        raise ValueError("dilation radius must be positive")
    n = profile.dimension
    alpha = check_frac_order(alpha, n)
    dist = float(np.linalg.norm(np.atleast_1d(np.asarray(x, dtype=float))))
    return r ** (-(n - alpha)) * float(profile(dist / r))


def sup_dilate(profile: RadialProfile, alpha: float, x) -> float:
    """sup over r > 0 of the dilated profile at x, i.e. |x|^-(n-alpha) * S.

    The sup is singular at the origin; x = 0 is rejected.
    """
    n = profile.dimension
    alpha = check_frac_order(alpha, n)
    dist = float(np.linalg.norm(np.atleast_1d(np.asarray(x, dtype=float))))
    if dist == 0.0:
        raise ValueError("sup of dilated profile diverges at the origin")
    s, _ = profile.sup_constant(alpha)
    return dist ** (-(n - alpha)) * s


@dataclass(frozen=True)
class HomogeneousKernel:
    """Degree-zero kernel determined by its values on the unit sphere."""

    dimension: int
    variant: str
    params: dict = field(default_factory=dict)

    CONSTANT = "constant"
    ANGULAR_TRIG = "angular_trig"
    COMPONENT = "component"
    SIGNED_CAP = "signed_cap"
    TABLE = "sphere_table"

    @classmethod
    def constant(cls, n: int, value: float = 1.0) -> "HomogeneousKernel":
        return cls(n, cls.CONSTANT, {"value": float(value)})

    @classmethod
    def angular_trig(
        cls, cos_coeffs: Sequence[float], sin_coeffs: Sequence[float] = ()
    ) -> "HomogeneousKernel":
        """n=2 kernel: sum_k cos_coeffs[k] cos(k t) + sum_k sin_coeffs[k-1] sin(k t)."""
        return cls(
            2,
            cls.ANGULAR_TRIG,
            {"cos": tuple(float(c) for c in cos_coeffs), "sin": tuple(float(c) for c in sin_coeffs)},
        )

    @classmethod
    def component(cls, n: int, index: int = 0) -> "HomogeneousKernel":
        """Riesz-type kernel: the index-th coordinate of x / |x|."""
        if not 0 <= index < n:
            raise ValueError("component index out of range")
        return cls(n, cls.COMPONENT, {"index": int(index)})

    @classmethod
    def signed_cap(cls, n: int, axis=None, aperture: float = math.pi / 2) -> "HomogeneousKernel":
        """+1 on the cap around +axis, -1 on the antipodal cap, 0 between.

        Caps are closed: a direction u is in the positive cap iff
        u . axis >= cos(aperture).  With the default aperture the n = 1
        instance is the sign of the coordinate.
        """
        if axis is None:
            axis_a = np.zeros(n)
            axis_a[0] = 1.0
        else:
            axis_a = np.asarray(axis, dtype=float).reshape(n)
            axis_a = axis_a / np.linalg.norm(axis_a)
        if not 0 < aperture <= math.pi / 2:
            raise ValueError("cap aperture must lie in (0, pi/2]")
        return cls(n, cls.SIGNED_CAP, {"axis": tuple(axis_a), "aperture": float(aperture)})

    @classmethod
    def sign(cls, n: int = 1) -> "HomogeneousKernel":
        return cls.signed_cap(n)

    @classmethod
    def table(cls, rule: SphereRule, values: Sequence[float]) -> "HomogeneousKernel":
        """Kernel given by values at rule nodes, evaluated by nearest node."""
        values_a = np.asarray(values, dtype=float)
        if values_a.shape != (len(rule.nodes),) :
            raise ValueError("one value per rule node required")
        return cls(rule.dimension, cls.TABLE, {"nodes": rule.nodes, "values": values_a})

    def on_sphere(self, u: np.ndarray) -> np.ndarray:
        """Evaluate at unit vectors u of shape (m, n); no normalization."""
        u = np.asarray(u, dtype=float)
        squeeze = u.ndim == 1
        u = np.atleast_2d(u)
        if self.variant == self.CONSTANT:
            out = np.full(len(u), self.params["value"])
        elif self.variant == self.ANGULAR_TRIG:
            theta = np.arctan2(u[:, 1], u[:, 0])
            out = np.zeros(len(u))
            for k, c in enumerate(self.params["cos"]):
                out += c * np.cos(k * theta)
            for k, c in enumerate(self.params["sin"], start=1):
                out += c * np.sin(k * theta)
        elif self.variant == self.COMPONENT:
            out = u[:, self.params["index"]].copy()
        elif self.variant == self.SIGNED_CAP:
            axis = np.asarray(self.params["axis"])
            cos_ap = math.cos(self.params["aperture"])
            dots = u @ axis
            out = np.where(dots >= cos_ap, 1.0, np.where(dots <= -cos_ap, -1.0, 0.0))
        else:
            nodes = self.params["nodes"]
            values = self.params["values"]
            d2 = np.sum((u[:, None, :] - nodes[None, :, :]) ** 2, axis=2)
            out = values[np.argmin(d2, axis=1)]
        return out[0] if squeeze else out

    def __call__(self, x):
        """Evaluate at arbitrary x != 0 via the degree-zero extension."""
        x = np.asarray(x, dtype=float)
        squeeze = x.ndim == 1
        x = np.atleast_2d(x)
        norms = np.linalg.norm(x, axis=1)
        if np.any(norms == 0.0):
            raise ValueError("homogeneous kernel is undefined at the origin")
        out = self.on_sphere(x / norms[:, None])
        return float(out[0]) if squeeze else out


def mean_zero_defect(kernel: HomogeneousKernel, rule: SphereRule) -> float:
    """|integral of the kernel over the sphere| under the given rule."""
    if rule.dimension != kernel.dimension:
        raise ValueError("rule dimension does not match kernel dimension")
    return abs(rule.integrate(kernel.on_sphere))


def sphere_norm(kernel: HomogeneousKernel, q: float, rule: SphereRule) -> float:
    """L^q norm of the kernel on the sphere, 1 <= q < inf."""
    if q < 1:
        raise ValueError("exponent must satisfy q >= 1")
    if rule.dimension != kernel.dimension:
        raise ValueError("rule dimension does not match kernel dimension")
    val = rule.integrate(lambda u: np.abs(kernel.on_sphere(u)) ** q)
    return val ** (1.0 / q)


def _shift_set(n: int, t: float, budget: int, seed: int) -> np.ndarray:
    """Deterministic shift sample {h : |h| <= t}, nested as budget grows.

    Axis-aligned directions come first, then seeded unit directions; each
    direction is used at radii t, t/2 and t/4.
    """
    dirs = []
    for i in range(n):
        e = np.zeros(n)
        e[i] = 1.0
        dirs.append(e.copy())
        dirs.append(-e)
    rng = substream(seed, n)
    while len(dirs) * 3 < budget:
        v = rng.standard_normal(n)
        nv = np.linalg.norm(v)
        if nv > 1e-12:
            dirs.append(v / nv)
    radii = np.array([t, t / 2.0, t / 4.0])
    shifts = np.concatenate([np.outer(radii, d) for d in dirs], axis=0)
    return shifts[: max(budget, 2 * n * 3)]


def _modulus_for_shifts(
    kernel: HomogeneousKernel, q: float, shifts: np.ndarray, rule: SphereRule
) -> Tuple[float, np.ndarray]:
    nodes = rule.nodes
    base = kernel.on_sphere(nodes)
    best = 0.0
    best_shift = shifts[0]
    for h in shifts:
        moved = nodes + h
        norms = np.linalg.norm(moved, axis=1)
        ok = norms > 1e-12  # shifted points collapsing to 0 cannot be evaluated
        vals = np.zeros(len(nodes))
        vals[ok] = kernel.on_sphere(moved[ok] / norms[ok, None])
        integrand = np.where(ok, np.abs(vals - base) ** q, 0.0)
        total = float(np.dot(rule.weights, integrand))
        if total > best:
            best = total
            best_shift = h
    return best ** (1.0 / q), best_shift


def dini_modulus(
    kernel: HomogeneousKernel,
    q: float,
    t: float,
    rule: SphereRule,
    shift_budget: int = 64,
    seed: int = 0,
    include_shifts: Optional[np.ndarray] = None,
) -> float:
    """Sampled integral continuity modulus of the kernel at scale t.

    The supremum over shifts |h| <= t is sampled over ``shift_budget``
    deterministic shifts (axis-aligned directions always included, plus
    any caller-supplied candidates), so the returned value is a lower
    bound for the true modulus that is nondecreasing in the budget.
    Shifted arguments leaving the sphere are renormalized before the
    kernel is evaluated.
    """
    if not 0 < t <= 1:
        raise ValueError("scale t must lie in (0, 1]")
    if q < 1:
        raise ValueError("exponent must satisfy q >= 1")
    shifts = _shift_set(kernel.dimension, t, shift_budget, seed)
    if include_shifts is not None and len(include_shifts):
        extra = np.asarray(include_shifts, dtype=float).reshape(-1, kernel.dimension)
        norms = np.linalg.norm(extra, axis=1)
        keep = norms > 0
        extra = extra[keep]
        norms = norms[keep]
        # rescale carried candidates onto the current ball boundary
        extra = extra * (t / norms)[:, None]
        shifts = np.concatenate([shifts, extra], axis=0)
    value, _ = _modulus_for_shifts(kernel, q, shifts, rule)
    return value


@dataclass(frozen=True)
class DiniIntegral:
    """Dyadic estimate of integral_0^tmax modulus(t) / t^(1+s) dt."""

    value: float
    divergence_suspected: bool
    scales: np.ndarray
    moduli: np.ndarray
    block_contributions: np.ndarray


def dini_integral(
    kernel: HomogeneousKernel,
    q: float,
    s: float,
    t_max: float = 1.0,
    rule: Optional[SphereRule] = None,
    shift_budget: int = 64,
    blocks: int = 18,
    seed: int = 0,
) -> DiniIntegral:
    """Estimate the Dini integral on a geometric grid t_k = t_max 2^-k.

    Each dyadic block [t_{k+1}, t_k] contributes modulus(t_k) / t_k^(1+s)
    times its width.  Divergence is *suspected* (a reporting convention,
    not a proof) when the last five block contributions fail to decay.
    Scales below the rule's node spacing resolve to a zero modulus for
    jump kernels, so ``blocks`` should not outrun the rule order.
    """
    from .geometry import sphere_quadrature

    n = kernel.dimension
    if not 0 <= s < n:
        raise ValueError("order s must satisfy 0 <= s < n")
    if not 0 < t_max <= 1:
        raise ValueError("t_max must lie in (0, 1]")
    if rule is None:
        rule = sphere_quadrature(n, 64)
    scales = t_max * 0.5 ** np.arange(blocks)
    moduli = np.empty(blocks)
    contributions = np.empty(blocks)
    carry: Optional[np.ndarray] = None
    for k, t in enumerate(scales):
        shifts = _shift_set(n, t, shift_budget, seed)
        if carry is not None:
            shifts = np.concatenate([shifts, carry.reshape(1, -1) * (t / np.linalg.norm(carry))])
        omega, best = _modulus_for_shifts(kernel, q, shifts, rule)
        carry = best
        moduli[k] = omega
        contributions[k] = omega / t ** (1.0 + s) * (t / 2.0)
    tail = contributions[-5:]
    diverging = bool(np.all(tail > 0) and np.all(np.diff(tail) > -1e-3 * tail[:-1]))
    return DiniIntegral(
        value=float(np.sum(contributions)),
        divergence_suspected=diverging,
        scales=scales,
        moduli=moduli,
        block_contributions=contributions,
    )
