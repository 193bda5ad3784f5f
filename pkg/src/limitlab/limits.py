"""Concentration-limit experiments: sweeps in t, certificates, hierarchy.

As t -> 0+ the dilated measure V_t piles its mass at the origin and the
operator applied to V_t approaches an explicit limit shape.  The sweep
harness samples a decreasing t grid and records three convergence
statistics per t:

* type 1: weak quasi-norm of (operator - target) outside a fixed ball,
* type 2: measure of {|operator - target| > lambda} on a full-space proxy,
* type 3: the pair (measure of {|operator| > lambda}, measure of
  {|target| > lambda}) on the same proxy.

Type 1 implies type 2 implies type 3; the hierarchy demo exhibits the
strictness of the first implication with the classical power-tail
example.
"""

from __future__ import annotations

import json
import math
import warnings
from dataclasses import dataclass
from typing import Callable, Optional, Sequence, Tuple

import numpy as np

from .geometry import unit_ball_volume
from .kernels import HomogeneousKernel, RadialProfile
from .lorentz import (
    EvalDomain,
    LevelSetEstimate,
    WeakNormEstimate,
    distribution_profile,
    weak_norm,
)
from .measures import Measure, RadialDensityMeasure, dilate, split
from .operators import OperatorSpec, maximal_radial, operator_field

__all__ = [
    "LimitTarget",
    "limit_target",
    "SweepReport",
    "sweep",
    "CounterexampleCertificate",
    "fullspace_counterexample",
    "HierarchyReport",
    "hierarchy_demo",
    "desk_scale_converged",
]

TARGET_KINDS = ("radial_sup", "homog_abs", "homog_signed", "convolution")

_DEFAULT_TARGET = {
    "radial_maximal": "radial_sup",
    "homog_maximal": "homog_abs",
    "truncated_maximal": "homog_abs",
    "frac_integral": "homog_signed",
    "convolution": "convolution",
}


@dataclass(frozen=True)
class LimitTarget:
    """Limit shape of the operator family applied to V_t as t -> 0+."""

    kind: str
    fn: Callable[[np.ndarray], np.ndarray]
    mass: float
    description: str
    singular_at_origin: bool = True

    def __call__(self, points: np.ndarray) -> np.ndarray:
        return self.fn(points)


def limit_target(spec: OperatorSpec, measure: Measure, kind: Optional[str] = None) -> LimitTarget:
    """Build the limit target paired with the operator family.

    Maximal families pair with the absolute targets, the fractional
    integral with the signed one, and convolution with its own kernel
    scaled by the total mass.  An explicit ``kind`` may override the
    pairing between the signed and absolute homogeneous targets (useful
    for exhibiting that the wrong pairing does not converge); any other
    mismatch is rejected.
    """
    default = _DEFAULT_TARGET[spec.family]
    kind = default if kind is None else kind
    if kind not in TARGET_KINDS:
        raise ValueError(f"unknown target kind {kind!r}")
    if kind != default:
        homog_pair = {"homog_abs", "homog_signed"}
        if not (kind in homog_pair and default in homog_pair):
            raise ValueError(f"target kind {kind!r} is unsupported for family {spec.family!r}")
    mass = measure.total_mass
    n = spec.n
    m_exp = n - spec.alpha
    if kind == "radial_sup":
        profile: RadialProfile = spec.kernel
        sup_c, _ = profile.sup_constant(spec.alpha)

        def fn(points: np.ndarray) -> np.ndarray:
            r = np.linalg.norm(np.atleast_2d(points), axis=1)
            return mass * sup_c / r**m_exp

        desc = f"{mass:g} * sup-dilated {profile.variant} profile"
    elif kind in ("homog_abs", "homog_signed"):
        kernel: HomogeneousKernel = spec.kernel
        signed = kind == "homog_signed"

        def fn(points: np.ndarray) -> np.ndarray:
            pts = np.atleast_2d(points)
            r = np.linalg.norm(pts, axis=1)
            vals = kernel(pts)
            if not signed:
                vals = np.abs(vals)
            return mass * vals / r**m_exp

        desc = f"{mass:g} * {'signed' if signed else 'absolute'} {kernel.variant} kernel over |x|^{m_exp:g}"
    else:
        g = spec.kernel

        def fn(points: np.ndarray) -> np.ndarray:
            return mass * np.asarray(g(np.atleast_2d(points)), dtype=float)

        desc = f"{mass:g} * convolution kernel"
    return LimitTarget(kind=kind, fn=fn, mass=mass, description=desc,
                       singular_at_origin=kind != "convolution")


def desk_scale_converged(values: Sequence[float], ratio: float = 0.25) -> bool:
    """Finite-sample convergence proxy: decay by ``ratio`` plus a monotone tail.

    True when the last value is at most ratio * first and the second half
    of the sequence is nonincreasing.  A sampled t grid can never certify
    an asymptotic limit; this is the falsifiable stand-in.
    """
    v = [float(x) for x in values]
    if len(v) < 2:
        return False
    if v[-1] > ratio * v[0]:
        return False
    tail = v[len(v) // 2 :]
    return all(b <= a + 1e-15 for a, b in zip(tail, tail[1:]))


# ---------------------------------------------------------------------------
# sweep


@dataclass(frozen=True)
class SweepRecord:
    """Per-t slice of a sweep."""

    t: float
    usable: bool
    r_t: float
    eps_t: float
    beta_t: float
    type1: WeakNormEstimate
    type1_se: float
    type2: Tuple[LevelSetEstimate, ...]
    type3_op: Tuple[LevelSetEstimate, ...]


@dataclass(frozen=True)
class SweepReport:
    """Full record of a t-sweep, serializable to JSON and flat CSV."""

    family: str
    target_kind: str
    dimension: int
    alpha: float
    rho: float
    outer_radius: float
    guard: float
    lam_list: Tuple[float, ...]
    budget: int
    seed: int
    mass: float
    records: Tuple[SweepRecord, ...]
    type3_target: Tuple[LevelSetEstimate, ...]

    CSV_COLUMNS = (
        "t,rho,lambda,type1_norm,type1_se,type2_measure,type2_se,"
        "type3_op,type3_op_se,type3_target,type3_target_se,eps_t,beta_t,usable"
    )

    def type1_values(self) -> np.ndarray:
        return np.array([r.type1.value for r in self.records])

    def type2_values(self, lam: float) -> np.ndarray:
        j = tuple(self.lam_list).index(lam)
        return np.array([r.type2[j].measure_est for r in self.records])

    def to_rows(self):
        rows = []
        for rec in self.records:
            for j, lam in enumerate(self.lam_list):
                rows.append(
                    (
                        rec.t,
                        self.rho,
                        lam,
                        rec.type1.value,
                        rec.type1_se,
                        rec.type2[j].measure_est,
                        rec.type2[j].std_error,
                        rec.type3_op[j].measure_est,
                        rec.type3_op[j].std_error,
                        self.type3_target[j].measure_est,
                        self.type3_target[j].std_error,
                        rec.eps_t,
                        rec.beta_t,
                        int(rec.usable),
                    )
                )
        return rows

    def to_csv(self) -> str:
        lines = [self.CSV_COLUMNS]
        for row in self.to_rows():
            lines.append(",".join(_fmt(v) for v in row))
        return "\n".join(lines) + "\n"

    def to_dict(self) -> dict:
        return {
            "family": self.family,
            "target_kind": self.target_kind,
            "dimension": self.dimension,
            "alpha": self.alpha,
            "rho": self.rho,
            "outer_radius": self.outer_radius,
            "guard": self.guard,
            "lambdas": list(self.lam_list),
            "budget": self.budget,
            "seed": self.seed,
            "mass": self.mass,
            "type3_target": [e.to_dict() for e in self.type3_target],
            "records": [
                {
                    "t": rec.t,
                    "usable": rec.usable,
                    "r_t": rec.r_t,
                    "eps_t": rec.eps_t,
                    "beta_t": rec.beta_t,
                    "type1": rec.type1.to_dict() | {"std_error": rec.type1_se},
                    "type2": [e.to_dict() for e in rec.type2],
                    "type3_op": [e.to_dict() for e in rec.type3_op],
                }
                for rec in self.records
            ],
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)


def _fmt(v) -> str:
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    x = float(v)
    if math.isnan(x):
        return "nan"
    return format(x, ".17g")


def sweep(
    spec: OperatorSpec,
    measure: Measure,
    t_list: Sequence[float],
    rho: float,
    outer_radius: float,
    lam_list: Sequence[float],
    budget: int,
    seed: int,
    target_kind: Optional[str] = None,
    lam_range: Optional[Tuple[float, float]] = None,
    grid_points: int = 64,
    strata: int = 32,
    threads: int = 1,
    guard: Optional[float] = None,
) -> SweepReport:
    """Run the t -> 0+ experiment for one operator/measure pair.

    For each t the operator is applied to the dilated measure and
    compared to the limit target: a weak-norm estimate on the annulus
    {rho <= |x| <= outer_radius} (type 1), level-set measures of the
    difference (type 2) and of operator and target separately (type 3)
    on a full-space proxy that only excludes a small guard ball around
    the origin.  The proof-driven usability rule rho > 2*sqrt(t) is
    recorded per t; unusable t values are still computed, but their
    bracketing factor beta_t is reported as NaN.
    """
    t_values = [float(t) for t in t_list]
    if any(b >= a for a, b in zip(t_values, t_values[1:])):
        raise ValueError("t values must be strictly decreasing")
    if any(t <= 0 for t in t_values):
        raise ValueError("t values must be positive")
    if rho <= 0:
        raise ValueError("the type-1 exclusion radius rho must be positive")
    if not lam_list:
        raise ValueError("lambda list must be nonempty")
    if any(t >= 1 for t in t_values):
        warnings.warn("t >= 1 does not dilate toward the origin", stacklevel=2)
    n = spec.n
    m_exp = n - spec.alpha
    p_exp = n / m_exp
    lam_tuple = tuple(float(l) for l in lam_list)
    if lam_range is None:
        lam_range = (min(lam_tuple) * 1e-3, max(lam_tuple) * 1e2)
    if guard is None:
        guard = 1e-4 * outer_radius
    target = limit_target(spec, measure, kind=target_kind)
    type1_domain = EvalDomain.exterior(n, rho, outer_radius)
    proxy = EvalDomain.exterior(n, guard, outer_radius)
    target_abs = lambda pts: np.abs(target(pts))
    type3_target = distribution_profile(
        target_abs, lam_tuple, proxy, budget, seed, strata=strata, threads=threads, path=(0, 4)
    )
    records = []
    for k, t in enumerate(t_values):
        parts = split(measure, t)
        dilated = dilate(measure, t)
        op_field = operator_field(spec, dilated)
        diff = lambda pts, f=op_field: np.abs(f(pts) - target(pts))
        type1 = weak_norm(
            diff, p_exp, type1_domain, lam_range, budget, seed,
            grid_points=grid_points, strata=strata, threads=threads, path=(k, 1),
        )
        arg = type1.estimates[int(np.argmax([e.lam * e.measure_est ** (1 / p_exp) for e in type1.estimates]))]
        type1_se = (
            arg.lam / p_exp * arg.measure_est ** (1 / p_exp - 1) * arg.std_error
            if arg.measure_est > 0
            else arg.std_error
        )
        type2 = distribution_profile(
            diff, lam_tuple, proxy, budget, seed, strata=strata, threads=threads, path=(k, 2)
        )
        type3_op = distribution_profile(
            lambda pts, f=op_field: np.abs(f(pts)), lam_tuple, proxy, budget, seed,
            strata=strata, threads=threads, path=(k, 3),
        )
        usable = rho > 2.0 * parts.r_t
        if usable:
            beta = max(
                (rho / (rho - parts.r_t)) ** m_exp - 1.0,
                1.0 - (rho / (rho + parts.r_t)) ** m_exp * (1.0 - parts.eps_t),
            )
        else:
            beta = math.nan
        records.append(
            SweepRecord(
                t=t, usable=usable, r_t=parts.r_t, eps_t=parts.eps_t, beta_t=beta,
                type1=type1, type1_se=type1_se, type2=type2, type3_op=type3_op,
            )
        )
    return SweepReport(
        family=spec.family,
        target_kind=target.kind,
        dimension=n,
        alpha=spec.alpha,
        rho=rho,
        outer_radius=outer_radius,
        guard=guard,
        lam_list=lam_tuple,
        budget=budget,
        seed=seed,
        mass=measure.total_mass,
        records=tuple(records),
        type3_target=type3_target,
    )


# ---------------------------------------------------------------------------
# counterexample certificate


@dataclass(frozen=True)
class CounterexampleCertificate:
    """Witness that full-space weak-norm convergence fails for the maximal map.

    With dV the indicator density of the unit ball and lambda_0 twice the
    concentrated maximum, the product lambda_0 * |B(0, t/2)| is
    independent of t: the t powers cancel algebraically, so the recorded
    product equals mass^2 / 2^(n-1) exactly in floating point.
    """

    n: int
    t: float
    lambda0: float
    inner_ball_measure: float
    product: float
    expected_product: float
    product_exact: bool
    max_plateau_deviation: float
    margin_radius: float
    min_margin: float
    points_checked: int
    ok: bool

    def to_dict(self) -> dict:
        return {
            "n": self.n,
            "t": self.t,
            "lambda0": self.lambda0,
            "inner_ball_measure": self.inner_ball_measure,
            "product": self.product,
            "expected_product": self.expected_product,
            "product_exact": self.product_exact,
            "max_plateau_deviation": self.max_plateau_deviation,
            "margin_radius": self.margin_radius,
            "min_margin": self.min_margin,
            "points_checked": self.points_checked,
            "ok": self.ok,
        }


def fullspace_counterexample(n: int, t: float, budget: int = 100, seed: int = 0) -> CounterexampleCertificate:
    """Certificate for the failure of full-space convergence at scale t.

    The measure is fixed to the indicator density of the unit ball (mass
    = unit ball volume).  On the core B(0, t/2) the maximal function of
    the dilated measure equals mass / t^n exactly, while the limit shape
    mass / |x|^n exceeds it by at least (2^n - 1) mass / t^n; the margin
    exceeds 3 mass / t^n on B(0, t / 4^(1/n)).  Thresholding at
    lambda_0 = 2 mass / t^n therefore keeps at least the core ball, and
    lambda_0 * |B(0, t/2)| = mass^2 / 2^(n-1) for every t.
    """
    if not 0 < t < 1:
        raise ValueError("scale t must lie in (0, 1)")
    base = RadialDensityMeasure.uniform_ball(n, 1.0)
    mass = base.total_mass  # = unit ball volume
    dilated = base.dilate(t)
    profile = RadialProfile.indicator(n)
    plateau = mass / t**n
    lambda0 = 2.0 * mass / t**n

    from ._rng import substream

    rng = substream(seed, n)
    radii = (np.arange(1, budget + 1) / budget) * (t / 2.0)
    dirs = rng.standard_normal((budget, n))
    dirs /= np.linalg.norm(dirs, axis=1, keepdims=True)
    points = radii[:, None] * dirs

    max_dev = 0.0
    margin_radius = t / 4.0 ** (1.0 / n)
    min_margin = math.inf
    for x in points:
        val = maximal_radial(profile, 0.0, dilated, x)
        max_dev = max(max_dev, abs(val - plateau) / plateau)
        r = float(np.linalg.norm(x))
        if r <= margin_radius:
            margin = mass / r**n - val
            min_margin = min(min_margin, margin)
    # the t powers cancel: lambda_0 * omega_n (t/2)^n = 2 omega_n^2 2^-n
    mass_sq = mass * mass
    product = 2.0 * mass_sq * 0.5**n
    expected = mass_sq * 2.0 ** (1 - n)
    inner_ball = unit_ball_volume(n) * (t / 2.0) ** n
    margin_ok = min_margin >= 3.0 * mass / t**n * (1.0 - 1e-9)
    ok = max_dev <= 1e-9 and product == expected and margin_ok
    return CounterexampleCertificate(
        n=n,
        t=t,
        lambda0=lambda0,
        inner_ball_measure=inner_ball,
        product=product,
        expected_product=expected,
        product_exact=product == expected,
        max_plateau_deviation=max_dev,
        margin_radius=margin_radius,
        min_margin=min_margin,
        points_checked=budget,
        ok=ok,
    )


# ---------------------------------------------------------------------------
# hierarchy demo


@dataclass(frozen=True)
class HierarchyReport:
    """Numerical witness that convergence in measure is weaker than type 1."""

    p: float
    n: int
    t_list: Tuple[float, ...]
    lam_list: Tuple[float, ...]
    type2: np.ndarray  # (len(t), len(lam))
    type2_se: np.ndarray
    weak_norms: Tuple[float, ...]
    weak_norm_floor: float
    full_space_reference: float

    def to_dict(self) -> dict:
        return {
            "p": self.p,
            "n": self.n,
            "t_list": list(self.t_list),
            "lambdas": list(self.lam_list),
            "type2": self.type2.tolist(),
            "type2_std_error": self.type2_se.tolist(),
            "weak_norms": list(self.weak_norms),
            "weak_norm_floor": self.weak_norm_floor,
            "full_space_reference": self.full_space_reference,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)

    def to_csv(self) -> str:
        lines = ["t,lambda,type2_measure,type2_se,weak_norm"]
        for i, t in enumerate(self.t_list):
            for j, lam in enumerate(self.lam_list):
                lines.append(
                    ",".join(
                        _fmt(v)
                        for v in (t, lam, self.type2[i, j], self.type2_se[i, j], self.weak_norms[i])
                    )
                )
        return "\n".join(lines) + "\n"


def hierarchy_demo(
    p: float,
    seed: int,
    n: int = 1,
    t_list: Sequence[float] = (0.1, 0.01, 0.001),
    lam_list: Sequence[float] = (0.5, 1.0),
    budget: int = 20000,
    strata: int = 32,
    grid_points: int = 64,
    threads: int = 1,
) -> HierarchyReport:
    """Power-tail truncation example separating type-2 from type-1 decay.

    The field g(x) = |x|^(-n/p) is compared with its truncation to the
    ball B(0, 1/t).  The difference is the tail of g: its super-level
    sets at any fixed threshold empty out as t decreases (type-2
    convergence), while the weak quasi-norm of the difference stays
    pinned at the scale-invariant value omega_n^(1/p) (type-1 failure).
    Level sets beyond the sampling window are added in closed form.
    """
    if p <= 0:
        raise ValueError("exponent p must be positive")
    t_values = [float(t) for t in t_list]
    lam_tuple = tuple(float(l) for l in lam_list)
    omega = unit_ball_volume(n)
    type2 = np.zeros((len(t_values), len(lam_tuple)))
    type2_se = np.zeros_like(type2)
    norms = []
    for k, t in enumerate(t_values):
        cut = 1.0 / t

        def diff(pts: np.ndarray, cut=cut) -> np.ndarray:
            r = np.linalg.norm(np.atleast_2d(pts), axis=1)
            out = np.zeros(len(r))
            outside = r > cut
            out[outside] = r[outside] ** (-n / p)
            return out

        window = EvalDomain.exterior(n, 0.0, 2.0 * cut)

        def tail(lam: float, cut=cut, window=window) -> float:
            radius = lam ** (-p / n)
            return omega * max(0.0, radius**n - max(window.outer, cut) ** n)

        ests = distribution_profile(
            diff, lam_tuple, window, budget, seed, strata=strata, threads=threads,
            path=(k, 1), tail=tail,
        )
        type2[k] = [e.measure_est for e in ests]
        type2_se[k] = [e.std_error for e in ests]
        wn = weak_norm(
            diff, p, window, (1e-3 * t, 2.0 * max(lam_tuple)), budget, seed,
            grid_points=grid_points, strata=strata, threads=threads, path=(k, 2), tail=tail,
        )
        norms.append(wn.value)
    return HierarchyReport(
        p=p,
        n=n,
        t_list=tuple(t_values),
        lam_list=lam_tuple,
        type2=type2,
        type2_se=type2_se,
        weak_norms=tuple(norms),
        weak_norm_floor=float(min(norms)),
        full_space_reference=omega ** (1.0 / p),
    )
