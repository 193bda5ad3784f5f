"""Experiment configuration: TOML parsing, validation, and builders."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, List, Optional, Tuple, Union

import numpy as np
import tomli

from .kernels import HomogeneousKernel, RadialProfile
from .measures import AtomicMeasure, BoxDensityMeasure, Measure, RadialDensityMeasure
from .operators import OperatorSpec

__all__ = ["ConfigError", "ExperimentConfig", "load_config", "parse_config"]


class ConfigError(ValueError):
    """Invalid experiment configuration; the message names the key path."""


@dataclass
class KernelConfig:
    kind: str
    params: dict = field(default_factory=dict)


@dataclass
class MeasureConfig:
    kind: str
    params: dict = field(default_factory=dict)


@dataclass
class DiniConfig:
    q: float = 1.0
    s: float = 0.0
    t_max: float = 1.0
    shift_budget: int = 64
    blocks: int = 18


@dataclass
class ExperimentConfig:
    dimension: int
    family: str
    alpha: float
    kernel: KernelConfig
    measure: MeasureConfig
    rho: float
    outer_radius: float
    t_values: List[float]
    lambdas: List[float]
    lambda_range: Optional[List[float]] = None
    lambda_points: int = 64
    target_kind: Optional[str] = None
    guard: Optional[float] = None
    budget: int = 20000
    seed: int = 0
    threads: int = 0
    strata: int = 32
    output_dir: str = "out"
    basename: str = "sweep"
    figures: bool = True
    dini: Optional[DiniConfig] = None

    def validate(self) -> "ExperimentConfig":
        if self.dimension < 1:
            raise ConfigError("experiment.dimension must be >= 1")
        if not 0 <= self.alpha < self.dimension:
            raise ConfigError("operator.alpha must satisfy 0 <= alpha < dimension")
        if not 0 < self.rho < self.outer_radius:
            raise ConfigError("domain requires 0 < rho < outer_radius")
        if any(b >= a for a, b in zip(self.t_values, self.t_values[1:])):
            raise ConfigError("sweep.t_values must be strictly decreasing")
        if not self.lambdas and not self.lambda_range:
            raise ConfigError("sweep needs lambdas or lambda_range")
        if self.lambda_range is not None and len(self.lambda_range) != 2:
            raise ConfigError("sweep.lambda_range must be [lo, hi]")
        if self.budget < 100:
            raise ConfigError("experiment.budget must be at least 100")
        self.build_spec()  # kernel/family compatibility
        return self

    # -- builders ---------------------------------------------------------

    def build_spec(self) -> OperatorSpec:
        n = self.dimension
        try:
            if self.family == "radial_maximal":
                kern: object = build_radial_profile(self.kernel, n)
            elif self.family in ("homog_maximal", "frac_integral", "truncated_maximal"):
                kern = build_homogeneous_kernel(self.kernel, n)
            elif self.family == "convolution":
                kern = build_convolution_kernel(self.kernel, n)
            else:
                raise ConfigError(f"operator.family {self.family!r} is unknown")
            return OperatorSpec(self.family, kern, alpha=self.alpha, dimension=n)
        except ConfigError:
            raise
        except ValueError as exc:
            raise ConfigError(f"operator: {exc}") from exc

    def build_measure(self) -> Measure:
        return build_measure(self.measure, self.dimension)

    def resolved_lambda_range(self) -> Tuple[float, float]:
        if self.lambda_range is not None:
            return float(self.lambda_range[0]), float(self.lambda_range[1])
        return min(self.lambdas) * 1e-3, max(self.lambdas) * 1e2

    # -- serialization ----------------------------------------------------

    def to_toml(self) -> str:
        lines = ["[experiment]"]
        lines.append(f"dimension = {self.dimension}")
        lines.append(f"seed = {self.seed}")
        lines.append(f"budget = {self.budget}")
        lines.append(f"threads = {self.threads}")
        lines.append(f"strata = {self.strata}")
        lines.append("")
        lines.append("[operator]")
        lines.append(f'family = "{self.family}"')
        lines.append(f"alpha = {_toml_value(self.alpha)}")
        lines.append("")
        lines.append("[operator.kernel]")
        lines.append(f'kind = "{self.kernel.kind}"')
        for key in sorted(self.kernel.params):
            lines.append(f"{key} = {_toml_value(self.kernel.params[key])}")
        lines.append("")
        lines.append("[measure]")
        lines.append(f'kind = "{self.measure.kind}"')
        for key in sorted(self.measure.params):
            lines.append(f"{key} = {_toml_value(self.measure.params[key])}")
        lines.append("")
        lines.append("[domain]")
        lines.append(f"rho = {_toml_value(self.rho)}")
        lines.append(f"outer_radius = {_toml_value(self.outer_radius)}")
        lines.append("")
        lines.append("[sweep]")
        lines.append(f"t_values = {_toml_value(self.t_values)}")
        lines.append(f"lambdas = {_toml_value(self.lambdas)}")
        if self.lambda_range is not None:
            lines.append(f"lambda_range = {_toml_value(self.lambda_range)}")
        lines.append(f"lambda_points = {self.lambda_points}")
        if self.target_kind is not None:
            lines.append(f'target_kind = "{self.target_kind}"')
        if self.guard is not None:
            lines.append(f"guard = {_toml_value(self.guard)}")
        lines.append("")
        if self.dini is not None:
            lines.append("[dini]")
            lines.append(f"q = {_toml_value(self.dini.q)}")
            lines.append(f"s = {_toml_value(self.dini.s)}")
            lines.append(f"t_max = {_toml_value(self.dini.t_max)}")
            lines.append(f"shift_budget = {self.dini.shift_budget}")
            lines.append(f"blocks = {self.dini.blocks}")
            lines.append("")
        lines.append("[output]")
        lines.append(f'directory = "{self.output_dir}"')
        lines.append(f'basename = "{self.basename}"')
        lines.append(f"figures = {str(self.figures).lower()}")
        return "\n".join(lines) + "\n"


def _toml_value(v) -> str:
    if isinstance(v, bool):
        return str(v).lower()
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    if isinstance(v, str):
        return f'"{v}"'
    if isinstance(v, (list, tuple)):
        return "[" + ", ".join(_toml_value(x) for x in v) + "]"
    raise ConfigError(f"cannot serialize value {v!r}")


def _as_float_list(v, where: str) -> List[float]:
    try:
        return [float(x) for x in v]
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"{where} must be a list of numbers") from exc


def parse_config(text: str) -> ExperimentConfig:
    """Parse a TOML experiment file; syntax errors keep tomli's line info."""
    try:
        data = tomli.loads(text)
    except tomli.TOMLDecodeError as exc:
        raise ConfigError(f"config syntax error: {exc}") from exc
    exp = data.get("experiment", {})
    op = data.get("operator", {})
    kern = op.get("kernel", {})
    meas = data.get("measure", {})
    dom = data.get("domain", {})
    sw = data.get("sweep", {})
    out = data.get("output", {})
    for section, name in ((op, "operator"), (meas, "measure"), (dom, "domain")):
        if not section:
            raise ConfigError(f"missing [{name}] section")
    dini = None
    if "dini" in data:
        d = data["dini"]
        dini = DiniConfig(
            q=float(d.get("q", 1.0)),
            s=float(d.get("s", 0.0)),
            t_max=float(d.get("t_max", 1.0)),
            shift_budget=int(d.get("shift_budget", 64)),
            blocks=int(d.get("blocks", 18)),
        )
    cfg = ExperimentConfig(
        dimension=int(exp.get("dimension", 1)),
        family=str(op.get("family", "")),
        alpha=float(op.get("alpha", 0.0)),
        kernel=KernelConfig(str(kern.get("kind", "")), {k: v for k, v in kern.items() if k != "kind"}),
        measure=MeasureConfig(str(meas.get("kind", "")), {k: v for k, v in meas.items() if k != "kind"}),
        rho=float(dom.get("rho", 0.0)),
        outer_radius=float(dom.get("outer_radius", 0.0)),
        t_values=_as_float_list(sw.get("t_values", []), "sweep.t_values"),
        lambdas=_as_float_list(sw.get("lambdas", []), "sweep.lambdas"),
        lambda_range=(
            _as_float_list(sw["lambda_range"], "sweep.lambda_range")
            if "lambda_range" in sw
            else None
        ),
        lambda_points=int(sw.get("lambda_points", 64)),
        target_kind=sw.get("target_kind"),
        guard=float(sw["guard"]) if "guard" in sw else None,
        budget=int(exp.get("budget", 20000)),
        seed=int(exp.get("seed", 0)),
        threads=int(exp.get("threads", 0)),
        strata=int(exp.get("strata", 32)),
        output_dir=str(out.get("directory", "out")),
        basename=str(out.get("basename", "sweep")),
        figures=bool(out.get("figures", True)),
        dini=dini,
    )
    return cfg.validate()


def load_config(path: Union[str, Path]) -> ExperimentConfig:
    return parse_config(Path(path).read_text())


# ---------------------------------------------------------------------------
# kernel / measure builders


def build_radial_profile(cfg: KernelConfig, n: int) -> RadialProfile:
    kind = cfg.kind
    p = cfg.params
    if kind == "indicator":
        return RadialProfile.indicator(n)
    if kind == "poisson":
        return RadialProfile.poisson(n)
    if kind == "heat":
        return RadialProfile.heat(n)
    if kind == "radial_table":
        return RadialProfile.table(n, p["radii"], p["values"])
    raise ConfigError(f"operator.kernel.kind {kind!r} is not a radial profile")


def build_homogeneous_kernel(cfg: KernelConfig, n: int) -> HomogeneousKernel:
    kind = cfg.kind
    p = cfg.params
    if kind == "constant":
        return HomogeneousKernel.constant(n, float(p.get("value", 1.0)))
    if kind == "angular_trig":
        return HomogeneousKernel.angular_trig(p.get("cos_coeffs", []), p.get("sin_coeffs", []))
    if kind == "component":
        return HomogeneousKernel.component(n, int(p.get("index", 0)))
    if kind == "signed_cap":
        return HomogeneousKernel.signed_cap(
            n, axis=p.get("axis"), aperture=float(p.get("aperture", math.pi / 2))
        )
    if kind == "sign":
        return HomogeneousKernel.sign(n)
    raise ConfigError(f"operator.kernel.kind {kind!r} is not a homogeneous kernel")


def build_convolution_kernel(cfg: KernelConfig, n: int) -> Callable[[np.ndarray], np.ndarray]:
    kind = cfg.kind
    p = cfg.params

    def radial(fn: Callable[[np.ndarray], np.ndarray]):
        def g(z: np.ndarray) -> np.ndarray:
            r = np.linalg.norm(np.atleast_2d(np.asarray(z, dtype=float)), axis=1)
            return fn(r)

        return g

    if kind == "tent":
        a = float(p.get("radius", 1.0))
        return radial(lambda r: np.maximum(0.0, 1.0 - r / a))
    if kind == "gauss":
        s = float(p.get("scale", 1.0))
        return radial(lambda r: np.exp(-math.pi * (r / s) ** 2))
    if kind == "bump":
        a = float(p.get("radius", 1.0))
        return radial(lambda r: (r <= a).astype(float))
    if kind == "power":
        r_exp = float(p.get("r", 2.0))

        def power(s: np.ndarray) -> np.ndarray:
            with np.errstate(divide="ignore"):
                return np.where(s > 0, s ** (-n / r_exp), np.inf)

        return radial(power)
    raise ConfigError(f"operator.kernel.kind {kind!r} is not a convolution kernel")


def build_measure(cfg: MeasureConfig, n: int) -> Measure:
    kind = cfg.kind
    p = cfg.params
    if kind == "uniform_ball":
        return RadialDensityMeasure.uniform_ball(
            n, float(p.get("radius", 1.0)), float(p.get("density", 1.0))
        )
    if kind == "atomic":
        pts = np.asarray(p["points"], dtype=float).reshape(-1, n)
        return AtomicMeasure(pts, p["weights"])
    if kind == "radial_table":
        return RadialDensityMeasure(n, p["edges"], p["values"])
    if kind == "radial_gaussian":
        sigma = float(p.get("sigma", 1.0))
        outer = float(p.get("outer_radius", 8.0 * sigma))
        bins = int(p.get("bins", 256))
        return RadialDensityMeasure.from_function(
            n, lambda r: math.exp(-0.5 * (r / sigma) ** 2), outer, bins
        )
    if kind == "box":
        shape = tuple(int(s) for s in p["shape"])
        values = np.asarray(p["values"], dtype=float).reshape(shape)
        return BoxDensityMeasure(p["lo"], p["hi"], values)
    if kind == "csv":
        rows = np.loadtxt(p["path"], delimiter=",", ndmin=2)
        if rows.shape[1] != n + 1:
            raise ConfigError(f"measure csv must have {n + 1} columns (point, weight)")
        return AtomicMeasure(rows[:, :n], rows[:, n])
    raise ConfigError(f"measure.kind {kind!r} is unknown")
