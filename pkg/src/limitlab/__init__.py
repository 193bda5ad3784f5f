"""limitlab: concentration limits of integral operators, measured at desk scale."""

from .geometry import (
    SphereRule,
    ball_intersection_volume,
    sphere_quadrature,
    sphere_surface_area,
    unit_ball_volume,
)
from .kernels import (
    HomogeneousKernel,
    RadialProfile,
    dini_integral,
    dini_modulus,
    eval_dilate,
    heat_sup_constant,
    mean_zero_defect,
    poisson_sup_constant,
    sphere_norm,
    sup_dilate,
)
from .limits import (
    HierarchyReport,
    SweepReport,
    fullspace_counterexample,
    hierarchy_demo,
    limit_target,
    sweep,
)
from .lorentz import (
    EvalDomain,
    LevelSetEstimate,
    WeakNormEstimate,
    closed_form_levelset,
    distribution,
    weak_norm,
    weak_young_check,
)
from .measures import (
    AtomicMeasure,
    BoxDensityMeasure,
    Measure,
    RadialDensityMeasure,
    ball_mass,
    dilate,
    split,
)
from .operators import (
    OperatorSpec,
    SingularPointError,
    convolve,
    frac_integral,
    maximal_homog,
    maximal_radial,
    truncated_maximal,
)

__version__ = "0.1.0"
