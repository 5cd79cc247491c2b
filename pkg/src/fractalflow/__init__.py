"""Explicit divergence-free velocity constructions on a fractal attractor,
their collapse dynamics, and the slit/ribbon active-scalar systems."""

from .geometry import (
    IfsParams,
    AffineSimilarity,
    Rect,
    FractalApprox,
    derive_constants,
    alpha_for_dimension,
    word_map,
    attractor_approx,
    separation_check,
    locate_chain,
)
from .fields import (
    FieldHandle,
    GridSample,
    smoothed_sign,
    eval_u,
    eval_rescaled,
    eval_U,
    eval_W,
    eval_nu,
    eval_V,
    eval_Vtilde,
    grid_divergence,
    sobolev_norm,
)
from .flow import (
    ParticleCloud,
    IntegratorConfig,
    integrate,
    verify_contraction,
    collapse_schedule,
    enclosure_check,
    full_dim_scale_check,
    rescaled_trajectory_check,
)
from .activescalar import (
    KernelSpec,
    MollifiedKernel,
    kernel_eval,
    build_mollified,
    slit_rhs,
    solve_slit,
    solve_ribbon,
    slit_velocity,
    ribbon_velocity,
)
from .measures import (
    ParticleMeasure,
    TestFunction,
    pushforward,
    weak_residual_2d,
    weak_residual_3d,
    time_reverse,
    box_dimension,
    attractor_point_sample,
)

__version__ = "0.1.0"
