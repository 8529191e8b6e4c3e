"""Fractal-geometry laboratory for Gaussian processes with a general
variance scale: exact simulation, adapted Cantor sets, dimension and
capacity estimators, hitting-probability experiments, and the integral
conditions that gate each regime."""

__version__ = "0.1.0"

from .conditions import (
    check_strong_condition,
    check_weak_condition,
    f_gamma,
    integral_I,
    psi_sqrtlog_criterion,
)
from .dimension import (
    box_dimension_euclidean,
    dim_delta_estimate,
    dim_rho_product,
    image_dimension_experiment,
    intersection_dimension_experiment,
)
from .energy import (
    capacity_estimate,
    energy_discrete,
    frostman_exponent,
    kernel_matrix,
    minimize_energy,
)
from .fractal_sets import (
    CantorSet,
    DiscreteMeasure,
    build_cantor,
    cantor_measure,
    covering_number_delta,
    gamma_dyadic_cover,
    packing_number_delta,
)
from .gp_sim import (
    CovMatrix,
    PathBatch,
    conditional_variance,
    cov_stationary_increments,
    cov_volterra,
    sample_paths,
)
from .hitting import (
    hausdorff_content_estimate,
    hit_probability_mc,
    sandwich_report,
    small_ball_mc,
    small_ball_sweep,
    wilson_interval,
)
from .metrics import FromCovariance, StationaryGamma, commensurability_report
from .scale import (
    CustomScale,
    ExpLogScale,
    LogCorrectedScale,
    LogScale,
    PowerLogScale,
    PowerScale,
    ScaleFunction,
    lower_index_report,
    parse_scale_spec,
    phi_kernel,
)
