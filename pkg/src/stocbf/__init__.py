"""Safety certificates and compensators for control-affine SDEs.

Generator calculus for scalar barrier fields, grid-checked safety
certificates with closed-form probability bounds, min-norm and
saturated safety compensators, and a reproducible Euler-Maruyama
Monte Carlo layer that validates the bounds empirically.
"""

from .analysis import (
    MuZoneTrace,
    SafetyVerdict,
    SweepRow,
    clopper_pearson,
    compare_bound_sweep,
    ensemble_summary,
    estimate_exit_probability,
    mu_zone_trace,
)
from .calculus import (
    ControlAffineSDE,
    ScalarField,
    constant_matrix_map,
    constant_vector_map,
    diffusion_quadratic,
    drift_lie_derivative,
    exponential_fields,
    generator,
    ito_correction,
    reciprocal_field,
    scalar_plant,
)
from .certificates import (
    CertificateReport,
    SafeSet,
    check_as_rcbf,
    check_as_zcbf,
    check_diffusion_robustness_as,
    check_diffusion_robustness_stoch,
    check_fiip_condition,
    check_stochastic_zcbf,
    interval_grid,
    level_filtered_grid,
    safety_probability_bound,
    scaled_safety_bound,
)
from .compensators import (
    Compensator,
    Example1Params,
    Example2Params,
    derive_example1_params,
    derive_example2_params,
    example1_compensator,
    example2_compensator,
    min_norm_compensator,
    motivating_compensators,
    zero_compensator,
)
from .errors import (
    ConstructionError,
    DimensionError,
    DomainError,
    NumericalBlowupError,
    ParameterError,
    SingularityError,
    StocbfError,
)
from .fields import (
    barrier_fields_example1,
    barrier_fields_example2,
    halfline_margin_field,
    halfline_reciprocal_field,
    polynomial_field_1d,
    properness_patch_field,
)
from .simulate import (
    PathEnsemble,
    SamplePath,
    SimConfig,
    euler_maruyama_step,
    path_generator,
    simulate_deterministic,
    simulate_ensemble,
    simulate_path,
    write_trajectories_csv,
)

__version__ = "0.1.0"
