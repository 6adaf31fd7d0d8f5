"""Monte Carlo fractional heat content and horizontal perimeter on Carnot groups."""
__version__ = "0.1.0"

from ._accel import backend
from .calculus import (
    SmoothFunction,
    apply_vector_fields,
    bump,
    function_from_name,
    horizontal_gradient,
    indicator,
    koranyi_bump,
    mollify,
    polynomial,
    taylor_decay_exponent,
    taylor_polynomial,
    trig,
    variation_smooth,
)
from .checks import (
    BoundForm,
    check_martingale_bound,
    check_sup_expectation_limits,
    check_tail_order,
    fit_exit_bound_constants,
)
from .config import ConfigError, ExperimentConfig, load_config
from .domains import (
    LevelSetDomain,
    PerimeterEstimate,
    detect_characteristic_points,
    domain_from_name,
    horizontal_perimeter,
    perimeter_continuity_scan,
)
from .groups import (
    CarnotGroup,
    calibrate_epsilons,
    dilate,
    dinf_norm,
    distance,
    engel,
    euclidean,
    free_step2,
    from_name,
    heisenberg,
    inverse,
    left_invariant_frame,
    load_group,
    multiply,
)
from .heat import (
    HeatContentEstimate,
    RatioCurve,
    estimate_Q,
    estimate_Q_f,
    ratio_curve,
    verify_lower_bound,
    verify_mollification_monotonicity,
    verify_smooth_limit,
)
from .paths import PathSample, simulate_hbm, simulate_subordinated
from .stable import (
    RateFunction,
    SubordinatorSpec,
    estimate_sup_constant,
    mu_alpha,
    sample_subordinator,
)
