"""Movable-antenna array design for joint multiuser communication and 2D
angle-of-arrival sensing: geometry primitives, channel and sensing models,
a feasible-direction position optimizer, and experiment runners."""

from .comm import (
    CommScenario,
    UserZone,
    expected_min_rate,
    los_channel,
    rate_upper_bound,
    rates,
    sample_batch,
    sample_user_locations,
    sinr_per_user,
    zf_min_sinr,
    zf_precoder,
)
from .errors import (
    ConfigError,
    DegenerateAxisError,
    InfeasibleLayoutError,
    InfeasibleThresholdError,
    InvalidWaveformError,
    LinearizationError,
    MaIsacError,
    SingularChannelError,
    SingularGeometryError,
)
from .geometry import (
    ArrayLayout,
    DiskRegion,
    MovementRegion,
    RectRegion,
    WaveVector2D,
    build_upa,
    min_pairwise_distance,
    quadratic_form_B,
    steering_vector,
    var_cov,
    var_terms,
)
from .optimizer import (
    OptimizerConfig,
    OptimizerReport,
    direction_subproblem,
    initialize_crb_maximin,
    line_search,
    linearized_crb_constraints,
    min_distance_linearization,
    objective_gradient_fd,
    optimize,
    optimize_axis,
)
from .qcqp import ConvexProgram, QuadConstraint, feasibility_check, solve
from .sensing import (
    GridSpec,
    SensingSpec,
    SensingTruth,
    crb_closed_form,
    crb_from_fim,
    eta_lower_bound,
    fim_numeric,
    mle_estimate,
    mse_simulation,
    probing_matrix,
    synthesize_echo,
)

__version__ = "0.1.0"
