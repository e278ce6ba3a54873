"""Simulation and shot-noise estimation for controlled-SWAP interferometric networks."""

__version__ = "0.1.0"

from .qmath import (  # noqa: E402
    DensityOperator,
    InvalidDensityError,
    PureState,
    Spectrum,
    eigh,
    partial_trace,
    random_density,
    tensor,
    validate_density,
)
from .networks import (  # noqa: E402
    NetworkSpec,
    interference_factor,
    overlap,
    power_trace,
    power_traces,
    run_interferometer,
    shift_network,
    shift_operator,
    swap_network,
    swap_operator,
)
from .sampling import EstimateResult, ShotPlan, estimate_visibility, sample_counts, shots_for_precision  # noqa: E402
from .analysis import (  # noqa: E402
    expectation_via_network,
    extremal_eigenvalue_search,
    multi_start_search,
    reconstruct_state,
    separability_check_2qubit,
    spectrum_from_power_traces,
)
from .channels import (  # noqa: E402
    KrausChannel,
    apply_channel,
    builtin_channel,
    channel_from_choi,
    choi_state,
    dephasing,
    depolarizing,
    two_way_capacity_positive,
)
