"""Online experiment design for data-driven modeling of LTI systems.

Selects each input sample online, from past measurements, so that data
Hankel matrices reach the rank needed for data-driven modeling and control
with the provably minimum number of samples, and verifies/benchmarks this
against the classical persistency-of-excitation approach.
"""

from .design import (
    DesignLog,
    DesignProblem,
    DesignStep,
    InputPolicy,
    KernelCertificate,
    choose_input,
    design_input_output,
    design_input_output_unknown_n,
    design_input_state,
    design_input_state_depth,
    design_pe_baseline,
    find_certificate,
)
from .errors import (
    ConfigError,
    DimensionError,
    GenerationError,
    HankelDesignError,
    InfeasibleError,
    OracleError,
    RunawayError,
    StructureError,
)
from .harness import (
    ExperimentConfig,
    ExperimentResult,
    emit_plotdata,
    run_experiment,
    run_sweep,
)
from .linalg import (
    Tolerance,
    hankel,
    in_image,
    is_persistently_exciting,
    left_kernel_basis,
    numerical_rank,
)
from .lti import (
    LtiSystem,
    PlantOracle,
    Trajectory,
    io_lift_matrices,
    is_controllable,
    is_observable,
    lag,
    observability_matrix,
    random_minimal_system,
    simulate,
    toeplitz_markov,
)
from .verify import (
    METHOD_ONLINE_IO,
    METHOD_ONLINE_IS,
    METHOD_PE,
    RankCheck,
    check_io_rank,
    check_is_rank,
    check_trajectory_parameterized,
    exact_rank_oracle,
    min_samples,
)

__version__ = "0.1.0"
