"""akmeter: numerical Arthurs-Kelly simultaneous position/momentum measurement."""
from ._backend import BACKEND
from .apparatus import (
    ApparatusState,
    ErrorOperators,
    ErrorReport,
    error_report,
    factorize,
    make_completely_optimal,
    make_minimally_disturbing,
    make_predictively_optimal,
    make_retrodictively_optimal,
    to_muX_muP_rep,
    to_muX_piP_rep,
)
from .errors import *  # noqa: F401,F403
from .grid import (
    DensityMatrix1D,
    GridSpec1D,
    GridSpec2D,
    WaveFunction1D,
    WaveFunction2D,
    expect_multiplicative,
    normalize,
    partial_derivative_expectation,
    to_momentum_rep,
    to_position_rep,
)
from .kernel_analysis import (
    detect_convolution_form,
    extract_kernel_ak,
    marginal_kernels,
    prugovecki_sigmas,
    rms_from_marginal,
)
from .measurement import (
    OutcomeRegion,
    conditional_state_factorized,
    conditional_state_general,
    joint_final_state,
    outcome_distribution_convolution,
    outcome_distribution_direct,
    sample_outcomes,
)
from .report import MeasurementReport, emit, run_scenario
from .scenario import Scenario, load_scenario

__version__ = "0.1.0"
