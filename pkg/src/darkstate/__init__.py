"""Two qubits in a common Lorentzian reservoir: exact dynamics and steady-state entanglement."""
from .model import (
    AmplitudeState,
    DarkstateError,
    InitialState,
    ParameterError,
    StateName,
    SystemParams,
    Tolerances,
    Trajectory,
    concurrence,
    initial_state_library,
    kernel_eval,
)
from .ode import Generator, build_generator, integrate
from .spectral import (
    PoleDecomposition,
    RationalSolution,
    amplitudes_at,
    assemble,
    decompose,
    find_poles,
)
from .steady import (
    ScanMode,
    SteadyStateResult,
    dark_state_ssc,
    instability_scan,
    steady_concurrence,
)
from .sweep import SweepResult, SweepSpec, run_detuning_comparison, run_sweep
from .volterra import solve_volterra

__version__ = "0.1.0"
