"""Real-time state estimation of a Rabi-oscillating qubit under sequential unsharp measurements."""

from .analytics import (
    AngleCoords,
    OdeSpec,
    asymptotic_fidelities,
    averaged_ode_prediction,
    closed_form_fidelity,
    delta_f_closed_form,
    delta_f_mean_angle,
    gamma_from_discrete,
    integrate_ode,
    ode_rhs,
    oscillation_averaged_rate,
)
from .ensemble import EnsembleSpec, EnsembleTrace, asymptotic_mean, run_ensemble, trajectory_rng
from .errors import (
    DegenerateGeometryError,
    DegenerateUpdateError,
    DomainError,
    EstimationError,
    InvalidCoordinatesError,
    InvalidParameterError,
    InvalidStateError,
    InvalidWindowError,
)
from .protocol import (
    FidelityTrace,
    ProtocolParams,
    StepOutcome,
    elementary_step,
    evolve_pair,
    expected_delta_f_bruteforce,
    measure_and_update,
    run_trajectory,
)
from .qubit import (
    ONE,
    ZERO,
    BlochAngles,
    MeasurementModel,
    Operator2,
    QubitState,
    fidelity,
    from_bloch,
    make_measurement_model,
    make_propagator,
    time_varying_effects,
    to_bloch,
)

__version__ = "0.1.0"
