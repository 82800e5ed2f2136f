"""The elementary estimation step and single-trajectory execution.

One step propagates the actual state with ``U(omega)`` and the estimate
with ``U(omega_e)``, then draws a measurement outcome from the actual
state and applies the same Kraus operator to both.  Randomness always
enters as caller-supplied uniform variates: outcome 0 is selected when
``u < p0``.

The scalar functions (:func:`evolve_pair`, :func:`measure_and_update`,
:func:`elementary_step`) work on :class:`~rabi_estimation.qubit.QubitState`
values.  Trajectories are run by a vectorized kernel that advances a
block of independent trajectories at once; the ensemble runner reuses it.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import DegenerateUpdateError, InvalidParameterError
from .qubit import MeasurementModel, QubitState, fidelity, make_propagator

DEGENERATE_PROB = 1e-15
_DRAW_CHUNK = 1024


@dataclass(frozen=True)
class ProtocolParams:
    """Physical and protocol parameters of the estimation experiment.

    ``omega`` and ``omega_e`` are the actual and assumed Rabi frequencies,
    ``dp`` the measurement strength and ``tau`` the measurement period.
    """

    omega: float
    omega_e: float
    dp: float
    tau: float

    def __post_init__(self):
        for name in ("omega", "omega_e", "dp", "tau"):
            value = float(getattr(self, name))
            if not math.isfinite(value):
                raise InvalidParameterError(f"{name} must be finite, got {value}")
            object.__setattr__(self, name, value)
        if not 0.0 <= self.dp <= 1.0:
            raise InvalidParameterError(f"dp must lie in [0, 1], got {self.dp}")
        if self.tau < 0.0:
            raise InvalidParameterError(f"tau must be non-negative, got {self.tau}")

    @property
    def delta(self) -> float:
        """Detuning ``omega - omega_e``."""
        return self.omega - self.omega_e

    @property
    def gamma(self) -> float:
        """Continuum-limit measurement rate ``dp**2 / tau``."""
        if self.tau <= 0.0:
            raise InvalidParameterError("gamma is undefined for tau = 0")
        return self.dp ** 2 / self.tau


@dataclass(frozen=True)
class StepOutcome:
    outcome: int
    prob: float
    actual_after: QubitState
    estimate_after: QubitState
    fidelity_after: float


@dataclass(frozen=True, eq=False)
class FidelityTrace:
    """Fidelity sampled on a strictly increasing time grid."""

    times: np.ndarray
    fidelities: np.ndarray
    clamp_events: int = 0

    def __post_init__(self):
        times = np.asarray(self.times, dtype=float)
        fids = np.asarray(self.fidelities, dtype=float)
        if times.shape != fids.shape or times.ndim != 1:
            raise InvalidParameterError("times and fidelities must be 1-D and of equal length")
        if times.size > 1 and not np.all(np.diff(times) > 0):
            raise InvalidParameterError("times must be strictly increasing")
        object.__setattr__(self, "times", times)
        object.__setattr__(self, "fidelities", fids)

    def __len__(self) -> int:
        return self.times.size


def evolve_pair(actual: QubitState, estimate: QubitState, params: ProtocolParams) -> tuple[QubitState, QubitState]:
    """Propagate the actual state with ``omega`` and the estimate with ``omega_e``."""
    u_actual = make_propagator(params.omega, params.tau)
    u_est = make_propagator(params.omega_e, params.tau)
    return u_actual @ actual, u_est @ estimate


def measure_and_update(actual: QubitState, estimate: QubitState, model: MeasurementModel, u: float) -> StepOutcome:
    """Selective measurement on ``actual`` and the matching estimate update.

    Parameters
    ----------
    actual, estimate : QubitState
        States immediately before the measurement.
    model : MeasurementModel
        Effects and Kraus operators.
    u : float
        Uniform variate in [0, 1); outcome 0 is chosen when ``u < p0``.

    Raises
    ------
    DegenerateUpdateError
        If the estimate assigns probability below ``DEGENERATE_PROB`` to
        the observed outcome (only possible for a projective measurement).
    """
    if not 0.0 <= u < 1.0:
        raise InvalidParameterError(f"uniform variate must lie in [0, 1), got {u}")
    p0 = min(1.0, max(0.0, model.e0.expectation(actual).real))
    n = 0 if u < p0 else 1
    kraus = model.kraus[n]

    v = kraus.apply(actual)
    p_n = float(np.vdot(v, v).real)
    w = kraus.apply(estimate)
    p_e = float(np.vdot(w, w).real)
    if p_e < DEGENERATE_PROB:
        raise DegenerateUpdateError(f"estimate has probability {p_e:.3e} for outcome {n}")

    actual_after = QubitState.from_vector(v)
    estimate_after = QubitState.from_vector(w)
    return StepOutcome(
        outcome=n,
        prob=p_n,
        actual_after=actual_after,
        estimate_after=estimate_after,
        fidelity_after=fidelity(actual_after, estimate_after),
    )


def elementary_step(
    actual: QubitState,
    estimate: QubitState,
    params: ProtocolParams,
    model: MeasurementModel,
    u: float,
) -> StepOutcome:
    """Evolve both states, then measure the actual state and update the estimate."""
    evolved_actual, evolved_est = evolve_pair(actual, estimate, params)
    return measure_and_update(evolved_actual, evolved_est, model, u)


def expected_delta_f_bruteforce(
    actual: QubitState,
    estimate: QubitState,
    params: ProtocolParams,
    model: MeasurementModel,
) -> float:
    """Outcome-averaged fidelity change of one step, by enumerating both outcomes."""
    before = fidelity(actual, estimate)
    evolved_actual, evolved_est = evolve_pair(actual, estimate, params)
    total = 0.0
    for n, effect in enumerate(model.effects):
        p_n = effect.expectation(evolved_actual).real
        if p_n <= 0.0:
            continue
        p_e = effect.expectation(evolved_est).real
        if p_e < DEGENERATE_PROB:
            raise DegenerateUpdateError(f"estimate has probability {p_e:.3e} for outcome {n}")
        kraus = model.kraus[n]
        post_actual = QubitState.from_vector(kraus.apply(evolved_actual))
        post_est = QubitState.from_vector(kraus.apply(evolved_est))
        total += p_n * fidelity(post_actual, post_est)
    return total - before


def _abs2(z: np.ndarray) -> np.ndarray:
    return z.real * z.real + z.imag * z.imag


def simulate_block(
    params: ProtocolParams,
    model: MeasurementModel,
    init_actual: QubitState,
    init_estimate: QubitState,
    n_steps: int,
    rngs: Sequence[np.random.Generator],
    first_index: int = 0,
) -> np.ndarray:
    """Run ``len(rngs)`` independent trajectories side by side.

    Row ``i`` of the returned ``(len(rngs), n_steps + 1)`` array is the
    fidelity trace driven by ``rngs[i]``, which supplies one uniform per
    step.  All arithmetic is elementwise, so a row does not depend on
    which other trajectories share the block.  ``first_index`` only labels
    errors.
    """
    if model.dp != params.dp:
        raise InvalidParameterError("measurement model strength differs from params.dp")
    if n_steps < 0:
        raise InvalidParameterError(f"n_steps must be non-negative, got {n_steps}")
    batch = len(rngs)
    half_a = 0.5 * params.omega * params.tau
    half_e = 0.5 * params.omega_e * params.tau
    ca, sa = math.cos(half_a), -1j * math.sin(half_a)
    ce, se = math.cos(half_e), -1j * math.sin(half_e)
    hi, lo = model.kraus_diagonals
    dp = params.dp

    a0 = np.full(batch, init_actual.a0, dtype=complex)
    a1 = np.full(batch, init_actual.a1, dtype=complex)
    e0 = np.full(batch, init_estimate.a0, dtype=complex)
    e1 = np.full(batch, init_estimate.a1, dtype=complex)

    out = np.empty((batch, n_steps + 1))
    out[:, 0] = fidelity(init_actual, init_estimate)

    step = 0
    while step < n_steps:
        chunk = min(_DRAW_CHUNK, n_steps - step)
        draws = np.stack([g.random(chunk) for g in rngs]) if batch else np.empty((0, chunk))
        for j in range(chunk):
            a0, a1 = ca * a0 + sa * a1, sa * a0 + ca * a1
            e0, e1 = ce * e0 + se * e1, se * e0 + ce * e1

            p0 = 0.5 * (1.0 + dp * (_abs2(a0) - _abs2(a1)))
            second = draws[:, j] >= p0
            k0 = np.where(second, lo, hi)
            k1 = np.where(second, hi, lo)

            a0 = a0 * k0
            a1 = a1 * k1
            norm = np.sqrt(_abs2(a0) + _abs2(a1))
            a0 = a0 / norm
            a1 = a1 / norm

            e0 = e0 * k0
            e1 = e1 * k1
            p_e = _abs2(e0) + _abs2(e1)
            if np.any(p_e < DEGENERATE_PROB):
                bad = int(np.flatnonzero(p_e < DEGENERATE_PROB)[0])
                raise DegenerateUpdateError(
                    f"estimate has vanishing outcome probability at step {step + j + 1}",
                    trajectory=first_index + bad,
                )
            norm = np.sqrt(p_e)
            e0 = e0 / norm
            e1 = e1 / norm

            overlap = a0.conj() * e0 + a1.conj() * e1
            out[:, step + j + 1] = np.minimum(_abs2(overlap), 1.0)
        step += chunk
    return out


def run_trajectory(
    params: ProtocolParams,
    model: MeasurementModel,
    init_actual: QubitState,
    init_estimate: QubitState,
    n_steps: int,
    rng_stream: np.random.Generator,
) -> FidelityTrace:
    """Fidelity trace of one trajectory at times ``k * tau``, ``k = 0..n_steps``."""
    if n_steps > 0 and params.tau <= 0.0:
        raise InvalidParameterError("a multi-step trajectory needs tau > 0")
    fids = simulate_block(params, model, init_actual, init_estimate, n_steps, [rng_stream])[0]
    return FidelityTrace(np.arange(n_steps + 1) * params.tau, fids)
