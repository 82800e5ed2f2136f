r"""Closed-form fidelity dynamics.

For two states sharing the azimuth :math:`\phi = 3\pi/2` (the half of the
y-z great circle that ``|0>`` moves into under the Rabi rotation) with
polar angles :math:`\theta` and :math:`\theta_e`, the outcome-averaged
fidelity change over one step is

.. math::

   \Delta F = \frac{dp^2 \sin^2(a + \theta_e)\sin^2 r
              - (1 - dp^2)\,[\cos^2 r - \cos^2(r + \delta\tau/2)]}
             {1 - dp^2\cos^2(a + \theta_e)},
   \qquad a = \Omega_e\tau,\; r = (\theta - \theta_e)/2.

Averaging over the mean angle and taking :math:`\tau, dp \to 0` with
:math:`\gamma = dp^2/\tau` fixed gives the scalar equation

.. math::

   \dot F = \tfrac{\gamma}{2}(1 - F) \pm \delta\sqrt{F(1-F)},

whose fixed points are :math:`F_+ = 1` and
:math:`F_- = \gamma^2/(\gamma^2 + 4\delta^2)`.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import (
    DegenerateGeometryError,
    DomainError,
    InvalidCoordinatesError,
    InvalidParameterError,
)
from .protocol import FidelityTrace

_DEN_FLOOR = 1e-15
_COORD_TOL = 1e-12


def _check_dp(dp: float) -> None:
    if not (math.isfinite(dp) and 0.0 <= dp <= 1.0):
        raise InvalidParameterError(f"dp must lie in [0, 1], got {dp}")


def _check_sign(sign: int) -> None:
    if sign not in (1, -1):
        raise InvalidParameterError(f"branch sign must be +1 or -1, got {sign}")


@dataclass(frozen=True)
class AngleCoords:
    """Polar angles of a coplanar pair and their mean/relative-half-angle form."""

    theta: float
    theta_e: float
    theta_r: float
    theta_bar: float

    @classmethod
    def from_polar(cls, theta: float, theta_e: float) -> AngleCoords:
        return cls(theta, theta_e, (theta - theta_e) / 2.0, (theta + theta_e) / 2.0)

    @classmethod
    def from_mean_relative(cls, theta_bar: float, theta_r: float) -> AngleCoords:
        return cls(theta_bar + theta_r, theta_bar - theta_r, theta_r, theta_bar)

    @property
    def fidelity(self) -> float:
        return math.cos(self.theta_r) ** 2

    @property
    def branch_sign(self) -> int:
        """Sign of ``cos(theta_r) sin(theta_r)``, +1 when it vanishes."""
        return -1 if math.cos(self.theta_r) * math.sin(self.theta_r) < 0 else 1


@dataclass(frozen=True)
class OdeSpec:
    gamma: float
    delta: float
    sign: int
    f0: float

    def __post_init__(self):
        if not (math.isfinite(self.gamma) and self.gamma > 0):
            raise InvalidParameterError(f"gamma must be positive, got {self.gamma}")
        if not math.isfinite(self.delta):
            raise InvalidParameterError(f"delta must be finite, got {self.delta}")
        _check_sign(self.sign)
        if not 0.0 <= self.f0 <= 1.0:
            raise InvalidParameterError(f"initial fidelity must lie in [0, 1], got {self.f0}")


def delta_f_closed_form(theta: float, theta_e: float, omega_e_tau: float, dp: float, delta_tau: float) -> float:
    """Outcome-averaged fidelity increment of one step for a coplanar pair."""
    _check_dp(dp)
    dp2 = dp * dp
    x = omega_e_tau + theta_e
    den = 1.0 - dp2 * math.cos(x) ** 2
    if den <= _DEN_FLOOR:
        raise DegenerateGeometryError("projective measurement along the estimate's axis: increment undefined")
    r = (theta - theta_e) / 2.0
    measurement = dp2 * math.sin(x) ** 2 * math.sin(r) ** 2
    rotation = (1.0 - dp2) * (math.cos(r) ** 2 - math.cos(r + delta_tau / 2.0) ** 2)
    return (measurement - rotation) / den


def delta_f_mean_angle(
    f: float,
    theta_bar: float,
    theta_r: float,
    omega_e_tau: float,
    dp: float,
    delta_tau: float,
    sign: int,
) -> float:
    """The same increment written in terms of the fidelity and the mean angle.

    ``sign`` stands for the sign of ``cos(theta_r) sin(theta_r)``; passing
    the matching sign reproduces :func:`delta_f_closed_form` exactly.
    """
    _check_dp(dp)
    _check_sign(sign)
    if not 0.0 <= f <= 1.0 or abs(f - math.cos(theta_r) ** 2) > _COORD_TOL:
        raise InvalidCoordinatesError(f"fidelity {f} does not equal cos^2({theta_r})")
    dp2 = dp * dp
    x = omega_e_tau + theta_bar - theta_r
    den = 1.0 - dp2 * math.cos(x) ** 2
    if den <= _DEN_FLOOR:
        raise DegenerateGeometryError("projective measurement along the estimate's axis: increment undefined")
    cross = sign * math.sqrt(f * (1.0 - f)) * math.sin(delta_tau)
    drift = (f - 0.5) * (1.0 - math.cos(delta_tau))
    return (dp2 * math.sin(x) ** 2 * (1.0 - f) - (1.0 - dp2) * (cross + drift)) / den


def oscillation_averaged_rate(
    f: float,
    dp: float,
    tau: float,
    delta: float,
    sign: int,
    n_angles: int = 512,
) -> float:
    """Mean-angle average of the one-step increment, per unit time.

    ``sign`` selects the branch of :func:`ode_rhs` being approximated.  The
    increment's cross term enters with the opposite sign, so the relative
    half-angle is taken with ``cos(theta_r) sin(theta_r)`` of sign
    ``-sign``.  The average uses an equispaced periodic grid in the mean
    angle, which converges geometrically for this smooth integrand.
    """
    _check_sign(sign)
    if tau <= 0:
        raise InvalidParameterError(f"tau must be positive, got {tau}")
    if not 0.0 <= f <= 1.0:
        raise DomainError(f"fidelity must lie in [0, 1], got {f}")
    theta_r = -sign * math.acos(math.sqrt(f))
    f_exact = math.cos(theta_r) ** 2
    increments = [
        delta_f_mean_angle(f_exact, tb, theta_r, 0.0, dp, delta * tau, -sign)
        for tb in np.linspace(0.0, 2.0 * math.pi, n_angles, endpoint=False)
    ]
    return math.fsum(increments) / n_angles / tau


def ode_rhs(f: float, gamma: float, delta: float, sign: int) -> float:
    """Right-hand side ``(gamma/2)(1 - f) + sign * delta * sqrt(f (1 - f))``."""
    if not 0.0 <= f <= 1.0:
        raise DomainError(f"fidelity must lie in [0, 1], got {f}")
    _check_sign(sign)
    return 0.5 * gamma * (1.0 - f) + sign * delta * math.sqrt(f * (1.0 - f))


def gamma_from_discrete(dp: float, tau: float) -> float:
    """Continuum-limit rate ``dp**2 / tau``."""
    _check_dp(dp)
    if not (math.isfinite(tau) and tau > 0):
        raise InvalidParameterError(f"tau must be positive, got {tau}")
    return dp * dp / tau


def closed_form_fidelity(t, gamma: float):
    """``1 - exp(-gamma t / 2)``; accepts a scalar or an array of times."""
    if gamma < 0:
        raise InvalidParameterError(f"gamma must be non-negative, got {gamma}")
    t_arr = np.asarray(t, dtype=float)
    if np.any(t_arr < 0):
        raise DomainError("time must be non-negative")
    value = -np.expm1(-0.5 * gamma * t_arr)
    return float(value) if np.ndim(value) == 0 else value


def asymptotic_fidelities(gamma: float, delta: float) -> tuple[float, float, float]:
    """``(F_plus, F_minus, F_bar)`` with ``F_bar`` the mean of the two branches."""
    if not gamma > 0:
        raise InvalidParameterError(f"gamma must be positive, got {gamma}")
    f_minus = gamma * gamma / (gamma * gamma + 4.0 * delta * delta)
    return 1.0, f_minus, 0.5 * (1.0 + f_minus)


def _step_count(t_end: float, h: float) -> int:
    ratio = t_end / h
    nearest = round(ratio)
    if abs(ratio - nearest) <= 1e-9 * max(1.0, ratio):
        return int(nearest)
    return math.ceil(ratio)


def integrate_ode(spec: OdeSpec, t_end: float, h: float) -> FidelityTrace:
    """Classical fourth-order Runge-Kutta solution of the fidelity equation.

    Stages and results are clamped to [0, 1]; ``clamp_events`` on the
    returned trace counts how often that happened.  ``F = 1`` is absorbing.
    When ``h`` does not divide ``t_end`` the last step is shortened.
    """
    if not (h > 0 and t_end >= h):
        raise InvalidParameterError(f"need 0 < h <= t_end, got h={h}, t_end={t_end}")
    n = _step_count(t_end, h)
    half_gamma, signed_delta = 0.5 * spec.gamma, spec.sign * spec.delta
    clamps = 0

    def rhs(f: float) -> float:
        nonlocal clamps
        if f < 0.0 or f > 1.0:
            clamps += 1
            f = min(1.0, max(0.0, f))
        return half_gamma * (1.0 - f) + signed_delta * math.sqrt(f * (1.0 - f))

    times = np.empty(n + 1)
    values = np.empty(n + 1)
    times[0] = 0.0
    values[0] = f = spec.f0
    for k in range(1, n + 1):
        t = k * h
        dt = h
        if k == n:
            t = t_end
            dt = t_end - (n - 1) * h
        if f < 1.0:
            k1 = rhs(f)
            k2 = rhs(f + 0.5 * dt * k1)
            k3 = rhs(f + 0.5 * dt * k2)
            k4 = rhs(f + dt * k3)
            f = f + dt * (k1 + 2.0 * (k2 + k3) + k4) / 6.0
            if f < 0.0 or f > 1.0:
                clamps += 1
                f = min(1.0, max(0.0, f))
        times[k] = t
        values[k] = f
    return FidelityTrace(times, values, clamp_events=clamps)


def averaged_ode_prediction(gamma: float, delta: float, f0: float, t_end: float, h: float) -> FidelityTrace:
    """Pointwise mean of the two branch solutions."""
    plus = integrate_ode(OdeSpec(gamma, delta, +1, f0), t_end, h)
    minus = integrate_ode(OdeSpec(gamma, delta, -1, f0), t_end, h)
    return FidelityTrace(
        plus.times,
        0.5 * (plus.fidelities + minus.fidelities),
        clamp_events=plus.clamp_events + minus.clamp_events,
    )
