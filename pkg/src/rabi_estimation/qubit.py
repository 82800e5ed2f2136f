r"""Two-level linear algebra for the estimation protocol.

States are pure qubit amplitudes in the :math:`\sigma_z` eigenbasis,
``|0>`` being the +1 eigenstate.  Operators are 2x2 complex matrices
wrapped in :class:`Operator2`, whose named constructors check the
defining property (unitarity, or being a valid effect) on creation.

The Rabi propagator generated by :math:`H = (\Omega/2)\sigma_x` over a
period :math:`\tau` is

.. math::

   U(\Omega) = \cos(\Omega\tau/2)\,\mathbb{I} - i\sin(\Omega\tau/2)\,\sigma_x,

and the symmetric unsharp :math:`\sigma_z` measurement of strength
``dp`` has effects :math:`E_{0,1} = \tfrac12(\mathbb{I} \pm dp\,\sigma_z)`
with Kraus operators taken as their positive square roots.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .errors import InvalidParameterError, InvalidStateError

IDENTITY = np.eye(2, dtype=complex)
SIGMA_X = np.array([[0, 1], [1, 0]], dtype=complex)
SIGMA_Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
SIGMA_Z = np.array([[1, 0], [0, -1]], dtype=complex)

for _m in (IDENTITY, SIGMA_X, SIGMA_Y, SIGMA_Z):
    _m.setflags(write=False)

NORM_TOL = 1e-9
_CHECK_TOL = 1e-12


def _require_finite(*values: complex) -> None:
    for v in values:
        if not cmath.isfinite(v):
            raise InvalidParameterError(f"non-finite value {v!r}")


@dataclass(frozen=True)
class QubitState:
    """Normalized pure state ``a0|0> + a1|1>``.

    The constructor rejects amplitudes whose squared norm deviates from
    one by more than ``NORM_TOL``; use :meth:`normalized` to build a state
    from arbitrary nonzero amplitudes.
    """

    a0: complex
    a1: complex

    def __post_init__(self):
        a0, a1 = complex(self.a0), complex(self.a1)
        if not (cmath.isfinite(a0) and cmath.isfinite(a1)):
            raise InvalidStateError("state amplitudes must be finite")
        norm2 = abs(a0) ** 2 + abs(a1) ** 2
        if abs(norm2 - 1.0) > NORM_TOL:
            raise InvalidStateError(f"state is not normalized (|psi|^2 = {norm2!r})")
        object.__setattr__(self, "a0", a0)
        object.__setattr__(self, "a1", a1)

    @classmethod
    def normalized(cls, a0: complex, a1: complex) -> QubitState:
        a0, a1 = complex(a0), complex(a1)
        if not (cmath.isfinite(a0) and cmath.isfinite(a1)):
            raise InvalidStateError("state amplitudes must be finite")
        norm = math.sqrt(abs(a0) ** 2 + abs(a1) ** 2)
        if norm == 0.0:
            raise InvalidStateError("cannot normalize the zero vector")
        return cls(a0 / norm, a1 / norm)

    @classmethod
    def from_vector(cls, vec) -> QubitState:
        v = np.asarray(vec, dtype=complex).reshape(2)
        return cls.normalized(v[0], v[1])

    @property
    def vector(self) -> np.ndarray:
        return np.array([self.a0, self.a1], dtype=complex)

    @property
    def norm_squared(self) -> float:
        return abs(self.a0) ** 2 + abs(self.a1) ** 2


ZERO = QubitState(1.0, 0.0)
ONE = QubitState(0.0, 1.0)


class BlochAngles(NamedTuple):
    """Polar angle ``theta`` in [0, pi] and azimuth ``phi`` in [0, 2 pi)."""

    theta: float
    phi: float


@dataclass(frozen=True, eq=False)
class Operator2:
    """Immutable 2x2 complex matrix.

    Prefer :meth:`unitary` and :meth:`effect` over the bare constructor;
    they validate the matrix for its role.
    """

    m: np.ndarray

    def __post_init__(self):
        m = np.array(self.m, dtype=complex)
        if m.shape != (2, 2):
            raise InvalidParameterError(f"expected a 2x2 matrix, got shape {m.shape}")
        if not np.all(np.isfinite(m)):
            raise InvalidParameterError("operator entries must be finite")
        m.setflags(write=False)
        object.__setattr__(self, "m", m)

    @classmethod
    def unitary(cls, m) -> Operator2:
        op = cls(m)
        if not np.allclose(op.m.conj().T @ op.m, IDENTITY, rtol=0.0, atol=_CHECK_TOL):
            raise InvalidParameterError("matrix is not unitary")
        return op

    @classmethod
    def effect(cls, m) -> Operator2:
        op = cls(m)
        if not np.allclose(op.m, op.m.conj().T, rtol=0.0, atol=_CHECK_TOL):
            raise InvalidParameterError("effect must be Hermitian")
        eig = np.linalg.eigvalsh(op.m)
        if eig.min() < -_CHECK_TOL or eig.max() > 1.0 + _CHECK_TOL:
            raise InvalidParameterError(f"effect eigenvalues {eig} leave [0, 1]")
        return op

    @property
    def dagger(self) -> Operator2:
        return Operator2(self.m.conj().T)

    def __matmul__(self, other):
        if isinstance(other, Operator2):
            return Operator2(self.m @ other.m)
        if isinstance(other, QubitState):
            return QubitState.from_vector(self.m @ other.vector)
        return NotImplemented

    def __add__(self, other: Operator2) -> Operator2:
        return Operator2(self.m + other.m)

    def apply(self, psi: QubitState) -> np.ndarray:
        """Unnormalized image of ``psi``."""
        return self.m @ psi.vector

    def expectation(self, psi: QubitState) -> complex:
        v = psi.vector
        return complex(np.vdot(v, self.m @ v))

    def allclose(self, other, atol: float = _CHECK_TOL) -> bool:
        other_m = other.m if isinstance(other, Operator2) else np.asarray(other)
        return bool(np.allclose(self.m, other_m, rtol=0.0, atol=atol))


@dataclass(frozen=True, eq=False)
class MeasurementModel:
    """Two-outcome symmetric unsharp measurement of sigma_z."""

    dp: float
    e0: Operator2
    e1: Operator2
    m0: Operator2
    m1: Operator2

    @property
    def effects(self) -> tuple[Operator2, Operator2]:
        return self.e0, self.e1

    @property
    def kraus(self) -> tuple[Operator2, Operator2]:
        return self.m0, self.m1

    @property
    def kraus_diagonals(self) -> tuple[float, float]:
        """``(sqrt((1+dp)/2), sqrt((1-dp)/2))``, the diagonal of m0."""
        return math.sqrt((1.0 + self.dp) / 2.0), math.sqrt((1.0 - self.dp) / 2.0)


def make_propagator(omega: float, tau: float) -> Operator2:
    """Rabi propagator ``exp(-i (omega/2) sigma_x tau)``."""
    _require_finite(omega, tau)
    if tau < 0:
        raise InvalidParameterError(f"tau must be non-negative, got {tau}")
    half = 0.5 * omega * tau
    return Operator2.unitary(math.cos(half) * IDENTITY - 1j * math.sin(half) * SIGMA_X)


def make_measurement_model(dp: float) -> MeasurementModel:
    """Effects ``(I +- dp sigma_z)/2`` with positive-root Kraus operators."""
    _require_finite(dp)
    if not 0.0 <= dp <= 1.0:
        raise InvalidParameterError(f"measurement strength must lie in [0, 1], got {dp}")
    e0 = Operator2.effect(0.5 * (IDENTITY + dp * SIGMA_Z))
    e1 = Operator2.effect(0.5 * (IDENTITY - dp * SIGMA_Z))
    hi, lo = math.sqrt((1.0 + dp) / 2.0), math.sqrt((1.0 - dp) / 2.0)
    m0 = Operator2(np.diag([hi, lo]).astype(complex))
    m1 = Operator2(np.diag([lo, hi]).astype(complex))
    return MeasurementModel(dp=float(dp), e0=e0, e1=e1, m0=m0, m1=m1)


def time_varying_effects(model: MeasurementModel, omega_e: float, tau: float) -> tuple[Operator2, Operator2]:
    """Effects seen through the estimated evolution, ``U^dag(omega_e) E_n U(omega_e)``.

    Evaluated from the rotated-axis form
    ``E'_0 = (I + dp (cos(a) sigma_z + sin(a) sigma_y)) / 2`` with
    ``a = omega_e * tau``; ``E'_1 = I - E'_0``.
    """
    _require_finite(omega_e, tau)
    if tau < 0:
        raise InvalidParameterError(f"tau must be non-negative, got {tau}")
    angle = omega_e * tau
    axis = math.cos(angle) * SIGMA_Z + math.sin(angle) * SIGMA_Y
    e0 = Operator2.effect(0.5 * (IDENTITY + model.dp * axis))
    e1 = Operator2.effect(IDENTITY - e0.m)
    return e0, e1


def fidelity(psi: QubitState, psi_e: QubitState) -> float:
    """Squared overlap ``|<psi|psi_e>|^2`` of two pure states."""
    for s in (psi, psi_e):
        if abs(s.norm_squared - 1.0) > NORM_TOL:
            raise InvalidStateError("fidelity requires normalized states")
    overlap = psi.a0.conjugate() * psi_e.a0 + psi.a1.conjugate() * psi_e.a1
    return min(1.0, overlap.real ** 2 + overlap.imag ** 2)


def to_bloch(psi: QubitState) -> BlochAngles:
    """Bloch-sphere angles of ``psi``; the azimuth is 0 at the poles."""
    r0, r1 = abs(psi.a0), abs(psi.a1)
    theta = 2.0 * math.atan2(r1, r0)
    if r0 == 0.0 or r1 == 0.0:
        return BlochAngles(theta, 0.0)
    phi = (cmath.phase(psi.a1) - cmath.phase(psi.a0)) % (2.0 * math.pi)
    if phi >= 2.0 * math.pi:
        phi = 0.0
    return BlochAngles(theta, phi)


def from_bloch(angles: BlochAngles) -> QubitState:
    """State ``cos(theta/2)|0> + exp(i phi) sin(theta/2)|1>``."""
    theta, phi = angles
    _require_finite(theta, phi)
    if not 0.0 <= theta <= math.pi:
        raise InvalidParameterError(f"polar angle must lie in [0, pi], got {theta}")
    if not 0.0 <= phi < 2.0 * math.pi:
        raise InvalidParameterError(f"azimuth must lie in [0, 2 pi), got {phi}")
    return QubitState.normalized(math.cos(theta / 2.0), cmath.exp(1j * phi) * math.sin(theta / 2.0))
