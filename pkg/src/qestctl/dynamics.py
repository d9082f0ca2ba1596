"""Exact propagation of the spin under piecewise-constant controls.

Each constant segment is integrated exactly: density matrices through the
matrix exponential of the 4x4 vectorized Liouvillian (``scipy.linalg.expm``,
Pade scaling-and-squaring), pure states through the closed-form SU(2)
exponential.  Vectorization is row-major, ``vec(A X B) = kron(A, B.T) vec(X)``.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.linalg import expm

from .qmodel import (
    IDENTITY,
    SIGMA_MINUS,
    SIGMA_PLUS,
    DomainError,
    ModelParams,
    ParamName,
    PiecewisePulse,
    PulseSegment,
    QubitState,
    as_density,
    d_hamiltonian,
    hamiltonian,
)

_LOWERED = SIGMA_MINUS @ SIGMA_PLUS  # |down><down|

# D[rho] = s+ rho s- - (1/2){s- s+, rho} as a superoperator
DISSIPATOR = (np.kron(SIGMA_PLUS, SIGMA_MINUS.T)
              - 0.5 * np.kron(_LOWERED, IDENTITY)
              - 0.5 * np.kron(IDENTITY, _LOWERED.T))


def commutator_superop(h: np.ndarray) -> np.ndarray:
    """Superoperator of rho -> -i[h, rho]."""
    return -1j * (np.kron(h, IDENTITY) - np.kron(IDENTITY, h.T))


def liouvillian(params: ModelParams, amplitude: float, phase: float) -> np.ndarray:
    gen = commutator_superop(hamiltonian(params, amplitude, phase))
    if params.gamma:
        gen = gen + params.gamma * DISSIPATOR
    return gen


def d_liouvillian(params: ModelParams, amplitude: float, phase: float,
                  which: ParamName | str) -> np.ndarray:
    which = ParamName.parse(which)
    if which is ParamName.GAMMA:
        return DISSIPATOR.copy()
    return commutator_superop(d_hamiltonian(params, amplitude, phase, which))


def dissipate(rho: np.ndarray) -> np.ndarray:
    return (SIGMA_PLUS @ rho @ SIGMA_MINUS
            - 0.5 * (_LOWERED @ rho + rho @ _LOWERED))


def lindblad_rhs(state, params: ModelParams, amplitude: float, phase: float) -> np.ndarray:
    """Right-hand side -i[H, rho] + gamma D[rho]."""
    rho = as_density(state)
    h = hamiltonian(params, amplitude, phase)
    return -1j * (h @ rho - rho @ h) + params.gamma * dissipate(rho)


# -- closed-form unitaries -------------------------------------------------

def _bloch_field(params: ModelParams, amplitude: float, phase: float) -> np.ndarray:
    """Real vector b with H = b . sigma."""
    c = 0.25 * params.alpha * amplitude
    return np.array([-c * np.cos(phase), -c * np.sin(phase), -0.5 * params.delta])


def segment_unitary(params: ModelParams, amplitude: float, phase: float,
                    tau: float) -> np.ndarray:
    """exp(-i H tau) = cos(|b| tau) I - i sin(|b| tau)/|b| H."""
    h = hamiltonian(params, amplitude, phase)
    theta = np.sqrt(0.5 * np.real(np.trace(h @ h))) * tau
    return np.cos(theta) * IDENTITY - 1j * tau * np.sinc(theta / np.pi) * h


def _cos_minus_sinc_over_sq(theta: float) -> float:
    """(cos t - sin t / t) / t**2, stable near zero."""
    if abs(theta) < 1e-2:
        t2 = theta * theta
        return -1.0 / 3.0 + t2 / 30.0 - t2 * t2 / 840.0
    return (np.cos(theta) - np.sin(theta) / theta) / theta ** 2


def segment_unitary_derivative(params: ModelParams, amplitude: float, phase: float,
                               tau: float, which: ParamName | str) -> tuple[np.ndarray, np.ndarray]:
    """Return (U, dU/dX) for one constant segment, both in closed form."""
    h = hamiltonian(params, amplitude, phase)
    dh = d_hamiltonian(params, amplitude, phase, which)
    q = 0.5 * np.real(np.trace(h @ h))  # |b|^2
    dq = np.real(np.trace(h @ dh))
    theta = np.sqrt(q) * tau
    sinc = np.sinc(theta / np.pi)
    s = tau * sinc
    u = np.cos(theta) * IDENTITY - 1j * s * h
    ds = 0.5 * tau ** 3 * _cos_minus_sinc_over_sq(theta) * dq
    du = -0.5 * tau ** 2 * sinc * dq * IDENTITY - 1j * (ds * h + s * dh)
    return u, du


def pulse_unitary(params: ModelParams, pulse: PiecewisePulse | None) -> np.ndarray:
    u = IDENTITY.copy()
    if pulse is None:
        return u
    for seg in pulse.segments:
        u = segment_unitary(params, seg.amplitude, seg.phase, seg.duration) @ u
    return u


def pulse_unitary_derivative(params: ModelParams, pulse: PiecewisePulse | None,
                             which: ParamName | str) -> tuple[np.ndarray, np.ndarray]:
    """(U, dU/dX) for the whole pulse by the product rule."""
    u = IDENTITY.copy()
    du = np.zeros((2, 2), dtype=complex)
    if pulse is None:
        return u, du
    for seg in pulse.segments:
        uk, duk = segment_unitary_derivative(params, seg.amplitude, seg.phase, seg.duration, which)
        du = duk @ u + uk @ du
        u = uk @ u
    return u, du


# -- Liouvillian propagation -----------------------------------------------

def segment_superop(params: ModelParams, amplitude: float, phase: float, tau: float) -> np.ndarray:
    return expm(liouvillian(params, amplitude, phase) * tau)


def segment_superop_derivative(params: ModelParams, amplitude: float, phase: float,
                               tau: float, which: ParamName | str) -> tuple[np.ndarray, np.ndarray]:
    """(exp(L tau), d exp(L tau)/dX) from one 8x8 block exponential."""
    gen = liouvillian(params, amplitude, phase)
    block = np.zeros((8, 8), dtype=complex)
    block[:4, :4] = gen
    block[4:, 4:] = gen
    block[:4, 4:] = d_liouvillian(params, amplitude, phase, which)
    full = expm(block * tau)
    return full[:4, :4], full[:4, 4:]


def evolve_density(rho0: np.ndarray, params: ModelParams, pulse: PiecewisePulse | None) -> np.ndarray:
    """Final density matrix as a raw array (no validation)."""
    rho = np.asarray(rho0, dtype=complex)
    if pulse is None:
        return rho.copy()
    if params.gamma == 0:
        u = pulse_unitary(params, pulse)
        return u @ rho @ u.conj().T
    v = rho.reshape(4)
    for seg in pulse.segments:
        v = segment_superop(params, seg.amplitude, seg.phase, seg.duration) @ v
    return v.reshape(2, 2)


def evolve_density_derivative(rho0: np.ndarray, params: ModelParams, pulse: PiecewisePulse | None,
                              which: ParamName | str) -> tuple[np.ndarray, np.ndarray]:
    """Final density matrix and its exact derivative with respect to ``which``."""
    which = ParamName.parse(which)
    rho = np.asarray(rho0, dtype=complex)
    if pulse is None:
        return rho.copy(), np.zeros((2, 2), dtype=complex)
    if params.gamma == 0 and which is not ParamName.GAMMA:
        u, du = pulse_unitary_derivative(params, pulse, which)
        left = du @ rho @ u.conj().T
        return u @ rho @ u.conj().T, left + left.conj().T
    v = rho.reshape(4)
    dv = np.zeros(4, dtype=complex)
    for seg in pulse.segments:
        m, dm = segment_superop_derivative(params, seg.amplitude, seg.phase, seg.duration, which)
        dv = dm @ v + m @ dv
        v = m @ v
    return v.reshape(2, 2), dv.reshape(2, 2)


def _checked(rho: np.ndarray) -> QubitState:
    # enforce exact Hermiticity; expm round-off leaves ~1e-17 asymmetry
    return QubitState(0.5 * (rho + rho.conj().T))


def propagate_segment(state, params: ModelParams, seg: PulseSegment) -> QubitState:
    v = segment_superop(params, seg.amplitude, seg.phase, seg.duration) @ as_density(state).reshape(4)
    return _checked(v.reshape(2, 2))


@dataclass(frozen=True, eq=False)
class Trajectory:
    times: np.ndarray
    states: tuple[QubitState, ...]

    def __post_init__(self):
        if len(self.times) != len(self.states):
            raise DomainError("times and states differ in length")
        if self.times[0] != 0 or np.any(np.diff(self.times) <= 0):
            raise DomainError("trajectory times must start at 0 and increase strictly")

    @property
    def final(self) -> QubitState:
        return self.states[-1]


def propagate_pulse(state, params: ModelParams, pulse: PiecewisePulse,
                    samples_per_segment: int = 32) -> Trajectory:
    """Sample the exact evolution at uniform sub-steps of every segment.

    Each sample is computed from the state at its segment start, so the
    sampling density never changes the sampled values.
    """
    if samples_per_segment < 1:
        raise DomainError("samples_per_segment must be >= 1")
    rho = as_density(state).reshape(4).astype(complex)
    times = [0.0]
    states = [_checked(rho.reshape(2, 2))]
    start = 0.0
    for seg in pulse.segments:
        gen = liouvillian(params, seg.amplitude, seg.phase)
        for j in range(1, samples_per_segment + 1):
            sub = seg.duration * j / samples_per_segment
            times.append(start + sub)
            states.append(_checked((expm(gen * sub) @ rho).reshape(2, 2)))
        rho = states[-1].matrix.reshape(4)
        start += seg.duration
    return Trajectory(np.array(times), tuple(states))


@dataclass(frozen=True, eq=False)
class UnitaryPropagator:
    matrix: np.ndarray

    def __post_init__(self):
        m = np.asarray(self.matrix, dtype=complex)
        if np.max(np.abs(m.conj().T @ m - IDENTITY)) > 1e-10:
            raise DomainError("propagator is not unitary")
        object.__setattr__(self, "matrix", m)


def unitary_propagator(params: ModelParams, pulse: PiecewisePulse, t: float) -> UnitaryPropagator:
    """Ordered product of segment exponentials up to ``t`` (gamma ignored)."""
    if t < 0 or t > pulse.total_duration * (1 + 1e-15):
        raise DomainError(f"time {t} outside [0, {pulse.total_duration}]")
    return UnitaryPropagator(pulse_unitary(params, pulse.truncated(min(t, pulse.total_duration))))
