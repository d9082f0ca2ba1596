"""Core value types for the driven, damped spin-1/2 and its Hamiltonian.

Basis convention: index 0 is |up> (sigma_z = +1), index 1 is |down>.
The raising operator ``SIGMA_PLUS = |up><down|`` so that the amplitude-damping
dissipator built from it relaxes every state toward |up><up|.

Times are in units of 1/omega0 and frequencies in units of omega0; with the
default ``omega0 = 1`` every number is dimensionless.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

IDENTITY = np.eye(2, dtype=complex)
SIGMA_X = np.array([[0, 1], [1, 0]], dtype=complex)
SIGMA_Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
SIGMA_Z = np.array([[1, 0], [0, -1]], dtype=complex)
SIGMA_PLUS = np.array([[0, 1], [0, 0]], dtype=complex)
SIGMA_MINUS = np.array([[0, 0], [1, 0]], dtype=complex)
PAULIS = (SIGMA_X, SIGMA_Y, SIGMA_Z)

STATE_TOL = 1e-10
PURE_NORM_TOL = 1e-12


class DomainError(ValueError):
    """An argument lies outside the admissible domain of an operation."""


class UnsupportedParameterError(ValueError):
    """The requested parameter does not enter the object being differentiated."""


class NumericalFailure(ArithmeticError):
    """A computed quantity left its mathematically allowed range."""


class ParamName(str, enum.Enum):
    DELTA = "Delta"
    ALPHA = "Alpha"
    GAMMA = "Gamma"

    @classmethod
    def parse(cls, value: "ParamName | str") -> "ParamName":
        if isinstance(value, cls):
            return value
        for member in cls:
            if member.value.lower() == str(value).lower():
                return member
        raise DomainError(f"unknown parameter name {value!r}")

    @property
    def field(self) -> str:
        return self.value.lower()


def normalize_phase(phase: float) -> float:
    """Map an angle onto the half-open interval (-pi, pi]."""
    wrapped = math.remainder(float(phase), 2.0 * math.pi)
    if wrapped <= -math.pi:
        wrapped += 2.0 * math.pi
    return wrapped


def is_hermitian(op: np.ndarray, tol: float = STATE_TOL) -> bool:
    return bool(np.max(np.abs(op - op.conj().T)) <= tol)


@dataclass(frozen=True)
class ModelParams:
    delta: float = 0.2
    alpha: float = 1.0
    gamma: float = 0.0
    omega0: float = 1.0

    def __post_init__(self):
        for name in ("delta", "alpha", "gamma", "omega0"):
            value = getattr(self, name)
            if not math.isfinite(value):
                raise DomainError(f"{name} must be finite, got {value}")
            object.__setattr__(self, name, float(value))
        if self.omega0 <= 0:
            raise DomainError(f"omega0 must be positive, got {self.omega0}")
        if self.gamma < 0:
            raise DomainError(f"gamma must be non-negative, got {self.gamma}")

    def get(self, which: ParamName | str) -> float:
        return getattr(self, ParamName.parse(which).field)

    def with_value(self, which: ParamName | str, value: float) -> "ModelParams":
        return ModelParams(**{**self.as_dict(), ParamName.parse(which).field: value})

    def as_dict(self) -> dict:
        return {"delta": self.delta, "alpha": self.alpha, "gamma": self.gamma, "omega0": self.omega0}


@dataclass(frozen=True)
class PulseSegment:
    duration: float
    amplitude: float
    phase: float = 0.0

    def __post_init__(self):
        if not (math.isfinite(self.duration) and self.duration > 0):
            raise DomainError(f"segment duration must be positive, got {self.duration}")
        if not (math.isfinite(self.amplitude) and self.amplitude >= 0):
            raise DomainError(f"segment amplitude must be non-negative, got {self.amplitude}")
        object.__setattr__(self, "duration", float(self.duration))
        object.__setattr__(self, "amplitude", float(self.amplitude))
        object.__setattr__(self, "phase", normalize_phase(self.phase))

    def as_dict(self) -> dict:
        return {"duration": self.duration, "amplitude": self.amplitude, "phase": self.phase}


@dataclass(frozen=True)
class PiecewisePulse:
    """Ordered constant segments; segment k covers [start_k, start_k + duration_k)."""

    segments: tuple[PulseSegment, ...]
    _starts: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        segs = tuple(self.segments)
        if not segs:
            raise DomainError("a pulse needs at least one segment")
        object.__setattr__(self, "segments", segs)
        starts = np.concatenate([[0.0], np.cumsum([s.duration for s in segs])])
        object.__setattr__(self, "_starts", starts)

    @classmethod
    def from_lists(cls, durations: Sequence[float], amplitudes: Sequence[float],
                   phases: Sequence[float] | None = None) -> "PiecewisePulse":
        if phases is None:
            phases = [0.0] * len(durations)
        if not len(durations) == len(amplitudes) == len(phases):
            raise DomainError("durations, amplitudes and phases must have equal length")
        return cls(tuple(PulseSegment(d, a, p) for d, a, p in zip(durations, amplitudes, phases)))

    @classmethod
    def from_dicts(cls, items: Iterable[dict]) -> "PiecewisePulse":
        return cls(tuple(PulseSegment(float(i["duration"]), float(i["amplitude"]),
                                      float(i.get("phase", 0.0))) for i in items))

    def as_dicts(self) -> list[dict]:
        return [s.as_dict() for s in self.segments]

    @property
    def total_duration(self) -> float:
        return float(self._starts[-1])

    @property
    def boundaries(self) -> np.ndarray:
        return self._starts.copy()

    def __len__(self) -> int:
        return len(self.segments)

    def segment_index(self, t: float) -> int:
        """Index of the segment whose half-open interval contains ``t``.

        ``t == total_duration`` belongs to the closure of the last segment.
        """
        if t < 0 or t > self.total_duration:
            raise DomainError(f"time {t} outside [0, {self.total_duration}]")
        idx = int(np.searchsorted(self._starts, t, side="right")) - 1
        return min(idx, len(self.segments) - 1)

    def at(self, t: float) -> PulseSegment:
        return self.segments[self.segment_index(t)]

    def truncated(self, t: float) -> "PiecewisePulse | None":
        """The pulse restricted to [0, t]; ``None`` when t == 0."""
        if t < 0 or t > self.total_duration * (1 + 1e-15):
            raise DomainError(f"time {t} outside [0, {self.total_duration}]")
        out = []
        for seg, start in zip(self.segments, self._starts):
            remaining = t - start
            if remaining <= 0:
                break
            out.append(seg if remaining >= seg.duration else
                       PulseSegment(remaining, seg.amplitude, seg.phase))
        return PiecewisePulse(tuple(out)) if out else None

    def energy(self) -> float:
        return float(sum(s.amplitude ** 2 * s.duration for s in self.segments))

    def arrays(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        d = np.array([s.duration for s in self.segments])
        a = np.array([s.amplitude for s in self.segments])
        p = np.array([s.phase for s in self.segments])
        return d, a, p


@dataclass(frozen=True)
class BlochVector:
    x: float
    y: float
    z: float

    def __post_init__(self):
        if self.norm() > 1 + STATE_TOL:
            raise DomainError(f"Bloch vector norm {self.norm()} exceeds 1")

    def norm(self) -> float:
        return math.sqrt(self.x ** 2 + self.y ** 2 + self.z ** 2)

    def as_array(self) -> np.ndarray:
        return np.array([self.x, self.y, self.z])


@dataclass(frozen=True, eq=False)
class QubitState:
    """Density matrix of the spin; validated on construction."""

    matrix: np.ndarray

    def __post_init__(self):
        m = np.array(self.matrix, dtype=complex)
        if m.shape != (2, 2) or not np.all(np.isfinite(m)):
            raise DomainError("a qubit state is a finite 2x2 matrix")
        if not is_hermitian(m):
            raise DomainError("density matrix is not Hermitian")
        if abs(np.trace(m).real - 1) > STATE_TOL or abs(np.trace(m).imag) > STATE_TOL:
            raise DomainError(f"density matrix trace {np.trace(m)} differs from 1")
        if np.linalg.eigvalsh(m).min() < -STATE_TOL:
            raise DomainError("density matrix has a negative eigenvalue")
        m.setflags(write=False)
        object.__setattr__(self, "matrix", m)

    @classmethod
    def from_pure(cls, psi: "PureState | np.ndarray") -> "QubitState":
        v = psi.amplitudes if isinstance(psi, PureState) else np.asarray(psi, dtype=complex)
        return cls(np.outer(v, v.conj()))

    def purity(self) -> float:
        return float(np.real(np.trace(self.matrix @ self.matrix)))

    def population_up(self) -> float:
        return float(self.matrix[0, 0].real)


@dataclass(frozen=True, eq=False)
class PureState:
    amplitudes: np.ndarray

    def __post_init__(self):
        v = np.array(self.amplitudes, dtype=complex).reshape(-1)
        if v.shape != (2,):
            raise DomainError("a pure qubit state has two amplitudes")
        if abs(np.linalg.norm(v) - 1) > PURE_NORM_TOL:
            raise DomainError(f"state norm {np.linalg.norm(v)} differs from 1")
        v.setflags(write=False)
        object.__setattr__(self, "amplitudes", v)

    @classmethod
    def normalized(cls, amplitudes) -> "PureState":
        v = np.asarray(amplitudes, dtype=complex)
        return cls(v / np.linalg.norm(v))

    def density(self) -> QubitState:
        return QubitState.from_pure(self)


UP = PureState(np.array([1, 0], dtype=complex))
DOWN = PureState(np.array([0, 1], dtype=complex))


@dataclass(frozen=True, eq=False)
class Povm:
    elements: tuple[np.ndarray, ...]

    def __post_init__(self):
        elems = tuple(np.array(e, dtype=complex) for e in self.elements)
        if not elems:
            raise DomainError("a POVM needs at least one element")
        dim = elems[0].shape[0]
        total = np.zeros((dim, dim), dtype=complex)
        for e in elems:
            if e.shape != (dim, dim) or not is_hermitian(e):
                raise DomainError("POVM elements must be Hermitian and of equal dimension")
            if np.linalg.eigvalsh(e).min() < -STATE_TOL:
                raise DomainError("POVM element is not positive semidefinite")
            total += e
        if np.max(np.abs(total - np.eye(dim))) > STATE_TOL:
            raise DomainError("POVM elements do not sum to the identity")
        object.__setattr__(self, "elements", elems)


def sigma_z_povm() -> Povm:
    """Projective measurement onto |up> and |down>."""
    return Povm((np.diag([1, 0]).astype(complex), np.diag([0, 1]).astype(complex)))


def hamiltonian(params: ModelParams, amplitude: float, phase: float) -> np.ndarray:
    """-(delta/2) sz - (alpha/4) w (e^{-i phi} s+ + e^{i phi} s-)."""
    if not 0 <= amplitude <= params.omega0 * (1 + 1e-12):
        raise DomainError(f"amplitude {amplitude} outside [0, {params.omega0}]")
    coupling = 0.25 * params.alpha * amplitude
    off = -coupling * np.exp(-1j * phase)
    return np.array([[-0.5 * params.delta, off], [np.conj(off), 0.5 * params.delta]], dtype=complex)


def d_hamiltonian(params: ModelParams, amplitude: float, phase: float,
                  which: ParamName | str) -> np.ndarray:
    """Partial derivative of :func:`hamiltonian` with respect to ``which``."""
    which = ParamName.parse(which)
    if which is ParamName.DELTA:
        return -0.5 * SIGMA_Z
    if which is ParamName.ALPHA:
        off = -0.25 * amplitude * np.exp(-1j * phase)
        return np.array([[0, off], [np.conj(off), 0]], dtype=complex)
    raise UnsupportedParameterError(
        "gamma enters the dissipator, not the Hamiltonian; use density-matrix derivatives")


def bloch_from_state(state: QubitState) -> BlochVector:
    m = state.matrix
    return BlochVector(*(float(np.real(np.trace(m @ s))) for s in PAULIS))


def bloch_array(rho: np.ndarray) -> np.ndarray:
    """(x, y, z) of a raw 2x2 density matrix, no validation."""
    return np.array([2 * rho[0, 1].real, -2 * rho[0, 1].imag, (rho[0, 0] - rho[1, 1]).real])


def state_from_bloch(b: BlochVector) -> QubitState:
    if b.norm() > 1 + STATE_TOL:
        raise DomainError(f"Bloch vector norm {b.norm()} exceeds 1")
    return QubitState(0.5 * (IDENTITY + b.x * SIGMA_X + b.y * SIGMA_Y + b.z * SIGMA_Z))


def as_density(state) -> np.ndarray:
    """Accept a QubitState, PureState, 2-vector or 2x2 array; return a raw matrix."""
    if isinstance(state, QubitState):
        return state.matrix
    if isinstance(state, PureState):
        return np.outer(state.amplitudes, state.amplitudes.conj())
    arr = np.asarray(state, dtype=complex)
    if arr.ndim == 1:
        return np.outer(arr, arr.conj())
    return arr
