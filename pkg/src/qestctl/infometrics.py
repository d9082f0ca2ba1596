"""Bures distance, quantum and classical Fisher information.

The metric formulas accept square matrices of any dimension; everything that
needs dynamics (derivatives, A operator, bounds) is specific to the spin model.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from . import dynamics
from .qmodel import (
    UP,
    DomainError,
    ModelParams,
    NumericalFailure,
    ParamName,
    PiecewisePulse,
    Povm,
    PureState,
    UnsupportedParameterError,
    as_density,
    d_hamiltonian,
    is_hermitian,
)

SUPPORT_THRESHOLD = 1e-10
PURITY_THRESHOLD = 1 - 1e-9
DEFAULT_STEP = 1e-5
DEFAULT_QUAD_POINTS = 16


@dataclass(frozen=True)
class SpectralDecomposition:
    """Eigenvalues in descending order with matching eigenvector columns."""

    eigenvalues: np.ndarray
    eigenvectors: np.ndarray

    @classmethod
    def of(cls, op: np.ndarray) -> "SpectralDecomposition":
        w, v = np.linalg.eigh(op)
        return cls(w[::-1].copy(), v[:, ::-1].copy())

    @property
    def support_dimension(self) -> int:
        return int(np.sum(self.eigenvalues > SUPPORT_THRESHOLD))

    def reconstruct(self) -> np.ndarray:
        v = self.eigenvectors
        return (v * self.eigenvalues) @ v.conj().T


@dataclass(frozen=True, eq=False)
class DerivativeEstimate:
    matrix: np.ndarray
    step: float = 0.0
    order: int = 0

    def __post_init__(self):
        m = np.asarray(self.matrix, dtype=complex)
        if abs(np.trace(m)) > 1e-10 * max(1.0, np.max(np.abs(m))):
            raise DomainError(f"density-matrix derivative has trace {np.trace(m)}")
        if not is_hermitian(m, 1e-10 * max(1.0, np.max(np.abs(m)))):
            raise DomainError("density-matrix derivative is not Hermitian")
        object.__setattr__(self, "matrix", 0.5 * (m + m.conj().T))


def _psd_sqrt(op: np.ndarray) -> np.ndarray:
    w, v = np.linalg.eigh(0.5 * (op + op.conj().T))
    return (v * np.sqrt(np.clip(w, 0.0, None))) @ v.conj().T


def root_fidelity(rho1, rho2) -> float:
    """Tr sqrt(sqrt(rho1) rho2 sqrt(rho1)).

    Qubits use the determinant closed form; larger matrices go through
    eigendecomposition with eigenvalues clamped at zero.
    """
    r1, r2 = as_density(rho1), as_density(rho2)
    if r1.shape == (2, 2):
        # (Tr sqrt(...))^2 = Tr(r1 r2) + 2 sqrt(det r1 det r2) for qubits; avoids
        # the sqrt(eps) leakage of clamped eigenvalues near pure states
        overlap = float(np.real(np.trace(r1 @ r2)))
        dets = max(float(np.real(np.linalg.det(r1) * np.linalg.det(r2))), 0.0)
        return float(np.sqrt(max(overlap + 2.0 * np.sqrt(dets), 0.0)))
    s = _psd_sqrt(r1)
    inner = s @ r2 @ s
    w = np.linalg.eigvalsh(0.5 * (inner + inner.conj().T))
    return float(np.sum(np.sqrt(np.clip(w, 0.0, None))))


def bures_distance_sq(rho1, rho2) -> float:
    """2 (1 - Tr sqrt(sqrt(rho1) rho2 sqrt(rho1))), clamped to [0, 2]."""
    d2 = 2.0 * (1.0 - root_fidelity(rho1, rho2))
    if d2 < -1e-9 or d2 > 2 + 1e-9:
        raise NumericalFailure(f"Bures distance squared {d2} outside [0, 2]")
    return min(max(d2, 0.0), 2.0)


def _check_shift(params: ModelParams, which: ParamName, shift: float) -> None:
    if which is ParamName.GAMMA and params.gamma - shift < 0:
        raise DomainError(
            f"finite difference needs gamma - step >= 0 (gamma={params.gamma}, step={shift})")


def rho_derivative(params: ModelParams, pulse: PiecewisePulse | None, which: ParamName | str,
                   t: float | None = None, step: float = DEFAULT_STEP,
                   initial=UP) -> DerivativeEstimate:
    """Central difference of rho_X(t) with one Richardson level (steps h and h/2)."""
    which = ParamName.parse(which)
    if step <= 0:
        raise DomainError("finite-difference step must be positive")
    _check_shift(params, which, step)
    rho0 = as_density(initial)
    sub = _up_to(pulse, t)
    x0 = params.get(which)

    def central(h: float) -> np.ndarray:
        plus = dynamics.evolve_density(rho0, params.with_value(which, x0 + h), sub)
        minus = dynamics.evolve_density(rho0, params.with_value(which, x0 - h), sub)
        return (plus - minus) / (2 * h)

    coarse, fine = central(step), central(step / 2)
    est = fine + (fine - coarse) / 3.0
    # the exact derivative is traceless; drop the round-off trace (~eps / h)
    est = est - np.trace(est) / est.shape[0] * np.eye(est.shape[0])
    return DerivativeEstimate(est, step=step, order=1)


def rho_derivative_exact(params: ModelParams, pulse: PiecewisePulse | None, which: ParamName | str,
                         t: float | None = None, initial=UP) -> tuple[np.ndarray, DerivativeEstimate]:
    """(rho(t), d rho(t)/dX) from differentiated segment exponentials."""
    rho, drho = dynamics.evolve_density_derivative(as_density(initial), params, _up_to(pulse, t), which)
    return rho, DerivativeEstimate(drho)


def _up_to(pulse: PiecewisePulse | None, t: float | None) -> PiecewisePulse | None:
    if pulse is None or t is None:
        return pulse
    return pulse.truncated(t)


def _matrix(rho1) -> np.ndarray:
    return rho1.matrix if isinstance(rho1, DerivativeEstimate) else np.asarray(rho1, dtype=complex)


def qfi_full_rank(rho0, rho1, restrict_k_to_support: bool = False) -> float:
    """4 sum_k sum_{m in support} p_m / (p_m + p_k)^2 |<k|rho1|m>|^2.

    The k-sum runs over the whole eigenbasis.  ``restrict_k_to_support``
    keeps only k in the support, the form obtained by expanding the Bures
    distance when the perturbation stays inside the support.
    """
    dec = SpectralDecomposition.of(as_density(rho0))
    p, v = dec.eigenvalues, dec.eigenvectors
    elems = np.abs(v.conj().T @ _matrix(rho1) @ v) ** 2
    inside = p > SUPPORT_THRESHOLD
    total = 0.0
    for m in np.flatnonzero(inside):
        ks = np.flatnonzero(inside) if restrict_k_to_support else range(len(p))
        for k in ks:
            total += p[m] / (p[m] + p[k]) ** 2 * elems[k, m]
    return float(4.0 * total)


def qfi_pure_fubini(psi0, psi1) -> float:
    """4 (<psi1|psi1> - |<psi0|psi1>|^2)."""
    v0 = psi0.amplitudes if isinstance(psi0, PureState) else np.asarray(psi0, dtype=complex)
    v1 = np.asarray(psi1, dtype=complex)
    value = 4.0 * (np.vdot(v1, v1).real - abs(np.vdot(v0, v1)) ** 2)
    return max(float(value), 0.0)


def _gauss_legendre(n: int) -> tuple[np.ndarray, np.ndarray]:
    x, w = np.polynomial.legendre.leggauss(n)
    return 0.5 * (x + 1.0), 0.5 * w


def a_operator(params: ModelParams, pulse: PiecewisePulse, which: ParamName | str,
               t: float | None = None, quad_points: int = DEFAULT_QUAD_POINTS) -> np.ndarray:
    """Integral of U0(t')^dag dH/dX(t') U0(t') over [0, t], Gauss-Legendre per segment."""
    which = ParamName.parse(which)
    if which is ParamName.GAMMA:
        raise UnsupportedParameterError("the A operator is defined for Hamiltonian parameters only")
    sub = _up_to(pulse, t)
    acc = np.zeros((2, 2), dtype=complex)
    if sub is None:
        return acc
    nodes, weights = _gauss_legendre(quad_points)
    u_start = np.eye(2, dtype=complex)
    for seg in sub.segments:
        dh = d_hamiltonian(params, seg.amplitude, seg.phase, which)
        for x, w in zip(nodes, weights):
            u = dynamics.segment_unitary(params, seg.amplitude, seg.phase, x * seg.duration) @ u_start
            acc += (w * seg.duration) * (u.conj().T @ dh @ u)
        u_start = dynamics.segment_unitary(params, seg.amplitude, seg.phase, seg.duration) @ u_start
    return 0.5 * (acc + acc.conj().T)


def qfi_pure_from_a(psi0, a: np.ndarray) -> float:
    """Four times the variance of ``a`` in ``psi0``."""
    a = np.asarray(a, dtype=complex)
    if not is_hermitian(a, 1e-10 * max(1.0, np.max(np.abs(a)))):
        raise DomainError("A operator is not Hermitian")
    v = psi0.amplitudes if isinstance(psi0, PureState) else np.asarray(psi0, dtype=complex)
    av = a @ v
    mean = np.vdot(v, av).real
    return max(4.0 * (np.vdot(av, av).real - mean ** 2), 0.0)


def qfi_tight_bound(params: ModelParams, pulse: PiecewisePulse, which: ParamName | str,
                    t: float | None = None) -> float:
    """(integral of the eigenvalue spread of dH/dX)^2, exact for constant segments."""
    which = ParamName.parse(which)
    if which is ParamName.GAMMA:
        raise UnsupportedParameterError("the tight bound needs a Hamiltonian parameter")
    sub = _up_to(pulse, t)
    if sub is None:
        return 0.0
    total = 0.0
    for seg in sub.segments:
        w = np.linalg.eigvalsh(d_hamiltonian(params, seg.amplitude, seg.phase, which))
        total += (w[-1] - w[0]) * seg.duration
    return float(total ** 2)


def qfi_mixed_approx(psi0, a: np.ndarray, basis: Sequence, p1: Sequence[float], eps: float) -> float:
    """First-order QFI of U (|psi0><psi0| + eps sum_k p1_k |psi_k><psi_k|) U^dag.

    Returns 4 sum_{n>0} |<psi0|A|psi_n>|^2 (1 + eps (p1_0 - 3 p1_n)).
    """
    vecs = [b.amplitudes if isinstance(b, PureState) else np.asarray(b, dtype=complex) for b in basis]
    v0 = psi0.amplitudes if isinstance(psi0, PureState) else np.asarray(psi0, dtype=complex)
    if len(p1) != len(vecs):
        raise DomainError("p1 needs one entry per basis vector")
    if abs(abs(np.vdot(vecs[0], v0)) - 1) > 1e-10:
        raise DomainError("basis[0] must be psi0")
    gram = np.array([[np.vdot(a_, b_) for b_ in vecs] for a_ in vecs])
    if np.max(np.abs(gram - np.eye(len(vecs)))) > 1e-10:
        raise DomainError("basis is not orthonormal")
    a = np.asarray(a, dtype=complex)
    av0 = a.conj().T @ v0
    total = 0.0
    for n in range(1, len(vecs)):
        total += abs(np.vdot(av0, vecs[n])) ** 2 * (1 + eps * (p1[0] - 3 * p1[n]))
    return float(4.0 * total)


def cfi(rho0, rho1, povm: Povm) -> float:
    """sum over outcomes with pi0 > threshold of pi1^2 / pi0."""
    r0, r1 = as_density(rho0), _matrix(rho1)
    total = 0.0
    for elem in povm.elements:
        pi0 = np.real(np.trace(r0 @ elem))
        if pi0 > SUPPORT_THRESHOLD:
            total += np.real(np.trace(r1 @ elem)) ** 2 / pi0
    return float(total)


def fd_qfi(params: ModelParams, pulse: PiecewisePulse | None, which: ParamName | str,
           delta_x: float, t: float | None = None, initial=UP) -> float:
    """(4 / dX^2) D^2(rho_X0(t), rho_{X0+dX}(t))."""
    which = ParamName.parse(which)
    if delta_x <= 0:
        raise DomainError("delta_x must be positive")
    rho_init = as_density(initial)
    sub = _up_to(pulse, t)
    a = dynamics.evolve_density(rho_init, params, sub)
    b = dynamics.evolve_density(rho_init, params.with_value(which, params.get(which) + delta_x), sub)
    return 4.0 / delta_x ** 2 * bures_distance_sq(a, b)


def is_pure(rho) -> bool:
    r = as_density(rho)
    return float(np.real(np.trace(r @ r))) > PURITY_THRESHOLD


def dominant_vector(rho) -> np.ndarray:
    dec = SpectralDecomposition.of(as_density(rho))
    return dec.eigenvectors[:, 0]


def qfi(params: ModelParams, pulse: PiecewisePulse | None, which: ParamName | str,
        t: float | None = None, initial=UP, derivative: str = "exact") -> float:
    """Purity-routed QFI of rho_X(t).

    Pure final states with a Hamiltonian parameter go through the Fubini-Study
    form (the variance of the A operator when gamma = 0); everything else through the full-rank spectral formula
    with ``derivative`` either ``"exact"`` or ``"richardson"``.
    """
    which = ParamName.parse(which)
    sub = _up_to(pulse, t)
    if derivative == "exact":
        rho, drho = rho_derivative_exact(params, sub, which, initial=initial)
    elif derivative == "richardson":
        rho = dynamics.evolve_density(as_density(initial), params, sub)
        drho = rho_derivative(params, sub, which, initial=initial)
    else:
        raise DomainError(f"unknown derivative method {derivative!r}")
    if which is not ParamName.GAMMA and is_pure(rho) and is_pure(initial):
        if sub is None:
            return 0.0
        if params.gamma > 0:
            # Fubini-Study metric written on the projector: 4 <psi1|(1-P)|psi1> = 2 Tr(rho1^2)
            m = drho.matrix
            return max(float(2.0 * np.real(np.trace(m @ m))), 0.0)
        psi0 = dominant_vector(initial)
        if derivative == "exact":
            # psi1 = dU psi0 is exact; equal to -i U A psi0
            u, du = dynamics.pulse_unitary_derivative(params, sub, which)
            return qfi_pure_fubini(u @ psi0, du @ psi0)
        return qfi_pure_from_a(psi0, a_operator(params, sub, which))
    return qfi_full_rank(rho, drho)
