"""Scalar Bloch-vector kernels for inner loops (optimizer, likelihood grids).

The spin state is carried as its Bloch vector r.  Under H = b . sigma the
vector precesses as dr/dt = 2 b x r; the amplitude-damping dissipator adds
(-gamma x/2, -gamma y/2, gamma (1 - z)).  Undamped segments are applied as
closed-form rotations in plain floats, damped ones through the exponential of
the 4x4 affine generator.  Results agree with the density-matrix routines in
:mod:`qestctl.dynamics` and :mod:`qestctl.infometrics` to round-off; the
tests hold both paths against each other.
"""
from __future__ import annotations

import math
from typing import Sequence

import numpy as np
from scipy.linalg import expm

from .qmodel import ParamName

Vec = tuple[float, float, float]
SUPPORT_THRESHOLD = 1e-10
PURITY_THRESHOLD = 1 - 1e-9


def _cross(a: Vec, b: Vec) -> Vec:
    return (a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0])


def _field(delta: float, alpha: float, amp: float, phase: float) -> Vec:
    c = 0.25 * alpha * amp
    return (-c * math.cos(phase), -c * math.sin(phase), -0.5 * delta)


def _d_field(amp: float, phase: float, which: ParamName) -> Vec:
    if which is ParamName.DELTA:
        return (0.0, 0.0, -0.5)
    return (-0.25 * amp * math.cos(phase), -0.25 * amp * math.sin(phase), 0.0)


def _sinc(theta: float) -> float:
    if abs(theta) < 1e-4:
        return 1.0 - theta * theta / 6.0
    return math.sin(theta) / theta


def _cos_minus_sinc_over_sq(theta: float) -> float:
    if abs(theta) < 1e-2:
        t2 = theta * theta
        return -1.0 / 3.0 + t2 / 30.0 - t2 * t2 / 840.0
    return (math.cos(theta) - math.sin(theta) / theta) / (theta * theta)


def _rotate(w: float, v: Vec, r: Vec) -> Vec:
    vr = _cross(v, r)
    vvr = _cross(v, vr)
    return (r[0] + 2 * (w * vr[0] + vvr[0]),
            r[1] + 2 * (w * vr[1] + vvr[1]),
            r[2] + 2 * (w * vr[2] + vvr[2]))


def propagate(delta: float, alpha: float, gamma: float, durations: Sequence[float],
              amps: Sequence[float], phases: Sequence[float], r0: Vec) -> Vec:
    """Final Bloch vector after the piecewise-constant pulse."""
    if gamma == 0:
        r = r0
        for tau, amp, ph in zip(durations, amps, phases):
            b = _field(delta, alpha, amp, ph)
            theta = math.sqrt(b[0] ** 2 + b[1] ** 2 + b[2] ** 2) * tau
            s = tau * _sinc(theta)
            r = _rotate(math.cos(theta), (s * b[0], s * b[1], s * b[2]), r)
        return r
    v = np.array([*r0, 1.0])
    for tau, amp, ph in zip(durations, amps, phases):
        v = expm(_affine_generator(delta, alpha, gamma, amp, ph) * tau) @ v
    return (float(v[0]), float(v[1]), float(v[2]))


def _affine_generator(delta: float, alpha: float, gamma: float, amp: float, phase: float) -> np.ndarray:
    bx, by, bz = _field(delta, alpha, amp, phase)
    return np.array([
        [-0.5 * gamma, -2 * bz, 2 * by, 0.0],
        [2 * bz, -0.5 * gamma, -2 * bx, 0.0],
        [-2 * by, 2 * bx, -gamma, gamma],
        [0.0, 0.0, 0.0, 0.0],
    ])


def _d_affine_generator(amp: float, phase: float, which: ParamName) -> np.ndarray:
    if which is ParamName.GAMMA:
        return np.array([[-0.5, 0, 0, 0], [0, -0.5, 0, 0], [0, 0, -1.0, 1.0], [0, 0, 0, 0]])
    dx, dy, dz = _d_field(amp, phase, which)
    return np.array([
        [0.0, -2 * dz, 2 * dy, 0.0],
        [2 * dz, 0.0, -2 * dx, 0.0],
        [-2 * dy, 2 * dx, 0.0, 0.0],
        [0.0, 0.0, 0.0, 0.0],
    ])


def propagate_with_derivative(delta: float, alpha: float, gamma: float, durations: Sequence[float],
                              amps: Sequence[float], phases: Sequence[float], r0: Vec,
                              which: ParamName) -> tuple[Vec, Vec]:
    """(r(t_f), dr(t_f)/dX), exact per segment."""
    if gamma == 0 and which is not ParamName.GAMMA:
        r: Vec = r0
        dr: Vec = (0.0, 0.0, 0.0)
        for tau, amp, ph in zip(durations, amps, phases):
            b = _field(delta, alpha, amp, ph)
            db = _d_field(amp, ph, which)
            q = b[0] ** 2 + b[1] ** 2 + b[2] ** 2
            dq = 2 * (b[0] * db[0] + b[1] * db[1] + b[2] * db[2])
            theta = math.sqrt(q) * tau
            sinc = _sinc(theta)
            s = tau * sinc
            w = math.cos(theta)
            v = (s * b[0], s * b[1], s * b[2])
            dw = -0.5 * tau * tau * sinc * dq
            ds = 0.5 * tau ** 3 * _cos_minus_sinc_over_sq(theta) * dq
            dv = (ds * b[0] + s * db[0], ds * b[1] + s * db[1], ds * b[2] + s * db[2])
            vr = _cross(v, r)
            dvr = _cross(dv, r)
            t1 = _cross(dv, vr)
            t2 = _cross(v, dvr)
            rot_dr = _rotate(w, v, dr)
            dr = tuple(rot_dr[i] + 2 * (dw * vr[i] + w * dvr[i] + t1[i] + t2[i]) for i in range(3))
            r = _rotate(w, v, r)
        return r, dr
    v = np.array([*r0, 1.0])
    dv = np.zeros(4)
    block = np.zeros((8, 8))
    for tau, amp, ph in zip(durations, amps, phases):
        gen = _affine_generator(delta, alpha, gamma, amp, ph)
        block[:4, :4] = gen
        block[4:, 4:] = gen
        block[:4, 4:] = _d_affine_generator(amp, ph, which)
        full = expm(block * tau)
        dv = full[:4, 4:] @ v + full[:4, :4] @ dv
        v = full[:4, :4] @ v
    return (float(v[0]), float(v[1]), float(v[2])), (float(dv[0]), float(dv[1]), float(dv[2]))


def qfi(r: Vec, dr: Vec, which: ParamName, initial_pure: bool = True) -> float:
    """QFI of the state with Bloch vector r and derivative dr.

    Mirrors the purity routing of :func:`qestctl.infometrics.qfi`: pure states
    and Hamiltonian parameters give |dr|^2; otherwise the spectral formula in
    the eigenbasis of the state, restricted to the support.
    """
    nr2 = r[0] ** 2 + r[1] ** 2 + r[2] ** 2
    d2 = dr[0] ** 2 + dr[1] ** 2 + dr[2] ** 2
    purity = 0.5 * (1 + nr2)
    if which is not ParamName.GAMMA and initial_pure and purity > PURITY_THRESHOLD:
        return d2
    nr = math.sqrt(nr2)
    if nr == 0.0:
        return d2
    par = (r[0] * dr[0] + r[1] * dr[1] + r[2] * dr[2]) / nr
    perp2 = max(d2 - par * par, 0.0)
    p_hi, p_lo = 0.5 * (1 + nr), 0.5 * (1 - nr)
    if p_lo > SUPPORT_THRESHOLD:
        return perp2 + par * par / (1 - nr2)
    return perp2 * p_hi + 0.25 * par * par / p_hi


def cfi_sigma_z(r: Vec, dr: Vec) -> float:
    """Fisher information of the sigma_z outcome distribution."""
    total = 0.0
    dp = 0.5 * dr[2]
    for pi0 in (0.5 * (1 + r[2]), 0.5 * (1 - r[2])):
        if pi0 > SUPPORT_THRESHOLD:
            total += dp * dp / pi0
    return total


def bures_sq(r: Vec, s: Vec) -> float:
    """Bures distance squared between two qubit states given by Bloch vectors."""
    dot = r[0] * s[0] + r[1] * s[1] + r[2] * s[2]
    dets = (1 - (r[0] ** 2 + r[1] ** 2 + r[2] ** 2)) * (1 - (s[0] ** 2 + s[1] ** 2 + s[2] ** 2))
    fid = 0.5 * (1 + dot + math.sqrt(max(dets, 0.0)))
    return min(max(2.0 * (1.0 - math.sqrt(max(fid, 0.0))), 0.0), 2.0)
