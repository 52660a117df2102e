"""Fast Bell-state preparation for two Ising-coupled spins with decay.

Basis ``(|++>, |Bell>, |-->)`` with amplitudes ``(a, b, c)``, hbar = 1. In the
frame rotating with the transverse field the Hamiltonian is

    [[g Bz + xi - w - i G_pp,  g B / sqrt2,        0                  ],
     [g B / sqrt2,             -xi - i G_bell,     g B / sqrt2        ],
     [0,                       g B / sqrt2,        -g Bz + xi + w     ]]

and ``|-->`` is undamped. Restricted to ``{|++>, |Bell>}`` this is a two-level
system with Bloch vector ``S = (2 Re a*b, 2 Im a*b, |a|^2 - |b|^2)`` driven by
the effective field ``(sqrt2 g B, 0, g Bz - w + 2 xi)``.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace
from typing import Sequence

import numpy as np
from numpy.polynomial import Polynomial

from .dynamics import NonHermitianSystem, Trajectory, integrate_linear, integrate_schrodinger, _cross_matrix
from .errors import DomainError, SingularFieldError
from .geometry import AngularPath, TimeGrid

SQRT2 = np.sqrt(2.0)
ENDPOINT_GUARD = 1e-6

THETA_POLY = Polynomial([0.0, 0.0, -3 * np.pi, 2 * np.pi])
PHI_POLY = Polynomial([-np.pi / 2, -np.pi, 5 * np.pi, -8 * np.pi, 4 * np.pi])


@dataclass(frozen=True)
class TwoSpinParams:
    xi: float = 1.0
    omega: float = 0.02
    gamma_pp: float = 0.025
    gamma_bell: float = 0.025
    gyro: float = 1.0
    duration: float = 100.0

    def __post_init__(self):
        if self.gamma_pp < 0 or self.gamma_bell < 0:
            raise DomainError("decay rates must be non-negative")
        if self.duration <= 0:
            raise DomainError("duration must be positive")
        if self.gyro == 0:
            raise DomainError("gyromagnetic ratio must be non-zero")

    @classmethod
    def from_ratios(cls, r_gamma=1.0, gamma_bell_T=2.5, omega_T=2.0, duration=100.0, xi=1.0, gyro=1.0):
        """Parameters in the units used for the entanglement scan (time in hbar/xi)."""
        gb = gamma_bell_T / duration
        return cls(xi=xi, omega=omega_T / duration, gamma_pp=r_gamma * gb, gamma_bell=gb, gyro=gyro, duration=duration)

    @property
    def lambda0(self):
        return self.gamma_pp + self.gamma_bell

    @property
    def lambda_z(self):
        return self.gamma_pp - self.gamma_bell


def two_spin_angles(duration) -> AngularPath:
    """Polynomial angles that start and end with vanishing transverse field."""
    if duration <= 0:
        raise DomainError("duration must be positive")
    T = float(duration)
    d_theta, d_phi = THETA_POLY.deriv(), PHI_POLY.deriv()
    return AngularPath(
        lambda t: THETA_POLY(np.asarray(t) / T),
        lambda t: PHI_POLY(np.asarray(t) / T),
        lambda t: d_theta(np.asarray(t) / T) / T,
        lambda t: d_phi(np.asarray(t) / T) / T,
        T,
    )


def _cot_theta_cot_phi_rate(path: AngularPath, t):
    """``theta_dot / (tan theta tan phi)`` with the endpoint 0/0 replaced by its limit.

    At an endpoint theta has a double zero (mod pi) and phi + pi/2 a simple
    one, so the quotient tends to ``-2 phi_dot(t_end)``.
    """
    T = path.duration
    t = np.asarray(t, dtype=float)
    tau = t / T
    near_start = tau < ENDPOINT_GUARD
    near_end = tau > 1.0 - ENDPOINT_GUARD
    inner = ~(near_start | near_end)
    out = np.empty_like(tau)
    ti = t[inner]
    out[inner] = path.theta_dot(ti) / (np.tan(path.theta(ti)) * np.tan(path.phi(ti)))
    out[near_start] = -2.0 * path.phi_dot(0.0)
    out[near_end] = -2.0 * path.phi_dot(T)
    return out


def _check_sin_phi(path, t):
    sp = np.sin(path.phi(t))
    bad = np.abs(sp) < 1e-12
    if np.any(bad):
        t_bad = float(np.atleast_1d(t)[np.argmax(np.atleast_1d(bad))])
        raise SingularFieldError(f"sin(phi) vanishes at t={t_bad}", time=t_bad)
    return sp


def two_spin_shortcut_fields(path: AngularPath, p: TwoSpinParams):
    """Transverse amplitude ``B(t)`` and longitudinal field ``Bz(t)`` of the shortcut.

    ``g B = theta_dot / (sqrt2 sin phi)`` and
    ``g Bz = -phi_dot + theta_dot / (tan theta tan phi) + w - 2 xi``.
    """

    def transverse(t):
        t = np.asarray(t, dtype=float)
        return path.theta_dot(t) / (SQRT2 * _check_sin_phi(path, t)) / p.gyro

    def longitudinal(t):
        t = np.asarray(t, dtype=float)
        return (-path.phi_dot(t) + _cot_theta_cot_phi_rate(path, t) + p.omega - 2 * p.xi) / p.gyro

    return transverse, longitudinal


def two_spin_correction(theta, phi, p: TwoSpinParams, literal=False):
    """Field changes ``(dB, dBz)`` that cancel the differential decay of ``|++>``.

    Working in the frame attached to the nominal Bloch direction, the decay
    anisotropy ``Lambda_z`` is removed by ``g dB = -Lambda_z sin(theta) / (sqrt2 sin(phi))``
    and ``g dBz = -Lambda_z cos(theta) cot(phi)``, which keeps the effective
    field in the x-z plane. ``literal=True`` instead returns the longitudinal
    term with the opposite sign plus the constant offset ``w - 2 xi``, for
    comparison only.
    """
    theta = np.asarray(theta, dtype=float)
    phi = np.asarray(phi, dtype=float)
    sp = np.sin(phi)
    if np.any(np.abs(sp) < 1e-12):
        raise SingularFieldError("sin(phi) vanishes; transverse correction is singular")
    lz = p.lambda_z
    d_b = -lz * np.sin(theta) / (SQRT2 * sp) / p.gyro
    d_bz = -lz * np.cos(theta) * np.cos(phi) / sp / p.gyro
    if literal:
        d_bz = -d_bz + (p.omega - 2 * p.xi) / p.gyro
    return d_b, d_bz


def protocol_fields(p: TwoSpinParams, corrected: bool, literal=False):
    path = two_spin_angles(p.duration)
    b_fn, bz_fn = two_spin_shortcut_fields(path, p)
    if not corrected:
        return b_fn, bz_fn

    def b_corr(t):
        return b_fn(t) + two_spin_correction(path.theta(t), path.phi(t), p, literal)[0]

    def bz_corr(t):
        return bz_fn(t) + two_spin_correction(path.theta(t), path.phi(t), p, literal)[1]

    return b_corr, bz_corr


def two_spin_system(fields, p: TwoSpinParams, frame="rotating") -> NonHermitianSystem:
    b_fn, bz_fn = fields
    if frame not in ("rotating", "lab"):
        raise DomainError(f"frame must be 'rotating' or 'lab', got {frame!r}")
    shift = p.omega if frame == "rotating" else 0.0

    def hermitian(t):
        t = np.asarray(t, dtype=float)
        gb = p.gyro * b_fn(t) / SQRT2
        gbz = p.gyro * bz_fn(t)
        h = np.zeros(t.shape + (3, 3), dtype=complex)
        h[..., 0, 0] = gbz + p.xi - shift
        h[..., 1, 1] = -p.xi
        h[..., 2, 2] = -gbz + p.xi + shift
        # lab frame: the transverse field rotates, B_- = B exp(-i w t)
        coupling = gb if frame == "rotating" else gb * np.exp(-1j * p.omega * t)
        h[..., 0, 1] = h[..., 1, 2] = coupling
        h[..., 1, 0] = h[..., 2, 1] = np.conj(coupling)
        return h

    return NonHermitianSystem(hermitian, np.diag([-1j * p.gamma_pp, -1j * p.gamma_bell, 0.0]))


def integrate_two_spin(fields, p: TwoSpinParams, grid: TimeGrid, frame="rotating", psi_init=(1.0, 0.0, 0.0)) -> Trajectory:
    """Amplitudes ``(a, b, c)`` from ``|++>``.

    In the lab frame the returned amplitudes are converted back to the rotating
    frame (``a -> a e^{iwt}``, ``c -> c e^{-iwt}``) so both frames can be
    compared directly.
    """
    traj = integrate_schrodinger(two_spin_system(fields, p, frame), psi_init, grid)
    if frame == "rotating":
        return traj
    phase = np.exp(1j * p.omega * traj.times)
    states = traj.states.copy()
    states[:, 0] *= phase
    states[:, 2] /= phase
    return Trajectory(traj.times, states)


def bell_fidelity(state) -> float:
    """Renormalized Bell-state population ``|b|^2 / |psi|^2``."""
    psi = np.asarray(state, dtype=complex)
    norm2 = float(np.vdot(psi, psi).real)
    if norm2 == 0.0:
        raise DomainError("fidelity of the zero state is undefined")
    return float(abs(psi[1]) ** 2 / norm2)


# -- reduced Bloch model -------------------------------------------------------


@dataclass(frozen=True)
class ReducedBlochState:
    s0: float
    s: np.ndarray

    def __post_init__(self):
        if not self.s0 > 0:
            raise DomainError(f"trace component must be positive, got {self.s0}")
        if np.linalg.norm(self.s) > self.s0 + 1e-9:
            raise DomainError("Bloch vector longer than the trace component")

    @classmethod
    def from_amplitudes(cls, a, b):
        return cls(abs(a) ** 2 + abs(b) ** 2, bloch_vector(a, b))

    @property
    def bell_fidelity(self):
        return 0.5 * (1.0 - self.s[2] / self.s0)


def bloch_vector(a, b):
    ab = np.conj(a) * b
    return np.array([2 * ab.real, 2 * ab.imag, abs(a) ** 2 - abs(b) ** 2]).T


def effective_field(fields, p: TwoSpinParams):
    """``(sqrt2 g B, 0, g Bz - w + 2 xi)`` as a callable of time."""
    b_fn, bz_fn = fields

    def field(t):
        t = np.asarray(t, dtype=float)
        return np.stack(
            np.broadcast_arrays(SQRT2 * p.gyro * b_fn(t), 0.0 * t, p.gyro * bz_fn(t) - p.omega + 2 * p.xi), axis=-1
        )

    return field


def reduced_bloch_step_model(field, p: TwoSpinParams, grid: TimeGrid, initial=None) -> Trajectory:
    """Integrate the four-component linear system for ``(S0, S)``.

    ``dS0/dt = -L0 S0 - Lz Sz`` and ``dS/dt = F x S - L0 S - S0 Lz z`` with
    ``L0 = G_pp + G_bell`` and ``Lz = G_pp - G_bell``. No perturbative
    truncation is made. States are rows ``(S0, Sx, Sy, Sz)``; the default
    initial state is ``|++>``.
    """
    t = grid.half_times()
    gen = np.zeros(t.shape + (4, 4))
    gen[..., 1:, 1:] = _cross_matrix(np.asarray(field(t), dtype=float))
    idx = np.arange(4)
    gen[..., idx, idx] -= p.lambda0
    gen[..., 0, 3] = -p.lambda_z
    gen[..., 3, 0] = -p.lambda_z
    y0 = np.array([1.0, 0.0, 0.0, 1.0]) if initial is None else np.concatenate(([initial.s0], initial.s))
    return integrate_linear(gen, y0, grid)


# -- scan ----------------------------------------------------------------------


@dataclass(frozen=True)
class ScanRow:
    r_gamma: float
    fidelity_uncorrected: float
    fidelity_corrected: float


def run_entanglement_scan(
    r_gamma_grid: Sequence[float], p: TwoSpinParams, grid: TimeGrid, literal=False, workers=None
) -> list[ScanRow]:
    """Renormalized Bell fidelity with and without correction for each ``R = G_pp / G_bell``."""
    values = [float(r) for r in r_gamma_grid]
    if any(r < 1 for r in values):
        raise DomainError("rate ratios must be at least 1")

    def point(r):
        q = replace(p, gamma_pp=r * p.gamma_bell)
        fid = [
            bell_fidelity(integrate_two_spin(protocol_fields(q, c, literal), q, grid).final) for c in (False, True)
        ]
        return ScanRow(r, *fid)

    if workers and workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            return list(pool.map(point, values))
    return [point(r) for r in values]
