"""Fast STIRAP with a lossy intermediate level.

The three amplitudes ``(C1, C2, C3)`` map to a pseudo-spin
``S = (-C3, -i C2, C1)`` precessing about ``B = (Om_p, 0, Om_s) / 2`` with the
loss of level 2 acting as the tensor ``Gamma * y y``. The nominal state follows
the invariant eigenstate

    cos(g) cos(b) |1> - i sin(g) |2> - cos(g) sin(b) |3>,

with angles ``b`` (beta) and ``g`` (gamma) given by least-order polynomials
fixed by boundary conditions.
"""

from __future__ import annotations

from dataclasses import dataclass
from math import factorial
from typing import NamedTuple, Sequence

import numpy as np
from numpy.polynomial import Polynomial

from .correction import correction_field
from .dynamics import NonHermitianSystem, Trajectory, integrate_schrodinger
from .errors import DegenerateConditionsError, DomainError, SingularFieldError
from .geometry import TimeGrid


@dataclass(frozen=True)
class StirapParams:
    epsilon: float = 0.05
    delta: float = np.pi / 4
    big_gamma: float = 1.0
    duration: float = 1.0

    def __post_init__(self):
        if not 0 < self.epsilon < self.delta <= np.pi / 2:
            raise DomainError(f"need 0 < epsilon < delta <= pi/2, got epsilon={self.epsilon}, delta={self.delta}")
        if self.big_gamma < 0:
            raise DomainError("loss rate must be non-negative")
        if self.duration <= 0:
            raise DomainError("duration must be positive")


class BoundaryCondition(NamedTuple):
    time: float
    order: int
    value: float


def fit_polynomial(conditions: Sequence[BoundaryCondition], duration: float) -> Polynomial:
    """Least-order polynomial in ``tau = t / duration`` meeting every condition.

    A condition ``(t, k, v)`` prescribes the k-th *time* derivative at ``t``;
    in the ``tau`` variable it becomes ``d^k f / d tau^k = v * duration**k``.
    """
    n = len(conditions)
    if n == 0:
        raise DegenerateConditionsError("no boundary conditions given")
    rows = np.zeros((n, n))
    rhs = np.zeros(n)
    for i, (t, k, v) in enumerate(conditions):
        if not 0.0 <= t <= duration:
            raise DomainError(f"condition time {t} outside [0, {duration}]")
        tau = t / duration
        for p in range(k, n):
            rows[i, p] = factorial(p) / factorial(p - k) * tau ** (p - k)
        rhs[i] = v * duration**k
    if np.linalg.matrix_rank(rows) < n:
        raise DegenerateConditionsError("boundary conditions do not fix a unique polynomial")
    return Polynomial(np.linalg.solve(rows, rhs))


def beta_conditions(duration):
    T = duration
    return [
        BoundaryCondition(0.0, 0, 0.0),
        BoundaryCondition(T, 0, np.pi / 2),
        BoundaryCondition(0.0, 1, 0.0),
        BoundaryCondition(T, 1, 0.0),
    ]


def gamma_conditions(epsilon, delta, duration):
    T = duration
    return [
        BoundaryCondition(0.0, 0, epsilon),
        BoundaryCondition(0.0, 1, 0.0),
        BoundaryCondition(T, 0, epsilon),
        BoundaryCondition(T, 1, 0.0),
        BoundaryCondition(T / 2, 0, delta),
    ]


@dataclass(frozen=True)
class StirapAngles:
    beta_poly: Polynomial
    gamma_poly: Polynomial
    duration: float

    @classmethod
    def from_params(cls, p: StirapParams):
        return cls(
            fit_polynomial(beta_conditions(p.duration), p.duration),
            fit_polynomial(gamma_conditions(p.epsilon, p.delta, p.duration), p.duration),
            p.duration,
        )

    def beta(self, t):
        return self.beta_poly(np.asarray(t) / self.duration)

    def gamma(self, t):
        return self.gamma_poly(np.asarray(t) / self.duration)

    def beta_dot(self, t):
        return self.beta_poly.deriv()(np.asarray(t) / self.duration) / self.duration

    def gamma_dot(self, t):
        return self.gamma_poly.deriv()(np.asarray(t) / self.duration) / self.duration

    def direction(self, t):
        b, g = self.beta(t), self.gamma(t)
        return np.stack([np.cos(g) * np.sin(b), -np.sin(g), np.cos(g) * np.cos(b)], axis=-1)

    def state(self, t):
        """Nominal (invariant eigenstate) amplitudes ``(C1, C2, C3)``."""
        b, g = self.beta(t), self.gamma(t)
        return np.stack([np.cos(g) * np.cos(b), -1j * np.sin(g), -np.cos(g) * np.sin(b)], axis=-1)


def stirap_pulses(angles: StirapAngles):
    """Pump and Stokes Rabi frequencies that make the pseudo-spin follow the angles.

    Returns two callables of time. Requiring ``dS0/dt = B x S0`` with ``B``
    confined to the x-z plane gives

        Om_p = 2 (g' cos b + b' cot g sin b),
        Om_s = 2 (b' cot g cos b - g' sin b).
    """

    def _cot_gamma(t):
        g = angles.gamma(t)
        interior = (np.asarray(t) > 0) & (np.asarray(t) < angles.duration)
        bad = interior & ((np.sin(g) == 0) | (g <= 0) | (g >= np.pi / 2))
        if np.any(bad):
            t_bad = float(np.atleast_1d(t)[np.argmax(np.atleast_1d(bad))])
            raise SingularFieldError(f"gamma leaves (0, pi/2) at t={t_bad}", time=t_bad)
        return 1.0 / np.tan(g)

    def omega_p(t):
        b, bd, gd = angles.beta(t), angles.beta_dot(t), angles.gamma_dot(t)
        return 2.0 * (gd * np.cos(b) + bd * _cot_gamma(t) * np.sin(b))

    def omega_s(t):
        b, bd, gd = angles.beta(t), angles.beta_dot(t), angles.gamma_dot(t)
        return 2.0 * (bd * _cot_gamma(t) * np.cos(b) - gd * np.sin(b))

    return omega_p, omega_s


def stirap_correction(beta, gamma_angle, big_gamma):
    """Changes ``(dOm_p, dOm_s)`` of the Rabi frequencies compensating level-2 loss.

    This is twice the x and z components of ``S0 x (Gamma y y S0)``; the
    y component vanishes identically, so the correction is implementable with
    the two existing lasers.
    """
    s2g = np.sin(2 * np.asarray(gamma_angle, dtype=float))
    return big_gamma * s2g * np.cos(beta), -big_gamma * s2g * np.sin(beta)


def stirap_correction_generic(angles: StirapAngles, big_gamma, t):
    """Same correction obtained from the generic solver; used as a cross-check."""
    tensor = np.diag([0.0, big_gamma, 0.0])
    b0, _ = correction_field(angles.direction(t), tensor)
    return 2.0 * b0[..., 0], 2.0 * b0[..., 2]


def stirap_system(angles: StirapAngles, big_gamma, corrected: bool) -> NonHermitianSystem:
    omega_p, omega_s = stirap_pulses(angles)

    def hermitian(t):
        t = np.asarray(t, dtype=float)
        op, os_ = omega_p(t), omega_s(t)
        if corrected:
            dp, ds = stirap_correction(angles.beta(t), angles.gamma(t), big_gamma)
            op, os_ = op + dp, os_ + ds
        h = np.zeros(t.shape + (3, 3), dtype=complex)
        h[..., 0, 1] = h[..., 1, 0] = 0.5 * op
        h[..., 1, 2] = h[..., 2, 1] = 0.5 * os_
        return h

    decay = np.diag([0.0, -1j * big_gamma, 0.0])
    return NonHermitianSystem(hermitian, decay)


def pseudo_spin(psi):
    """``(-C3, -i C2, C1)``; real for states reachable from the nominal initial state."""
    psi = np.asarray(psi)
    return np.stack([-psi[..., 2], -1j * psi[..., 1], psi[..., 0]], axis=-1)


@dataclass(frozen=True)
class StirapReport:
    times: np.ndarray
    populations: np.ndarray  # normalized, shape (n+1, 3)
    trajectory: Trajectory
    nominal_final: np.ndarray

    @property
    def p_hat(self):
        return self.populations[:, 2]

    @property
    def leakage(self) -> float:
        """Final normalized population left in levels 1 and 2."""
        return float(self.populations[-1, 0] + self.populations[-1, 1])

    @property
    def nominal_leakage(self) -> float:
        """Population of levels 1 and 2 in the nominal final state (``sin^2 epsilon``)."""
        p = np.abs(self.nominal_final) ** 2
        return float((p[0] + p[1]) / p.sum())

    @property
    def infidelity(self) -> float:
        """``1 - |<psi0(T)|psi(T)>|^2 / |psi(T)|^2`` against the nominal final state."""
        psi = self.trajectory.final
        ov = np.vdot(self.nominal_final, psi)
        return float(1.0 - abs(ov) ** 2 / (np.vdot(psi, psi).real * np.vdot(self.nominal_final, self.nominal_final).real))


def run_stirap(params: StirapParams, corrected: bool, grid: TimeGrid, initial="invariant") -> StirapReport:
    """Integrate the lossy three-level system and report normalized populations.

    ``initial="invariant"`` starts in the nominal state at t=0,
    ``cos(eps)|1> - i sin(eps)|2>``; ``initial="ket1"`` starts in ``|1>``.
    """
    angles = StirapAngles.from_params(params)
    if initial == "invariant":
        psi0 = angles.state(0.0)
    elif initial == "ket1":
        psi0 = np.array([1.0, 0.0, 0.0], dtype=complex)
    else:
        raise DomainError(f"unknown initial state {initial!r}")
    traj = integrate_schrodinger(stirap_system(angles, params.big_gamma, corrected), psi0, grid)
    pops = np.abs(traj.states) ** 2
    pops /= pops.sum(axis=1, keepdims=True)
    return StirapReport(traj.times, pops, traj, angles.state(params.duration))
