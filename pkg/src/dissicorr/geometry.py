"""Spherical frames, dissipation tensors, angular paths and time grids.

Vectors are plain ``numpy`` arrays whose last axis has length 3; every
function here broadcasts over leading axes so that a whole time grid can be
processed in one call. Angles are radians throughout.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, NamedTuple

import numpy as np

from .errors import DomainError
from .tolerances import TOL

ArrayFn = Callable[[np.ndarray], np.ndarray]


@dataclass(frozen=True)
class TimeGrid:
    t_start: float
    t_end: float
    n_steps: int

    def __post_init__(self):
        if int(self.n_steps) != self.n_steps or self.n_steps < 1:
            raise DomainError(f"n_steps must be a positive integer, got {self.n_steps!r}")
        if not self.t_end > self.t_start:
            raise DomainError(f"empty time interval [{self.t_start}, {self.t_end}]")

    @classmethod
    def over(cls, duration, n_steps):
        return cls(0.0, float(duration), int(n_steps))

    @property
    def h(self) -> float:
        return (self.t_end - self.t_start) / self.n_steps

    @property
    def duration(self) -> float:
        return self.t_end - self.t_start

    def times(self) -> np.ndarray:
        return self.t_start + self.h * np.arange(self.n_steps + 1)

    def half_times(self) -> np.ndarray:
        """Grid nodes and step midpoints, ``2 * n_steps + 1`` values."""
        return self.t_start + 0.5 * self.h * np.arange(2 * self.n_steps + 1)


class SphericalFrame(NamedTuple):
    radial: np.ndarray
    theta_hat: np.ndarray
    phi_hat: np.ndarray


def spherical_frame_at(theta, phi) -> SphericalFrame:
    theta = np.asarray(theta, dtype=float)
    phi = np.asarray(phi, dtype=float)
    st, ct = np.sin(theta), np.cos(theta)
    sp, cp = np.sin(phi), np.cos(phi)
    radial = np.stack(np.broadcast_arrays(st * cp, st * sp, ct), axis=-1)
    theta_hat = np.stack(np.broadcast_arrays(ct * cp, ct * sp, -st), axis=-1)
    phi_hat = np.stack(np.broadcast_arrays(-sp, cp, np.zeros_like(ct * cp)), axis=-1)
    return SphericalFrame(radial, theta_hat, phi_hat)


def unit_vector(theta, phi) -> np.ndarray:
    return spherical_frame_at(theta, phi).radial


def angles_of(v):
    """Polar and azimuthal angle of (not necessarily unit) vectors."""
    v = np.asarray(v, dtype=float)
    rho = np.hypot(v[..., 0], v[..., 1])
    return np.arctan2(rho, v[..., 2]), np.arctan2(v[..., 1], v[..., 0])


def angle_between(u, v) -> np.ndarray:
    """Angle between vectors, accurate for nearly parallel arguments."""
    u = np.asarray(u, dtype=float)
    v = np.asarray(v, dtype=float)
    return np.arctan2(np.linalg.norm(np.cross(u, v), axis=-1), np.sum(u * v, axis=-1))


# -- dissipation tensors ---------------------------------------------------


def dissipation_tensor(matrix, tol=TOL.algebraic) -> np.ndarray:
    """Validate a 3x3 real symmetric positive-semidefinite matrix.

    Returns a read-only float copy. Tolerances are absolute, scaled by the
    largest entry so that very large rates are not rejected for rounding.
    """
    m = np.array(matrix, dtype=float)
    if m.shape != (3, 3):
        raise DomainError(f"dissipation tensor must be 3x3, got shape {m.shape}")
    if not np.all(np.isfinite(m)):
        raise DomainError("dissipation tensor has non-finite entries")
    scale = max(1.0, float(np.abs(m).max()))
    if np.abs(m - m.T).max() > tol * scale:
        raise DomainError("dissipation tensor is not symmetric")
    if np.linalg.eigvalsh(0.5 * (m + m.T)).min() < -tol * scale:
        raise DomainError("dissipation tensor has a negative eigenvalue")
    m.setflags(write=False)
    return m


def axial_tensor(gamma_perp, gamma_z=0.0) -> np.ndarray:
    """Transverse rate on x and y, longitudinal rate on z."""
    return dissipation_tensor(np.diag([gamma_perp, gamma_perp, gamma_z]))


def isotropic_tensor(rate) -> np.ndarray:
    return dissipation_tensor(rate * np.eye(3))


def quadratic_form(tensor, v):
    """``v . tensor . v``, broadcasting over leading axes of both arguments."""
    return np.einsum("...i,...ij,...j->...", np.asarray(v, dtype=float), tensor, np.asarray(v, dtype=float))


def tensor_at(tensor, t):
    """Evaluate a constant or time-dependent tensor at the times ``t``.

    Always returns an array of shape ``t.shape + (3, 3)``.
    """
    t = np.asarray(t, dtype=float)
    if callable(tensor):
        out = np.asarray(tensor(t), dtype=float)
    else:
        out = np.asarray(tensor, dtype=float)
    return np.broadcast_to(out, t.shape + (3, 3))


# -- angular paths -----------------------------------------------------------


def _const(value):
    return lambda t: np.full(np.shape(t), float(value))


@dataclass(frozen=True)
class AngularPath:
    """A trajectory on the unit sphere given by two angles and their time derivatives.

    The callables accept and return arrays. ``theta`` is the polar angle and
    ``phi`` the azimuth of the direction ``(sin th cos ph, sin th sin ph, cos th)``.
    """

    theta: ArrayFn
    phi: ArrayFn
    theta_dot: ArrayFn
    phi_dot: ArrayFn
    duration: float

    @classmethod
    def fixed_azimuth(cls, theta, theta_dot, phi, duration):
        return cls(theta, _const(phi), theta_dot, _const(0.0), duration)

    def direction(self, t) -> np.ndarray:
        return unit_vector(self.theta(t), self.phi(t))

    def frame(self, t) -> SphericalFrame:
        return spherical_frame_at(self.theta(t), self.phi(t))

    def velocity(self, t) -> np.ndarray:
        """Time derivative of :meth:`direction`."""
        fr = self.frame(t)
        th_dot = np.asarray(self.theta_dot(t))[..., None]
        ph_dot = np.asarray(self.phi_dot(t))[..., None]
        sin_th = np.sin(np.asarray(self.theta(t)))[..., None]
        return th_dot * fr.theta_hat + ph_dot * sin_th * fr.phi_hat


def derivative_mismatch(angle: ArrayFn, rate: ArrayFn, times, step) -> float:
    """Largest relative gap between ``rate`` and a centered difference of ``angle``.

    The gap is measured relative to ``max(|rate|, |typical rate|)`` so that
    zeros of the derivative do not blow the ratio up.
    """
    times = np.asarray(times, dtype=float)
    fd = (angle(times + step) - angle(times - step)) / (2 * step)
    exact = rate(times)
    scale = max(float(np.abs(exact).max()), 1e-300)
    return float(np.max(np.abs(fd - exact)) / scale)


def check_path_derivatives(path: AngularPath, n_points=100, rel_tol=1e-6) -> None:
    """Raise ``DomainError`` if the analytic derivatives disagree with the angles."""
    T = path.duration
    ts = np.linspace(0.0, T, n_points + 2)[1:-1]
    step = 1e-6 * T
    for name, ang, rate in (("theta", path.theta, path.theta_dot), ("phi", path.phi, path.phi_dot)):
        if not np.all(np.isfinite(ang(ts))) or not np.all(np.isfinite(rate(ts))):
            raise DomainError(f"{name} is not finite on the path interior")
        if np.abs(rate(ts)).max() == 0.0:
            if np.abs(ang(ts + step) - ang(ts - step)).max() > 0.0:
                raise DomainError(f"{name} changes but its derivative is identically zero")
            continue
        gap = derivative_mismatch(ang, rate, ts, step)
        if gap > rel_tol:
            raise DomainError(f"{name}_dot disagrees with finite differences (relative gap {gap:.2e})")
