"""Corrective fields that keep a damped spin on its dissipationless direction.

Given a nominal direction ``s`` and a dissipation tensor ``L``, the
renormalization rate and the corrective field satisfy

    fdot * s + gyro * (b x s) = L s.

The rate is fixed by projecting on ``s``; the field is determined up to a
multiple of ``s``. The particular solution returned here is the one
orthogonal to ``s``, ``b0 = s x (L s) / gyro``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DomainError, InvalidCouplingError
from .geometry import (
    AngularPath,
    SphericalFrame,
    TimeGrid,
    angles_of,
    quadratic_form,
    spherical_frame_at,
    tensor_at,
)
from .tolerances import TOL


def _check_gyro(gyro):
    if gyro == 0 or not np.isfinite(gyro):
        raise InvalidCouplingError(f"coupling constant must be finite and non-zero, got {gyro!r}")


@dataclass(frozen=True)
class CorrectionResult:
    b0: np.ndarray
    fdot: float
    frame: SphericalFrame


def correction_field(s0_hat, tensor, gyro=1.0):
    """Vectorized core: ``(b0, fdot)`` for arrays of unit directions and tensors.

    No validation; callers on hot paths (integrator substeps) use this directly.
    """
    s = np.asarray(s0_hat, dtype=float)
    ls = np.einsum("...ij,...j->...i", tensor, s)
    fdot = np.sum(s * ls, axis=-1)
    return np.cross(s, ls) / gyro, fdot


def correction_general(s0_hat, tensor, gyro=1.0) -> CorrectionResult:
    _check_gyro(gyro)
    s = np.asarray(s0_hat, dtype=float)
    if s.shape != (3,):
        raise DomainError(f"expected a single 3-vector, got shape {s.shape}")
    if abs(np.linalg.norm(s) - 1.0) > TOL.unit_norm:
        raise DomainError(f"direction must be a unit vector, |s| = {np.linalg.norm(s)!r}")
    tensor = np.asarray(tensor, dtype=float)
    b0, fdot = correction_field(s, tensor, gyro)
    theta, phi = angles_of(s)
    return CorrectionResult(b0=b0, fdot=float(fdot), frame=spherical_frame_at(theta, phi))


def transverse_correction_magnitude(theta, gamma_perp, gamma_z, gyro=1.0):
    """Signed component along the azimuthal unit vector for an axial tensor.

    With transverse rate ``gamma_perp`` and longitudinal rate ``gamma_z`` the
    orthogonal particular solution points along phi-hat with this amplitude;
    it vanishes at the poles and on the equator where the direction is an
    eigenvector of the tensor.
    """
    _check_gyro(gyro)
    return (gamma_perp - gamma_z) * np.sin(2 * np.asarray(theta, dtype=float)) / (2 * gyro)


def correction_transverse(theta, phi, gamma_perp, gamma_z, gyro=1.0) -> np.ndarray:
    amp = transverse_correction_magnitude(theta, gamma_perp, gamma_z, gyro)
    return np.asarray(amp)[..., None] * spherical_frame_at(theta, phi).phi_hat


def gauge_shift(result: CorrectionResult, lam) -> np.ndarray:
    return result.b0 + lam * result.frame.radial


def accumulate_F(path: AngularPath, tensor, grid: TimeGrid) -> np.ndarray:
    """Cumulative integral of ``s . L s`` along the path, sampled on the grid.

    Each step is integrated with Simpson's rule on its two end nodes and
    midpoint, so the result is the composite Simpson sum on the half-step grid
    and carries an O(h^4) error. ``tensor`` may be a constant matrix or a
    callable of time.
    """
    t = grid.half_times()
    f = quadratic_form(tensor_at(tensor, t), path.direction(t))
    steps = grid.h / 6.0 * (f[0:-1:2] + 4.0 * f[1::2] + f[2::2])
    return np.concatenate(([0.0], np.cumsum(steps)))


def steering_field(path: AngularPath, gyro=1.0):
    """Field, perpendicular to the spin, that drives ``path`` without dissipation.

    From ``d s/dt = gyro * B x s`` the minimal solution is ``B = s x ds/dt / gyro``,
    i.e. ``(theta_dot * phi_hat - phi_dot * sin(theta) * theta_hat) / gyro``.
    """
    _check_gyro(gyro)

    def field(t):
        t = np.asarray(t, dtype=float)
        fr = path.frame(t)
        th_dot = np.asarray(path.theta_dot(t))[..., None]
        ph_dot = np.asarray(path.phi_dot(t))[..., None]
        sin_th = np.sin(np.asarray(path.theta(t)))[..., None]
        return (th_dot * fr.phi_hat - ph_dot * sin_th * fr.theta_hat) / gyro

    return field


def corrected_field(base_field, direction, tensor, gyro=1.0, lam=0.0):
    """Total field ``B0(t) + b0(t) + lam * s(t)`` along a nominal direction.

    ``direction`` is a callable returning the nominal unit direction; the
    correction is evaluated wherever the integrator asks for the field, so the
    compensation is exact at every RK substage.
    """
    _check_gyro(gyro)

    def field(t):
        t = np.asarray(t, dtype=float)
        s = direction(t)
        b0, _ = correction_field(s, tensor_at(tensor, t), gyro)
        return base_field(t) + b0 + lam * s

    return field
