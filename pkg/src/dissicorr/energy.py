"""Field energy of corrected protocols and the pi-pulse trade-off.

The energy functional is ``E = 1/2 int |B(t)|^2 dt``. For a pi-pulse along
``theta = pi t / T`` at fixed azimuth, with a transverse damping
``Gamma_perp``, the steering field contributes ``pi^2 / (2 g^2 T)`` and the
correction ``Gamma_perp^2 T / (16 g^2)``; the cross term integrates to zero.
Requiring the normalized norm loss to stay below ``epsilon`` bounds the
duration by ``-2 ln(1 - epsilon) / Gamma_perp``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .correction import corrected_field, steering_field
from .errors import DomainError, InvalidCouplingError
from .geometry import AngularPath, TimeGrid, axial_tensor


def field_energy(field, grid: TimeGrid) -> float:
    """Composite Simpson estimate of ``1/2 int |B|^2 dt`` on the half-step grid."""
    b = np.asarray(field(grid.half_times()), dtype=float)
    f = 0.5 * np.sum(b * b, axis=-1)
    return float(grid.h / 6.0 * np.sum(f[0:-1:2] + 4.0 * f[1::2] + f[2::2]))


def pi_pulse_path(duration) -> AngularPath:
    T = float(duration)
    return AngularPath.fixed_azimuth(
        lambda t: np.pi * np.asarray(t) / T, lambda t: np.full(np.shape(t), np.pi / T), 0.0, T
    )


def pi_pulse_fields(duration, gamma_perp, gyro=1.0):
    """``(steering, correction, total)`` field callables of the corrected pi-pulse."""
    path = pi_pulse_path(duration)
    base = steering_field(path, gyro)
    total = corrected_field(base, path.direction, axial_tensor(gamma_perp, 0.0), gyro)
    return base, (lambda t: total(t) - base(t)), total


def time_bound(epsilon, gamma_perp):
    return -2.0 * np.log1p(-epsilon) / gamma_perp


def optimal_time(gamma_perp):
    return np.sqrt(8.0) * np.pi / gamma_perp


@dataclass(frozen=True)
class PiPulseEnergyReport:
    epsilon: float
    gamma_perp: float
    gyro: float
    t_bound: float
    t_opt: float
    e_pi: float
    delta_e_pi: float

    @property
    def ratio(self) -> float:
        """Share of the correction in the total energy, ``dE / (E + dE)``."""
        return self.delta_e_pi / (self.e_pi + self.delta_e_pi)

    @property
    def ratio_estimate(self) -> float:
        """Small-epsilon estimate ``epsilon^2 / (2 pi^2)`` of :attr:`ratio`."""
        return self.epsilon**2 / (2 * np.pi**2)

    @property
    def ratio_error(self) -> float:
        """Relative deviation of the estimate from the exact ratio."""
        return abs(self.ratio_estimate - self.ratio) / self.ratio

    def dimensionless(self) -> dict:
        """Energies as ``g^2 E / Gamma_perp`` and times as ``Gamma_perp T``."""
        scale = self.gyro**2 / self.gamma_perp
        return {
            "gamma_perp_t_bound": self.gamma_perp * self.t_bound,
            "gamma_perp_t_opt": self.gamma_perp * self.t_opt,
            "e_pi": scale * self.e_pi,
            "delta_e_pi": scale * self.delta_e_pi,
        }


def pi_pulse_energy_analysis(epsilon, gamma_perp, gyro=1.0) -> PiPulseEnergyReport:
    """Energies of the corrected pi-pulse run at the longest admissible duration."""
    if not 0.0 < epsilon < 1.0:
        raise DomainError(f"epsilon must lie in (0, 1), got {epsilon}")
    if not gamma_perp > 0:
        raise DomainError(f"damping rate must be positive, got {gamma_perp}")
    if gyro == 0 or not np.isfinite(gyro):
        raise InvalidCouplingError(f"coupling constant must be finite and non-zero, got {gyro!r}")
    t_b = time_bound(epsilon, gamma_perp)
    return PiPulseEnergyReport(
        epsilon=float(epsilon),
        gamma_perp=float(gamma_perp),
        gyro=float(gyro),
        t_bound=float(t_b),
        t_opt=float(optimal_time(gamma_perp)),
        e_pi=float(np.pi**2 / (2 * gyro**2 * t_b)),
        delta_e_pi=float(gamma_perp**2 * t_b / (16 * gyro**2)),
    )
