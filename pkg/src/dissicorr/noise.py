"""Population inversion under laser amplitude noise and transverse damping.

Units are set by the protocol duration ``T``. The amplitude noise of the two
laser quadratures enters the averaged Bloch equation as the time-dependent
tensor ``lambda^2/2 diag(Om_I^2, Om_R^2, Om_R^2 + Om_I^2)``; the static part is
a transverse damping ``Gamma_perp (xx + yy)``.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Literal

import numpy as np

from .correction import corrected_field, steering_field
from .dynamics import BlochSystem, integrate_bloch
from .errors import DomainError, UnderflowError
from .geometry import AngularPath, TimeGrid, axial_tensor

Protocol = Literal["pi_pulse", "optimal_sta", "optimal_sta_corrected"]
PROTOCOLS = ("pi_pulse", "optimal_sta", "optimal_sta_corrected")
AZIMUTH = np.pi / 4


@dataclass(frozen=True)
class NoiseScenario:
    protocol: Protocol
    lambda_noise: float = 0.3
    gamma_perp_T: float = 6.0
    duration: float = 1.0
    #: "applied" builds the noise tensor from the pulses actually sent,
    #: correction included; "nominal" uses the uncorrected pulses.
    laser_noise_from: str = "applied"

    def __post_init__(self):
        if self.protocol not in PROTOCOLS:
            raise DomainError(f"unknown protocol {self.protocol!r}; expected one of {PROTOCOLS}")
        if self.lambda_noise < 0 or self.gamma_perp_T < 0:
            raise DomainError("noise strength and damping must be non-negative")
        if self.duration <= 0:
            raise DomainError("duration must be positive")
        if self.laser_noise_from not in ("applied", "nominal"):
            raise DomainError(f"laser_noise_from must be 'applied' or 'nominal', got {self.laser_noise_from!r}")

    @property
    def gamma_perp(self):
        return self.gamma_perp_T / self.duration


def optimal_sta_path(duration) -> AngularPath:
    """``theta = pi t/T - sin(2 pi t/T)/12`` at fixed azimuth pi/4."""
    if duration <= 0:
        raise DomainError("duration must be positive")
    T = float(duration)
    w = 2 * np.pi / T
    return AngularPath.fixed_azimuth(
        lambda t: np.pi * np.asarray(t) / T - np.sin(w * np.asarray(t)) / 12,
        lambda t: np.pi / T - w * np.cos(w * np.asarray(t)) / 12,
        AZIMUTH,
        T,
    )


def pi_pulse_path(duration) -> AngularPath:
    """Uniform rotation ``theta = pi t/T`` produced by a constant field along (x + y)/sqrt(2).

    A positive rotation about that axis moves z through the azimuth -pi/4, so
    the path is written with ``phi = -pi/4``.
    """
    T = float(duration)
    return AngularPath.fixed_azimuth(
        lambda t: np.pi * np.asarray(t) / T,
        lambda t: np.full(np.shape(t), np.pi / T),
        -AZIMUTH,
        T,
    )


def optimal_sta_pulses(path: AngularPath):
    """Resonant quadratures ``(Om_R, Om_I, Delta)`` steering the spin along ``path``.

    The steering field is ``theta_dot * phi_hat``. At azimuth pi/4 this gives
    ``Om_R = -theta_dot/sqrt(2)`` and ``Om_I = +theta_dot/sqrt(2)``.
    """
    field = steering_field(path)

    def omega_r(t):
        return field(t)[..., 0]

    def omega_i(t):
        return field(t)[..., 1]

    def delta(t):
        return field(t)[..., 2]

    return omega_r, omega_i, delta


def laser_noise_tensor(omega_r, omega_i, lambda_noise):
    """Averaged-noise tensor; broadcasts over arrays of Rabi frequencies."""
    om_r2 = np.square(np.asarray(omega_r, dtype=float))
    om_i2 = np.square(np.asarray(omega_i, dtype=float))
    diag = 0.5 * lambda_noise**2 * np.stack(np.broadcast_arrays(om_i2, om_r2, om_r2 + om_i2), axis=-1)
    out = np.zeros(diag.shape + (3,))
    idx = np.arange(3)
    out[..., idx, idx] = diag
    return out


def protocol_fields(s: NoiseScenario):
    """Nominal path and the applied field for a scenario."""
    T = s.duration
    if s.protocol == "pi_pulse":
        path = pi_pulse_path(T)
        amp = np.pi / T / np.sqrt(2)
        return path, lambda t: np.broadcast_to([amp, amp, 0.0], np.shape(t) + (3,))
    path = optimal_sta_path(T)
    base = steering_field(path)
    if s.protocol == "optimal_sta":
        return path, base
    transverse = axial_tensor(s.gamma_perp, 0.0)
    return path, corrected_field(base, path.direction, transverse)


@dataclass(frozen=True)
class NoiseOutcome:
    scenario: NoiseScenario
    times: np.ndarray
    bloch: np.ndarray = field(repr=False)

    @property
    def p_hat(self) -> float:
        """Normalized excited-state population ``(1 - S_z/|S|)/2`` at the end."""
        s = self.bloch[-1]
        return float(0.5 * (1.0 - s[2] / np.linalg.norm(s)))

    @property
    def p2(self) -> float:
        """Raw excited-state population ``(1 - S_z)/2`` at the end, with ``|S(0)| = 1``."""
        return float(0.5 * (1.0 - self.bloch[-1, 2]))

    def p_hat_series(self):
        return 0.5 * (1.0 - self.bloch[:, 2] / np.linalg.norm(self.bloch, axis=1))


def run_noise_scenario(s: NoiseScenario, grid: TimeGrid) -> NoiseOutcome:
    """Integrate the averaged Bloch equation from the ground state ``S = z``."""
    if abs(grid.duration - s.duration) > 1e-12 * s.duration:
        raise DomainError(f"grid covers {grid.duration}, scenario lasts {s.duration}")
    path, applied = protocol_fields(s)
    noise_source = applied if s.laser_noise_from == "applied" or s.protocol != "optimal_sta_corrected" else steering_field(path)
    transverse = axial_tensor(s.gamma_perp, 0.0)

    def tensor(t):
        b = noise_source(t)
        return laser_noise_tensor(b[..., 0], b[..., 1], s.lambda_noise) + transverse

    traj = integrate_bloch(BlochSystem(applied, tensor), [0.0, 0.0, 1.0], grid)
    norm = np.linalg.norm(traj.final)
    if norm < 1e-300:
        raise UnderflowError(
            f"|S(T)| = {norm:.3g} underflows; use a shorter duration or smaller rates"
        )
    return NoiseOutcome(s, traj.times, traj.states)


def sweep_gamma(gamma_perp_T_values, lambda_noise=0.3, duration=1.0, n_steps=2000, workers=None):
    """Normalized populations of the three protocols over a damping sweep.

    Returns an array of shape ``(len(values), 4)`` with columns
    ``(Gamma_perp T, pi_pulse, optimal_sta, optimal_sta_corrected)``. Points
    may be evaluated in threads; the rows always follow the input order.
    """
    values = [float(g) for g in gamma_perp_T_values]
    grid = TimeGrid.over(duration, n_steps)

    def point(g):
        return [g] + [
            run_noise_scenario(NoiseScenario(p, lambda_noise, g, duration), grid).p_hat for p in PROTOCOLS
        ]

    if workers and workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            rows = list(pool.map(point, values))
    else:
        rows = [point(g) for g in values]
    return np.array(rows)
