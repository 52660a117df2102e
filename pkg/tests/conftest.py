import numpy as np
import pytest
from scipy.integrate import solve_ivp

from dissicorr.geometry import AngularPath


def reference_bloch(field, tensor, s0, duration, gyro=1.0, rtol=1e-11, atol=1e-13):
    """Independent adaptive solution of the Bloch equation (scipy) at t = duration."""

    def rhs(t, s):
        b = np.asarray(field(np.array([t])))[0]
        lam = tensor(np.array([t]))[0] if callable(tensor) else np.asarray(tensor)
        return gyro * np.cross(b, s) - lam @ s

    sol = solve_ivp(rhs, (0.0, duration), np.asarray(s0, dtype=float), method="DOP853", rtol=rtol, atol=atol)
    return sol.y[:, -1]


def random_path(rng, duration=1.0):
    """Smooth path built from a few random Fourier modes, with analytic derivatives."""
    a = rng.normal(size=3) * 0.8
    b = rng.normal(size=3) * 0.8
    th0 = rng.uniform(0.3, 2.8)
    ph0 = rng.uniform(-np.pi, np.pi)
    k = np.arange(1, 4)
    w = 2 * np.pi / duration

    def theta(t):
        t = np.asarray(t, dtype=float)[..., None]
        return th0 + np.sum(a / k * np.sin(k * w * t), axis=-1)

    def theta_dot(t):
        t = np.asarray(t, dtype=float)[..., None]
        return np.sum(a * w * np.cos(k * w * t), axis=-1)

    def phi(t):
        t = np.asarray(t, dtype=float)[..., None]
        return ph0 + np.sum(b / k * (1 - np.cos(k * w * t)), axis=-1)

    def phi_dot(t):
        t = np.asarray(t, dtype=float)[..., None]
        return np.sum(b * w * np.sin(k * w * t), axis=-1)

    return AngularPath(theta, phi, theta_dot, phi_dot, duration)


def random_psd(rng, scale=1.0):
    m = rng.normal(size=(3, 3))
    return scale * (m @ m.T) / 3.0


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)
