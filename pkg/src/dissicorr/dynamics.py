"""Fixed-step integrators for Bloch vectors and non-Hermitian state vectors.

All deterministic equations handled here are linear (or affine) in the state,
``dy/dt = A(t) y``. Classical RK4 applied to such a system collapses to a
per-step propagator

    M = I + h/6 (K1 + 2 K2 + 2 K3 + K4),
    K1 = A(t),  K2 = A(t+h/2) (I + h/2 K1),  K3 = A(t+h/2) (I + h/2 K2),
    K4 = A(t+h) (I + h K3),

so the generator is sampled once on the half-step grid, the propagators are
built with batched matrix products, and only the final chain of
matrix-vector products is sequential. The result is the RK4 solution, not an
approximation of it.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from .errors import DomainError, NumericalOverflowError
from .geometry import TimeGrid, tensor_at
from .tolerances import TOL


@dataclass(frozen=True)
class Trajectory:
    times: np.ndarray
    states: np.ndarray

    def __len__(self):
        return len(self.times)

    @property
    def final(self):
        return self.states[-1]


def _cross_matrix(v):
    """Matrices ``[v]x`` with ``[v]x @ s == v x s``; ``v`` has shape (..., 3)."""
    out = np.zeros(v.shape[:-1] + (3, 3), dtype=v.dtype)
    out[..., 0, 1] = -v[..., 2]
    out[..., 0, 2] = v[..., 1]
    out[..., 1, 0] = v[..., 2]
    out[..., 1, 2] = -v[..., 0]
    out[..., 2, 0] = -v[..., 1]
    out[..., 2, 1] = v[..., 0]
    return out


def rk4_propagators(generator_nodes: np.ndarray, h: float) -> np.ndarray:
    """Per-step RK4 propagators from the generator sampled on the half-step grid."""
    a1 = generator_nodes[0:-1:2]
    a2 = generator_nodes[1::2]
    a3 = generator_nodes[2::2]
    eye = np.eye(generator_nodes.shape[-1], dtype=generator_nodes.dtype)
    k1 = a1
    k2 = a2 + (0.5 * h) * (a2 @ k1)
    k3 = a2 + (0.5 * h) * (a2 @ k2)
    k4 = a3 + h * (a3 @ k3)
    return eye + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)


def integrate_linear(generator_nodes: np.ndarray, y0, grid: TimeGrid) -> Trajectory:
    """RK4 for ``dy/dt = A(t) y`` given ``A`` on ``grid.half_times()``."""
    y0 = np.asarray(y0, dtype=generator_nodes.dtype)
    n = grid.n_steps
    if generator_nodes.shape[0] != 2 * n + 1:
        raise DomainError("generator must be sampled on the half-step grid")
    bad = ~np.all(np.isfinite(generator_nodes.reshape(2 * n + 1, -1)), axis=1)
    if bad.any():
        first = int(np.argmax(bad))
        raise NumericalOverflowError(f"non-finite generator at step {first // 2}", step=first // 2)
    props = rk4_propagators(generator_nodes, grid.h)
    states = np.empty((n + 1,) + y0.shape, dtype=y0.dtype)
    states[0] = y0
    y = y0
    with np.errstate(over="ignore", invalid="ignore"):
        for k in range(n):
            y = props[k] @ y
            states[k + 1] = y
    finite = np.all(np.isfinite(states.reshape(n + 1, -1)), axis=1)
    if not finite.all():
        first = int(np.argmin(finite))
        raise NumericalOverflowError(f"state became non-finite at step {first}", step=first)
    return Trajectory(grid.times(), states)


# -- Bloch equation ----------------------------------------------------------


@dataclass(frozen=True)
class BlochSystem:
    """``dS/dt = gyro * B(t) x S - L(t) S + drift(t)``.

    ``field`` and ``drift`` map an array of times to shape ``(n, 3)``;
    ``tensor`` is a 3x3 array or a callable returning ``(n, 3, 3)``.
    """

    field: Callable[[np.ndarray], np.ndarray]
    tensor: object = None
    drift: Optional[Callable[[np.ndarray], np.ndarray]] = None
    gyro: float = 1.0

    def generator(self, t):
        t = np.asarray(t, dtype=float)
        b = np.broadcast_to(np.asarray(self.field(t), dtype=float), t.shape + (3,))
        a = self.gyro * _cross_matrix(b)
        if self.tensor is not None:
            a = a - tensor_at(self.tensor, t)
        if self.drift is None:
            return a
        aug = np.zeros(t.shape + (4, 4))
        aug[..., :3, :3] = a
        aug[..., :3, 3] = np.broadcast_to(self.drift(t), t.shape + (3,))
        return aug


def integrate_bloch(system: BlochSystem, s_init, grid: TimeGrid) -> Trajectory:
    s_init = np.asarray(s_init, dtype=float)
    if s_init.shape != (3,):
        raise DomainError(f"initial Bloch vector must have 3 components, got {s_init.shape}")
    nodes = system.generator(grid.half_times())
    if system.drift is None:
        return integrate_linear(nodes, s_init, grid)
    traj = integrate_linear(nodes, np.append(s_init, 1.0), grid)
    return Trajectory(traj.times, traj.states[:, :3].copy())


# -- non-Hermitian Schroedinger equation -------------------------------------


@dataclass(frozen=True)
class NonHermitianSystem:
    """``i dpsi/dt = (H0(t) + H_gamma) psi`` with hbar = 1.

    ``hermitian`` maps times to ``(n, d, d)`` Hermitian matrices; ``decay`` is
    the anti-Hermitian part, either constant ``(d, d)`` or callable, with
    ``i * decay`` Hermitian and positive semidefinite.
    """

    hermitian: Callable[[np.ndarray], np.ndarray]
    decay: object = None

    @property
    def dimension(self):
        return np.asarray(self.hermitian(np.zeros(1))).shape[-1]

    def hamiltonian(self, t):
        t = np.asarray(t, dtype=float)
        h0 = np.asarray(self.hermitian(t), dtype=complex)
        d = h0.shape[-1]
        h0 = np.broadcast_to(h0, t.shape + (d, d))
        if self.decay is None:
            return h0
        hg = self.decay(t) if callable(self.decay) else self.decay
        return h0 + np.asarray(hg, dtype=complex)

    def check(self, t, tol=TOL.algebraic):
        t = np.asarray(t, dtype=float)
        h0 = np.broadcast_to(np.asarray(self.hermitian(t), dtype=complex), t.shape + (self.dimension,) * 2)
        scale = max(1.0, float(np.abs(h0).max()))
        if np.abs(h0 - np.conj(np.swapaxes(h0, -1, -2))).max() > tol * scale:
            raise DomainError("hermitian part is not Hermitian")
        if self.decay is not None:
            hg = self.decay(t) if callable(self.decay) else self.decay
            k = 1j * np.asarray(hg, dtype=complex)
            if np.abs(k - np.conj(np.swapaxes(k, -1, -2))).max() > tol * scale:
                raise DomainError("decay part is not anti-Hermitian")
            if np.linalg.eigvalsh(k).min() < -tol * scale:
                raise DomainError("decay part has a negative rate")


def integrate_schrodinger(system: NonHermitianSystem, psi_init, grid: TimeGrid, validate=True) -> Trajectory:
    psi = np.asarray(psi_init, dtype=complex)
    if psi.shape != (system.dimension,):
        raise DomainError(f"state has dimension {psi.shape}, system has {system.dimension}")
    t = grid.half_times()
    if validate:
        system.check(t[:: max(1, len(t) // 64)])
    return integrate_linear(-1j * system.hamiltonian(t), psi, grid)


# -- Monte-Carlo oracle for amplitude noise ----------------------------------


@dataclass(frozen=True)
class StochasticAverage:
    times: np.ndarray
    mean: np.ndarray
    stderr: np.ndarray
    n_traj: int


def _rotate(s, axis_angle):
    """Rotate each row of ``s`` by the rotation vector in the matching row."""
    angle = np.linalg.norm(axis_angle, axis=1, keepdims=True)
    safe = np.where(angle > 0.0, angle, 1.0)
    k = axis_angle / safe
    c, sn = np.cos(angle), np.sin(angle)
    kxs = np.cross(k, s)
    kds = np.sum(k * s, axis=1, keepdims=True)
    return s * c + kxs * sn + k * kds * (1.0 - c)


def noise_stream(seed: int, index: int) -> np.random.Generator:
    """Independent counter-based stream for one trajectory."""
    return np.random.Generator(np.random.Philox(key=[int(seed) & 0xFFFFFFFFFFFFFFFF, int(index)]))


def stochastic_bloch_oracle(
    omega_r,
    omega_i,
    delta,
    noise,
    seed,
    n_traj,
    grid: TimeGrid,
    dephasing=0.0,
    s_init=(0.0, 0.0, 1.0),
    chunk=500,
) -> StochasticAverage:
    """Average Bloch vector of a two-level system with noisy Rabi amplitudes.

    Each trajectory evolves a pure state under
    ``H = 1/2 [Om_R (1 + noise*eta1) sx + Om_I (1 + noise*eta2) sy + (Delta + sqrt(2 dephasing) eta3) sz]``
    with white noises ``eta_i``. Within a step the noises are constant Gaussian
    values of variance ``1/h`` and the pulses are taken at the step midpoint;
    the step is then applied as an exact rotation of the Bloch vector. This
    piecewise-constant (Wong-Zakai) discretization converges to the
    Stratonovich equation, whose ensemble average is the Bloch equation with
    noise tensor ``noise^2/2 diag(Om_I^2, Om_R^2, Om_R^2 + Om_I^2)`` plus
    ``dephasing`` on x and y.

    Trajectories are grouped in chunks of fixed size and accumulated in index
    order, so the result depends only on ``seed``, ``n_traj`` and ``chunk``;
    different chunk sizes agree to rounding.
    """
    if n_traj < 1:
        raise DomainError(f"n_traj must be at least 1, got {n_traj}")
    if dephasing < 0:
        raise DomainError("dephasing rate must be non-negative")
    n, h = grid.n_steps, grid.h
    tm = grid.half_times()[1::2]
    drive = np.stack([omega_r(tm), omega_i(tm), delta(tm)], axis=-1) * np.ones((n, 3))
    deph_amp = np.sqrt(2.0 * dephasing)
    s0 = np.asarray(s_init, dtype=float)

    mean = np.zeros((n + 1, 3))
    m2 = np.zeros((n + 1, 3))
    count = 0
    for start in range(0, n_traj, chunk):
        idx = range(start, min(start + chunk, n_traj))
        m = len(idx)
        if noise == 0.0 and dephasing == 0.0:
            eta = np.zeros((m, n, 3))
        else:
            eta = np.stack([noise_stream(seed, i).standard_normal((n, 3)) for i in idx]) / np.sqrt(h)
        s = np.tile(s0, (m, 1))
        path = np.empty((n + 1, m, 3))
        path[0] = s
        for k in range(n):
            om = drive[k]
            rot = np.empty((m, 3))
            rot[:, 0] = om[0] * (1.0 + noise * eta[:, k, 0])
            rot[:, 1] = om[1] * (1.0 + noise * eta[:, k, 1])
            rot[:, 2] = om[2] + deph_amp * eta[:, k, 2]
            s = _rotate(s, rot * h)
            path[k + 1] = s
        # merge chunk statistics (Chan et al.), always in trajectory order
        c_mean = path.mean(axis=1)
        c_m2 = ((path - c_mean[:, None, :]) ** 2).sum(axis=1)
        delta = c_mean - mean
        total = count + m
        mean = mean + delta * (m / total)
        m2 = m2 + c_m2 + delta**2 * (count * m / total)
        count = total
    if n_traj > 1:
        stderr = np.sqrt(m2 / (n_traj - 1) / n_traj)
    else:
        stderr = np.zeros_like(mean)
    return StochasticAverage(grid.times(), mean, stderr, n_traj)
