import numpy as np
import pytest

from conftest import reference_bloch
from dissicorr.dynamics import BlochSystem, integrate_bloch
from dissicorr.errors import DomainError, UnderflowError
from dissicorr.geometry import TimeGrid, angle_between, check_path_derivatives, dissipation_tensor
from dissicorr.noise import (
    PROTOCOLS,
    NoiseScenario,
    laser_noise_tensor,
    optimal_sta_path,
    optimal_sta_pulses,
    pi_pulse_path,
    protocol_fields,
    run_noise_scenario,
    sweep_gamma,
)

GRID = TimeGrid.over(1.0, 2000)


def test_optimal_path_examples():
    T = 2.0
    path = optimal_sta_path(T)
    assert path.theta(0.0) == 0.0
    assert path.theta(T) == pytest.approx(np.pi)
    assert path.theta(T / 2) == pytest.approx(np.pi / 2)
    assert path.theta_dot(0.0) == pytest.approx(5 * np.pi / (6 * T))
    check_path_derivatives(path)
    check_path_derivatives(pi_pulse_path(T))


def test_optimal_pulses():
    T = 1.0
    om_r, om_i, delta = optimal_sta_pulses(optimal_sta_path(T))
    t = np.array([0.0, T / 2])
    np.testing.assert_allclose(om_r(t), [-5 * np.pi / (6 * np.sqrt(2) * T), -7 * np.pi / (6 * np.sqrt(2) * T)])
    # equal magnitude, opposite sign: the field rotates the spin inside the phi = pi/4 plane
    np.testing.assert_allclose(om_i(t), -om_r(t))
    np.testing.assert_allclose(delta(np.linspace(0, T, 11)), 0.0, atol=1e-15)


def test_pulses_reproduce_path():
    path = optimal_sta_path(1.0)
    om_r, om_i, delta = optimal_sta_pulses(path)
    field = lambda t: np.stack([om_r(t), om_i(t), delta(t)], axis=-1)
    traj = integrate_bloch(BlochSystem(field), [0, 0, 1.0], TimeGrid.over(1.0, 4000))
    assert np.abs(traj.states - path.direction(traj.times)).max() < 1e-8


def test_pi_pulse_field_follows_its_path():
    scen = NoiseScenario("pi_pulse", 0.0, 0.0)
    path, field = protocol_fields(scen)
    traj = integrate_bloch(BlochSystem(field), [0, 0, 1.0], TimeGrid.over(1.0, 2000))
    assert angle_between(traj.states, path.direction(traj.times)).max() < 1e-9


def test_laser_noise_tensor_examples():
    np.testing.assert_array_equal(laser_noise_tensor(2.0, 3.0, 0.0), np.zeros((3, 3)))
    lam, om = 0.3, 1.7
    np.testing.assert_allclose(laser_noise_tensor(om, 0.0, lam), np.diag([0, 0.5, 0.5]) * lam**2 * om**2)
    np.testing.assert_allclose(laser_noise_tensor(om, om, lam), np.diag([0.5, 0.5, 1.0]) * lam**2 * om**2)
    assert laser_noise_tensor(np.ones(5), np.zeros(5), lam).shape == (5, 3, 3)


def test_laser_noise_tensor_is_psd(rng):
    for om_r, om_i, lam in rng.normal(size=(100, 3)) * 5:
        dissipation_tensor(laser_noise_tensor(om_r, om_i, lam))


@pytest.mark.parametrize("protocol", PROTOCOLS)
def test_ideal_transfer(protocol):
    assert run_noise_scenario(NoiseScenario(protocol, 0.0, 0.0), GRID).p_hat == pytest.approx(1.0, abs=1e-8)


def test_p_hat_is_scale_invariant():
    out = run_noise_scenario(NoiseScenario("optimal_sta", 0.3, 3.0), GRID)
    s = out.bloch[-1]
    for c in (0.1, 7.0):
        cs = c * s
        assert 0.5 * (1 - cs[2] / np.linalg.norm(cs)) == pytest.approx(out.p_hat, rel=1e-14)
    assert np.all((out.p_hat_series() >= 0) & (out.p_hat_series() <= 1))


def test_against_adaptive_reference():
    scen = NoiseScenario("optimal_sta_corrected", 0.3, 6.0)
    path, field = protocol_fields(scen)

    def tensor(t):
        b = field(t)
        return laser_noise_tensor(b[..., 0], b[..., 1], 0.3) + np.diag([6.0, 6.0, 0.0])

    ref = reference_bloch(field, tensor, [0, 0, 1.0], 1.0)
    out = run_noise_scenario(scen, GRID)
    np.testing.assert_allclose(out.bloch[-1], ref, atol=1e-10)


def test_reference_transfer_probabilities():
    got = [run_noise_scenario(NoiseScenario(p, 0.3, 6.0), GRID).p2 for p in PROTOCOLS]
    np.testing.assert_allclose(got, [0.455, 0.465, 0.532], atol=0.005)


def test_noise_tensor_source_matters():
    applied = run_noise_scenario(NoiseScenario("optimal_sta_corrected", 0.3, 6.0), GRID).p2
    nominal = run_noise_scenario(NoiseScenario("optimal_sta_corrected", 0.3, 6.0, laser_noise_from="nominal"), GRID).p2
    assert nominal < applied - 0.003


def test_underflow():
    with pytest.raises(UnderflowError, match="shorter"):
        run_noise_scenario(NoiseScenario("pi_pulse", 30.0, 0.0), GRID)


def test_scenario_validation():
    with pytest.raises(DomainError):
        NoiseScenario("square_pulse")
    with pytest.raises(DomainError):
        NoiseScenario("pi_pulse", -0.1)
    with pytest.raises(DomainError):
        run_noise_scenario(NoiseScenario("pi_pulse", duration=2.0), GRID)


def test_sweep_order_independent_of_workers():
    g = [0.0, 2.0, 4.0, 6.0]
    a = sweep_gamma(g, n_steps=400)
    b = sweep_gamma(g, n_steps=400, workers=4)
    np.testing.assert_array_equal(a, b)
    assert a.shape == (4, 4)
    np.testing.assert_array_equal(a[:, 0], g)
