"""End-to-end acceptance checks.

Each test prints one ``AC<n> PASS|FAIL: ...`` line (visible with ``pytest -s``
or in the captured output of a failure) and then asserts the same condition.
Three sub-criteria are known to be unattainable with the correct dynamics and
are left failing on purpose; see the README for the analysis.
"""

import time
from pathlib import Path

import numpy as np
import pytest
from click.testing import CliRunner

from conftest import random_path, random_psd
from dissicorr.cli import main
from dissicorr.correction import accumulate_F, corrected_field, steering_field
from dissicorr.dynamics import BlochSystem, integrate_bloch, stochastic_bloch_oracle
from dissicorr.energy import field_energy, pi_pulse_energy_analysis, pi_pulse_fields
from dissicorr.figures import emit_figure_data
from dissicorr.geometry import TimeGrid, angle_between
from dissicorr.noise import (
    PROTOCOLS,
    NoiseScenario,
    laser_noise_tensor,
    optimal_sta_path,
    optimal_sta_pulses,
    run_noise_scenario,
    sweep_gamma,
)
from dissicorr.stirap import StirapParams, run_stirap
from dissicorr.twospin import TwoSpinParams, bell_fidelity, integrate_two_spin, protocol_fields, run_entanglement_scan

pytestmark = pytest.mark.acceptance

GOLDEN = Path(__file__).parent / "data" / "fig3_golden.csv"


def report(label, ok, detail):
    print(f"{label} {'PASS' if ok else 'FAIL'}: {detail}")
    assert ok, detail


class Timer:
    def __enter__(self):
        self.start = time.perf_counter()
        return self

    def __exit__(self, *exc):
        self.elapsed = time.perf_counter() - self.start


def test_ac1_exactness():
    rng = np.random.default_rng(1)
    grid = TimeGrid.over(1.0, 4000)
    worst_angle = worst_norm = 0.0
    with Timer() as clock:
        for _ in range(50):
            path = random_path(rng)
            tensor = random_psd(rng, rng.uniform(0.1, 3.0))
            gyro = rng.choice([-1, 1]) * rng.uniform(0.5, 3.0)
            field = corrected_field(steering_field(path, gyro), path.direction, tensor, gyro=gyro)
            traj = integrate_bloch(BlochSystem(field, tensor, gyro=gyro), path.direction(0.0), grid)
            worst_angle = max(worst_angle, angle_between(traj.states, path.direction(grid.times())).max())
            target = np.exp(-accumulate_F(path, tensor, grid))
            worst_norm = max(worst_norm, np.abs(np.linalg.norm(traj.states, axis=1) / target - 1).max())
    ok = worst_angle <= 1e-6 and worst_norm <= 1e-6 and clock.elapsed < 10
    report("AC1", ok, f"max angle {worst_angle:.1e} rad, max norm error {worst_norm:.1e}, {clock.elapsed:.2f} s")


def test_ac2_stirap_uncorrected_leakage():
    grid = TimeGrid.over(1.0, 2000)
    with Timer() as clock:
        leak = {s: run_stirap(StirapParams(), False, grid, s).leakage for s in ("invariant", "ket1")}
    ok = all(abs(v - 0.065) <= 0.01 for v in leak.values()) and clock.elapsed < 1
    detail = ", ".join(f"{k} start {100 * v:.2f}%" for k, v in leak.items())
    report("AC2a", ok, f"uncorrected leakage {detail} (target 6.5 +- 1.0 pp), {clock.elapsed:.2f} s")


def test_ac2_stirap_corrected_excess_leakage():
    """What the correction can deliver: no leakage beyond the nominal path's own."""
    rep = run_stirap(StirapParams(), True, TimeGrid.over(1.0, 2000))
    excess = rep.leakage - rep.nominal_leakage
    ok = abs(excess) <= 1e-6 and rep.infidelity <= 1e-6
    report("AC2b", ok, f"leakage beyond the nominal path {excess:.1e}, infidelity to nominal state {rep.infidelity:.1e}")


def test_ac2_stirap_corrected_absolute_leakage():
    """Known red: the nominal path itself ends with sin^2(epsilon) outside |3>."""
    with Timer() as clock:
        rep = run_stirap(StirapParams(), True, TimeGrid.over(1.0, 2000))
    ok = rep.leakage <= 1e-6 and clock.elapsed < 1
    report("AC2c", ok, f"corrected leakage {rep.leakage:.4e} (target <= 1e-6; sin^2(0.05) = {np.sin(0.05) ** 2:.4e})")


def test_ac3_noise_triple():
    grid = TimeGrid.over(1.0, 2000)
    with Timer() as clock:
        outs = [run_noise_scenario(NoiseScenario(p, 0.3, 6.0), grid) for p in PROTOCOLS]
    p2 = np.array([o.p2 for o in outs])
    p_hat = np.array([o.p_hat for o in outs])
    ok = np.all(np.abs(p2 - [0.455, 0.465, 0.532]) <= 0.005) and clock.elapsed < 5
    report(
        "AC3a",
        ok,
        f"p2 = {np.round(p2, 4).tolist()} (normalized {np.round(p_hat, 4).tolist()}), {clock.elapsed:.2f} s",
    )


def test_ac3_sweep_corrected_not_worse():
    """Known red for Gamma_perp T <= 1: the extra corrective field raises the laser-noise damping more than it removes."""
    with Timer() as clock:
        table = sweep_gamma(np.linspace(0.0, 8.0, 33), 0.3, n_steps=2000)
    gap = table[:, 3] - table[:, 2]
    bad = table[gap < 0, 0]
    ok = bad.size == 0 and clock.elapsed < 5
    report(
        "AC3b",
        ok,
        f"corrected below uncorrected at {bad.size}/33 points (Gamma_perp T <= {bad.max() if bad.size else 0:.2f}, "
        f"worst {gap.min():.1e}), {clock.elapsed:.2f} s",
    )


def test_ac4_energy():
    with Timer() as clock:
        quad_err, ratio_err = 0.0, []
        for eps in (0.01, 0.05, 0.1):
            rep = pi_pulse_energy_analysis(eps, 1.0)
            grid = TimeGrid.over(rep.t_bound, 4000)
            base, corr, _ = pi_pulse_fields(rep.t_bound, 1.0)
            quad_err = max(
                quad_err,
                abs(field_energy(base, grid) / rep.e_pi - 1),
                abs(field_energy(corr, grid) / rep.delta_e_pi - 1),
            )
            ratio_err.append(rep.ratio_error)
    ok = quad_err <= 1e-9 and max(ratio_err) < 0.1 and clock.elapsed < 1
    report(
        "AC4",
        ok,
        f"quadrature error {quad_err:.1e}, ratio error {np.round(ratio_err, 4).tolist()}, {clock.elapsed:.2f} s",
    )


def _scan():
    p = TwoSpinParams.from_ratios(1.0)
    grid = TimeGrid.over(p.duration, 4000)
    return p, grid, run_entanglement_scan(np.linspace(1.0, 10.0, 19), p, grid)


def test_ac5_two_spin_scan():
    with Timer() as clock:
        p0 = TwoSpinParams.from_ratios(1.0, gamma_bell_T=0.0)
        ideal = bell_fidelity(integrate_two_spin(protocol_fields(p0, False), p0, TimeGrid.over(100.0, 4000)).final)
        _, _, rows = _scan()
    unc = np.array([r.fidelity_uncorrected for r in rows])
    cor = np.array([r.fidelity_corrected for r in rows])
    golden = np.loadtxt(GOLDEN, delimiter=",", skiprows=1)
    table = np.column_stack([[r.r_gamma for r in rows], unc, cor])
    golden_err = np.abs(table - golden).max()
    ok = ideal >= 0.999 and np.all(cor >= unc) and cor.min() >= 0.98 and golden_err < 1e-9 and clock.elapsed < 30
    report(
        "AC5a",
        ok,
        f"dissipationless {ideal:.6f}, min corrected {cor.min():.5f}, min(corrected - uncorrected) "
        f"{(cor - unc).min():.1e}, golden deviation {golden_err:.1e}, {clock.elapsed:.2f} s",
    )


def test_ac5_uncorrected_monotone():
    """Known red: the uncorrected fidelity dips near R = 2, then recovers as fast decay removes the left-over |++> weight."""
    _, _, rows = _scan()
    unc = np.array([r.fidelity_uncorrected for r in rows])
    rises = int(np.sum(np.diff(unc) >= 0))
    report(
        "AC5b",
        rises == 0,
        f"uncorrected fidelity rises on {rises}/18 intervals; min {unc.min():.4f} at R = {rows[int(np.argmin(unc))].r_gamma:.1f}",
    )


def test_ac6_monte_carlo():
    """Final Bloch components, three per pulse shape.

    The maximum over all 201 x 3 trajectory samples is printed for information
    only: with that many correlated comparisons an excursion past 3 SE is
    expected even without any bias.
    """
    grid = TimeGrid.over(1.0, 200)
    lam = 0.5
    const = lambda t: np.full(np.shape(t), 3.0)
    zero = lambda t: np.zeros(np.shape(t))
    om_r, om_i, delta = optimal_sta_pulses(optimal_sta_path(1.0))
    shapes = {"constant": (const, zero, zero), "optimal_sta": (om_r, om_i, delta)}
    worst = {}
    with Timer() as clock:
        for k, (name, (fr, fi, fd)) in enumerate(shapes.items()):
            avg = stochastic_bloch_oracle(fr, fi, fd, lam, seed=100 + k, n_traj=10_000, grid=grid)
            field = lambda t, fr=fr, fi=fi, fd=fd: np.stack([fr(t), fi(t), fd(t)], axis=-1)
            tensor = lambda t, fr=fr, fi=fi: laser_noise_tensor(fr(t), fi(t), lam)
            det = integrate_bloch(BlochSystem(field, tensor), [0.0, 0.0, 1.0], grid)
            z = np.abs(avg.mean - det.states) / np.maximum(avg.stderr, 1e-12)
            worst[name] = (float(z[-1].max()), float(z.max()))
    ok = max(v[0] for v in worst.values()) < 3.0 and clock.elapsed < 60
    detail = ", ".join(f"{k} {v[0]:.2f} SE (whole trajectory {v[1]:.2f})" for k, v in worst.items())
    report("AC6", ok, f"final-state deviation {detail}, {clock.elapsed:.2f} s")


def test_ac7_determinism(tmp_path):
    runner = CliRunner()
    mismatched = []
    for fig in ("fig1", "fig2", "fig3", "figS1"):
        for run in ("a", "b"):
            res = runner.invoke(main, ["figure", fig, "--out", str(tmp_path / run), "--no-plot"])
            assert res.exit_code == 0, res.output
        for csv in sorted((tmp_path / "a").glob(f"{fig}*.csv")):
            if csv.read_bytes() != (tmp_path / "b" / csv.name).read_bytes():
                mismatched.append(csv.name)
    report("AC7", not mismatched, f"repeated figure runs differ in {mismatched or 'no files'}")


def test_ac7_library_matches_cli(tmp_path):
    emit_figure_data("fig3", tmp_path, plot=False)
    assert (tmp_path / "fig3.csv").read_bytes() == GOLDEN.read_bytes()
