"""Configuration loading and scenario orchestration.

A scenario configuration is a JSON document validated against
``schema/scenario.schema.json``; unknown keys are rejected so that a typo in a
rate name cannot silently fall back to a default. Each run writes, into the
output directory,

* ``<stem>.csv``          curve or trajectory data,
* ``<stem>.metrics.json`` named scalar results plus the parsed configuration,
* ``<stem>.config.json``  a byte-for-byte copy of the input configuration,
* ``<stem>.png``          a quick-look plot (unless plotting is disabled).
"""

from __future__ import annotations

import json
import logging
import os
import time
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from types import SimpleNamespace
from typing import Any, Callable, Mapping

import numpy as np
from jsonschema import Draft202012Validator

from . import energy, noise, stirap, twospin
from .correction import accumulate_F, corrected_field
from .dynamics import BlochSystem, integrate_bloch, stochastic_bloch_oracle
from .errors import ConfigError, DomainError
from .geometry import TimeGrid, angle_between, dissipation_tensor
from .tolerances import DEFAULT_STEPS

log = logging.getLogger(__name__)

OUTPUT_ENV = "DISSICORR_OUTPUT_DIR"
DEFAULT_OUTPUT = "dissicorr-out"


def _schema():
    text = resources.files("dissicorr").joinpath("schema/scenario.schema.json").read_text()
    return json.loads(text)


_VALIDATOR = Draft202012Validator(_schema())


def _where(error) -> str:
    return ".".join(str(p) for p in error.absolute_path) or "<root>"


def _describe(error) -> str:
    if error.validator == "additionalProperties":
        extra = sorted(set(error.instance) - set(error.schema.get("properties", {})))
        return f"{_where(error)}: unknown key(s) {', '.join(map(repr, extra))}"
    if error.context:
        # oneOf/anyOf: report the branch that got furthest
        deepest = max(error.context, key=lambda e: len(e.absolute_path))
        return f"{_where(deepest)}: {deepest.message}"
    return f"{_where(error)}: {error.message}"


@dataclass(frozen=True)
class ScenarioConfig:
    scenario: str
    params: Mapping[str, Any]
    n_steps: int = DEFAULT_STEPS
    output: Path | None = None
    seed: int = 0
    name: str | None = None
    raw: bytes = field(default=b"", repr=False)

    @property
    def stem(self):
        return self.name or self.scenario


def validate_document(doc) -> None:
    errors = sorted(_VALIDATOR.iter_errors(doc), key=lambda e: list(map(str, e.absolute_path)))
    if errors:
        raise ConfigError("; ".join(_describe(e) for e in errors))


def config_from_document(doc, raw=b"", name=None) -> ScenarioConfig:
    validate_document(doc)
    return ScenarioConfig(
        scenario=doc["scenario"],
        params=doc["params"],
        n_steps=doc.get("grid", {}).get("n_steps", DEFAULT_STEPS),
        output=Path(doc["output"]) if "output" in doc else None,
        seed=doc.get("seed", 0),
        name=name,
        raw=raw,
    )


def load_config(path) -> ScenarioConfig:
    path = Path(path)
    try:
        raw = path.read_bytes()
    except FileNotFoundError:
        raise ConfigError(f"{path}: no such file") from None
    try:
        doc = json.loads(raw)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: invalid JSON at line {exc.lineno}, column {exc.colno}: {exc.msg}") from None
    return config_from_document(doc, raw=raw, name=path.stem)


def load_preset(name) -> ScenarioConfig:
    ref = resources.files("dissicorr").joinpath(f"presets/{name}.json")
    if not ref.is_file():
        raise ConfigError(f"no preset named {name!r}")
    raw = ref.read_bytes()
    return config_from_document(json.loads(raw), raw=raw, name=name)


def preset_names():
    folder = resources.files("dissicorr").joinpath("presets")
    return sorted(p.name[:-5] for p in folder.iterdir() if p.name.endswith(".json"))


def expand_sweep(value):
    """A number, a list, or ``{"start", "stop", "num"}`` as a list of floats."""
    if isinstance(value, Mapping):
        return [float(v) for v in np.linspace(value["start"], value["stop"], value["num"])]
    if isinstance(value, (list, tuple)):
        return [float(v) for v in value]
    return [float(value)]


def output_dir(config: ScenarioConfig | None = None, override=None) -> Path:
    """Explicit override, then the config, then the environment, then the default."""
    if override is not None:
        return Path(override)
    if config is not None and config.output is not None:
        return config.output
    return Path(os.environ.get(OUTPUT_ENV, DEFAULT_OUTPUT))


# -- scenario runners ----------------------------------------------------------


@dataclass
class Table:
    header: list[str]
    rows: np.ndarray
    metrics: dict[str, float]
    plot: Callable | None = None


def write_csv(path, header, rows):
    """Write rows with a fixed number format so reruns are byte-identical."""
    np.savetxt(path, np.asarray(rows, dtype=float), fmt="%.12e", delimiter=",", header=",".join(header), comments="")


def _unit(v, what):
    v = np.asarray(v, dtype=float)
    n = np.linalg.norm(v)
    if n == 0:
        raise ConfigError(f"params.{what}: vector must be non-zero")
    return v / n


def _rotation(axis, s, angle):
    """Rotate ``s`` about the unit ``axis`` by each of ``angle`` (right-handed)."""
    angle = np.asarray(angle, dtype=float)[..., None]
    c, sn = np.cos(angle), np.sin(angle)
    return s * c + np.cross(axis, s) * sn + axis * np.dot(axis, s) * (1 - c)


def constant_field_run(params, n_steps):
    """Constant field, axial damping, optional correction along the undamped rotation."""
    gyro = params.get("gyro", 1.0)
    strength = params.get("field", 1.0)
    rotation = params.get("rotation", np.pi)
    axis = _unit(params.get("axis", [0.0, 1.0, 0.0]), "axis")
    s_init = np.asarray(params.get("initial", [0.0, 0.0, 1.0]), dtype=float)
    s_hat = _unit(s_init, "initial")
    tensor = dissipation_tensor(np.diag([params.get("gamma_perp", 0.0)] * 2 + [params.get("gamma_z", 0.0)]))
    rate = gyro * strength
    duration = rotation / abs(rate)
    grid = TimeGrid.over(duration, n_steps)

    def direction(t):
        return _rotation(axis, s_hat, rate * np.asarray(t))

    def base(t):
        return np.broadcast_to(strength * axis, np.shape(t) + (3,))

    applied = corrected_field(base, direction, tensor, gyro) if params.get("corrected", False) else base
    traj = integrate_bloch(BlochSystem(applied, tensor, gyro=gyro), s_init, grid)
    nominal = direction(traj.times)
    big_f = accumulate_F(SimpleNamespace(direction=direction), tensor, grid)
    return traj, nominal, big_f


def _pi_pulse(cfg: ScenarioConfig) -> Table:
    traj, nominal, big_f = constant_field_run(cfg.params, cfg.n_steps)
    norm = np.linalg.norm(traj.states, axis=1)
    err = angle_between(traj.states, nominal)
    expected = np.linalg.norm(traj.states[0]) * np.exp(-big_f)
    s = traj.final
    metrics = {
        "final_angle_error": float(err[-1]),
        "max_angle_error": float(err.max()),
        "final_norm": float(norm[-1]),
        "expected_norm_if_tracking": float(expected[-1]),
        "p_hat": float(0.5 * (1 - s[2] / norm[-1])),
    }
    rows = np.column_stack([traj.times, traj.states, norm, err])

    def plot(ax):
        for k, lab in enumerate(("$S_x$", "$S_y$", "$S_z$")):
            ax.plot(traj.times, traj.states[:, k] / norm, label=lab)
        ax.set_xlabel("t")
        ax.set_ylabel("normalized Bloch components")
        ax.legend()

    return Table(["t", "Sx", "Sy", "Sz", "norm", "angle_error"], rows, metrics, plot)


def stirap_params(params) -> stirap.StirapParams:
    duration = params.get("duration", 1.0)
    return stirap.StirapParams(
        epsilon=params.get("epsilon", 0.05),
        delta=params.get("delta", np.pi / 4),
        big_gamma=params.get("gammaT", 1.0) / duration,
        duration=duration,
    )


def _stirap(cfg: ScenarioConfig) -> Table:
    p = _physics(stirap_params, cfg.params)
    rep = stirap.run_stirap(
        p, cfg.params.get("corrected", True), TimeGrid.over(p.duration, cfg.n_steps), cfg.params.get("initial", "invariant")
    )
    metrics = {
        "leakage_1_2": rep.leakage,
        "nominal_leakage_1_2": rep.nominal_leakage,
        "excess_leakage_1_2": rep.leakage - rep.nominal_leakage,
        "infidelity_to_nominal": rep.infidelity,
        "final_p_hat": float(rep.p_hat[-1]),
        "final_norm": float(np.linalg.norm(rep.trajectory.final)),
    }

    def plot(ax):
        for k in range(3):
            ax.plot(rep.times, rep.populations[:, k], label=f"level {k + 1}")
        ax.set_xlabel("t")
        ax.set_ylabel("normalized population")
        ax.legend()

    return Table(["t", "p1_hat", "p2_hat", "p3_hat"], np.column_stack([rep.times, rep.populations]), metrics, plot)


def _noise(cfg: ScenarioConfig) -> Table:
    p = cfg.params
    lam = p.get("lambda_noise", 0.3)
    duration = p.get("duration", 1.0)
    protocols = p.get("protocols", list(noise.PROTOCOLS))
    source = p.get("laser_noise_from", "applied")
    gammas = expand_sweep(p.get("gamma_perpT", 6.0))
    grid = TimeGrid.over(duration, cfg.n_steps)
    hats, raws = [], []
    for g in gammas:
        outs = [
            noise.run_noise_scenario(_physics(noise.NoiseScenario, proto, lam, g, duration, source), grid)
            for proto in protocols
        ]
        hats.append([o.p_hat for o in outs])
        raws.append([o.p2 for o in outs])
    hats, raws = np.array(hats), np.array(raws)
    metrics = {}
    if len(gammas) == 1:
        for k, proto in enumerate(protocols):
            metrics[f"p_hat_{proto}"] = float(hats[0, k])
            metrics[f"p2_{proto}"] = float(raws[0, k])
    else:
        for k, proto in enumerate(protocols):
            metrics[f"min_p_hat_{proto}"] = float(hats[:, k].min())
    n_traj = p.get("monte_carlo_trajectories", 0)
    if n_traj and "optimal_sta" in protocols:
        scen = noise.NoiseScenario("optimal_sta", lam, gammas[0], duration)
        path, _ = noise.protocol_fields(scen)
        om_r, om_i, delta = noise.optimal_sta_pulses(path)
        mc = stochastic_bloch_oracle(om_r, om_i, delta, lam, cfg.seed, n_traj, grid, dephasing=scen.gamma_perp)
        metrics["mc_final_sz"] = float(mc.mean[-1, 2])
        metrics["mc_final_sz_stderr"] = float(mc.stderr[-1, 2])
    header = ["gamma_perp_T"] + [f"p_hat_{proto}" for proto in protocols] + [f"p2_{proto}" for proto in protocols]

    def plot(ax):
        styles = {"pi_pulse": ":", "optimal_sta": "--", "optimal_sta_corrected": "-"}
        for k, proto in enumerate(protocols):
            ax.plot(gammas, hats[:, k], styles[proto], marker="o" if len(gammas) == 1 else None, label=proto)
        ax.set_xlabel(r"$\Gamma_\perp T$")
        ax.set_ylabel(r"$\hat P_2$")
        ax.legend()

    return Table(header, np.column_stack([gammas, hats, raws]), metrics, plot)


def twospin_params(params) -> twospin.TwoSpinParams:
    return twospin.TwoSpinParams.from_ratios(
        r_gamma=1.0,
        gamma_bell_T=params.get("gamma_bellT", 2.5),
        omega_T=params.get("omegaT", 2.0),
        duration=params.get("duration", 100.0),
        xi=params.get("xi", 1.0),
        gyro=params.get("gyro", 1.0),
    )


def _entangle(cfg: ScenarioConfig) -> Table:
    p = _physics(twospin_params, cfg.params)
    ratios = expand_sweep(cfg.params.get("r_gamma", 1.0))
    rows = twospin.run_entanglement_scan(
        ratios, p, TimeGrid.over(p.duration, cfg.n_steps), literal=cfg.params.get("literal_correction", False)
    )
    table = np.array([[r.r_gamma, r.fidelity_uncorrected, r.fidelity_corrected] for r in rows])
    metrics = {
        "min_fidelity_uncorrected": float(table[:, 1].min()),
        "min_fidelity_corrected": float(table[:, 2].min()),
    }
    if len(rows) == 1:
        metrics = {"fidelity_uncorrected": rows[0].fidelity_uncorrected, "fidelity_corrected": rows[0].fidelity_corrected}

    def plot(ax):
        ax.plot(table[:, 0], table[:, 1], "--", label="uncorrected")
        ax.plot(table[:, 0], table[:, 2], "-", label="corrected")
        ax.set_xlabel(r"$R_\Gamma$")
        ax.set_ylabel(r"$\hat F$")
        ax.legend()

    return Table(["r_gamma", "fidelity_uncorrected", "fidelity_corrected"], table, metrics, plot)


def _energy(cfg: ScenarioConfig) -> Table:
    p = cfg.params
    eps = p.get("epsilon", [0.01, 0.05, 0.1])
    eps = eps if isinstance(eps, list) else [eps]
    gp, gyro = p.get("gamma_perp", 1.0), p.get("gyro", 1.0)
    rows, worst = [], 0.0
    for e in eps:
        rep = _physics(energy.pi_pulse_energy_analysis, e, gp, gyro)
        grid = TimeGrid.over(rep.t_bound, cfg.n_steps)
        base, corr, _ = energy.pi_pulse_fields(rep.t_bound, gp, gyro)
        worst = max(
            worst,
            abs(energy.field_energy(base, grid) / rep.e_pi - 1),
            abs(energy.field_energy(corr, grid) / rep.delta_e_pi - 1),
        )
        rows.append([e, rep.t_bound, rep.t_opt, rep.e_pi, rep.delta_e_pi, rep.ratio, rep.ratio_estimate])
    rows = np.array(rows)
    metrics = {"max_quadrature_relative_error": float(worst), "max_ratio_relative_error": float(np.max(np.abs(rows[:, 6] / rows[:, 5] - 1)))}

    def plot(ax):
        ax.loglog(rows[:, 0], rows[:, 5], "o-", label="exact share")
        ax.loglog(rows[:, 0], rows[:, 6], "--", label=r"$\epsilon^2/2\pi^2$")
        ax.set_xlabel(r"$\epsilon$")
        ax.set_ylabel(r"$\Delta E_\pi / E_{\pi,\mathrm{corr}}$")
        ax.legend()

    return Table(["epsilon", "t_bound", "t_opt", "e_pi", "delta_e_pi", "ratio", "ratio_estimate"], rows, metrics, plot)


def _physics(build, *args):
    """Build a physics object, reporting domain violations as configuration errors."""
    try:
        return build(*args)
    except DomainError as exc:
        raise ConfigError(f"params: {exc}") from None


RUNNERS = {"pi_pulse": _pi_pulse, "stirap": _stirap, "noise": _noise, "entangle": _entangle, "energy": _energy}


@dataclass(frozen=True)
class ResultRecord:
    scenario: str
    echo: bytes
    metrics: dict
    csv_path: Path
    metrics_path: Path
    wall_time: float
    plot_path: Path | None = None


def run_scenario(config: ScenarioConfig, out_dir=None, plot=True) -> ResultRecord:
    """Run one configuration and write its CSV, metrics, config echo and plot."""
    out = output_dir(config, out_dir)
    out.mkdir(parents=True, exist_ok=True)
    start = time.perf_counter()
    table = RUNNERS[config.scenario](config)
    wall = time.perf_counter() - start
    log.info("%s finished in %.2f s", config.stem, wall)

    csv_path = out / f"{config.stem}.csv"
    write_csv(csv_path, table.header, table.rows)
    echo = config.raw or json.dumps({"scenario": config.scenario, "params": dict(config.params)}, indent=2).encode()
    (out / f"{config.stem}.config.json").write_bytes(echo)
    metrics_path = out / f"{config.stem}.metrics.json"
    record = {
        "scenario": config.scenario,
        "config": json.loads(echo),
        "metrics": table.metrics,
        "csv": csv_path.name,
        "wall_time_s": wall,
    }
    metrics_path.write_text(json.dumps(record, indent=2) + "\n")
    plot_path = None
    if plot and table.plot is not None:
        from .figures import render

        plot_path = render(out / f"{config.stem}.png", table.plot)
    return ResultRecord(config.scenario, echo, table.metrics, csv_path, metrics_path, wall, plot_path)
