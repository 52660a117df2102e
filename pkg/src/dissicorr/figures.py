"""Figure data and quick-look plots.

Every figure is driven by a preset in ``presets/`` so the physical parameters
live in data files. CSVs are the primary output; a PNG rendered with the Agg
backend is written next to them.
"""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

from . import noise, stirap, twospin  # noqa: E402
from .geometry import TimeGrid  # noqa: E402
from .harness import (  # noqa: E402
    constant_field_run,
    expand_sweep,
    load_preset,
    stirap_params,
    twospin_params,
    write_csv,
)

FIGURES = ("fig1", "fig2", "fig3", "figS1")

STYLE = {
    "figure.figsize": (5.0, 3.6),
    "figure.dpi": 120,
    "font.size": 10,
    "axes.grid": True,
    "grid.alpha": 0.3,
    "legend.frameon": False,
    "savefig.bbox": "tight",
}


def render(path, draw, projection=None):
    """Create a figure, let ``draw(ax)`` fill it, and save it to ``path``."""
    with plt.rc_context(STYLE):
        fig = plt.figure()
        ax = fig.add_subplot(projection=projection)
        draw(ax)
        # fixed metadata keeps repeated renders byte-identical
        fig.savefig(path, metadata={"Software": None})
        plt.close(fig)
    return Path(path)


def _fig1(out):
    cfg = load_preset("fig1")
    curves = {}
    for label, gamma in (("dissipationless", 0.0), ("dissipative", cfg.params.get("gamma_perp", 0.7))):
        traj, _, _ = constant_field_run({**cfg.params, "gamma_perp": gamma, "corrected": False}, cfg.n_steps)
        unit = traj.states / np.linalg.norm(traj.states, axis=1, keepdims=True)
        curves[label] = unit
        write_csv(out / f"fig1_{label}.csv", ["t", "Sx", "Sy", "Sz"], np.column_stack([traj.times, unit]))

    def draw(ax):
        u, v = np.mgrid[0 : np.pi : 20j, 0 : 2 * np.pi : 40j]
        ax.plot_wireframe(np.sin(u) * np.cos(v), np.sin(u) * np.sin(v), np.cos(u), color="0.85", linewidth=0.4)
        for (label, s), color in zip(curves.items(), ("tab:red", "tab:blue")):
            ax.plot(s[:, 0], s[:, 1], s[:, 2], color=color, label=label)
        ax.set_box_aspect((1, 1, 1))
        ax.view_init(elev=25, azim=-20)
        ax.legend(loc="upper left")

    return [out / "fig1_dissipationless.csv", out / "fig1_dissipative.csv"], draw, "3d"


def _fig2(out):
    cfg = load_preset("fig2")
    p = cfg.params
    gammas = expand_sweep(p["gamma_perpT"])
    table = noise.sweep_gamma(gammas, p.get("lambda_noise", 0.3), p.get("duration", 1.0), cfg.n_steps)
    header = ["gamma_perp_T", "p_hat_pi_pulse", "p_hat_optimal_sta", "p_hat_optimal_sta_corrected"]
    write_csv(out / "fig2.csv", header, table)

    def draw(ax):
        for k, (style, label) in enumerate(((":", "π-pulse"), ("--", "optimal"), ("-", "optimal, corrected")), 1):
            ax.plot(table[:, 0], table[:, k], style, label=label)
        ax.set_xlabel(r"$\Gamma_\perp T$")
        ax.set_ylabel(r"$\hat P_2$")
        ax.legend()

    return [out / "fig2.csv"], draw, None


def _fig3(out):
    cfg = load_preset("fig3")
    p = twospin_params(cfg.params)
    rows = twospin.run_entanglement_scan(
        expand_sweep(cfg.params["r_gamma"]), p, TimeGrid.over(p.duration, cfg.n_steps)
    )
    table = np.array([[r.r_gamma, r.fidelity_uncorrected, r.fidelity_corrected] for r in rows])
    write_csv(out / "fig3.csv", ["r_gamma", "fidelity_uncorrected", "fidelity_corrected"], table)

    def draw(ax):
        ax.plot(table[:, 0], table[:, 2], "-", label="corrected")
        ax.plot(table[:, 0], table[:, 1], "--", label="uncorrected")
        ax.set_xlabel(r"$R_\Gamma$")
        ax.set_ylabel(r"$\hat F$")
        ax.legend()

    return [out / "fig3.csv"], draw, None


def _figS1(out):
    cfg = load_preset("figS1")
    p = stirap_params(cfg.params)
    grid = TimeGrid.over(p.duration, cfg.n_steps)
    initial = cfg.params.get("initial", "invariant")
    reports = {}
    for label, corrected in (("corrected", True), ("uncorrected", False)):
        rep = stirap.run_stirap(p, corrected, grid, initial)
        reports[label] = rep
        write_csv(out / f"figS1_{label}.csv", ["t_over_T", "p_hat"], np.column_stack([rep.times / p.duration, rep.p_hat]))

    def draw(ax):
        ax.plot(reports["corrected"].times / p.duration, reports["corrected"].p_hat, "-", label="corrected")
        ax.plot(reports["uncorrected"].times / p.duration, reports["uncorrected"].p_hat, "--", label="uncorrected")
        ax.axhline(1.0, linestyle=":", color="0.5")
        ax.set_xlabel("t / T")
        ax.set_ylabel(r"$\hat p$")
        ax.legend()

    return [out / "figS1_corrected.csv", out / "figS1_uncorrected.csv"], draw, None


_EMITTERS = {"fig1": _fig1, "fig2": _fig2, "fig3": _fig3, "figS1": _figS1}


def emit_figure_data(figure, out_dir, plot=True):
    """Write the CSV files (and, unless ``plot`` is false, the PNG) for one figure."""
    if figure not in _EMITTERS:
        raise ValueError(f"unknown figure {figure!r}; expected one of {FIGURES}")
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    paths, draw, projection = _EMITTERS[figure](out)
    if plot:
        paths.append(render(out / f"{figure}.png", draw, projection))
    return paths
