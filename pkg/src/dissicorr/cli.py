"""Command-line entry point: ``dissicorr run | figure | validate``.

Exit status is 0 on success, 1 for configuration and usage problems and 2
for numerical failures (including singular control fields). Error messages are
prefixed with their category.
"""

import logging
from pathlib import Path

import click

from .errors import DissicorrError
from .harness import OUTPUT_ENV, load_config, output_dir, run_scenario

EXIT_CODES = {"CONFIG": 1, "NUMERIC": 2, "SINGULAR": 2}


class _Cli(click.Group):
    def invoke(self, ctx):
        try:
            return super().invoke(ctx)
        except click.UsageError as exc:
            click.echo(f"CONFIG: {exc.format_message()}", err=True)
            ctx.exit(1)
        except DissicorrError as exc:
            click.echo(f"{exc.category}: {exc}", err=True)
            ctx.exit(EXIT_CODES.get(exc.category, 2))


@click.group(cls=_Cli)
@click.option("-v", "--verbose", is_flag=True, help="Log progress to stderr.")
def main(verbose):
    """Dissipation-corrected spin control: scenarios and figure data."""
    logging.basicConfig(level=logging.INFO if verbose else logging.WARNING, format="%(levelname)s %(name)s: %(message)s")


_out_option = click.option(
    "--out",
    "out_dir",
    type=click.Path(file_okay=False, path_type=Path),
    default=None,
    help=f"Output directory (default: config 'output', then ${OUTPUT_ENV}, then ./dissicorr-out).",
)
_plot_option = click.option("--no-plot", is_flag=True, help="Skip the PNG next to the CSV.")


@main.command()
@click.argument("config", type=click.Path(dir_okay=False, path_type=Path))
@_out_option
@_plot_option
def run(config, out_dir, no_plot):
    """Run the scenario described by CONFIG."""
    cfg = load_config(config)
    record = run_scenario(cfg, out_dir, plot=not no_plot)
    for name, value in record.metrics.items():
        click.echo(f"{name} = {value:.6g}")
    click.echo(f"wrote {record.csv_path}")
    click.echo(f"wrote {record.metrics_path}")
    if record.plot_path is not None:
        click.echo(f"wrote {record.plot_path}")


@main.command()
@click.argument("name", type=click.Choice(["fig1", "fig2", "fig3", "figS1"]))
@_out_option
@_plot_option
def figure(name, out_dir, no_plot):
    """Write the data (and a quick-look PNG) for figure NAME."""
    from .figures import emit_figure_data

    for path in emit_figure_data(name, output_dir(None, out_dir), plot=not no_plot):
        click.echo(f"wrote {path}")


@main.command()
@click.argument("config", type=click.Path(dir_okay=False, path_type=Path))
def validate(config):
    """Check CONFIG against the schema without running anything."""
    cfg = load_config(config)
    click.echo(f"ok: {config} ({cfg.scenario})")
