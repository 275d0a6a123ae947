import sys
from pathlib import Path
from typing import Optional, Sequence

import click
from loguru import logger
from rich.console import Console

from taylor_couette_lab.config import get_settings
from taylor_couette_lab.models import Annulus
from taylor_couette_lab.services import ExportService, build_services
from taylor_couette_lab.cli.commands import (
    ExperimentCommands,
    FlowCommands,
    NotConvergedError,
    RunConfigLoader,
    ThresholdCommands,
)

EXIT_OK = 0
EXIT_INVALID = 1
EXIT_NOT_CONVERGED = 2
EXIT_IO = 3

class TaylorCouetteCLI:

    def __init__(self, console: Optional[Console] = None):
        self.console = console or Console()
        self.settings = get_settings()

        self.liouville_service = build_services()
        self.threshold_service = self.liouville_service.threshold_service
        self.export_service = ExportService(self.settings)

        self.config_loader = RunConfigLoader(self.export_service, self.settings)
        self.threshold_commands = ThresholdCommands(self.threshold_service, self.console)
        self.flow_commands = FlowCommands(
            self.liouville_service.exact_flow_service,
            self.liouville_service.operator_service,
            self.liouville_service.solver_service,
            self.export_service,
            self.console,
        )
        self.experiment_commands = ExperimentCommands(
            self.liouville_service, self.flow_commands, self.export_service, self.console
        )

def configure_logging(level: str) -> None:

    logger.remove()
    logger.add(
        sys.stderr,
        level=level,
        format="<level>{level}: {message}</level>"
    )

def run_options(func):
    """Shared config-file and override flags."""

    options = [
        click.option("--config", "config_path", type=click.Path(path_type=Path), default=None,
                     help="JSON run configuration"),
        click.option("--nu", type=float, default=None, help="Kinematic viscosity"),
        click.option("--r1", type=float, default=None, help="Inner radius"),
        click.option("--r2", type=float, default=None, help="Outer radius"),
        click.option("--omega1", type=float, default=None, help="Inner wall angular velocity"),
        click.option("--omega2", type=float, default=None, help="Outer wall angular velocity"),
        click.option("--a", type=float, default=None, help="Imposed axial pressure gradient"),
        click.option("--nr", type=int, default=None, help="Radial cells"),
        click.option("--nz", type=int, default=None, help="Axial cells"),
        click.option("--z-period", type=float, default=None, help="Axial period L_z"),
        click.option("--seed", type=int, default=None, help="Random seed"),
        click.option("--out", type=click.Path(path_type=Path), default=None, help="Output directory"),
    ]
    for option in reversed(options):
        func = option(func)
    return func

@click.group()
@click.option("--log-level", default=None, help="Log level for stderr diagnostics")
@click.pass_context
def cli(ctx: click.Context, log_level: Optional[str]) -> None:
    """Taylor-Couette verification toolkit."""

    settings = get_settings()
    default_level = "DEBUG" if settings.debug else settings.log_level
    configure_logging((log_level or default_level).upper())
    ctx.obj = TaylorCouetteCLI()

@cli.command()
@click.option("--nu", type=float, required=True, help="Kinematic viscosity")
@click.option("--r1", type=float, required=True, help="Inner radius")
@click.option("--r2", type=float, required=True, help="Outer radius")
@click.pass_obj
def thresholds(app: TaylorCouetteCLI, nu: float, r1: float, r2: float) -> None:
    """Print C_P, C1, C2, C_star and the Reynolds bound."""

    app.threshold_commands.show(nu, Annulus(r_inner=r1, r_outer=r2))

@cli.command()
@run_options
@click.option("--n-theta", type=int, default=None, help="Azimuthal points for a theta-resolved sample")
@click.pass_obj
def exact(app: TaylorCouetteCLI, config_path: Optional[Path], **flags) -> None:
    """Sample the generalized Taylor-Couette flow and write a field snapshot."""

    config = app.config_loader.load(config_path, **flags)
    app.flow_commands.exact(config, app.config_loader.output_dir(config))

@cli.command()
@click.option("--snapshot", type=click.Path(path_type=Path), required=True, help="Snapshot directory")
@click.option("--prefix", default="field", show_default=True)
@click.option("--nu", type=float, required=True, help="Kinematic viscosity")
@click.option("--stokes", is_flag=True, help="Drop advective terms")
@click.option("--out", type=click.Path(path_type=Path), default=None, help="Output directory")
@click.pass_obj
def residual(
    app: TaylorCouetteCLI,
    snapshot: Path,
    prefix: str,
    nu: float,
    stokes: bool,
    out: Optional[Path]
) -> None:
    """Evaluate the discrete momentum and continuity residuals of a snapshot."""

    app.flow_commands.residual(snapshot, prefix, nu, stokes, out or app.settings.output_dir)

@cli.command()
@run_options
@click.option("--stokes", is_flag=True, help="Linear Stokes mode")
@click.option("--amplitude", type=float, default=0.0, show_default=True,
              help="Perturbation added to the sampled initial flow")
@click.option("--newton-tol", type=float, default=None)
@click.option("--max-newton", type=int, default=None)
@click.pass_obj
def solve(app: TaylorCouetteCLI, config_path: Optional[Path], amplitude: float, **flags) -> None:
    """Run a single steady Newton solve."""

    config = app.config_loader.load(config_path, **flags)
    app.flow_commands.solve(config, amplitude, app.config_loader.output_dir(config))

@cli.command()
@run_options
@click.option("--stokes", is_flag=True, help="Linear Stokes mode")
@click.option("--workers", type=int, default=None, help="Worker processes")
@click.pass_obj
def sweep(
    app: TaylorCouetteCLI,
    config_path: Optional[Path],
    workers: Optional[int],
    **flags
) -> None:
    """Reynolds sweep testing uniqueness below the thresholds."""

    config = app.config_loader.load(config_path, **flags)
    app.experiment_commands.sweep(
        config, workers or app.settings.workers, app.config_loader.output_dir(config)
    )

@cli.command()
@click.option("--r1", type=float, required=True, help="Inner radius")
@click.option("--r2", type=float, required=True, help="Outer radius")
@click.option("--nr", type=int, default=64, show_default=True)
@click.option("--nz", type=int, default=64, show_default=True)
@click.option("--z-period", type=float, default=4.0, show_default=True)
@click.option("--profile", type=click.Choice(["sine", "parabola", "random"]), default="sine",
              show_default=True)
@click.option("--samples", type=int, default=1, show_default=True)
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--l-cut", "l_cuts", type=float, multiple=True, help="Cutoff L (repeatable)")
@click.option("--out", type=click.Path(path_type=Path), default=None, help="Output directory")
@click.pass_obj
def poincare(
    app: TaylorCouetteCLI,
    r1: float,
    r2: float,
    nr: int,
    nz: int,
    z_period: float,
    profile: str,
    samples: int,
    seed: int,
    l_cuts: tuple[float, ...],
    out: Optional[Path]
) -> None:
    """Check the radial Poincare inequality on sampled profiles."""

    if samples < 1:
        raise click.BadParameter("at least one sample is required", param_hint="--samples")
    grid = app.flow_commands.operator_service.build_grid(
        Annulus(r_inner=r1, r_outer=r2), nr, nz, z_period
    )
    app.experiment_commands.poincare(
        grid, profile, samples, seed, list(l_cuts), out or app.settings.output_dir
    )

@cli.command()
@click.option("--snapshot", type=click.Path(path_type=Path), required=True, help="Snapshot directory")
@click.option("--prefix", default="field", show_default=True)
@click.option("--nu", type=float, required=True, help="Kinematic viscosity")
@click.option("--variant", type=click.Choice(["axial", "azimuthal"]), default="axial",
              show_default=True)
@click.option("--out", type=click.Path(path_type=Path), default=None, help="Output directory")
@click.pass_obj
def energy(
    app: TaylorCouetteCLI,
    snapshot: Path,
    prefix: str,
    nu: float,
    variant: str,
    out: Optional[Path]
) -> None:
    """Evaluate the Y(L) ladder of a stored field."""

    app.experiment_commands.energy(snapshot, prefix, nu, variant, out or app.settings.output_dir)

def run_cli(argv: Sequence[str]) -> int:
    """Run one subcommand and map failures to exit codes."""

    err = Console(stderr=True)
    try:
        cli.main(args=list(argv), prog_name="tclab", standalone_mode=False)
    except click.exceptions.Exit as e:
        return e.exit_code
    except click.ClickException as e:
        err.print(f"[red]Error:[/red] {e.format_message()}")
        return EXIT_INVALID
    except NotConvergedError as e:
        err.print(f"[yellow]Not converged:[/yellow] {e}")
        return EXIT_NOT_CONVERGED
    except ValueError as e:
        err.print(f"[red]Invalid input:[/red] {e}")
        return EXIT_INVALID
    except OSError as e:
        err.print(f"[red]I/O error:[/red] {e}")
        return EXIT_IO
    return EXIT_OK

def main() -> None:

    sys.exit(run_cli(sys.argv[1:]))
