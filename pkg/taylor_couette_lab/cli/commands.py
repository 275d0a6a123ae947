import math
from pathlib import Path
from typing import Any, Optional

import numpy as np
from rich.console import Console
from rich.table import Table

from taylor_couette_lab.config import Settings
from taylor_couette_lab.models import (
    Annulus,
    CutoffSpec,
    EnergyVariant,
    Grid,
    ResidualReport,
    RunConfig,
)
from taylor_couette_lab.services import (
    CylindricalOperatorService,
    ExactFlowService,
    ExportService,
    LiouvilleService,
    SteadySolverService,
    ThresholdService,
)
from taylor_couette_lab.services.cutoff import cutoff_ladder

class NotConvergedError(Exception):
    pass

class RunConfigLoader:
    """Merges a JSON config file with command-line overrides."""

    # flag name -> (section, key)
    OVERRIDES = {
        "nu": ("flow", "viscosity"),
        "omega1": ("flow", "omega_inner"),
        "omega2": ("flow", "omega_outer"),
        "r1": ("annulus", "r_inner"),
        "r2": ("annulus", "r_outer"),
        "nr": ("grid", "n_r"),
        "nz": ("grid", "n_z"),
        "z_period": ("grid", "z_period"),
        "n_theta": ("grid", "n_theta"),
        "a": ("solver", "imposed_axial_gradient"),
        "newton_tol": ("solver", "newton_tol"),
        "max_newton": ("solver", "max_newton"),
    }

    def __init__(self, export_service: ExportService, settings: Settings):
        self.export_service = export_service
        self.settings = settings

    def load(self, config_path: Optional[Path], **flags: Any) -> RunConfig:

        data: dict[str, Any] = {}
        if config_path is not None:
            data = self.export_service.read_json(config_path)

        for flag, (section, key) in self.OVERRIDES.items():
            value = flags.get(flag)
            if value is not None:
                data.setdefault(section, {})[key] = value
        if flags.get("stokes"):
            data.setdefault("solver", {})["stokes_mode"] = True
        if flags.get("seed") is not None:
            data["seed"] = flags["seed"]
        if flags.get("out") is not None:
            data["output_dir"] = str(flags["out"])
        return RunConfig.model_validate(data)

    def output_dir(self, config: RunConfig) -> Path:

        return config.output_dir or self.settings.output_dir

class ThresholdCommands:

    def __init__(self, threshold_service: ThresholdService, console: Console):
        self.threshold_service = threshold_service
        self.console = console

    def show(self, nu: float, annulus: Annulus) -> None:

        result = self.threshold_service.thresholds(nu, annulus)

        table = Table(title=f"Thresholds for nu={nu}, R1={annulus.r_inner}, R2={annulus.r_outer}")
        table.add_column("Quantity", style="cyan", no_wrap=True)
        table.add_column("Value", style="green", justify="right")
        table.add_row("C_P", f"{result.c_p:.10g}")
        table.add_row("C1", f"{result.c1:.10g}")
        table.add_row("C2", f"{result.c2:.10g}")
        table.add_row("C_star", f"{result.c_star:.10g}")
        table.add_row("re_bound", f"{result.re_bound:.10g}")
        self.console.print(table)

class FlowCommands:

    def __init__(
        self,
        exact_flow_service: ExactFlowService,
        operator_service: CylindricalOperatorService,
        solver_service: SteadySolverService,
        export_service: ExportService,
        console: Console
    ):
        self.exact_flow_service = exact_flow_service
        self.operator_service = operator_service
        self.solver_service = solver_service
        self.export_service = export_service
        self.console = console

    def build_grid(self, config: RunConfig, for_sweep: bool = False) -> Grid:

        return self.operator_service.build_grid(
            config.annulus,
            config.grid.n_r,
            config.grid.n_z,
            config.resolved_z_period(for_sweep),
            config.grid.n_theta,
        )

    def exact(self, config: RunConfig, out_dir: Path) -> None:

        grid = self.build_grid(config)
        gtc = self.exact_flow_service.generalized(
            config.annulus, config.flow, axial_gradient=config.solver.imposed_axial_gradient
        )
        field, pressure = self.exact_flow_service.sample_on_grid(gtc, grid)

        self.export_service.write_field_snapshot(field, pressure, out_dir)
        self.export_service.write_json(out_dir / "run_config.json", config.model_dump(mode="json"))
        self.console.print(
            f"[green]Sampled[/green] A={gtc.coeffs.a_coef:.10g}, B={gtc.coeffs.b_coef:.10g}, "
            f"a={gtc.axial_gradient:.10g} on {grid!r} -> {out_dir}"
        )

    def residual(
        self,
        snapshot_dir: Path,
        prefix: str,
        nu: float,
        stokes: bool,
        out_dir: Path
    ) -> ResidualReport:

        field, pressure = self.export_service.read_field_snapshot(snapshot_dir, prefix)
        if field.grid.axisymmetric:
            report = self.operator_service.momentum_residual_axisym(
                field, pressure, pressure.axial_gradient, nu, advective=not stokes
            )
        else:
            report = self.operator_service.momentum_residual_general(
                field, pressure, nu, advective=not stokes
            )

        document = self.export_service.residual_document(report)
        document["config"] = {
            "snapshot": str(snapshot_dir),
            "prefix": prefix,
            "nu": nu,
            "stokes": stokes,
            "axial_gradient": pressure.axial_gradient,
            **self.export_service.grid_document(field.grid),
        }
        self.export_service.write_json(out_dir / "residual.json", document)
        self.console.print(self._residual_table(report, f"Residual of {prefix} on {field.grid!r}"))
        return report

    def solve(self, config: RunConfig, amplitude: float, out_dir: Path) -> None:

        grid = self.build_grid(config)
        if not grid.axisymmetric:
            raise ValueError("Steady solves run on axisymmetric grids; drop n_theta")
        gtc = self.exact_flow_service.generalized(
            config.annulus, config.flow, axial_gradient=config.solver.imposed_axial_gradient
        )
        initial, _ = self.exact_flow_service.sample_on_grid(gtc, grid)
        initial = self.solver_service.perturb(initial, amplitude, config.seed)

        with self.console.status("[bold green]Solving steady system...[/bold green]"):
            outcome = self.solver_service.solve_steady(
                grid, config.flow.viscosity, config.flow, initial, config.solver
            )

        self.export_service.write_field_snapshot(outcome.field, outcome.pressure, out_dir)
        self.export_service.write_history(out_dir / "history.csv", outcome.history)
        self.export_service.write_json(
            out_dir / "solve.json",
            {
                "config": config.model_dump(mode="json"),
                "status": str(outcome.status),
                "newton_iterations": outcome.newton_iterations,
                "amplitude": amplitude,
                "residual": self.export_service.residual_document(outcome.final_residual),
            },
        )
        self.export_service.write_json(out_dir / "run_config.json", config.model_dump(mode="json"))

        self.console.print(self._residual_table(outcome.final_residual, f"Steady solve: {outcome.status}"))
        self.console.print(f"Newton iterations: {outcome.newton_iterations}")
        if not outcome.converged:
            raise NotConvergedError(f"Steady solve ended with status {outcome.status}")

    def _residual_table(self, report: ResidualReport, title: str) -> Table:

        table = Table(title=title)
        table.add_column("Equation", style="cyan", no_wrap=True)
        table.add_column("L-inf", style="green", justify="right")
        table.add_column("L2", style="green", justify="right")
        for name in ("radial", "azimuthal", "axial", "continuity"):
            table.add_row(
                name,
                f"{getattr(report, f'{name}_linf'):.6e}",
                f"{getattr(report, f'{name}_l2'):.6e}",
            )
        return table

class ExperimentCommands:

    def __init__(
        self,
        liouville_service: LiouvilleService,
        flow_commands: FlowCommands,
        export_service: ExportService,
        console: Console
    ):
        self.liouville_service = liouville_service
        self.flow_commands = flow_commands
        self.export_service = export_service
        self.console = console

    def sweep(self, config: RunConfig, workers: int, out_dir: Path) -> None:

        grid = self.flow_commands.build_grid(config, for_sweep=True)
        with self.console.status("[bold green]Running Reynolds sweep...[/bold green]"):
            records = self.liouville_service.sweep_reynolds(
                config.annulus,
                config.flow.viscosity,
                config.sweep.omega_pairs,
                config.sweep.amplitudes,
                config.sweep.seeds,
                grid,
                config.solver,
                fit_axial=config.sweep.fit_axial,
                workers=workers,
            )
        summary = self.liouville_service.summarize(records)
        echo = config.model_dump(mode="json")

        self.export_service.export(records, "csv", out_dir / "sweep.csv")
        self.export_service.write_json(out_dir / "summary.json", self.export_service.summary_document(summary, echo))
        self.export_service.write_json(out_dir / "run_config.json", echo)

        table = Table(title=f"Reynolds sweep on {grid!r}")
        table.add_column("omega", style="cyan")
        table.add_column("amp", justify="right")
        table.add_column("seed", justify="right")
        table.add_column("converged", style="green")
        table.add_column("distance", justify="right")
        table.add_column("a", justify="right")
        table.add_column("Y max", justify="right")
        table.add_column("hypothesis")
        for rec in records:
            table.add_row(
                f"({rec.omega_inner:g}, {rec.omega_outer:g})",
                f"{rec.amplitude:g}",
                str(rec.seed),
                "yes" if rec.converged else "[red]no[/red]",
                f"{rec.manifold_distance:.3e}",
                f"{rec.fitted_a:.3e}",
                f"{rec.y_max:.3e}",
                "in" if rec.in_hypothesis else "[yellow]out[/yellow]",
            )
        self.console.print(table)
        self.console.print(
            f"total={summary.total} converged={summary.converged} on_manifold={summary.on_manifold} "
            f"out_of_hypothesis={summary.out_of_hypothesis} counterexamples={summary.counterexamples}"
        )
        if summary.converged < summary.total:
            raise NotConvergedError(f"{summary.total - summary.converged} sweep run(s) did not converge")

    def poincare(
        self,
        grid: Grid,
        profile: str,
        samples: int,
        seed: int,
        l_cuts: list[float],
        out_dir: Path
    ) -> bool:

        ladder = l_cuts or cutoff_ladder(grid.z_period)
        if not ladder:
            raise ValueError(f"Axial period {grid.z_period} leaves no cutoff L in [1.25, L_z/2]")
        s = (grid.r_faces - grid.annulus.r_inner) / grid.annulus.gap
        rng = np.random.default_rng(seed)
        operators = self.flow_commands.operator_service

        rows = []
        for sample in range(samples):
            f = self._profile(profile, s, grid, rng)
            for l_cut in ladder:
                report = operators.poincare_check(f, grid, l_cut)
                rows.append(
                    [sample, l_cut, report.ratio_domain, report.ratio_strip, report.bound,
                     report.tolerance_factor, report.degenerate, report.holds]
                )

        header = ["sample", "l_cut", "ratio_domain", "ratio_strip", "bound", "tolerance_factor",
                  "degenerate", "holds"]
        self.export_service.write_csv(out_dir / "poincare.csv", header, rows)
        self.export_service.write_json(
            out_dir / "poincare.json",
            {
                "profile": profile,
                "samples": samples,
                "seed": seed,
                "l_cuts": list(ladder),
                **self.export_service.grid_document(grid),
            },
        )

        worst = max((row[2] for row in rows if row[2] is not None), default=0.0)
        holds = all(row[-1] for row in rows)
        bound = rows[0][4]
        colour = "green" if holds else "red"
        self.console.print(
            f"[{colour}]Poincare check {'holds' if holds else 'FAILS'}[/{colour}]: "
            f"max ratio {worst:.6g} vs sqrt(C_P) {bound:.6g} over {len(rows)} checks"
        )
        return holds

    def energy(
        self,
        snapshot_dir: Path,
        prefix: str,
        nu: float,
        variant: EnergyVariant,
        out_dir: Path
    ) -> None:

        field, _ = self.export_service.read_field_snapshot(snapshot_dir, prefix)
        ladder = self.liouville_service.cutoff_ladder(field.grid)
        if not ladder:
            raise ValueError(f"Axial period {field.grid.z_period} leaves no cutoff L in [1.25, L_z/2]")
        reports = [
            self.liouville_service.y_functional(field, nu, CutoffSpec(l_cut=l_cut), variant)
            for l_cut in ladder
        ]

        term_names = sorted(reports[0].terms)
        header = ["l_cut", "y_value", "y_prime"] + term_names
        rows = ([r.l_cut, r.y_value, r.y_prime] + [r.terms[name] for name in term_names] for r in reports)
        self.export_service.write_csv(out_dir / f"energy_{variant}.csv", header, rows)
        self.export_service.write_json(
            out_dir / f"energy_{variant}.json",
            {
                "snapshot": str(snapshot_dir),
                "prefix": prefix,
                "nu": nu,
                "variant": variant,
                "l_cuts": ladder,
                **self.export_service.grid_document(field.grid),
            },
        )

        table = Table(title=f"Y(L) ladder, {variant} variant")
        table.add_column("L", style="cyan", justify="right")
        table.add_column("Y(L)", style="green", justify="right")
        table.add_column("Y'(L)", style="green", justify="right")
        for r in reports:
            table.add_row(f"{r.l_cut:g}", f"{r.y_value:.6e}", f"{r.y_prime:.6e}")
        self.console.print(table)

    def _profile(self, kind: str, s: np.ndarray, grid: Grid, rng: np.random.Generator) -> np.ndarray:

        if kind == "sine":
            f = np.sin(math.pi * s)
        elif kind == "parabola":
            f = 4.0 * s * (1.0 - s)
        elif kind == "random":
            modes = rng.normal(size=(3, 2))
            phase = 2.0 * math.pi * grid.z_centers / grid.z_period
            g = sum(
                c * np.cos((k + 1) * phase) + d * np.sin((k + 1) * phase)
                for k, (c, d) in enumerate(modes)
            )
            f = (s * (1.0 - s))[:, None] * g[None, :]
        else:
            raise ValueError(f"Unknown profile kind: {kind}")
        f[0] = 0.0
        f[-1] = 0.0
        return f