from .annulus import Annulus, FlowConfig, NonDimensional, Thresholds
from .base import ArrayModel, FrozenModel
from .experiment import (
    CutoffSpec,
    EnergyReport,
    EnergyVariant,
    ExperimentRecord,
    ManifoldFit,
    SweepSummary,
)
from .flow import GeneralizedTC, TCCoefficients
from .grid import Field, Grid, PressureField
from .report import PoincareReport, ResidualArrays, ResidualReport
from .run_config import GridSettings, RunConfig, SweepSettings
from .solver import IterationRecord, SolveOptions, SolveOutcome, SolveStatus

__all__ = [
    "Annulus",
    "ArrayModel",
    "CutoffSpec",
    "EnergyReport",
    "EnergyVariant",
    "ExperimentRecord",
    "Field",
    "FlowConfig",
    "FrozenModel",
    "GeneralizedTC",
    "Grid",
    "GridSettings",
    "IterationRecord",
    "ManifoldFit",
    "NonDimensional",
    "PoincareReport",
    "PressureField",
    "ResidualArrays",
    "ResidualReport",
    "RunConfig",
    "SolveOptions",
    "SolveOutcome",
    "SolveStatus",
    "SweepSettings",
    "SweepSummary",
    "TCCoefficients",
    "Thresholds",
]
