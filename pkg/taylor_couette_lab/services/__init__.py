from .threshold_service import ThresholdService
from .exact_flow_service import ExactFlowService
from .operator_service import CylindricalOperatorService
from .solver_service import SteadySolverService, SteadySystem
from .liouville_service import LiouvilleService, build_services
from .export_service import ExportService

__all__ = [
    "ThresholdService",
    "ExactFlowService",
    "CylindricalOperatorService",
    "SteadySolverService",
    "SteadySystem",
    "LiouvilleService",
    "build_services",
    "ExportService"
]
