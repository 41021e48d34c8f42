"""Random sensor placement in [0, y]^d and the cost of moving sensors to full coverage."""

from .algorithms import (
    Branch,
    Displacement,
    LvParams,
    fisher_yates_prefix,
    lvd,
    mv1,
    mvd,
    mvd_general,
    scaling_check,
)
from .analytic import (
    QuadratureConfig,
    d_total,
    lv_constants,
    phase1_cost,
    recursive_expected_cost,
)
from .core import AnchorGrid, CostMetric, CostMode, MovementLog, Phase, SensorSwarm, cost_of_log
from .coverage import CoverageReport, verify_exact, verify_sampled
from .errors import (
    CoverageSizeError,
    CubeCovError,
    DegenerateFitError,
    MovementLogError,
    PreconditionError,
    QuadratureError,
)
from .experiments import SweepSpec, TrialStats, emit_csv, fit_exponent, read_csv, run_sweep
from .placement import SeedSpec, place_uniform, read_placement, write_placement

__version__ = "0.1.0"

__all__ = [
    "Branch",
    "Displacement",
    "LvParams",
    "fisher_yates_prefix",
    "lvd",
    "mv1",
    "mvd",
    "mvd_general",
    "scaling_check",
    "QuadratureConfig",
    "d_total",
    "lv_constants",
    "phase1_cost",
    "recursive_expected_cost",
    "CoverageSizeError",
    "CubeCovError",
    "DegenerateFitError",
    "MovementLogError",
    "PreconditionError",
    "QuadratureError",
    "AnchorGrid",
    "CostMetric",
    "CostMode",
    "MovementLog",
    "Phase",
    "SensorSwarm",
    "cost_of_log",
    "CoverageReport",
    "verify_exact",
    "verify_sampled",
    "SweepSpec",
    "TrialStats",
    "emit_csv",
    "fit_exponent",
    "read_csv",
    "run_sweep",
    "SeedSpec",
    "place_uniform",
    "read_placement",
    "write_placement",
]
