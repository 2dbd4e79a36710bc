"""Parametric obstacle problems on nested P1 grids: projected-Richardson
multigrid with monotone restriction, multilevel datasets, and surrogate
evaluation metrics."""

from .fields import Case, CaseConfig
from .grid import GridHierarchy, GridLevel, build_hierarchy
from .smoother import OmegaStrategy
from .transfer import RestrictionMode
from .vcmr import VcmrConfig

__all__ = [
    "Case", "CaseConfig", "GridHierarchy", "GridLevel", "build_hierarchy",
    "OmegaStrategy", "RestrictionMode", "VcmrConfig",
]

__version__ = "0.1.0"
