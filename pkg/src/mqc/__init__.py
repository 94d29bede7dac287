"""Multipartite quantum correlation measures, the sub-repartition hierarchy
calculus they respect, and an executable verification harness for the
measure axioms and monogamy relations."""

from .config import TOLS, Tolerances
from .measures import MeasureResult, RoofConfig
from .partitions import (SteeringSplit, SubRepartition, TaggedPartition,
                         bounded_coarsenings, coarser, coarser_basic,
                         complementarity, depth, enumerate_subrepartitions,
                         ke_hierarchy, kpe_hierarchy, parse, steering_hierarchy)
from .qstate import DensityState, KrausChannel, make_rng

__version__ = "0.1.0"

__all__ = [
    "TOLS", "Tolerances", "MeasureResult", "RoofConfig", "SteeringSplit",
    "SubRepartition", "TaggedPartition", "bounded_coarsenings", "coarser",
    "coarser_basic", "complementarity", "depth", "enumerate_subrepartitions",
    "ke_hierarchy", "kpe_hierarchy", "parse", "steering_hierarchy",
    "DensityState", "KrausChannel", "make_rng", "__version__",
]
