"""Multidimensional partitioning k-anonymizer.

Splits a dataset into equivalence classes by recursive multidimensional
cuts, generalizes quasi-identifier values per class, and suppresses the
remainder under a global budget. Records are pre-partitioned by their
missing-value pattern so that every class is homogeneous in which QIDs
are populated.
"""

__version__ = "0.1.0"

from .baseline import BaselineConfig, compare_runs, original_mondrian
from .budget import SuppressionBudget, allocate_proportional, global_budget
from .dataset import (
    CATEGORICAL,
    NUMERIC,
    Column,
    Dataset,
    DatasetError,
    Schema,
    load_dataset,
    load_schema,
    replicate,
    write_dataset,
)
from .engine import EngineConfig, MondrianTree, anonymize, extract_output, make_cut
from .funnel import FunnelContext, FunnelStats
from .hierarchy import (
    DomainLadder,
    GTree,
    HierarchyError,
    build_domain_ladder,
    build_flat_gtree,
    load_gtree,
    smallest_enclosing_domain,
)
from .metrics import MetricsReport, discernibility, rilm, summarize
from .partition import NanPattern, Partition, nan_pattern_partition, qid_range, split
from .strategy import Interval, KAnonymityStrategy, StrategyContract

__all__ = [
    "BaselineConfig",
    "CATEGORICAL",
    "Column",
    "Dataset",
    "DatasetError",
    "DomainLadder",
    "EngineConfig",
    "FunnelContext",
    "FunnelStats",
    "GTree",
    "HierarchyError",
    "Interval",
    "KAnonymityStrategy",
    "MetricsReport",
    "MondrianTree",
    "NUMERIC",
    "NanPattern",
    "Partition",
    "Schema",
    "StrategyContract",
    "SuppressionBudget",
    "allocate_proportional",
    "anonymize",
    "build_domain_ladder",
    "build_flat_gtree",
    "compare_runs",
    "discernibility",
    "extract_output",
    "global_budget",
    "load_dataset",
    "load_gtree",
    "load_schema",
    "make_cut",
    "nan_pattern_partition",
    "original_mondrian",
    "qid_range",
    "replicate",
    "rilm",
    "split",
    "summarize",
    "write_dataset",
]
