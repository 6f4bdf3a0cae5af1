"""Output-quality metrics and the per-run report.

Two quality measures plus bookkeeping. The discernibility metric sums
squared class sizes and penalizes each suppressed record by the dataset
size. The retained-information measure (rilm) maps every retained cell
to a loss in [0,1] (interval width over full column range for numeric,
covered-leaf fraction for categorical) and reports one minus the mean
loss; higher means less generalization.

Cells that are missing under a retained record's pattern carry no
information either way and are excluded. Every QID cell of a suppressed
record counts as total loss.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, fields
from pathlib import Path

from .dataset import CATEGORICAL, Dataset, DatasetError
from .strategy import Interval


class MetricsError(ValueError):
    pass


@dataclass(frozen=True)
class MetricsReport:
    n: int
    class_count: int
    min_class_size: int
    mean_class_size: float
    max_class_size: int
    suppressed: int
    suppression_rate: float
    forced_suppressed: int
    budget_s_max: int
    budget_warning: bool
    rollbacks: int
    dm: int
    rilm: float
    runtime_seconds: float

    def to_dict(self, include_runtime: bool = False) -> dict:
        out = {f.name: getattr(self, f.name) for f in fields(self)}
        if not include_runtime:
            # runtime varies run to run; the serialized report must be
            # byte-stable for a fixed dataset and config
            del out["runtime_seconds"]
        return out

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n"

    def write_json(self, path) -> None:
        Path(path).write_text(self.to_json())

    @staticmethod
    def csv_header() -> list:
        return [f.name for f in fields(MetricsReport)]

    def csv_row(self) -> list:
        return [getattr(self, f.name) for f in fields(self)]


def discernibility(class_sizes, suppressed: int, n: int) -> int:
    """Sum of squared class sizes plus n per suppressed record."""
    sizes = [int(s) for s in class_sizes]
    if any(s <= 0 for s in sizes) or suppressed < 0:
        raise MetricsError("class sizes must be positive and suppressed >= 0")
    if sum(sizes) + suppressed != n:
        raise MetricsError(
            f"accounting mismatch: {sum(sizes)} classed + {suppressed} "
            f"suppressed != {n} records"
        )
    return sum(s * s for s in sizes) + suppressed * n


def _column_scales(dataset: Dataset, gtrees: dict) -> dict:
    """Per-QID normalizer: numeric full range, categorical root leaves.

    A column with no scale (all values missing, or no tree supplied) is
    skipped; such columns only ever produce None cells, which rilm
    ignores, so the scale is never needed.
    """
    scales = {}
    for col in dataset.schema.qids:
        if col.kind == CATEGORICAL:
            if col.name in gtrees:
                scales[col.name] = gtrees[col.name]
        else:
            try:
                scales[col.name] = dataset.column_domain(col.name)
            except DatasetError:
                pass
    return scales


def cell_loss(value, scale) -> float:
    """Loss in [0,1] for one generalized cell against its column scale."""
    if isinstance(value, Interval):
        lo, hi = scale
        if hi == lo:
            return 0.0
        return (value.hi - value.lo) / (hi - lo)
    gtree = scale
    root_leaves = gtree.leaf_count(gtree.root)
    if root_leaves <= 1:
        return 0.0
    return (gtree.leaf_count(value) - 1) / (root_leaves - 1)


def rilm(classes, suppressed: int, dataset: Dataset, gtrees: dict) -> float:
    """One minus mean cell loss over retained cells plus suppressed cells.

    ``classes`` yields (size, pattern, cells) per equivalence class with
    cells keyed by QID name; pattern-missing entries are None and are
    skipped. Suppressed records contribute every QID cell at full loss.
    """
    scales = _column_scales(dataset, gtrees)
    qid_names = dataset.schema.qid_names
    total_loss = 0.0
    total_cells = 0
    for size, pattern, cells in classes:
        for name in qid_names:
            value = cells[name]
            if value is None:
                continue
            total_loss += size * cell_loss(value, scales[name])
            total_cells += size
    total_loss += suppressed * len(qid_names)
    total_cells += suppressed * len(qid_names)
    if total_cells == 0:
        return 1.0
    return 1.0 - total_loss / total_cells


def summarize(
    classes,
    suppressed: int,
    forced_suppressed: int,
    dataset: Dataset,
    gtrees: dict,
    s_max: int,
    rollbacks: int,
    runtime_seconds: float,
) -> MetricsReport:
    """Assemble the full report for one finished run."""
    classes = list(classes)
    sizes = [size for size, _, _ in classes]
    n = dataset.n
    return MetricsReport(
        n=n,
        class_count=len(sizes),
        min_class_size=min(sizes) if sizes else 0,
        mean_class_size=sum(sizes) / len(sizes) if sizes else 0.0,
        max_class_size=max(sizes) if sizes else 0,
        suppressed=suppressed,
        suppression_rate=suppressed / n if n else 0.0,
        forced_suppressed=forced_suppressed,
        budget_s_max=s_max,
        budget_warning=forced_suppressed > 0,
        rollbacks=rollbacks,
        dm=discernibility(sizes, suppressed, n),
        rilm=rilm(classes, suppressed, dataset, gtrees),
        runtime_seconds=runtime_seconds,
    )
