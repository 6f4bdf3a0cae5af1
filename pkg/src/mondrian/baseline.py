"""Reference median-cut anonymizer and head-to-head comparison runs.

The reference implementation is deliberately plain: single-threaded,
numeric QIDs only, no missing-value handling, no suppression. At each
partition it greedily picks the dimension with the widest range
relative to its full-column domain and splits at the lower median,
keeping a cut only when both sides retain at least k records; when no
dimension admits such a cut the partition becomes an output class.
"""

from __future__ import annotations

import csv
import time
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .dataset import NUMERIC, Dataset
from .engine import EngineConfig, anonymize
from .funnel import CUT_MODE_MEDIAN, FunnelContext
from .hierarchy import build_domain_ladder
from .metrics import discernibility, rilm
from .strategy import Interval, KAnonymityStrategy


class BaselineError(ValueError):
    pass


@dataclass(frozen=True)
class BaselineConfig:
    k: int
    qids: tuple

    def __post_init__(self):
        if self.k < 1:
            raise BaselineError(f"k must be >= 1, got {self.k}")
        if not self.qids:
            raise BaselineError("at least one QID required")


def original_mondrian(dataset: Dataset, config: BaselineConfig) -> list:
    """Equivalence classes as sorted record-id arrays, deterministic order."""
    k = config.k
    qids = tuple(config.qids)
    for name in qids:
        if dataset.schema.column(name).kind != NUMERIC:
            raise BaselineError(f"column {name!r} is not numeric")
        if not dataset.present_mask(name).all():
            raise BaselineError(f"column {name!r} has missing values")
    values = {name: dataset.numeric(name) for name in qids}
    domains = {name: dataset.column_domain(name) for name in qids}
    rank = {name: dataset.schema.order(name) for name in qids}

    classes = []
    stack = [np.arange(dataset.n, dtype=np.int64)]
    while stack:
        ids = stack.pop()
        dims = []
        for name in qids:
            v = values[name][ids]
            mn, mx = float(v.min()), float(v.max())
            lo, hi = domains[name]
            width = (mx - mn) / (hi - lo) if hi > lo else 0.0
            dims.append((-width, rank[name], name))
        dims.sort()
        for _, _, name in dims:
            v = values[name][ids]
            median = float(np.sort(v)[(ids.size - 1) // 2])
            left = v <= median
            n_left = int(left.sum())
            if 0 < n_left < ids.size and n_left >= k and ids.size - n_left >= k:
                stack.append(ids[left])
                stack.append(ids[~left])
                break
        else:
            classes.append(np.sort(ids))
    classes.sort(key=lambda a: int(a[0]))
    return classes


def baseline_cells(dataset: Dataset, ids: np.ndarray, qids) -> dict:
    """Generalized per-QID intervals for one reference class."""
    cells = {}
    for name in qids:
        v = dataset.numeric(name)[ids]
        cells[name] = Interval(float(v.min()), float(v.max()))
    return cells


COMPARISON_COLUMNS = (
    "qids", "k",
    "core_dm", "core_rilm", "core_suppressed", "core_runtime_seconds",
    "baseline_dm", "baseline_rilm", "baseline_runtime_seconds",
)


def compare_runs(dataset: Dataset, qid_sets, k_values,
                 engine_config: EngineConfig | None = None,
                 cut_mode: str = CUT_MODE_MEDIAN, bins: int = 8) -> list:
    """Both anonymizers over a grid of numeric QID sets and k values.

    Returns one dict per (qid_set, k) cell with quality and runtime for
    each side. The input dataset's own QID flags are ignored; each grid
    cell re-flags exactly its QID set.
    """
    if engine_config is None:
        engine_config = EngineConfig()
    rows = []
    for qid_set in qid_sets:
        qid_set = tuple(qid_set)
        for k in k_values:
            ds = dataset.with_schema(
                dataset.schema.with_qids(qid_set).with_k(k)
            )
            ladders = {
                name: build_domain_ladder(ds.numeric(name)) for name in qid_set
            }
            ctx = FunnelContext(dataset=ds, k=k, cut_mode=cut_mode, bins=bins,
                                ladders=ladders)
            _, output = anonymize(ds, KAnonymityStrategy(ctx), engine_config)

            started = time.perf_counter()
            ref_classes = original_mondrian(ds, BaselineConfig(k=k, qids=qid_set))
            ref_runtime = time.perf_counter() - started
            pattern = tuple(True for _ in qid_set)
            ref_summary = [
                (int(ids.size), pattern, baseline_cells(ds, ids, qid_set))
                for ids in ref_classes
            ]
            rows.append({
                "qids": "+".join(qid_set),
                "k": k,
                "core_dm": output.metrics.dm,
                "core_rilm": output.metrics.rilm,
                "core_suppressed": output.metrics.suppressed,
                "core_runtime_seconds": output.metrics.runtime_seconds,
                "baseline_dm": discernibility(
                    [ids.size for ids in ref_classes], 0, ds.n
                ),
                "baseline_rilm": rilm(ref_summary, 0, ds, {}),
                "baseline_runtime_seconds": ref_runtime,
            })
    return rows


def write_comparison_csv(rows, path) -> None:
    with Path(path).open("w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=COMPARISON_COLUMNS, lineterminator="\n")
        writer.writeheader()
        writer.writerows(rows)
