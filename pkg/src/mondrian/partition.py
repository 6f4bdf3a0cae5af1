"""Partitions of record ids, grouped by missing-value pattern.

A NanPattern records which QIDs are populated, one flag per schema QID.
Partitioning the dataset by pattern first means that inside any partition
a QID is either present for every member or missing for every member, so
cuts never have to reason about half-missing columns.
"""

from __future__ import annotations

import numpy as np

from .dataset import CATEGORICAL, NUMERIC, Dataset

NanPattern = tuple  # tuple[bool, ...] aligned with schema.qids order


class PartitionError(ValueError):
    pass


def pattern_bitmask(pattern: NanPattern) -> int:
    """Pack a pattern into an int, bit ``i`` set when QID ``i`` is present."""
    mask = 0
    for i, present in enumerate(pattern):
        if present:
            mask |= 1 << i
    return mask


class Partition:
    """A sorted set of record ids plus cached per-QID statistics.

    Numeric stats are (min, max, population stddev) over members;
    categorical stats are the sorted distinct codes observed. Stats exist
    only for QIDs present under the partition's pattern.
    """

    __slots__ = ("ids", "pattern", "num_stats", "cat_codes")

    def __init__(self, dataset: Dataset, ids: np.ndarray, pattern: NanPattern):
        ids = np.asarray(ids, dtype=np.int64)
        if ids.size == 0:
            raise PartitionError("empty partition")
        if np.any(ids[1:] <= ids[:-1]):
            raise PartitionError("record ids must be sorted and unique")
        qids = dataset.schema.qids
        if len(pattern) != len(qids):
            raise PartitionError("pattern length does not match QID count")
        self.ids = ids
        self.pattern = tuple(bool(p) for p in pattern)
        self.num_stats = {}
        self.cat_codes = {}
        for flag, col in zip(self.pattern, qids):
            if col.kind == NUMERIC:
                vals = dataset.numeric(col.name)[ids]
                if flag:
                    mn = float(vals.min())
                    if np.isnan(mn) or np.isnan(vals).any():
                        raise PartitionError(
                            f"member with missing {col.name!r} in a present-pattern partition"
                        )
                    self.num_stats[col.name] = (mn, float(vals.max()), float(vals.std()))
                elif not np.isnan(vals).all():
                    raise PartitionError(
                        f"member with populated {col.name!r} in a missing-pattern partition"
                    )
            else:
                codes = dataset.codes(col.name)[ids]
                if flag:
                    if (codes < 0).any():
                        raise PartitionError(
                            f"member with missing {col.name!r} in a present-pattern partition"
                        )
                    self.cat_codes[col.name] = np.unique(codes)
                elif (codes >= 0).any():
                    raise PartitionError(
                        f"member with populated {col.name!r} in a missing-pattern partition"
                    )

    @property
    def size(self) -> int:
        return int(self.ids.size)

    def __len__(self) -> int:
        return self.size

    def __repr__(self):
        return f"Partition(size={self.size}, pattern={self.pattern})"


def record_patterns(dataset: Dataset) -> np.ndarray:
    """Per-record pattern bitmask over the schema's QIDs."""
    masks = np.zeros(dataset.n, dtype=np.int64)
    for i, col in enumerate(dataset.schema.qids):
        present = dataset.present_mask(col.name)
        masks |= present.astype(np.int64) << i
    return masks


def nan_pattern_partition(dataset: Dataset) -> list:
    """Group all records by identical missing-value pattern.

    Output is ordered by descending group size, ties by ascending pattern
    bitmask, so the ordering is total and reproducible.
    """
    nqids = len(dataset.schema.qids)
    if nqids == 0:
        raise PartitionError("schema declares no QIDs")
    masks = record_patterns(dataset)
    order = np.argsort(masks, kind="stable")
    sorted_masks = masks[order]
    values, starts = np.unique(sorted_masks, return_index=True)
    bounds = list(starts) + [dataset.n]
    groups = []
    for gi, value in enumerate(values):
        ids = np.sort(order[bounds[gi]:bounds[gi + 1]])
        pattern = tuple(bool(value >> i & 1) for i in range(nqids))
        groups.append((ids, pattern, int(value)))
    groups.sort(key=lambda g: (-len(g[0]), g[2]))
    return [Partition(dataset, ids, pattern) for ids, pattern, _ in groups]


def split(dataset: Dataset, partition: Partition, labels: np.ndarray) -> list:
    """Split a partition by integer group labels.

    Returns ``(label, child)`` pairs in ascending label order; empty
    groups do not appear. Children inherit the parent's pattern.
    """
    labels = np.asarray(labels)
    if labels.shape != partition.ids.shape:
        raise PartitionError("labels must align with partition members")
    order = np.argsort(labels, kind="stable")
    sorted_labels = labels[order]
    values, starts = np.unique(sorted_labels, return_index=True)
    bounds = list(starts) + [partition.size]
    out = []
    for gi, value in enumerate(values):
        ids = partition.ids[order[bounds[gi]:bounds[gi + 1]]]
        out.append((int(value), Partition(dataset, ids, partition.pattern)))
    return out


def qid_range(partition: Partition, qid: str):
    """(min, max) of a numeric QID over members, or None when the QID is
    missing under the partition's pattern."""
    stats = partition.num_stats.get(qid)
    if stats is None:
        if qid in partition.cat_codes:
            raise PartitionError(f"{qid!r} is categorical, ranges are numeric-only")
        return None
    mn, mx, _ = stats
    return (mn, mx)
