"""Generalization structures for QID columns.

Categorical columns generalize along a tree of category labels (GTree):
an equivalence class maps to the lowest common ancestor of its observed
values. Columns without a curated taxonomy use a flat tree, a root with
every observed value as a direct leaf.

Numeric columns use a domain ladder: a stack of strictly nested intervals
derived from percentiles of the full column. The ladder localizes "how
wide is this range, relatively" so that a heavy-tailed column (say,
capital gains) is not judged against its outliers at every depth.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path

import numpy as np

ROOT_LABEL = "*"

DEFAULT_PERCENTILE_PAIRS = ((0, 100), (1, 99), (5, 95), (10, 90), (25, 75))


class HierarchyError(ValueError):
    """Raised for malformed trees and ladders."""


class GTree:
    """Rooted tree of category labels; labels are node identities.

    Every observed value of the column must appear as a leaf. Interior
    nodes are generalization targets; the root generalizes everything.
    """

    __slots__ = ("root", "_children", "_parent", "_depth", "_paths", "_leaf_counts", "_leaves")

    def __init__(self, root: str, children: dict):
        self.root = root
        self._children = {k: tuple(v) for k, v in children.items()}
        self._parent = {}
        self._depth = {root: 0}
        seen = {root}
        order = [root]
        stack = [root]
        while stack:
            node = stack.pop()
            for child in self._children.get(node, ()):
                if child in seen:
                    raise HierarchyError(f"node {child!r} has multiple parents or repeats")
                seen.add(child)
                order.append(child)
                self._parent[child] = node
                self._depth[child] = self._depth[node] + 1
                stack.append(child)
        declared = set(self._children) | {
            c for kids in self._children.values() for c in kids
        }
        declared.add(root)
        unreachable = declared - seen
        if unreachable:
            raise HierarchyError(
                f"nodes unreachable from root (cycle or disconnected): {sorted(unreachable)!r}"
            )
        self._leaves = tuple(n for n in order if not self._children.get(n))
        if not self._leaves:
            raise HierarchyError("tree has no leaves")
        # leaf paths root->leaf, and leaf counts for every node
        self._paths = {}
        self._leaf_counts = {}
        for leaf in self._leaves:
            path = [leaf]
            node = leaf
            while node != self.root:
                node = self._parent[node]
                path.append(node)
            path.reverse()
            self._paths[leaf] = tuple(path)
            for node in path:
                self._leaf_counts[node] = self._leaf_counts.get(node, 0) + 1

    @property
    def leaves(self) -> tuple:
        return self._leaves

    def contains(self, label: str) -> bool:
        return label in self._depth

    def is_leaf(self, label: str) -> bool:
        return label in self._paths

    def children(self, label: str) -> tuple:
        if label not in self._depth:
            raise HierarchyError(f"unknown node {label!r}")
        return self._children.get(label, ())

    def depth(self, label: str) -> int:
        if label not in self._depth:
            raise HierarchyError(f"unknown node {label!r}")
        return self._depth[label]

    def leaf_count(self, label: str) -> int:
        """Number of leaves in the subtree rooted at ``label``."""
        if label not in self._depth:
            raise HierarchyError(f"unknown node {label!r}")
        return self._leaf_counts[label]

    def lca(self, labels) -> str:
        """Lowest common ancestor of a set of leaf labels."""
        labels = list(labels)
        if not labels:
            raise HierarchyError("lca of empty label set")
        paths = []
        for label in labels:
            if label not in self._paths:
                raise HierarchyError(f"{label!r} is not a leaf of this tree")
            paths.append(self._paths[label])
        prefix = min(len(p) for p in paths)
        first = paths[0]
        deepest = 0
        for d in range(prefix):
            node = first[d]
            if all(p[d] == node for p in paths):
                deepest = d
            else:
                break
        return first[deepest]

    def child_toward(self, ancestor: str, leaf: str) -> str:
        """The child of ``ancestor`` whose subtree contains ``leaf``."""
        path = self._paths.get(leaf)
        if path is None:
            raise HierarchyError(f"{leaf!r} is not a leaf of this tree")
        d = self.depth(ancestor)
        if d >= len(path) - 1 or path[d] != ancestor:
            raise HierarchyError(f"{ancestor!r} is not a proper ancestor of {leaf!r}")
        return path[d + 1]


def build_flat_gtree(values, root_label: str = ROOT_LABEL) -> GTree:
    """One root with every distinct value as a direct leaf."""
    leaves = sorted(set(values))
    if not leaves:
        raise HierarchyError("cannot build a tree over zero values")
    if root_label in leaves:
        raise HierarchyError(f"root label {root_label!r} collides with a value")
    return GTree(root_label, {root_label: tuple(leaves)})


def load_gtree(path) -> GTree:
    """Load a tree from a CSV edge list of ``parent,child`` rows."""
    path = Path(path)
    edges = []
    with path.open(newline="") as fh:
        for lineno, row in enumerate(csv.reader(fh), start=1):
            if not row or (len(row) == 1 and not row[0].strip()):
                continue
            if len(row) != 2:
                raise HierarchyError(f"{path}:{lineno}: expected 'parent,child'")
            parent, child = row[0].strip(), row[1].strip()
            if parent == child:
                raise HierarchyError(f"{path}:{lineno}: self edge {parent!r}")
            edges.append((parent, child))
    if not edges:
        raise HierarchyError(f"{path}: no edges")
    children: dict = {}
    child_set = set()
    for parent, child in edges:
        if child in child_set:
            raise HierarchyError(f"{path}: node {child!r} has multiple parents")
        child_set.add(child)
        children.setdefault(parent, []).append(child)
    roots = [p for p in children if p not in child_set]
    if len(roots) != 1:
        raise HierarchyError(f"{path}: expected exactly one root, found {sorted(roots)!r}")
    return GTree(roots[0], children)


@dataclass(frozen=True)
class DomainLadder:
    """Strictly nested closed intervals, innermost first.

    The last (outermost) level is the full column domain ``[min, max]``.
    """

    levels: tuple

    def __post_init__(self):
        if not self.levels:
            raise HierarchyError("ladder needs at least one level")
        for (ilo, ihi), (olo, ohi) in zip(self.levels, self.levels[1:]):
            if ilo < olo or ihi > ohi:
                raise HierarchyError(
                    f"level [{ilo}, {ihi}] not contained in [{olo}, {ohi}]"
                )
            if ilo == olo and ihi == ohi:
                raise HierarchyError(f"duplicate ladder level [{ilo}, {ihi}]")

    @property
    def outermost(self) -> tuple:
        return self.levels[-1]

    @property
    def innermost(self) -> tuple:
        return self.levels[0]


def _percentile(values: np.ndarray, q: float) -> float:
    # linear interpolation between order statistics, inclusive endpoints
    return float(np.percentile(values, q, method="linear"))


def build_domain_ladder(values, percentile_pairs=DEFAULT_PERCENTILE_PAIRS) -> DomainLadder:
    """Build a ladder from percentile pairs ordered outermost to innermost.

    The full ``[min, max]`` interval is always the outermost level. Each
    pair ``(lo_pct, hi_pct)`` contributes the interval between those two
    percentiles (linear interpolation). Levels are clamped into their
    outer neighbor, and levels equal to their neighbor are dropped, so a
    constant column collapses to a single degenerate level.
    """
    vals = np.asarray(values, dtype=np.float64)
    vals = vals[~np.isnan(vals)]
    if vals.size == 0:
        raise HierarchyError("cannot build a ladder over zero values")
    levels = [(float(vals.min()), float(vals.max()))]
    for lo_pct, hi_pct in percentile_pairs:
        if not (0 <= lo_pct < hi_pct <= 100):
            raise HierarchyError(f"bad percentile pair ({lo_pct}, {hi_pct})")
        lo, hi = _percentile(vals, lo_pct), _percentile(vals, hi_pct)
        outer_lo, outer_hi = levels[-1]
        lo, hi = max(lo, outer_lo), min(hi, outer_hi)
        if (lo, hi) == (outer_lo, outer_hi):
            continue
        levels.append((lo, hi))
    levels.reverse()
    return DomainLadder(levels=tuple(levels))


def smallest_enclosing_domain(ladder: DomainLadder, lo: float, hi: float) -> tuple:
    """Innermost ladder level containing ``[lo, hi]``."""
    for level_lo, level_hi in ladder.levels:
        if level_lo <= lo and hi <= level_hi:
            return (level_lo, level_hi)
    olo, ohi = ladder.outermost
    raise HierarchyError(
        f"range [{lo}, {hi}] lies outside the outermost domain [{olo}, {ohi}]"
    )
