"""Hybrid recursive/queued partition-tree builder.

One coordinator owns a task queue and the global tree. Each task builds
the subtree for one partition: the cut funnel picks a split, children
below the size cutoff are handled recursively inside the task
(largest first, sharing the task's live suppression budget), children
at or above it become deferred placeholders that re-enter the queue
with their own pre-computed budget share. Placeholder node ids encode
the tree path, so finished subtrees stitch into the global tree in any
completion order and the output is identical for any worker count.

Inside the recursive path a cut is accepted only if its implied
suppression fits the budget at that moment, but budget is actually
spent as children materialize; if descendants of an accepted cut
overdraw before its own suppressed children are paid for, the builder
rolls the whole cut back (charges, nodes, counters) and retries the
next-best candidate.
"""

from __future__ import annotations

import sys
import time
from collections import deque
from concurrent.futures import FIRST_COMPLETED, ProcessPoolExecutor, wait
from dataclasses import dataclass, field, replace
from multiprocessing import get_context
from pathlib import Path

import numpy as np

from .budget import SuppressionBudget, allocate_proportional, global_budget
from .dataset import MISSING_OUT, NUMERIC, Dataset, format_number
from .funnel import (
    KIND_GTREE,
    FunnelStats,
    ProposedCut,
    apply_dynamic_breakout,
    order_cuts,
    score_cut,
)
from .metrics import MetricsReport, summarize
from .partition import Partition, nan_pattern_partition, split
from .strategy import StrategyContract

SUPPRESSED_MARK = "*"


class EngineError(RuntimeError):
    pass


@dataclass(frozen=True)
class EngineConfig:
    recursive_partition_size_cutoff: int = 1000
    worker_count: int = 1
    breakout_threshold: float | None = None
    max_cut_attempts: int | None = None
    p_min: float = 0.99
    multiplier: float = 1.0
    emit_suppressed: bool = False

    def __post_init__(self):
        if self.recursive_partition_size_cutoff < 1:
            raise EngineError("recursive_partition_size_cutoff must be >= 1")
        if self.worker_count < 1:
            raise EngineError("worker_count must be >= 1")
        if self.breakout_threshold is not None and not (0.0 < self.breakout_threshold <= 1.0):
            raise EngineError("breakout_threshold must be in (0, 1] or disabled")
        if self.max_cut_attempts is not None and self.max_cut_attempts < 1:
            raise EngineError("max_cut_attempts must be >= 1 or unlimited")


# ---------------------------------------------------------------- tree nodes

@dataclass
class Internal:
    node_id: str
    cut: ProposedCut
    score: float
    children: tuple          # child node ids, in child-label order


@dataclass
class Leaf:
    node_id: str
    ids: np.ndarray
    pattern: tuple
    cells: dict              # qid -> Interval | hierarchy label | None


@dataclass
class SuppressedLeaf:
    node_id: str
    ids: np.ndarray
    forced: bool = False     # True for sub-k pattern roots, charged over budget


@dataclass
class DeferredCut:
    node_id: str
    ids: np.ndarray
    pattern: tuple
    allocation: int


@dataclass
class MondrianTree:
    n: int
    root_ids: tuple
    nodes: dict = field(default_factory=dict)

    def node(self, node_id: str):
        try:
            return self.nodes[node_id]
        except KeyError:
            raise EngineError(f"no node {node_id!r}") from None

    def walk(self):
        """All nodes, deterministic depth-first order from each root."""
        stack = list(reversed(self.root_ids))
        while stack:
            node = self.node(stack.pop())
            yield node
            if isinstance(node, Internal):
                stack.extend(reversed(node.children))

    def leaves(self):
        for node in self.walk():
            if isinstance(node, (Leaf, SuppressedLeaf)):
                yield node

    def unresolved_ids(self) -> list:
        return [n.node_id for n in self.walk() if isinstance(n, DeferredCut)]

    def stitch_in_subtree(self, deferred_id: str, subtree: dict) -> None:
        placeholder = self.node(deferred_id)
        if not isinstance(placeholder, DeferredCut):
            raise EngineError(f"node {deferred_id!r} is not a deferred placeholder")
        root = subtree.get(deferred_id)
        if root is None or isinstance(root, DeferredCut):
            raise EngineError(f"subtree does not resolve {deferred_id!r}")
        scope = deferred_id + "."
        for node_id in subtree:
            if node_id != deferred_id and not node_id.startswith(scope):
                raise EngineError(
                    f"subtree node {node_id!r} outside the scope of {deferred_id!r}"
                )
        self.nodes.update(subtree)


# ------------------------------------------------------------- subtree build

@dataclass(frozen=True)
class _Task:
    node_id: str
    ids: np.ndarray
    pattern: tuple
    allocation: int


@dataclass
class TaskResult:
    node_id: str
    nodes: dict
    deferred: list
    stats: FunnelStats
    rollbacks: int


class _SubtreeBuilder:
    """Recursive cut loop for one task, with rollback bookkeeping."""

    def __init__(self, strategy: StrategyContract, config: EngineConfig,
                 budget: SuppressionBudget):
        self.strategy = strategy
        self.config = config
        self.budget = budget
        self.ctx = strategy.context
        self.nodes = {}
        self.deferred = []
        self.stats = FunnelStats()
        self.rollbacks = 0

    def build(self, partition: Partition, node_id: str) -> None:
        strategy = self.strategy
        if not strategy.is_valid_class(partition):
            # only pattern roots can arrive sub-k; suppression is forced
            # on them even when it overdraws
            self.budget.charge(partition.size)
            self.nodes[node_id] = SuppressedLeaf(node_id, partition.ids, forced=True)
            return

        ctx = self.ctx
        stats = self.stats
        stats.decisions += 1
        choices = strategy.cut_choices(partition)
        self._count(choices, "choices", lambda qs: ctx.kind(qs.qid) == NUMERIC)
        choices = apply_dynamic_breakout(choices, self.config.breakout_threshold)
        self._count(choices, "after_breakout", lambda qs: ctx.kind(qs.qid) == NUMERIC)
        proposals = strategy.propose_cuts(partition, choices)
        self._count(proposals, "proposed", lambda c: c.kind != KIND_GTREE)
        scored = [score_cut(partition, cut, ctx) for cut in proposals]
        self._count(scored, "scored", lambda sc: sc.cut.kind != KIND_GTREE)

        attempts = 0
        for candidate in order_cuts(scored, ctx):
            if candidate.implied_suppression > self.budget.remaining:
                continue
            if (self.config.max_cut_attempts is not None
                    and attempts >= self.config.max_cut_attempts):
                break
            attempts += 1
            if self._apply(partition, node_id, candidate):
                if candidate.cut.kind == KIND_GTREE:
                    stats.categorical_accepted += 1
                else:
                    stats.numeric_accepted += 1
                return
            self.rollbacks += 1
        self.nodes[node_id] = Leaf(
            node_id, partition.ids, partition.pattern, strategy.finalize(partition)
        )

    def _count(self, items, stage: str, is_numeric) -> None:
        num = sum(1 for it in items if is_numeric(it))
        setattr(self.stats, f"numeric_{stage}",
                getattr(self.stats, f"numeric_{stage}") + num)
        setattr(self.stats, f"categorical_{stage}",
                getattr(self.stats, f"categorical_{stage}") + len(items) - num)

    def _apply(self, partition: Partition, node_id: str, candidate) -> bool:
        """Materialize one accepted cut; True on success, False after rollback."""
        budget = self.budget
        config = self.config
        k = self.ctx.k
        budget.checkpoint()
        stats_snapshot = replace(self.stats)
        deferred_mark = len(self.deferred)

        children = split(self.ctx.dataset, partition, candidate.labels)
        entries = [(f"{node_id}.{j}", child) for j, (_, child) in enumerate(children)]
        # spend order: biggest first, so cheap subtrees are not starved by
        # accidental ordering; structural child order stays by label
        ok = True
        for child_id, child in sorted(entries, key=lambda e: -e[1].size):
            if child.size < k:
                budget.charge(child.size)
                self.nodes[child_id] = SuppressedLeaf(child_id, child.ids)
            elif child.size >= config.recursive_partition_size_cutoff:
                share = child.size * budget.remaining // partition.size
                budget.charge(share)
                node = DeferredCut(child_id, child.ids, child.pattern, share)
                self.nodes[child_id] = node
                self.deferred.append(node)
            else:
                self.build(child, child_id)
            if budget.remaining < 0:
                ok = False
                break
        if ok:
            budget.release()
            self.nodes[node_id] = Internal(
                node_id, candidate.cut, candidate.score,
                tuple(child_id for child_id, _ in entries),
            )
            return True

        budget.rollback()
        self.stats.__dict__.update(stats_snapshot.__dict__)
        del self.deferred[deferred_mark:]
        scope = node_id + "."
        for doomed in [nid for nid in self.nodes if nid.startswith(scope)]:
            del self.nodes[doomed]
        return False


@dataclass
class CutOutcome:
    root_id: str
    nodes: dict
    deferred: list
    stats: FunnelStats
    rollbacks: int

    @property
    def root(self):
        return self.nodes[self.root_id]


def make_cut(partition: Partition, budget: SuppressionBudget,
             strategy: StrategyContract, config: EngineConfig,
             node_id: str = "r0") -> CutOutcome:
    """Build the subtree for one partition against one live budget.

    Children reaching the size cutoff are left as deferred placeholders
    carrying their pre-computed budget share; callers queue them.
    """
    builder = _SubtreeBuilder(strategy, config, budget)
    builder.build(partition, node_id)
    return CutOutcome(node_id, builder.nodes, builder.deferred,
                      builder.stats, builder.rollbacks)


# ------------------------------------------------------------- orchestration

_WORKER_ENV = None


def _set_worker_env(strategy, config):
    global _WORKER_ENV
    _WORKER_ENV = (strategy, config)


def _run_task(task: _Task) -> TaskResult:
    strategy, config = _WORKER_ENV
    partition = Partition(strategy.context.dataset, task.ids, task.pattern)
    outcome = make_cut(partition, SuppressionBudget(task.allocation),
                       strategy, config, node_id=task.node_id)
    new_tasks = [
        _Task(n.node_id, n.ids, n.pattern, n.allocation) for n in outcome.deferred
    ]
    return TaskResult(task.node_id, outcome.nodes, new_tasks,
                      outcome.stats, outcome.rollbacks)


def anonymize(dataset: Dataset, strategy: StrategyContract,
              config: EngineConfig) -> tuple:
    """Run the full pipeline; returns (tree, output with metrics attached)."""
    if strategy.context.dataset is not dataset:
        raise EngineError("strategy context is bound to a different dataset")
    started = time.perf_counter()
    sys.setrecursionlimit(max(sys.getrecursionlimit(), 5000))

    roots = nan_pattern_partition(dataset)
    s_max = global_budget(dataset.n, config.p_min, config.multiplier)
    shares = allocate_proportional(s_max, dataset.n, [p.size for p in roots])

    tree = MondrianTree(dataset.n, tuple(f"r{i}" for i in range(len(roots))))
    stats = FunnelStats()
    rollbacks = 0
    tasks = []
    for i, (root, share) in enumerate(zip(roots, shares)):
        node_id = f"r{i}"
        if not strategy.is_valid_class(root):
            tree.nodes[node_id] = SuppressedLeaf(node_id, root.ids, forced=True)
        else:
            tree.nodes[node_id] = DeferredCut(node_id, root.ids, root.pattern, share)
            tasks.append(_Task(node_id, root.ids, root.pattern, share))

    _set_worker_env(strategy, config)
    try:
        if config.worker_count == 1:
            pending = deque(tasks)
            while pending:
                result = _run_task(pending.popleft())
                tree.stitch_in_subtree(result.node_id, result.nodes)
                stats.merge(result.stats)
                rollbacks += result.rollbacks
                pending.extend(result.deferred)
        else:
            with ProcessPoolExecutor(
                max_workers=config.worker_count, mp_context=get_context("fork")
            ) as pool:
                futures = {pool.submit(_run_task, t) for t in tasks}
                while futures:
                    done, futures = wait(futures, return_when=FIRST_COMPLETED)
                    for fut in done:
                        result = fut.result()
                        tree.stitch_in_subtree(result.node_id, result.nodes)
                        stats.merge(result.stats)
                        rollbacks += result.rollbacks
                        futures.update(
                            pool.submit(_run_task, t) for t in result.deferred
                        )
    finally:
        _set_worker_env(None, None)

    leftovers = tree.unresolved_ids()
    if leftovers:
        raise EngineError(f"unresolved deferred nodes after drain: {leftovers}")

    output = extract_output(tree, dataset, emit_suppressed=config.emit_suppressed)
    output.funnel = stats
    output.metrics = summarize(
        classes=output.classes,
        suppressed=int(output.suppressed_ids.size),
        forced_suppressed=output.forced_suppressed,
        dataset=dataset,
        gtrees=strategy.context.gtrees,
        s_max=s_max,
        rollbacks=rollbacks,
        runtime_seconds=time.perf_counter() - started,
    )
    return tree, output


# ------------------------------------------------------------------- output

@dataclass
class AnonymizedOutput:
    header: tuple
    table: np.ndarray          # object array of rendered strings
    classes: list              # (size, pattern, cells) per equivalence class
    suppressed_ids: np.ndarray
    forced_suppressed: int
    emitted_suppressed: bool
    metrics: MetricsReport | None = None
    funnel: FunnelStats | None = None

    def rows(self):
        for row in self.table:
            yield list(row)

    def to_csv(self) -> str:
        lines = [",".join(self.header)]
        lines.extend(",".join(row) for row in self.table)
        return "\n".join(lines) + "\n"

    def write_csv(self, path) -> None:
        Path(path).write_text(self.to_csv())


def render_cell(value) -> str:
    if value is None:
        return MISSING_OUT
    if isinstance(value, str):
        return value
    return value.render()


def extract_output(tree: MondrianTree, dataset: Dataset,
                   emit_suppressed: bool = False) -> AnonymizedOutput:
    """Rendered record table in original id order, plus class summaries."""
    schema = dataset.schema
    leaves, suppressed_leaves = [], []
    for node in tree.walk():
        if isinstance(node, DeferredCut):
            raise EngineError(f"cannot extract output: {node.node_id!r} unresolved")
        if isinstance(node, Leaf):
            leaves.append(node)
        elif isinstance(node, SuppressedLeaf):
            suppressed_leaves.append(node)

    all_ids = [leaf.ids for leaf in leaves] + [s.ids for s in suppressed_leaves]
    covered = np.sort(np.concatenate(all_ids)) if all_ids else np.empty(0, np.int64)
    if covered.size != tree.n or (covered != np.arange(tree.n)).any():
        raise EngineError("tree leaves do not cover every record exactly once")

    ncols = len(schema.columns)
    table = np.empty((tree.n, ncols), dtype=object)
    qid_cols = {col.name for col in schema.qids}
    for j, col in enumerate(schema.columns):
        if col.name in qid_cols:
            continue
        if col.kind == NUMERIC:
            vals = dataset.numeric(col.name)
            table[:, j] = [
                MISSING_OUT if np.isnan(v) else format_number(v) for v in vals
            ]
        else:
            cats = dataset.categories(col.name)
            table[:, j] = [
                MISSING_OUT if c < 0 else cats[c] for c in dataset.codes(col.name)
            ]
    for leaf in leaves:
        for j, col in enumerate(schema.columns):
            if col.name in qid_cols:
                table[leaf.ids, j] = render_cell(leaf.cells[col.name])

    suppressed_ids = (
        np.sort(np.concatenate([s.ids for s in suppressed_leaves]))
        if suppressed_leaves else np.empty(0, dtype=np.int64)
    )
    forced = sum(int(s.ids.size) for s in suppressed_leaves if s.forced)

    if emit_suppressed:
        for j, col in enumerate(schema.columns):
            if col.name in qid_cols:
                table[suppressed_ids, j] = SUPPRESSED_MARK
        kept = table
    else:
        retained = np.ones(tree.n, dtype=bool)
        retained[suppressed_ids] = False
        kept = table[retained]

    classes = [
        (int(leaf.ids.size), leaf.pattern, leaf.cells) for leaf in leaves
    ]
    return AnonymizedOutput(
        header=tuple(col.name for col in schema.columns),
        table=kept,
        classes=classes,
        suppressed_ids=suppressed_ids,
        forced_suppressed=forced,
        emitted_suppressed=emit_suppressed,
    )
