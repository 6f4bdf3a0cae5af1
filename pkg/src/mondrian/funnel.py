"""Multi-stage cut funnel: rank, filter, propose, score, select.

Every partition decision flows through the same narrowing pipeline:

1. rank candidate QIDs by how little information a cut there would cost
   (relative-loss, lower first),
2. optionally drop QIDs whose loss exceeds a breakout threshold,
3. propose concrete cuts per surviving QID (median or histogram edges
   for numeric columns, the LCA-children split for categorical ones),
4. score each proposal by how much it tightens the spread of the numeric
   QIDs (negative is better, zero is neutral),
5. select the best-scoring proposal whose implied suppression fits the
   available budget.

Counters for each stage are kept per numeric/categorical kind and merge
across workers by plain addition, so aggregate funnel statistics do not
depend on execution order.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field, fields
from pathlib import Path

import numpy as np

from .dataset import CATEGORICAL, NUMERIC, Dataset
from .hierarchy import DomainLadder, GTree, smallest_enclosing_domain
from .partition import Partition

CUT_MODE_MEDIAN = "median"
CUT_MODE_BINEDGE = "binedge"

KIND_MEDIAN = "median"
KIND_BIN_EDGE = "bin_edge"
KIND_GTREE = "gtree_children"

# selection tie-break order between cut kinds
_KIND_ORDER = {KIND_MEDIAN: 0, KIND_BIN_EDGE: 1, KIND_GTREE: 2}


class FunnelError(ValueError):
    pass


@dataclass(frozen=True)
class FunnelContext:
    """Immutable per-run inputs shared by ranking, proposal and scoring."""

    dataset: Dataset
    k: int
    cut_mode: str = CUT_MODE_MEDIAN
    bins: int = 8
    gtrees: dict = field(default_factory=dict)
    ladders: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.cut_mode not in (CUT_MODE_MEDIAN, CUT_MODE_BINEDGE):
            raise FunnelError(f"unknown cut mode {self.cut_mode!r}")
        if self.bins < 2:
            raise FunnelError(f"bins must be >= 2, got {self.bins}")

    def order(self, qid: str) -> int:
        return self.dataset.schema.order(qid)

    def kind(self, qid: str) -> str:
        return self.dataset.schema.column(qid).kind


@dataclass(frozen=True)
class QidScore:
    qid: str
    loss: float


@dataclass(frozen=True)
class ProposedCut:
    """A concrete candidate split of one partition on one QID."""

    qid: str
    kind: str
    threshold: float = 0.0       # numeric cuts: value <= threshold goes left
    lca: str = ""                # categorical cuts: node whose children define groups
    groups: tuple = ()           # categorical cuts: child labels, one group each


@dataclass
class ScoredCut:
    cut: ProposedCut
    score: float
    implied_suppression: int
    labels: np.ndarray           # per-member group index
    child_sizes: tuple


@dataclass
class FunnelStats:
    """Stage counters, split by QID kind, summed over decisions."""

    decisions: int = 0
    numeric_choices: int = 0
    categorical_choices: int = 0
    numeric_after_breakout: int = 0
    categorical_after_breakout: int = 0
    numeric_proposed: int = 0
    categorical_proposed: int = 0
    numeric_scored: int = 0
    categorical_scored: int = 0
    numeric_accepted: int = 0
    categorical_accepted: int = 0

    def merge(self, other: "FunnelStats") -> None:
        for f in fields(self):
            setattr(self, f.name, getattr(self, f.name) + getattr(other, f.name))

    def rows(self) -> list:
        """(stage, kind, count) rows, mirroring the funnel top to bottom."""
        out = [("decisions", "all", self.decisions)]
        for stage in ("choices", "after_breakout", "proposed", "scored", "accepted"):
            for kind in (NUMERIC, CATEGORICAL):
                key = f"{'numeric' if kind == NUMERIC else 'categorical'}_{stage}"
                out.append((stage, kind, getattr(self, key)))
        return out

    def write_csv(self, path) -> None:
        with Path(path).open("w", newline="") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(("stage", "kind", "count"))
            writer.writerows(self.rows())

    def to_json(self) -> str:
        return json.dumps({f.name: getattr(self, f.name) for f in fields(self)},
                          indent=2, sort_keys=True) + "\n"


def numeric_choice_loss(partition: Partition, qid: str, ctx: FunnelContext) -> float:
    """Width of the partition's range relative to its enclosing domain level."""
    mn, mx, _ = partition.num_stats[qid]
    ladder = ctx.ladders[qid]
    dom_lo, dom_hi = smallest_enclosing_domain(ladder, mn, mx)
    num, den = mx - mn, dom_hi - dom_lo
    if den == 0.0:
        return 0.0
    return num / den


def categorical_choice_loss(partition: Partition, qid: str, ctx: FunnelContext) -> float:
    """Normalized leaf count of the LCA over the observed values."""
    gtree: GTree = ctx.gtrees[qid]
    root_leaves = gtree.leaf_count(gtree.root)
    if root_leaves <= 1:
        return 0.0
    values = ctx.dataset.categories(qid)
    lca = gtree.lca([values[c] for c in partition.cat_codes[qid]])
    return (gtree.leaf_count(lca) - 1) / (root_leaves - 1)


def rank_cut_choices(partition: Partition, ctx: FunnelContext, qids=None) -> list:
    """Rank QIDs by relative loss, ascending; ties by schema column order.

    By default every QID present under the partition's pattern is ranked.
    Callers may restrict the field (the engine only ranks QIDs that still
    have at least two distinct values).
    """
    if qids is None:
        qids = [
            col.name
            for flag, col in zip(partition.pattern, ctx.dataset.schema.qids)
            if flag
        ]
    scored = []
    for qid in qids:
        if ctx.kind(qid) == NUMERIC:
            loss = numeric_choice_loss(partition, qid, ctx)
        else:
            loss = categorical_choice_loss(partition, qid, ctx)
        scored.append(QidScore(qid=qid, loss=loss))
    scored.sort(key=lambda qs: (qs.loss, ctx.order(qs.qid)))
    return scored


def apply_dynamic_breakout(choices, threshold) -> list:
    """Drop choices whose loss exceeds ``threshold``; None disables."""
    if threshold is None:
        return list(choices)
    return [qs for qs in choices if qs.loss <= threshold]


def propose_numeric_cuts(partition: Partition, qid: str, ctx: FunnelContext) -> list:
    """Candidate binary cuts on a numeric QID.

    Median mode yields at most one cut, at the lower median with
    ``value <= median`` going left. Bin-edge mode yields one cut per
    interior edge of an equal-width histogram over the partition's range.
    Either way a candidate survives only if both sides would keep at
    least k records, so numeric cuts never imply suppression.
    """
    mn, mx, _ = partition.num_stats[qid]
    n = partition.size
    if mn == mx or n < 2 * ctx.k:
        return []
    vals = np.sort(ctx.dataset.numeric(qid)[partition.ids])
    out = []
    if ctx.cut_mode == CUT_MODE_MEDIAN:
        median = float(vals[(n - 1) // 2])
        left = int(np.searchsorted(vals, median, side="right"))
        if left >= ctx.k and n - left >= ctx.k:
            out.append(ProposedCut(qid=qid, kind=KIND_MEDIAN, threshold=median))
    else:
        width = mx - mn
        for i in range(1, ctx.bins):
            edge = mn + i * width / ctx.bins
            left = int(np.searchsorted(vals, edge, side="right"))
            if left >= ctx.k and n - left >= ctx.k:
                out.append(ProposedCut(qid=qid, kind=KIND_BIN_EDGE, threshold=float(edge)))
    return out


def propose_categorical_cut(partition: Partition, qid: str, ctx: FunnelContext):
    """The single candidate split of a categorical QID.

    Records group by which child of the observed values' LCA covers
    them. With fewer than two distinct values there is nothing to split
    and the result is None. Sub-k groups are allowed here; they surface
    as implied suppression during scoring.
    """
    codes = partition.cat_codes[qid]
    if codes.size < 2:
        return None
    gtree: GTree = ctx.gtrees[qid]
    values = ctx.dataset.categories(qid)
    lca = gtree.lca([values[c] for c in codes])
    groups = gtree.children(lca)
    return ProposedCut(qid=qid, kind=KIND_GTREE, lca=lca, groups=groups)


def assignment_labels(partition: Partition, cut: ProposedCut, ctx: FunnelContext) -> np.ndarray:
    """Group index per member under a proposed cut."""
    if cut.kind == KIND_GTREE:
        gtree: GTree = ctx.gtrees[cut.qid]
        values = ctx.dataset.categories(cut.qid)
        group_index = {label: gi for gi, label in enumerate(cut.groups)}
        table = np.full(len(values), -1, dtype=np.int64)
        for code in partition.cat_codes[cut.qid]:
            child = gtree.child_toward(cut.lca, values[code])
            table[code] = group_index[child]
        labels = table[ctx.dataset.codes(cut.qid)[partition.ids]]
        if (labels < 0).any():
            raise FunnelError(f"cut on {cut.qid!r} does not cover all member values")
        return labels
    vals = ctx.dataset.numeric(cut.qid)[partition.ids]
    return (vals > cut.threshold).astype(np.int64)


def _weighted_child_stddev(values: np.ndarray, labels: np.ndarray, ngroups: int) -> float:
    counts = np.bincount(labels, minlength=ngroups)
    sums = np.bincount(labels, weights=values, minlength=ngroups)
    sumsq = np.bincount(labels, weights=values * values, minlength=ngroups)
    occupied = counts > 0
    c = counts[occupied].astype(np.float64)
    mean = sums[occupied] / c
    var = np.maximum(sumsq[occupied] / c - mean * mean, 0.0)
    return float(np.sum(c / values.size * np.sqrt(var)))


def score_cut(partition: Partition, cut: ProposedCut, ctx: FunnelContext) -> ScoredCut:
    """Score a proposal by relative change in numeric spread.

    For each pattern-present numeric QID the score contribution is
    ``(sigma_children - sigma_parent) / sigma_parent`` where
    ``sigma_children`` is the size-weighted mean of child stddevs; a
    constant column contributes zero. The overall score is the mean over
    those QIDs, clamped to [-1, 1]; partitions with no numeric QIDs under
    their pattern score zero. Lower is better. Implied suppression is the
    total size of sub-k groups, which only categorical cuts can produce.
    """
    labels = assignment_labels(partition, cut, ctx)
    ngroups = len(cut.groups) if cut.kind == KIND_GTREE else 2
    counts = np.bincount(labels, minlength=ngroups)
    per_qid = []
    for qid, (mn, mx, sigma_parent) in partition.num_stats.items():
        if sigma_parent > 0.0:
            values = ctx.dataset.numeric(qid)[partition.ids]
            sigma_children = _weighted_child_stddev(values, labels, ngroups)
            per_qid.append((sigma_children - sigma_parent) / sigma_parent)
        else:
            per_qid.append(0.0)
    score = float(np.clip(np.mean(per_qid), -1.0, 1.0)) if per_qid else 0.0
    if cut.kind == KIND_GTREE:
        sub_k = (counts > 0) & (counts < ctx.k)
        implied = int(counts[sub_k].sum())
    else:
        implied = 0
    return ScoredCut(
        cut=cut,
        score=score,
        implied_suppression=implied,
        labels=labels,
        child_sizes=tuple(int(c) for c in counts),
    )


def _selection_key(scored: ScoredCut, ctx: FunnelContext):
    cut = scored.cut
    threshold = cut.threshold if cut.kind != KIND_GTREE else 0.0
    return (scored.score, ctx.order(cut.qid), threshold, _KIND_ORDER[cut.kind])


def order_cuts(scored, ctx: FunnelContext) -> list:
    """Scored cuts best-first: ascending score, ties by schema column
    order, then ascending threshold, then cut kind."""
    return sorted(scored, key=lambda sc: _selection_key(sc, ctx))


def select_final_cut(scored, budget_remaining: int, ctx: FunnelContext):
    """Best-ranked cut whose implied suppression fits the budget, or None."""
    for candidate in order_cuts(scored, ctx):
        if candidate.implied_suppression <= budget_remaining:
            return candidate
    return None
