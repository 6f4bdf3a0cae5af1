"""Pluggable partitioning strategy.

The engine drives every run through exactly four hooks: which QIDs are
worth cutting, what concrete cuts to propose for them, whether a
partition already satisfies the privacy requirement, and how a finished
class renders its generalized cells. Swapping privacy models means
implementing these four methods; the engine, funnel, budget and metrics
stay untouched.
"""

from __future__ import annotations

from abc import ABC, abstractmethod
from dataclasses import dataclass

from .dataset import NUMERIC, format_number
from .funnel import (
    FunnelContext,
    propose_categorical_cut,
    propose_numeric_cuts,
    rank_cut_choices,
)
from .partition import Partition


@dataclass(frozen=True)
class Interval:
    """Closed numeric range for one generalized cell."""

    lo: float
    hi: float

    def render(self) -> str:
        if self.lo == self.hi:
            return format_number(self.lo)
        return f"{format_number(self.lo)}-{format_number(self.hi)}"


class StrategyContract(ABC):
    """The four hooks a partitioning strategy must provide."""

    context: FunnelContext

    @abstractmethod
    def cut_choices(self, partition: Partition) -> list:
        """QIDs eligible for cutting, ranked cheapest-loss first."""

    @abstractmethod
    def propose_cuts(self, partition: Partition, choices) -> list:
        """Concrete cut proposals for the surviving choices."""

    @abstractmethod
    def is_valid_class(self, partition: Partition) -> bool:
        """Whether the partition may stand as an output class."""

    @abstractmethod
    def finalize(self, partition: Partition):
        """Generalized cell value per QID for a finished class."""


class KAnonymityStrategy(StrategyContract):
    """Plain k-anonymity: a class is valid iff it has at least k records."""

    def __init__(self, context: FunnelContext):
        self.context = context

    def cut_choices(self, partition: Partition) -> list:
        # only QIDs that can actually split: >= 2 distinct values
        splittable = []
        ctx = self.context
        for flag, col in zip(partition.pattern, ctx.dataset.schema.qids):
            if not flag:
                continue
            if col.kind == NUMERIC:
                mn, mx, _ = partition.num_stats[col.name]
                if mn < mx:
                    splittable.append(col.name)
            elif partition.cat_codes[col.name].size >= 2:
                splittable.append(col.name)
        return rank_cut_choices(partition, ctx, qids=splittable)

    def propose_cuts(self, partition: Partition, choices) -> list:
        ctx = self.context
        proposals = []
        for qs in choices:
            if ctx.kind(qs.qid) == NUMERIC:
                proposals.extend(propose_numeric_cuts(partition, qs.qid, ctx))
            else:
                cut = propose_categorical_cut(partition, qs.qid, ctx)
                if cut is not None:
                    proposals.append(cut)
        return proposals

    def is_valid_class(self, partition: Partition) -> bool:
        return partition.size >= self.context.k

    def finalize(self, partition: Partition) -> dict:
        """Map each QID to an Interval, a hierarchy node label, or None.

        None marks QIDs missing under the partition's pattern; they
        render as the missing marker downstream.
        """
        ctx = self.context
        cells = {}
        for flag, col in zip(partition.pattern, ctx.dataset.schema.qids):
            if not flag:
                cells[col.name] = None
            elif col.kind == NUMERIC:
                mn, mx, _ = partition.num_stats[col.name]
                cells[col.name] = Interval(mn, mx)
            else:
                values = ctx.dataset.categories(col.name)
                gtree = ctx.gtrees[col.name]
                cells[col.name] = gtree.lca(
                    [values[c] for c in partition.cat_codes[col.name]]
                )
        return cells
