"""The four-hook strategy contract and its k-anonymity implementation."""

import numpy as np
import pytest

from mondrian.dataset import Column, Schema, from_rows
from mondrian.engine import EngineConfig, anonymize
from mondrian.funnel import FunnelContext
from mondrian.hierarchy import GTree, build_domain_ladder, build_flat_gtree
from mondrian.partition import Partition, nan_pattern_partition
from mondrian.strategy import Interval, KAnonymityStrategy, StrategyContract

GEO = GTree("*", {"*": ("US", "EU"), "EU": ("France", "Spain")})

SCHEMA = Schema(
    columns=(
        Column("age", "numeric", is_qid=True),
        Column("job", "categorical", is_qid=True),
    ),
    k=2,
)


def setup(rows, k=2, gtree=None):
    ds = from_rows(SCHEMA, ["age", "job"], rows)
    gtrees = {"job": gtree or build_flat_gtree(ds.categories("job"))}
    ladders = {}
    present = ds.numeric("age")[~np.isnan(ds.numeric("age"))]
    if present.size:
        ladders["age"] = build_domain_ladder(present)
    ctx = FunnelContext(dataset=ds, k=k, gtrees=gtrees, ladders=ladders)
    return ds, KAnonymityStrategy(ctx)


def test_interval_rendering():
    assert Interval(20, 60).render() == "20-60"
    assert Interval(40, 40).render() == "40"
    assert Interval(1.5, 2.25).render() == "1.5-2.25"


def test_is_valid_class_boundary():
    rows = [[str(i), "a"] for i in range(5)]
    ds, strategy5 = setup(rows, k=5)
    whole = Partition(ds, np.arange(5), (True, True))
    assert strategy5.is_valid_class(whole)
    four = Partition(ds, np.arange(4), (True, True))
    assert not strategy5.is_valid_class(four)
    _, strategy2 = setup(rows, k=2)
    assert strategy2.is_valid_class(whole)


def test_finalize_cell_values():
    ds, strategy = setup([["20", "Private"], ["35", "Private"], ["60", "Private"]])
    part = Partition(ds, np.arange(3), (True, True))
    cells = strategy.finalize(part)
    assert cells["age"] == Interval(20.0, 60.0)
    # a single observed category stays at its own leaf
    assert cells["job"] == "Private"


def test_finalize_generalizes_to_lca():
    ds, strategy = setup([["1", "France"], ["2", "Spain"]], gtree=GEO)
    part = Partition(ds, np.arange(2), (True, True))
    assert strategy.finalize(part)["job"] == "EU"


def test_finalize_marks_pattern_missing_qids():
    ds, strategy = setup([["?", "a"], ["?", "b"]])
    part = Partition(ds, np.arange(2), (False, True))
    cells = strategy.finalize(part)
    assert cells["age"] is None
    assert cells["job"] == "*"


def test_finalize_is_idempotent_per_class():
    ds, strategy = setup([["20", "a"], ["30", "b"]])
    part = Partition(ds, np.arange(2), (True, True))
    assert strategy.finalize(part) == strategy.finalize(part)


def test_cut_choices_skips_unsplittable_qids():
    ds, strategy = setup([["7", "a"], ["7", "b"], ["7", "a"]])
    part = Partition(ds, np.arange(3), (True, True))
    assert [qs.qid for qs in strategy.cut_choices(part)] == ["job"]
    ds, strategy = setup([["1", "a"], ["2", "a"]])
    part = Partition(ds, np.arange(2), (True, True))
    assert [qs.qid for qs in strategy.cut_choices(part)] == ["age"]


def test_cut_choices_excludes_pattern_missing():
    ds, strategy = setup([["?", "a"], ["?", "b"]])
    part = Partition(ds, np.arange(2), (False, True))
    assert [qs.qid for qs in strategy.cut_choices(part)] == ["job"]


def test_propose_cuts_covers_both_kinds():
    rows = [[str(v), j] for v, j in zip(range(1, 9), "aabbccdd")]
    ds, strategy = setup(rows)
    part = Partition(ds, np.arange(8), (True, True))
    proposals = strategy.propose_cuts(part, strategy.cut_choices(part))
    kinds = {c.qid for c in proposals}
    assert kinds == {"age", "job"}


def test_strategy_purity():
    rows = [[str(v), j] for v, j in zip(range(10), "ababababab")]
    ds, strategy = setup(rows)
    part = Partition(ds, np.arange(10), (True, True))
    first = strategy.propose_cuts(part, strategy.cut_choices(part))
    second = strategy.propose_cuts(part, strategy.cut_choices(part))
    assert first == second


class NeverCut(StrategyContract):
    """Degenerate strategy: accept every partition as-is."""

    def __init__(self, context):
        self.context = context

    def cut_choices(self, partition):
        return []

    def propose_cuts(self, partition, choices):
        return []

    def is_valid_class(self, partition):
        return True

    def finalize(self, partition):
        return {col.name: "*" if col.kind == "categorical" else Interval(0, 0)
                for col in self.context.dataset.schema.qids}


def test_engine_runs_any_contract_implementation():
    # swapping the privacy model must not require engine changes
    rows = [[str(v), "a"] for v in range(6)]
    ds, _ = setup(rows)
    ctx = FunnelContext(dataset=ds, k=2,
                        gtrees={"job": build_flat_gtree(ds.categories("job"))})
    tree, output = anonymize(ds, NeverCut(ctx), EngineConfig())
    assert len(list(tree.leaves())) == len(nan_pattern_partition(ds))
    assert output.metrics.suppressed == 0
