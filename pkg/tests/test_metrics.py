"""Quality measures and the per-run report."""

import json

import pytest
from hypothesis import given
from hypothesis import strategies as st

from mondrian.dataset import Column, Schema, from_rows
from mondrian.hierarchy import GTree, build_flat_gtree
from mondrian.metrics import (
    MetricsError,
    MetricsReport,
    cell_loss,
    discernibility,
    rilm,
    summarize,
)
from mondrian.strategy import Interval

GEO = GTree("*", {"*": ("US", "EU"), "EU": ("France", "Spain")})


def make_report(**overrides):
    base = dict(
        n=10, class_count=2, min_class_size=5, mean_class_size=5.0,
        max_class_size=5, suppressed=0, suppression_rate=0.0,
        forced_suppressed=0, budget_s_max=1, budget_warning=False,
        rollbacks=0, dm=50, rilm=0.5, runtime_seconds=1.25,
    )
    base.update(overrides)
    return MetricsReport(**base)


def test_discernibility_values():
    assert discernibility([5], 0, 5) == 25
    assert discernibility([2, 2], 1, 5) == 13
    assert discernibility([3, 2], 2, 7) == 27
    assert discernibility([], 2, 2) == 4
    assert discernibility([], 0, 0) == 0


def test_discernibility_rejects_bad_accounting():
    with pytest.raises(MetricsError, match="accounting"):
        discernibility([2], 0, 5)
    with pytest.raises(MetricsError, match="positive"):
        discernibility([0, 5], 0, 5)
    with pytest.raises(MetricsError, match="positive"):
        discernibility([5], -1, 4)


@given(sizes=st.lists(st.integers(1, 30), max_size=8),
       suppressed=st.integers(0, 10))
def test_discernibility_bounds(sizes, suppressed):
    n = sum(sizes) + suppressed
    dm = discernibility(sizes, suppressed, n)
    # one record per class floors the metric; one giant class caps it
    assert n <= dm <= n * n or n == 0


def test_cell_loss_numeric():
    assert cell_loss(Interval(20, 30), (10, 90)) == pytest.approx(0.125)
    assert cell_loss(Interval(10, 90), (10, 90)) == 1.0
    assert cell_loss(Interval(4, 4), (0, 10)) == 0.0
    assert cell_loss(Interval(5, 5), (5, 5)) == 0.0


def test_cell_loss_categorical():
    assert cell_loss("France", GEO) == 0.0
    assert cell_loss("EU", GEO) == 0.5
    assert cell_loss("*", GEO) == 1.0
    flat = build_flat_gtree(["x"])
    assert cell_loss("*", flat) == 0.0


def single_age_dataset(values):
    schema = Schema(columns=(Column("age", "numeric", is_qid=True),), k=2)
    return from_rows(schema, ["age"], [[str(v)] for v in values])


def test_rilm_single_interval():
    ds = single_age_dataset([10, 20, 30, 90])
    classes = [(4, (True,), {"age": Interval(20, 30)})]
    assert rilm(classes, 0, ds, {}) == pytest.approx(0.875)


def test_rilm_extremes():
    ds = single_age_dataset([10, 90])
    exact = [(2, (True,), {"age": Interval(10, 10)})]
    assert rilm(exact, 0, ds, {}) == 1.0
    # nothing retained at all defaults to full information
    assert rilm([], 0, ds, {}) == 1.0
    # everything suppressed is total loss
    assert rilm([], 2, ds, {}) == 0.0


def test_rilm_mixes_retained_and_suppressed():
    ds = single_age_dataset([10, 20, 30, 90])
    classes = [(2, (True,), {"age": Interval(10, 10)})]
    # two perfect cells plus two all-loss suppressed cells
    assert rilm(classes, 2, ds, {}) == pytest.approx(0.5)


def test_rilm_skips_pattern_missing_cells():
    schema = Schema(
        columns=(
            Column("age", "numeric", is_qid=True),
            Column("job", "categorical", is_qid=True),
        ),
        k=2,
    )
    ds = from_rows(schema, ["age", "job"],
                   [["10", "?"], ["90", "?"], ["50", "a"]])
    gtrees = {"job": build_flat_gtree(ds.categories("job"))}
    classes = [(2, (True, False), {"age": Interval(10, 90), "job": None})]
    # only the two age cells count, both at full loss
    got = rilm(classes, 1, ds, gtrees)
    assert got == pytest.approx(1.0 - (2 * 1.0 + 2 * 1.0) / 4)


def test_rilm_penalizes_coarser_cells():
    ds = single_age_dataset([0, 25, 75, 100])
    fine = [(2, (True,), {"age": Interval(0, 25)}),
            (2, (True,), {"age": Interval(75, 100)})]
    coarse = [(4, (True,), {"age": Interval(0, 100)})]
    assert rilm(fine, 0, ds, {}) > rilm(coarse, 0, ds, {})


def test_rilm_tolerates_all_missing_columns():
    schema = Schema(
        columns=(
            Column("age", "numeric", is_qid=True),
            Column("job", "categorical", is_qid=True),
        ),
        k=2,
    )
    ds = from_rows(schema, ["age", "job"], [["?", "?"], ["?", "?"]])
    classes = [(2, (False, False), {"age": None, "job": None})]
    assert rilm(classes, 0, ds, {}) == 1.0


def test_summarize_assembles_report():
    ds = single_age_dataset([10, 20, 30, 90, 40, 50, 60, 70, 80, 15])
    classes = [
        (5, (True,), {"age": Interval(10, 30)}),
        (4, (True,), {"age": Interval(40, 70)}),
    ]
    report = summarize(
        classes, suppressed=1, forced_suppressed=0, dataset=ds, gtrees={},
        s_max=2, rollbacks=3, runtime_seconds=0.5,
    )
    assert report.n == 10
    assert report.class_count == 2
    assert (report.min_class_size, report.max_class_size) == (4, 5)
    assert report.mean_class_size == pytest.approx(4.5)
    assert report.suppression_rate == pytest.approx(0.1)
    assert report.dm == 25 + 16 + 10
    assert not report.budget_warning
    assert report.rollbacks == 3
    assert report.budget_s_max == 2


def test_summarize_flags_forced_suppression():
    ds = single_age_dataset([10, 90])
    report = summarize([], 2, 2, ds, {}, s_max=0, rollbacks=0,
                       runtime_seconds=0.0)
    assert report.budget_warning
    assert report.class_count == 0
    assert report.min_class_size == 0
    assert report.rilm == 0.0


def test_report_serialization_round_trip():
    report = make_report()
    d = report.to_dict()
    assert "runtime_seconds" not in d
    assert report.to_dict(include_runtime=True)["runtime_seconds"] == 1.25
    parsed = json.loads(report.to_json())
    assert parsed == d
    assert report.to_json().endswith("\n")


def test_report_csv_row_matches_header():
    report = make_report()
    header = MetricsReport.csv_header()
    row = report.csv_row()
    assert len(header) == len(row)
    as_map = dict(zip(header, row))
    assert as_map["n"] == 10
    assert as_map["dm"] == 50
    assert as_map["runtime_seconds"] == 1.25
    assert header[0] == "n"
