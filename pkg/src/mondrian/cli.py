"""Command-line front end and benchmark harness.

Subcommands: ``anonymize`` (one run, three output files), ``bench
<suite>`` (fixed experiment grids as CSV tables), ``baseline-compare``
(this engine vs the reference median-cut implementation), and
``funnel-stats`` (one run, funnel table only).

Settings come from a flat ``key = value`` config file, overridden by
command-line flags. The effective settings are echoed into
metrics.json, except the worker count: output must be byte-identical
for any worker count, so only settings that can shape the output are
echoed.
"""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import dataclass, field
from pathlib import Path

from .baseline import BaselineError, compare_runs, write_comparison_csv
from .budget import BudgetError
from .dataset import (
    CATEGORICAL,
    NUMERIC,
    Dataset,
    DatasetError,
    load_dataset,
    load_schema,
)
from .dataset import replicate as replicate_dataset
from .engine import EngineConfig, EngineError, anonymize
from .funnel import CUT_MODE_BINEDGE, CUT_MODE_MEDIAN, FunnelContext, FunnelError
from .hierarchy import (
    DEFAULT_PERCENTILE_PAIRS,
    HierarchyError,
    build_domain_ladder,
    build_flat_gtree,
    load_gtree,
)
from .metrics import MetricsError
from .strategy import KAnonymityStrategy

K_GRID = (5, 10, 25, 50, 100, 250, 500, 1000)
CUTOFF_GRID = (10, 50, 100, 500, 1000, 5000)
WORKER_GRID = (1, 2, 4, 8)
SCALE_FACTORS = (1, 2, 4)

# benchmark QID sets for the bundled census schema
STANDARD_QID_SETS = {
    "4qid": ("age", "race", "sex", "workclass"),
    "6qid": ("age", "marital-status", "occupation", "native-country", "sex",
             "workclass"),
    "8qid": ("age", "marital-status", "occupation", "native-country", "sex",
             "workclass", "hours-per-week", "capital-gain"),
}
NUMERIC_QID_SETS = (
    ("age",),
    ("age", "hours-per-week"),
    ("age", "hours-per-week", "capital-gain"),
    ("age", "hours-per-week", "capital-gain", "capital-loss"),
)


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class RunConfig:
    dataset: str = ""
    schema: str = ""
    gtrees: dict = field(default_factory=dict)     # column -> path
    k: int | None = None                           # None: take the schema's k
    qids: tuple | None = None                      # None: take the schema flags
    p_min: float = 0.99
    multiplier: float = 1.0
    cutoff: int = 1000
    workers: int = 1
    cut_mode: str = CUT_MODE_MEDIAN
    bins: int = 8
    breakout_threshold: float | None = None
    percentile_pairs: tuple = DEFAULT_PERCENTILE_PAIRS
    replicate: int = 1
    emit_suppressed: bool = False
    out_dir: str = "out"


_SCALAR_KEYS = {
    "dataset", "schema", "k", "qids", "p_min", "multiplier", "cutoff",
    "workers", "cut_mode", "bins", "breakout_threshold", "percentile_pairs",
    "replicate", "emit_suppressed", "out_dir",
}


def _parse_breakout(text: str):
    if text.lower() in ("off", "none", "disabled"):
        return None
    value = float(text)
    return value


def _parse_percentile_pairs(text: str) -> tuple:
    pairs = []
    for chunk in text.replace(",", " ").split():
        lo, sep, hi = chunk.partition(":")
        if not sep:
            raise ConfigError(f"bad percentile pair {chunk!r}, expected lo:hi")
        pairs.append((float(lo), float(hi)))
    if not pairs:
        raise ConfigError("percentile_pairs is empty")
    return tuple(pairs)


def _parse_bool(text: str) -> bool:
    if text.lower() in ("true", "yes", "1", "on"):
        return True
    if text.lower() in ("false", "no", "0", "off"):
        return False
    raise ConfigError(f"expected a boolean, got {text!r}")


def load_run_config(path) -> dict:
    """Flat ``key = value`` settings file; returns raw override dict."""
    out = {"gtrees": {}}
    text = Path(path).read_text()
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        key, sep, value = line.partition("=")
        if not sep:
            raise ConfigError(f"{path}:{lineno}: expected key = value")
        key, value = key.strip(), value.strip()
        try:
            if key.startswith("gtree."):
                out["gtrees"][key[len("gtree."):]] = value
            elif key in ("dataset", "schema", "out_dir", "cut_mode"):
                out[key] = value
            elif key in ("k", "cutoff", "workers", "bins", "replicate"):
                out[key] = int(value)
            elif key in ("p_min", "multiplier"):
                out[key] = float(value)
            elif key == "breakout_threshold":
                out[key] = _parse_breakout(value)
            elif key == "percentile_pairs":
                out[key] = _parse_percentile_pairs(value)
            elif key == "emit_suppressed":
                out[key] = _parse_bool(value)
            elif key == "qids":
                out[key] = tuple(value.replace(",", " ").split())
            else:
                raise ConfigError(f"{path}:{lineno}: unknown key {key!r}")
        except ValueError as exc:
            if isinstance(exc, ConfigError):
                raise
            raise ConfigError(f"{path}:{lineno}: {exc}") from None
    return out


def resolve_config(args) -> RunConfig:
    """Defaults, then the config file, then explicit flags."""
    settings = {}
    if args.config:
        settings.update(load_run_config(args.config))
    for name in ("dataset", "schema", "k", "workers", "cutoff", "cut_mode",
                 "bins", "p_min", "multiplier", "replicate", "emit_suppressed",
                 "out_dir"):
        value = getattr(args, name, None)
        if value is not None:
            settings[name] = value
    if getattr(args, "breakout_threshold", None) is not None:
        settings["breakout_threshold"] = _parse_breakout(args.breakout_threshold)
    rc = RunConfig(**settings)
    if not rc.dataset:
        raise ConfigError("no dataset given (config key 'dataset' or --dataset)")
    if not rc.schema:
        raise ConfigError("no schema given (config key 'schema' or --schema)")
    return rc


# ------------------------------------------------------------------ assembly

@dataclass
class RunBundle:
    dataset: Dataset
    strategy: KAnonymityStrategy
    engine_config: EngineConfig
    echo: dict


def _build_gtree(dataset: Dataset, name: str, gtree_paths: dict):
    path = gtree_paths.get(name)
    if path is None:
        return build_flat_gtree(dataset.categories(name))
    gtree = load_gtree(path)
    missing = [v for v in dataset.categories(name) if not gtree.contains(v)]
    if missing:
        raise ConfigError(
            f"gtree {path} for column {name!r} lacks leaves for: "
            + ", ".join(missing[:5])
        )
    return gtree


def assemble(rc: RunConfig, dataset: Dataset | None = None,
             k: int | None = None, qids=None, workers: int | None = None,
             cutoff: int | None = None, factor: int | None = None) -> RunBundle:
    """Build a ready-to-run bundle; keyword overrides serve the bench grids."""
    if dataset is None:
        schema = load_schema(rc.schema)
        dataset = load_dataset(rc.dataset, schema)
    schema = dataset.schema
    if k is None:
        k = rc.k if rc.k is not None else schema.k
    if qids is None:
        qids = rc.qids if rc.qids is not None else schema.qid_names
    schema = schema.with_qids(qids).with_k(k)
    dataset = dataset.with_schema(schema)
    if factor is None:
        factor = rc.replicate
    if factor > 1:
        dataset = replicate_dataset(dataset, factor)

    ladders, gtrees = {}, {}
    for col in schema.qids:
        if col.kind == NUMERIC:
            ladders[col.name] = build_domain_ladder(
                dataset.numeric(col.name), rc.percentile_pairs
            )
        else:
            gtrees[col.name] = _build_gtree(dataset, col.name, rc.gtrees)

    ctx = FunnelContext(
        dataset=dataset, k=k, cut_mode=rc.cut_mode, bins=rc.bins,
        gtrees=gtrees, ladders=ladders,
    )
    engine_config = EngineConfig(
        recursive_partition_size_cutoff=cutoff if cutoff is not None else rc.cutoff,
        worker_count=workers if workers is not None else rc.workers,
        breakout_threshold=rc.breakout_threshold,
        p_min=rc.p_min,
        multiplier=rc.multiplier,
        emit_suppressed=rc.emit_suppressed,
    )
    echo = {
        "dataset": rc.dataset,
        "schema": rc.schema,
        "gtrees": {name: rc.gtrees.get(name, "flat") for name in gtrees},
        "k": k,
        "qids": list(qids),
        "p_min": rc.p_min,
        "multiplier": rc.multiplier,
        "cutoff": engine_config.recursive_partition_size_cutoff,
        "cut_mode": rc.cut_mode,
        "bins": rc.bins,
        "breakout_threshold": rc.breakout_threshold,
        "percentile_pairs": [list(p) for p in rc.percentile_pairs],
        "replicate": factor,
        "emit_suppressed": rc.emit_suppressed,
    }
    return RunBundle(dataset, KAnonymityStrategy(ctx), engine_config, echo)


def run_bundle(bundle: RunBundle):
    return anonymize(bundle.dataset, bundle.strategy, bundle.engine_config)


def _out_dir(rc: RunConfig) -> Path:
    out = Path(rc.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    return out


def write_run_outputs(out_dir: Path, output, echo: dict) -> None:
    output.write_csv(out_dir / "anonymized.csv")
    payload = {"config": echo, "metrics": output.metrics.to_dict()}
    (out_dir / "metrics.json").write_text(
        json.dumps(payload, indent=2, sort_keys=True) + "\n"
    )
    output.funnel.write_csv(out_dir / "funnel.csv")


# ------------------------------------------------------------------ commands

def cmd_anonymize(args) -> int:
    rc = resolve_config(args)
    bundle = assemble(rc)
    _, output = run_bundle(bundle)
    out = _out_dir(rc)
    write_run_outputs(out, output, bundle.echo)
    m = output.metrics
    print(
        f"anonymized {m.n} records into {m.class_count} classes "
        f"(suppressed {m.suppressed}, {m.runtime_seconds:.2f}s) -> {out}"
    )
    return 0


def cmd_funnel_stats(args) -> int:
    rc = resolve_config(args)
    bundle = assemble(rc)
    _, output = run_bundle(bundle)
    out = _out_dir(rc)
    output.funnel.write_csv(out / "funnel.csv")
    print(f"{'stage':<15} {'kind':<12} count")
    for stage, kind, count in output.funnel.rows():
        print(f"{stage:<15} {kind:<12} {count}")
    return 0


def _write_table(path: Path, header, rows) -> None:
    lines = [",".join(header)]
    lines.extend(",".join(str(v) for v in row) for row in rows)
    path.write_text("\n".join(lines) + "\n")
    print(f"wrote {path}")


def cmd_bench(args) -> int:
    rc = resolve_config(args)
    out = _out_dir(rc)
    suite = args.suite
    dataset = load_dataset(rc.dataset, load_schema(rc.schema))

    def cell(**overrides):
        bundle = assemble(rc, dataset=dataset, **overrides)
        _, output = run_bundle(bundle)
        return output

    rows = []
    if suite == "kgrid":
        for k in K_GRID:
            output = cell(k=k, qids=STANDARD_QID_SETS["6qid"])
            m = output.metrics
            rows.append((k, m.dm, m.rilm, m.suppressed,
                         m.suppression_rate, m.class_count,
                         f"{m.runtime_seconds:.3f}"))
        _write_table(out / "bench_kgrid.csv",
                     ("k", "dm", "rilm", "suppressed", "suppression_rate",
                      "class_count", "runtime_seconds"), rows)
    elif suite == "dims":
        for label in ("4qid", "6qid", "8qid"):
            output = cell(k=5, qids=STANDARD_QID_SETS[label])
            m = output.metrics
            rows.append((label, len(STANDARD_QID_SETS[label]), m.dm,
                         m.rilm, m.suppressed,
                         f"{m.runtime_seconds:.3f}"))
        _write_table(out / "bench_dims.csv",
                     ("qid_set", "n_qids", "dm", "rilm", "suppressed",
                      "runtime_seconds"), rows)
    elif suite == "cutoff":
        for cutoff in CUTOFF_GRID:
            output = cell(k=5, qids=STANDARD_QID_SETS["6qid"], cutoff=cutoff)
            m = output.metrics
            rows.append((cutoff, m.suppressed, f"{m.suppression_rate:.6f}",
                         m.rollbacks, f"{m.runtime_seconds:.3f}"))
        _write_table(out / "bench_cutoff.csv",
                     ("cutoff", "suppressed", "suppression_rate", "rollbacks",
                      "runtime_seconds"), rows)
    elif suite == "parallel":
        factor = rc.replicate if rc.replicate > 1 else 8
        base_runtime = None
        for workers in WORKER_GRID:
            output = cell(k=5, qids=STANDARD_QID_SETS["6qid"], factor=factor,
                          workers=workers)
            runtime = output.metrics.runtime_seconds
            if base_runtime is None:
                base_runtime = runtime
            rows.append((workers, f"{runtime:.3f}",
                         f"{base_runtime / runtime:.3f}"))
        _write_table(out / "bench_parallel.csv",
                     ("workers", "runtime_seconds", "speedup_vs_1"), rows)
    else:  # scale
        for factor in SCALE_FACTORS:
            output = cell(k=5, qids=STANDARD_QID_SETS["6qid"], factor=factor)
            m = output.metrics
            rows.append((factor, m.n, m.dm, m.rilm,
                         m.suppressed, f"{m.runtime_seconds:.3f}"))
        _write_table(out / "bench_scale.csv",
                     ("factor", "n", "dm", "rilm", "suppressed",
                      "runtime_seconds"), rows)
    return 0


def cmd_baseline_compare(args) -> int:
    rc = resolve_config(args)
    out = _out_dir(rc)
    schema = load_schema(rc.schema)
    dataset = load_dataset(rc.dataset, schema)
    k_values = (rc.k,) if rc.k is not None else K_GRID
    engine_config = EngineConfig(
        recursive_partition_size_cutoff=rc.cutoff,
        worker_count=rc.workers,
        breakout_threshold=rc.breakout_threshold,
        p_min=rc.p_min,
        multiplier=rc.multiplier,
    )
    for qid_set in NUMERIC_QID_SETS:
        for name in qid_set:
            if schema.column(name).kind == CATEGORICAL:
                raise ConfigError(f"baseline cannot use categorical QID {name!r}")
    rows = compare_runs(dataset, NUMERIC_QID_SETS, k_values, engine_config,
                        cut_mode=rc.cut_mode, bins=rc.bins)
    write_comparison_csv(rows, out / "baseline_compare.csv")
    print(f"wrote {out / 'baseline_compare.csv'} ({len(rows)} grid cells)")
    return 0


# ---------------------------------------------------------------- entrypoint

def _add_common_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", help="key = value settings file")
    parser.add_argument("--dataset", help="input CSV path")
    parser.add_argument("--schema", help="schema definition path")
    parser.add_argument("--k", type=int)
    parser.add_argument("--workers", type=int)
    parser.add_argument("--cutoff", type=int,
                        help="partition size at which children are queued")
    parser.add_argument("--cut-mode", dest="cut_mode",
                        choices=(CUT_MODE_MEDIAN, CUT_MODE_BINEDGE))
    parser.add_argument("--bins", type=int)
    parser.add_argument("--p-min", dest="p_min", type=float)
    parser.add_argument("--multiplier", type=float)
    parser.add_argument("--breakout-threshold", dest="breakout_threshold",
                        help="loss filter in (0,1], or 'off'")
    parser.add_argument("--replicate", type=int)
    parser.add_argument("--emit-suppressed", dest="emit_suppressed",
                        action=argparse.BooleanOptionalAction, default=None)
    parser.add_argument("--out-dir", dest="out_dir")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="mondrian",
        description="k-anonymity by recursive multidimensional partitioning",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("anonymize", help="one run, full outputs")
    _add_common_flags(p)
    p.set_defaults(func=cmd_anonymize)

    p = sub.add_parser("bench", help="fixed experiment grids")
    p.add_argument("suite", choices=("kgrid", "dims", "cutoff", "parallel", "scale"))
    _add_common_flags(p)
    p.set_defaults(func=cmd_bench)

    p = sub.add_parser("baseline-compare",
                       help="this engine vs the reference median-cut recursion")
    _add_common_flags(p)
    p.set_defaults(func=cmd_baseline_compare)

    p = sub.add_parser("funnel-stats", help="one run, funnel table only")
    _add_common_flags(p)
    p.set_defaults(func=cmd_funnel_stats)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (ConfigError, DatasetError, HierarchyError, FunnelError,
            EngineError, BudgetError, BaselineError, MetricsError,
            OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    raise SystemExit(main())
