"""Shared fixtures and the acceptance-criterion result log.

Unit tests run against the bundled 200-row fixture. Acceptance tests use
the full census table: ``data/adult.csv`` when the user has fetched it,
otherwise the synthetic stand-in (generated on first use).
"""

import subprocess
import sys
from pathlib import Path

import pytest

from mondrian.dataset import load_dataset, load_schema

ROOT = Path(__file__).resolve().parent.parent
SCHEMA_PATH = ROOT / "configs" / "adult.schema"
TINY_CSV = Path(__file__).resolve().parent / "data" / "adult_tiny.csv"
FULL_CSV = ROOT / "data" / "adult.csv"
SYNTH_CSV = ROOT / "data" / "adult_synth.csv"


def full_csv_path() -> Path:
    if FULL_CSV.exists():
        return FULL_CSV
    if not SYNTH_CSV.exists():
        subprocess.run(
            [sys.executable, str(ROOT / "scripts" / "make_synthetic_adult.py")],
            check=True, cwd=ROOT,
        )
    return SYNTH_CSV


@pytest.fixture(scope="session")
def schema():
    return load_schema(SCHEMA_PATH)


@pytest.fixture(scope="session")
def tiny_dataset(schema):
    return load_dataset(TINY_CSV, schema)


@pytest.fixture(scope="session")
def full_dataset(schema):
    return load_dataset(full_csv_path(), schema)


# one (number, verdict, detail) entry per acceptance criterion; tests
# append before asserting so the summary prints even for failures
CRITERION_LOG = []


def record_criterion(number: int, passed, detail: str) -> None:
    CRITERION_LOG.append((number, passed, detail))


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if not CRITERION_LOG:
        return
    terminalreporter.section("acceptance criteria")
    for number, passed, detail in sorted(CRITERION_LOG):
        verdict = "SKIP" if passed is None else ("PASS" if passed else "FAIL")
        terminalreporter.write_line(f"criterion {number:02d} {verdict}: {detail}")
