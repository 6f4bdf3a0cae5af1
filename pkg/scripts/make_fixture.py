#!/usr/bin/env python3
"""Regenerate the small committed test fixture.

A 200-row census-shaped table produced by the synthetic generator with
a pinned seed. Kept in the repository so the test suite runs hermetic.

Usage: make_fixture.py [--out tests/data/adult_tiny.csv]
"""

import argparse
import csv
import sys
from pathlib import Path

sys.path.insert(0, str(Path(__file__).resolve().parent))
from make_synthetic_adult import COLUMNS, generate  # noqa: E402


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--out", default="tests/data/adult_tiny.csv")
    args = ap.parse_args()

    rows = generate(200, seed=11)
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    with out.open("w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(COLUMNS)
        writer.writerows(rows)
    print(f"wrote {len(rows)} rows to {out}")


if __name__ == "__main__":
    main()
