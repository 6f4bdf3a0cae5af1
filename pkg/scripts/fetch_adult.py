#!/usr/bin/env python3
"""Download and normalize the UCI census income dataset.

Concatenates the train and test splits, strips whitespace and the
trailing period on test-split labels, drops the fnlwgt and
education-num columns, and writes one clean CSV. Needs network access;
offline environments can substitute scripts/make_synthetic_adult.py.

Usage: fetch_adult.py [--out data/adult.csv]
"""

import argparse
import csv
import io
import urllib.request
from pathlib import Path

BASE = "https://archive.ics.uci.edu/ml/machine-learning-databases/adult"
RAW_COLUMNS = [
    "age", "workclass", "fnlwgt", "education", "education-num",
    "marital-status", "occupation", "relationship", "race", "sex",
    "capital-gain", "capital-loss", "hours-per-week", "native-country",
    "income",
]
DROP = {"fnlwgt", "education-num"}


def read_split(url, skip_header):
    with urllib.request.urlopen(url) as resp:
        text = resp.read().decode("latin-1")
    rows = []
    lines = text.splitlines()
    if skip_header:
        lines = lines[1:]  # the test split opens with a banner line
    for line in lines:
        line = line.strip()
        if not line:
            continue
        cells = [c.strip().rstrip(".") for c in line.split(",")]
        if len(cells) != len(RAW_COLUMNS):
            continue
        rows.append(cells)
    return rows


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--out", default="data/adult.csv")
    args = ap.parse_args()

    rows = read_split(f"{BASE}/adult.data", skip_header=False)
    rows += read_split(f"{BASE}/adult.test", skip_header=True)
    keep = [i for i, c in enumerate(RAW_COLUMNS) if c not in DROP]

    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    with out.open("w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow([RAW_COLUMNS[i] for i in keep])
        writer.writerows([[row[i] for i in keep] for row in rows])
    print(f"wrote {len(rows)} rows to {out}")


if __name__ == "__main__":
    main()
