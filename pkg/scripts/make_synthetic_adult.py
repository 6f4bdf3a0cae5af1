#!/usr/bin/env python3
"""Generate a deterministic census-shaped stand-in dataset.

Produces a table with the same columns, types, category vocabularies,
value ranges and missing-value structure as the classic UCI census
income extract (after dropping the fnlwgt and education-num columns),
so every benchmark and acceptance run works without network access.
Marginals are rough matches, not a statistical clone; use
scripts/fetch_adult.py for the real rows.

Usage: make_synthetic_adult.py [--rows N] [--seed S] [--out PATH]
"""

import argparse
import csv
from pathlib import Path

import numpy as np

COLUMNS = [
    "age", "workclass", "education", "marital-status", "occupation",
    "relationship", "race", "sex", "capital-gain", "capital-loss",
    "hours-per-week", "native-country", "income",
]

WORKCLASS = [
    ("Private", 0.694), ("Self-emp-not-inc", 0.079), ("Local-gov", 0.064),
    ("State-gov", 0.041), ("Self-emp-inc", 0.035), ("Federal-gov", 0.029),
    ("Without-pay", 0.001), ("Never-worked", 0.001),
]
EDUCATION = [
    ("HS-grad", 0.323), ("Some-college", 0.222), ("Bachelors", 0.164),
    ("Masters", 0.054), ("Assoc-voc", 0.042), ("11th", 0.037),
    ("Assoc-acdm", 0.033), ("10th", 0.028), ("7th-8th", 0.019),
    ("Prof-school", 0.017), ("9th", 0.016), ("12th", 0.013),
    ("Doctorate", 0.012), ("5th-6th", 0.010), ("1st-4th", 0.005),
    ("Preschool", 0.002),
]
MARITAL = [
    ("Married-civ-spouse", 0.458), ("Never-married", 0.330),
    ("Divorced", 0.136), ("Separated", 0.031), ("Widowed", 0.031),
    ("Married-spouse-absent", 0.013), ("Married-AF-spouse", 0.001),
]
OCCUPATION = [
    ("Prof-specialty", 0.134), ("Craft-repair", 0.132),
    ("Exec-managerial", 0.131), ("Adm-clerical", 0.121), ("Sales", 0.119),
    ("Other-service", 0.107), ("Machine-op-inspct", 0.065),
    ("Transport-moving", 0.051), ("Handlers-cleaners", 0.045),
    ("Farming-fishing", 0.032), ("Tech-support", 0.031),
    ("Protective-serv", 0.021), ("Priv-house-serv", 0.008),
    ("Armed-Forces", 0.001),
]
RELATIONSHIP = [
    ("Husband", 0.404), ("Not-in-family", 0.258), ("Own-child", 0.155),
    ("Unmarried", 0.105), ("Wife", 0.048), ("Other-relative", 0.030),
]
RACE = [
    ("White", 0.855), ("Black", 0.096), ("Asian-Pac-Islander", 0.031),
    ("Amer-Indian-Eskimo", 0.010), ("Other", 0.008),
]
COUNTRY = [
    ("United-States", 0.913), ("Mexico", 0.0196), ("Philippines", 0.0061),
    ("Germany", 0.0042), ("Puerto-Rico", 0.0037), ("Canada", 0.0037),
    ("El-Salvador", 0.0032), ("India", 0.0031), ("Cuba", 0.0029),
    ("England", 0.0026), ("China", 0.0025), ("South", 0.0023),
    ("Jamaica", 0.0022), ("Italy", 0.0021), ("Dominican-Republic", 0.0021),
    ("Japan", 0.0019), ("Guatemala", 0.0018), ("Poland", 0.0018),
    ("Vietnam", 0.0017), ("Columbia", 0.0017), ("Haiti", 0.0015),
    ("Portugal", 0.0014), ("Taiwan", 0.0013), ("Iran", 0.0012),
    ("Nicaragua", 0.0010), ("Greece", 0.0010), ("Peru", 0.0009),
    ("Ecuador", 0.0009), ("France", 0.0008), ("Ireland", 0.0008),
    ("Thailand", 0.0006), ("Hong", 0.0006), ("Cambodia", 0.0006),
    ("Trinadad&Tobago", 0.0005), ("Outlying-US(Guam-USVI-etc)", 0.0005),
    ("Laos", 0.0005), ("Yugoslavia", 0.0005), ("Scotland", 0.0004),
    ("Honduras", 0.0004), ("Hungary", 0.0004),
    ("Holand-Netherlands", 0.0001),
]


def pick(rng, table, n):
    values = [v for v, _ in table]
    weights = np.array([w for _, w in table], dtype=float)
    return rng.choice(values, size=n, p=weights / weights.sum())


def generate(n, seed):
    rng = np.random.default_rng(seed)
    age = (17 + np.floor(rng.beta(1.7, 3.2, n) * 74)).astype(int)

    workclass = pick(rng, WORKCLASS, n)
    education = pick(rng, EDUCATION, n)
    marital = pick(rng, MARITAL, n)
    occupation = pick(rng, OCCUPATION, n)
    relationship = pick(rng, RELATIONSHIP, n)
    race = pick(rng, RACE, n)
    sex = rng.choice(["Male", "Female"], size=n, p=[0.668, 0.332])
    country = pick(rng, COUNTRY, n)

    # employment fields go missing together, as in the source data
    wc_missing = rng.random(n) < 0.057
    workclass = workclass.astype(object)
    occupation = occupation.astype(object)
    workclass[wc_missing] = "?"
    occupation[wc_missing] = "?"
    occupation[rng.random(n) < 0.0003] = "?"
    country = country.astype(object)
    country[rng.random(n) < 0.018] = "?"

    gain = np.zeros(n, dtype=int)
    has_gain = rng.random(n) < 0.084
    gain[has_gain] = np.clip(
        np.exp(rng.normal(8.3, 1.0, int(has_gain.sum()))), 114, 41310
    ).astype(int)
    gain[rng.random(n) < 0.0032] = 99999

    loss = np.zeros(n, dtype=int)
    has_loss = rng.random(n) < 0.047
    loss[has_loss] = np.clip(
        rng.normal(1870, 390, int(has_loss.sum())), 155, 4356
    ).astype(int)

    hours = np.full(n, 40, dtype=int)
    off_mode = rng.random(n) >= 0.47
    hours[off_mode] = np.clip(
        rng.normal(40, 13, int(off_mode.sum())), 1, 99
    ).astype(int)

    edu_rank = {v: i for i, (v, _) in enumerate(EDUCATION)}
    score = (
        0.028 * (age - 38)
        - 0.16 * np.array([edu_rank[e] for e in education])
        + 0.030 * (hours - 40)
        + 0.9 * (sex == "Male")
        + 1.1 * (marital == "Married-civ-spouse")
        + 2.5 * (gain > 5000)
        - 1.3
    )
    income = np.where(
        rng.random(n) < 1.0 / (1.0 + np.exp(-score)), ">50K", "<=50K"
    )

    rows = np.empty((n, len(COLUMNS)), dtype=object)
    for j, col in enumerate([
        age, workclass, education, marital, occupation, relationship, race,
        sex, gain, loss, hours, country, income,
    ]):
        rows[:, j] = [str(v) for v in col]
    return rows


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--rows", type=int, default=48842)
    ap.add_argument("--seed", type=int, default=20240607)
    ap.add_argument("--out", default="data/adult_synth.csv")
    args = ap.parse_args()

    rows = generate(args.rows, args.seed)
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    with out.open("w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(COLUMNS)
        writer.writerows(rows)
    print(f"wrote {len(rows)} rows to {out}")


if __name__ == "__main__":
    main()
