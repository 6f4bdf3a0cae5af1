"""Columnar dataset with typed QID columns and missing-value markers.

Records are addressed positionally: record id ``i`` is row ``i`` of the
source CSV, for ``i`` in ``0..N-1``. Numeric columns are stored as float64
with NaN marking missing cells; categorical columns are stored as integer
codes into a sorted vocabulary, with code -1 marking missing cells.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np

NUMERIC = "numeric"
CATEGORICAL = "categorical"

# input tokens that map to the missing marker, after whitespace stripping
MISSING_TOKENS = frozenset({"", "?", "NaN", "nan"})

# missing cells are rendered with this token on output
MISSING_OUT = "?"


class DatasetError(ValueError):
    """Raised for schema violations and unparseable input."""


def format_number(x: float) -> str:
    """Render a float the way it would appear in a hand-written CSV.

    Integral values lose the trailing ``.0`` so that ``39.0`` renders as
    ``"39"``. Non-integral values use ``repr``, which round-trips exactly.
    """
    if x == int(x) and abs(x) < 1e16:
        return str(int(x))
    return repr(x)


@dataclass(frozen=True)
class Column:
    name: str
    kind: str
    is_qid: bool = False

    def __post_init__(self):
        if self.kind not in (NUMERIC, CATEGORICAL):
            raise DatasetError(f"column {self.name!r}: unknown kind {self.kind!r}")
        if not self.name:
            raise DatasetError("column name must be non-empty")


@dataclass(frozen=True)
class Schema:
    """Column declarations plus the anonymity parameter ``k``.

    Column order is significant: it is the tie-break order used whenever
    two QIDs compare equal (cut ranking, final cut selection, baseline
    dimension choice).
    """

    columns: tuple[Column, ...]
    k: int = 2
    sensitive: tuple[str, ...] = ()

    def __post_init__(self):
        if not isinstance(self.k, int) or self.k < 2:
            raise DatasetError(f"k must be an integer >= 2, got {self.k!r}")
        names = [c.name for c in self.columns]
        if len(set(names)) != len(names):
            raise DatasetError("duplicate column names in schema")
        for s in self.sensitive:
            if s not in names:
                raise DatasetError(f"sensitive column {s!r} not declared")

    @property
    def names(self) -> tuple[str, ...]:
        return tuple(c.name for c in self.columns)

    @property
    def qids(self) -> tuple[Column, ...]:
        return tuple(c for c in self.columns if c.is_qid)

    @property
    def qid_names(self) -> tuple[str, ...]:
        return tuple(c.name for c in self.qids)

    def column(self, name: str) -> Column:
        for c in self.columns:
            if c.name == name:
                return c
        raise DatasetError(f"no column named {name!r}")

    def order(self, name: str) -> int:
        """Schema position of a column, the canonical tie-break key."""
        for i, c in enumerate(self.columns):
            if c.name == name:
                return i
        raise DatasetError(f"no column named {name!r}")

    def with_qids(self, names) -> "Schema":
        """Same columns with the QID flag set exactly on ``names``."""
        names = tuple(names)
        for n in names:
            self.column(n)  # raises on unknown
        cols = tuple(replace(c, is_qid=c.name in names) for c in self.columns)
        return replace(self, columns=cols)

    def with_k(self, k: int) -> "Schema":
        return replace(self, k=k)


class Dataset:
    """Immutable columnar table bound to a :class:`Schema`."""

    __slots__ = ("schema", "n", "_numeric", "_codes", "_categories")

    def __init__(self, schema: Schema, numeric: dict, codes: dict, categories: dict, n: int):
        self.schema = schema
        self.n = n
        self._numeric = numeric
        self._codes = codes
        self._categories = categories
        for col in schema.columns:
            if col.kind == NUMERIC:
                if col.name not in numeric:
                    raise DatasetError(f"missing numeric column {col.name!r}")
                if len(numeric[col.name]) != n:
                    raise DatasetError(f"column {col.name!r} has wrong length")
            else:
                if col.name not in codes:
                    raise DatasetError(f"missing categorical column {col.name!r}")
                if len(codes[col.name]) != n:
                    raise DatasetError(f"column {col.name!r} has wrong length")

    def numeric(self, name: str) -> np.ndarray:
        return self._numeric[name]

    def codes(self, name: str) -> np.ndarray:
        return self._codes[name]

    def categories(self, name: str) -> tuple[str, ...]:
        return self._categories[name]

    def decode(self, name: str, code: int) -> str:
        if code < 0:
            return MISSING_OUT
        return self._categories[name][code]

    def present_mask(self, name: str) -> np.ndarray:
        col = self.schema.column(name)
        if col.kind == NUMERIC:
            return ~np.isnan(self._numeric[name])
        return self._codes[name] >= 0

    def column_domain(self, name: str) -> tuple[float, float]:
        """Full-column (min, max) over non-missing values of a numeric column."""
        vals = self._numeric[name]
        mask = ~np.isnan(vals)
        if not mask.any():
            raise DatasetError(f"column {name!r} has no non-missing values")
        present = vals[mask]
        return float(present.min()), float(present.max())

    def with_schema(self, schema: Schema) -> "Dataset":
        """Same column arrays bound to a different schema view."""
        return Dataset(schema, self._numeric, self._codes, self._categories, self.n)

    def cell_text(self, name: str, i: int) -> str:
        col = self.schema.column(name)
        if col.kind == NUMERIC:
            v = self._numeric[name][i]
            return MISSING_OUT if np.isnan(v) else format_number(float(v))
        return self.decode(name, int(self._codes[name][i]))

    def __eq__(self, other) -> bool:
        if not isinstance(other, Dataset):
            return NotImplemented
        if self.schema != other.schema or self.n != other.n:
            return False
        for col in self.schema.columns:
            if col.kind == NUMERIC:
                a, b = self._numeric[col.name], other._numeric[col.name]
                if not np.array_equal(a, b, equal_nan=True):
                    return False
            else:
                a = [self.decode(col.name, c) for c in self._codes[col.name]]
                b = [other.decode(col.name, c) for c in other._codes[col.name]]
                if a != b:
                    return False
        return True

    def __hash__(self):  # pragma: no cover - datasets are not hashable
        raise TypeError("Dataset is not hashable")


def _encode_categorical(raw: list) -> tuple[np.ndarray, tuple[str, ...]]:
    observed = sorted({v for v in raw if v is not None})
    lookup = {v: i for i, v in enumerate(observed)}
    codes = np.fromiter(
        (lookup[v] if v is not None else -1 for v in raw), dtype=np.int32, count=len(raw)
    )
    return codes, tuple(observed)


def from_rows(schema: Schema, header: list, rows: list) -> Dataset:
    """Build a dataset from parsed CSV rows (lists of raw string cells)."""
    missing = [n for n in schema.names if n not in header]
    extra = [h for h in header if h not in schema.names]
    if missing or extra:
        raise DatasetError(
            f"header mismatch: missing columns {missing!r}, unexpected columns {extra!r}"
        )
    pos = {name: header.index(name) for name in schema.names}
    n = len(rows)
    width = len(header)
    for i, row in enumerate(rows):
        if len(row) != width:
            raise DatasetError(f"row {i + 1}: expected {width} fields, got {len(row)}")

    numeric: dict = {}
    codes: dict = {}
    categories: dict = {}
    for col in schema.columns:
        j = pos[col.name]
        if col.kind == NUMERIC:
            out = np.empty(n, dtype=np.float64)
            for i, row in enumerate(rows):
                tok = row[j].strip()
                if tok in MISSING_TOKENS:
                    out[i] = np.nan
                else:
                    try:
                        out[i] = float(tok)
                    except ValueError:
                        raise DatasetError(
                            f"row {i + 1}, column {col.name!r}: "
                            f"cannot parse {tok!r} as a number"
                        ) from None
            numeric[col.name] = out
        else:
            raw = []
            for row in rows:
                tok = row[j].strip()
                raw.append(None if tok in MISSING_TOKENS else tok)
            codes[col.name], categories[col.name] = _encode_categorical(raw)
    return Dataset(schema, numeric, codes, categories, n)


def load_dataset(csv_path, schema: Schema) -> Dataset:
    """Load a CSV into a :class:`Dataset`.

    ``?``, the empty string, ``NaN`` and ``nan`` all map to the missing
    marker. Any other token in a numeric column that does not parse as a
    float raises :class:`DatasetError` naming the row and column.
    """
    path = Path(csv_path)
    with path.open(newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = [h.strip() for h in next(reader)]
        except StopIteration:
            raise DatasetError(f"{path}: empty file") from None
        rows = list(reader)
    return from_rows(schema, header, rows)


def write_dataset(dataset: Dataset, csv_path) -> None:
    """Write a dataset back to CSV; missing cells render as ``?``.

    ``load_dataset(write_dataset(d)) == d`` holds cell-for-cell.
    """
    path = Path(csv_path)
    with path.open("w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(dataset.schema.names)
        cols = []
        for col in dataset.schema.columns:
            if col.kind == NUMERIC:
                vals = dataset.numeric(col.name)
                cols.append([
                    MISSING_OUT if np.isnan(v) else format_number(float(v)) for v in vals
                ])
            else:
                cats = dataset.categories(col.name)
                cols.append([
                    cats[c] if c >= 0 else MISSING_OUT for c in dataset.codes(col.name)
                ])
        for i in range(dataset.n):
            writer.writerow([c[i] for c in cols])


def replicate(dataset: Dataset, factor: int) -> Dataset:
    """Scale a dataset by repeating every record ``factor`` times, in order.

    ``replicate(replicate(d, a), b)`` equals ``replicate(d, a * b)``.
    """
    if not isinstance(factor, int) or factor < 1:
        raise DatasetError(f"replication factor must be an integer >= 1, got {factor!r}")
    if factor == 1:
        return dataset
    numeric = {k: np.repeat(v, factor) for k, v in dataset._numeric.items()}
    codes = {k: np.repeat(v, factor) for k, v in dataset._codes.items()}
    return Dataset(dataset.schema, numeric, codes, dict(dataset._categories), dataset.n * factor)


def load_schema(path) -> Schema:
    """Parse a schema file.

    Format is one ``key = value`` pair per line with ``#`` comments.
    Recognized keys::

        k = 5
        column.<name> = numeric|categorical [qid] [sensitive]

    Column declaration order defines the schema column order.
    """
    path = Path(path)
    columns: list[Column] = []
    sensitive: list[str] = []
    k = 2
    for lineno, raw in enumerate(path.read_text().splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise DatasetError(f"{path}:{lineno}: expected 'key = value'")
        key, value = (part.strip() for part in line.split("=", 1))
        if key == "k":
            try:
                k = int(value)
            except ValueError:
                raise DatasetError(f"{path}:{lineno}: k must be an integer") from None
        elif key.startswith("column."):
            name = key[len("column."):]
            parts = value.split()
            if not parts:
                raise DatasetError(f"{path}:{lineno}: missing column kind")
            kind, flags = parts[0], parts[1:]
            for flag in flags:
                if flag not in ("qid", "sensitive"):
                    raise DatasetError(f"{path}:{lineno}: unknown flag {flag!r}")
            columns.append(Column(name=name, kind=kind, is_qid="qid" in flags))
            if "sensitive" in flags:
                sensitive.append(name)
        else:
            raise DatasetError(f"{path}:{lineno}: unknown key {key!r}")
    if not columns:
        raise DatasetError(f"{path}: no columns declared")
    return Schema(columns=tuple(columns), k=k, sensitive=tuple(sensitive))
