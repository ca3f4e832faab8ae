"""CSV ingestion, column typing, missing-value handling, and seeded splits.

A ``Table`` is the unit that flows through the pipeline: an ordered set of
named columns, each either numeric or categorical, with an explicit
missing-value mask. Tables are immutable after construction.
"""

from __future__ import annotations

import csv
import hashlib
import io
import math
from collections import Counter
from dataclasses import dataclass, field

import numpy as np

from .errors import (
    DuplicateHeaderError,
    EmptyFileError,
    RaggedRowError,
    TooFewRowsError,
    UnknownColumnError,
)

NUMERIC = "numeric"
CATEGORICAL = "categorical"

#: Cell contents (trimmed, lowercased) treated as missing.
MISSING_TOKENS = frozenset({"", "?", "na", "n/a", "null"})

#: A column is numeric when at least this fraction of unmasked cells parses.
NUMERIC_PARSE_THRESHOLD = 0.95


def parse_number(token: str) -> float | None:
    """Parse a finite decimal number, or return None.

    Rejects inf/nan spellings and underscore separators, which ``float``
    would otherwise accept.
    """
    if "_" in token:
        return None
    try:
        value = float(token)
    except ValueError:
        return None
    return value if math.isfinite(value) else None


def format_number(value: float) -> str:
    """Shortest round-trip decimal form, as written back to CSV."""
    if value == int(value) and abs(value) < 1e16:
        return str(int(value))
    return repr(float(value))


@dataclass(frozen=True, eq=False)
class Column:
    """A single typed column with a missing mask.

    ``values`` is float64 for numeric columns (NaN where masked) and an
    object array of str/None for categorical columns.
    """

    name: str
    kind: str
    values: np.ndarray
    missing_mask: np.ndarray

    def __post_init__(self):
        if len(self.values) != len(self.missing_mask):
            raise ValueError("values and missing_mask lengths differ")
        self.values.flags.writeable = False
        self.missing_mask.flags.writeable = False

    def __len__(self) -> int:
        return len(self.values)

    def present_values(self) -> np.ndarray:
        """Unmasked cell values."""
        return self.values[~self.missing_mask]

    def tokens(self) -> list[str | None]:
        """Cell contents as CSV tokens; None where masked."""
        out: list[str | None] = []
        for v, m in zip(self.values, self.missing_mask):
            if m:
                out.append(None)
            elif self.kind == NUMERIC:
                out.append(format_number(float(v)))
            else:
                out.append(str(v))
        return out

    def take(self, indices: np.ndarray) -> "Column":
        return Column(
            self.name,
            self.kind,
            self.values[indices].copy(),
            self.missing_mask[indices].copy(),
        )

    def equals(self, other: "Column") -> bool:
        if (
            self.name != other.name
            or self.kind != other.kind
            or len(self) != len(other)
        ):
            return False
        if not np.array_equal(self.missing_mask, other.missing_mask):
            return False
        keep = ~self.missing_mask
        if self.kind == NUMERIC:
            return np.array_equal(self.values[keep], other.values[keep])
        return all(a == b for a, b in zip(self.values[keep], other.values[keep]))


@dataclass(frozen=True, eq=False)
class Table:
    name: str
    columns: tuple[Column, ...]

    def __post_init__(self):
        names = [c.name for c in self.columns]
        if len(set(names)) != len(names) or any(not n for n in names):
            raise ValueError("column names must be unique and non-empty")
        lengths = {len(c) for c in self.columns}
        if len(lengths) > 1:
            raise ValueError("columns have differing lengths")

    @property
    def n_rows(self) -> int:
        return len(self.columns[0]) if self.columns else 0

    @property
    def column_names(self) -> list[str]:
        return [c.name for c in self.columns]

    def column(self, name: str) -> Column:
        for c in self.columns:
            if c.name == name:
                return c
        raise UnknownColumnError(name)

    def has_column(self, name: str) -> bool:
        return any(c.name == name for c in self.columns)

    def take(self, indices: np.ndarray, name: str | None = None) -> "Table":
        return Table(name or self.name, tuple(c.take(indices) for c in self.columns))

    def equals(self, other: "Table") -> bool:
        return (
            len(self.columns) == len(other.columns)
            and self.n_rows == other.n_rows
            and all(a.equals(b) for a, b in zip(self.columns, other.columns))
        )

    def to_csv_bytes(self) -> bytes:
        """Serialize back to RFC-4180 CSV (UTF-8, LF line endings).

        Masked cells are written as empty fields, so re-ingesting yields an
        identical Table.
        """
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(self.column_names)
        cols = [c.tokens() for c in self.columns]
        for row in zip(*cols):
            writer.writerow(["" if t is None else t for t in row])
        return buf.getvalue().encode("utf-8")

    def fingerprint(self) -> str:
        """SHA-256 of the canonical CSV form."""
        return hashlib.sha256(self.to_csv_bytes()).hexdigest()


@dataclass(frozen=True)
class SplitSpec:
    train_frac: float = 0.6
    val_frac: float = 0.2
    test_frac: float = 0.2
    seed: int = 0

    def __post_init__(self):
        fracs = (self.train_frac, self.val_frac, self.test_frac)
        if any(f <= 0 for f in fracs):
            raise ValueError("split fractions must be positive")
        if abs(sum(fracs) - 1.0) > 1e-9:
            raise ValueError("split fractions must sum to 1")


def _is_missing(token: str) -> bool:
    return token.strip().lower() in MISSING_TOKENS


def _build_column(name: str, raw: list[str]) -> Column:
    mask = np.array([_is_missing(tok) for tok in raw], dtype=bool)
    present = [tok.strip() for tok, m in zip(raw, mask) if not m]
    parsed = [parse_number(tok) for tok in present]
    n_ok = sum(1 for p in parsed if p is not None)
    # An all-masked column has no evidence either way; treat as categorical.
    numeric = len(present) > 0 and n_ok >= NUMERIC_PARSE_THRESHOLD * len(present)
    if numeric:
        values = np.full(len(raw), np.nan)
        for i, (tok, m) in enumerate(zip(raw, mask)):
            if m:
                continue
            v = parse_number(tok.strip())
            if v is None:
                # Stray unparseable cell in a numeric column: masked.
                mask[i] = True
            else:
                values[i] = v
        return Column(name, NUMERIC, values, mask)
    values = np.array(
        [None if m else tok.strip() for tok, m in zip(raw, mask)], dtype=object
    )
    return Column(name, CATEGORICAL, values, mask)


def ingest_csv(source: bytes | io.IOBase, name: str) -> Table:
    """Parse RFC-4180 CSV (header row required) into a typed Table.

    Cells equal to one of MISSING_TOKENS (case-insensitive, trimmed) are
    masked. A column is numeric iff at least 95% of its unmasked cells parse
    as finite decimals; stray unparseable cells in a numeric column are
    masked as missing.

    Raises EmptyFileError, DuplicateHeaderError, RaggedRowError.
    """
    if isinstance(source, (bytes, bytearray)):
        text = bytes(source).decode("utf-8")
    else:
        data = source.read()
        text = data.decode("utf-8") if isinstance(data, bytes) else data
    reader = csv.reader(io.StringIO(text, newline=""))
    try:
        header = next(reader)
    except StopIteration:
        raise EmptyFileError("no header row") from None
    header = [h.strip() for h in header]
    if len(set(header)) != len(header) or any(not h for h in header):
        raise DuplicateHeaderError("header names must be unique and non-empty")
    raw_cols: list[list[str]] = [[] for _ in header]
    for i, row in enumerate(reader, start=1):
        if len(row) != len(header):
            raise RaggedRowError(i, expected=len(header), got=len(row))
        for col, cell in zip(raw_cols, row):
            col.append(cell)
    columns = tuple(_build_column(h, raw) for h, raw in zip(header, raw_cols))
    return Table(name, columns)


def split(t: Table, spec: SplitSpec) -> tuple[Table, Table, Table]:
    """Deterministic seeded train/validation/test partition.

    Rows are shuffled by a seeded permutation then cut; validation and test
    get floor(frac * n) rows, train keeps the remainder.
    """
    n = t.n_rows
    if n < 10:
        raise TooFewRowsError(f"need at least 10 rows, got {n}")
    perm = np.random.default_rng(spec.seed).permutation(n)
    n_val = int(spec.val_frac * n)
    n_test = int(spec.test_frac * n)
    n_train = n - n_val - n_test
    return (
        t.take(perm[:n_train], f"{t.name}.train"),
        t.take(perm[n_train : n_train + n_val], f"{t.name}.val"),
        t.take(perm[n_train + n_val :], f"{t.name}.test"),
    )


def column_distinct(t: Table, col: str) -> list[tuple[str, int]]:
    """Distinct unmasked values with counts.

    Sorted by descending count, ties broken lexicographically. Numeric cells
    are reported as their CSV tokens.
    """
    column = t.column(col)
    counts = Counter(tok for tok in column.tokens() if tok is not None)
    return sorted(counts.items(), key=lambda kv: (-kv[1], kv[0]))
