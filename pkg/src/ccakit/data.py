"""Tabular data model: named numeric columns with an explicit missing mask.

A Dataset is immutable after construction and row order is meaningful (row i
of one variable set pairs with row i of the other).  Missing values exist
only at ingestion; every fitting routine downstream requires complete data,
so imputation/dropping has to happen in preprocessing first.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field

import numpy as np

from .errors import DataError, ParseError, SchemaError


def _check_names(names) -> tuple[str, ...]:
    names = tuple(str(n) for n in names)
    if len(names) == 0:
        raise SchemaError("a dataset needs at least one column")
    if any(n == "" for n in names):
        raise SchemaError("column names must be non-empty")
    seen = set()
    for n in names:
        if n in seen:
            raise SchemaError(f"duplicate column name: {n!r}")
        seen.add(n)
    return names


@dataclass(frozen=True)
class Dataset:
    """Named-column numeric matrix with a missing-value mask.

    Parameters
    ----------
    names : sequence of str
        Unique, non-empty column names.
    values : ndarray, shape (n_rows, n_cols)
        Cell values as float64; missing cells hold NaN.
    missing : ndarray of bool, optional
        True where a cell is missing.  Defaults to all-observed.
    """

    names: tuple[str, ...]
    values: np.ndarray
    missing: np.ndarray = field(default=None)

    def __post_init__(self):
        names = _check_names(self.names)
        values = np.array(self.values, dtype=np.float64, copy=True)
        if values.ndim != 2:
            raise DataError("values must be a 2-d array")
        n, p = values.shape
        if n < 1:
            raise DataError("a dataset needs at least one row")
        if p != len(names):
            raise SchemaError(f"{len(names)} names for {p} columns")
        if self.missing is None:
            missing = np.zeros((n, p), dtype=bool)
        else:
            missing = np.array(self.missing, dtype=bool, copy=True)
            if missing.shape != (n, p):
                raise DataError("missing mask shape does not match values")
        if not np.all(np.isfinite(values[~missing])):
            raise DataError("non-missing cells must be finite")
        values[missing] = np.nan
        values.setflags(write=False)
        missing.setflags(write=False)
        object.__setattr__(self, "names", names)
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "missing", missing)

    @property
    def n_rows(self) -> int:
        return self.values.shape[0]

    @property
    def n_cols(self) -> int:
        return self.values.shape[1]

    def has_missing(self) -> bool:
        return bool(self.missing.any())

    def require_complete(self, context: str = "this operation") -> None:
        if self.has_missing():
            raise DataError(f"{context} requires complete data; resolve missing values first")

    def column_index(self, name: str) -> int:
        try:
            return self.names.index(name)
        except ValueError:
            raise SchemaError(f"unknown column name: {name!r}") from None

    def column(self, name: str) -> np.ndarray:
        return self.values[:, self.column_index(name)]

    def select(self, names) -> "Dataset":
        idx = [self.column_index(n) for n in names]
        return Dataset(tuple(self.names[i] for i in idx), self.values[:, idx], self.missing[:, idx])

    def drop(self, names) -> "Dataset":
        gone = set(names)
        for n in gone:
            self.column_index(n)
        keep = [n for n in self.names if n not in gone]
        if not keep:
            raise SchemaError("dropping these columns would leave an empty dataset")
        return self.select(keep)

    def take_rows(self, idx) -> "Dataset":
        idx = np.asarray(idx, dtype=int)
        return Dataset(self.names, self.values[idx], self.missing[idx])

    def with_values(self, values: np.ndarray) -> "Dataset":
        """Same columns, new complete cell values."""
        return Dataset(self.names, values)

    def matrix(self) -> np.ndarray:
        """Read-only float64 view; requires complete data."""
        self.require_complete("matrix access")
        return self.values


@dataclass(frozen=True)
class VariableSplit:
    """Assignment of columns to the left (p) and right (q) variable sets."""

    left: tuple[str, ...]
    right: tuple[str, ...]

    def __post_init__(self):
        left = tuple(str(n) for n in self.left)
        right = tuple(str(n) for n in self.right)
        if not left or not right:
            raise SchemaError("both sides of a variable split must be non-empty")
        overlap = sorted(set(left) & set(right))
        if overlap:
            raise SchemaError(f"columns on both sides of the split: {', '.join(overlap)}")
        object.__setattr__(self, "left", left)
        object.__setattr__(self, "right", right)

    def validate(self, ds: Dataset) -> None:
        for name in self.left + self.right:
            ds.column_index(name)


def load_csv(path, missing_token: str = "") -> Dataset:
    """Read an RFC-4180-style CSV with a mandatory header row.

    Cells equal to `missing_token` become missing; everything else must
    parse as a decimal real (scientific notation accepted).
    """
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise ParseError(f"{path}: empty file, expected a header row") from None
        names = _check_names(header)
        p = len(names)
        rows = []
        mask_rows = []
        for lineno, row in enumerate(reader, start=2):
            if len(row) != p:
                raise ParseError(f"{path}: row {lineno} has {len(row)} cells, expected {p}")
            vals = np.empty(p, dtype=np.float64)
            miss = np.zeros(p, dtype=bool)
            for j, cell in enumerate(row):
                if cell == missing_token:
                    vals[j] = np.nan
                    miss[j] = True
                else:
                    try:
                        vals[j] = float(cell)
                    except ValueError:
                        raise ParseError(
                            f"{path}: row {lineno}, column {names[j]!r}: "
                            f"cannot parse {cell!r} as a number"
                        ) from None
            rows.append(vals)
            mask_rows.append(miss)
    if not rows:
        raise ParseError(f"{path}: no data rows after the header")
    return Dataset(names, np.vstack(rows), np.vstack(mask_rows))


def save_csv(ds: Dataset, path, missing_token: str = "") -> None:
    """Write a Dataset back to CSV; numbers use shortest round-trip repr."""
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(ds.names)
        for i in range(ds.n_rows):
            row = [
                missing_token if ds.missing[i, j] else repr(float(ds.values[i, j]))
                for j in range(ds.n_cols)
            ]
            writer.writerow(row)


def split(ds: Dataset, spec: VariableSplit) -> tuple[Dataset, Dataset]:
    """Carve the dataset into the two variable sets, preserving row order."""
    spec.validate(ds)
    return ds.select(spec.left), ds.select(spec.right)
