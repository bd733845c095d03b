"""Dataset container and CSV input/output.

A :class:`Dataset` bundles outcomes, binary treatment indicators, a covariate
matrix, and (optionally) per-row propensity scores.  Arrays are validated once
at construction and frozen, so downstream code never re-checks shapes.

CSV files are plain numeric tables with a header row.  Reals are written with
17 significant digits so that a write -> read -> write cycle is bit-stable.
"""

from __future__ import annotations

import csv
import dataclasses
import os
from dataclasses import dataclass
from typing import Iterable, Mapping, Sequence

import numpy as np

from .errors import ColumnError, ParseError, ShapeError, ValidationError

__all__ = ["ColumnSpec", "Dataset", "load_csv", "write_csv", "format_real"]


def format_real(v: float) -> str:
    """Render a float with 17 significant digits (lossless for doubles)."""
    return format(float(v), ".17g")


@dataclass(frozen=True)
class ColumnSpec:
    """Names the roles columns play in a CSV file.

    Columns not named here become covariates, in file order.
    """

    outcome: str = "y"
    treatment: str = "t"
    pscore: str | None = None
    truth: str | None = None

    def __post_init__(self):
        named = [c for c in (self.outcome, self.treatment, self.pscore, self.truth)
                 if c is not None]
        if len(set(named)) != len(named):
            raise ColumnError(f"column roles must name distinct columns, got {named}")


@dataclass(frozen=True)
class Dataset:
    """Immutable estimation dataset.

    Attributes:
        y: Outcomes, shape (n,).
        t: Treatment indicators in {0, 1}, shape (n,).
        X: Covariate matrix, shape (n, p).
        feature_names: Distinct covariate names, length p.
        pscore: Optional propensity scores in (0, 1), shape (n,).
    """

    y: np.ndarray
    t: np.ndarray
    X: np.ndarray
    feature_names: tuple[str, ...]
    pscore: np.ndarray | None = None

    def __post_init__(self):
        # copy so freezing never mutates a caller-owned array's flags
        y = np.array(self.y, dtype=np.float64)
        t = np.array(self.t, dtype=np.float64)
        X = np.array(self.X, dtype=np.float64)
        names = tuple(str(c) for c in self.feature_names)
        if y.ndim != 1:
            raise ShapeError(f"y must be 1-d, got shape {y.shape}")
        if y.size < 1:
            raise ValidationError("dataset must contain at least one row")
        if t.shape != y.shape:
            raise ShapeError(f"t has shape {t.shape}, expected {y.shape}")
        if X.ndim != 2 or X.shape[0] != y.size:
            raise ShapeError(f"X has shape {X.shape}, expected ({y.size}, p)")
        if len(names) != X.shape[1]:
            raise ValidationError(
                f"{len(names)} feature names for {X.shape[1]} columns")
        if len(set(names)) != len(names):
            raise ColumnError("feature names must be distinct")
        for arr, what in ((y, "y"), (X, "X")):
            if not np.all(np.isfinite(arr)):
                bad = np.argwhere(~np.isfinite(arr))[0]
                raise ValidationError(f"non-finite value in {what} at row {bad[0]}")
        bad_t = np.nonzero(~np.isin(t, (0.0, 1.0)))[0]
        if bad_t.size:
            raise ValidationError(
                f"t must be 0 or 1; row {bad_t[0]} has t={t[bad_t[0]]!r}")
        t = t.astype(np.int64)
        ps = self.pscore
        if ps is not None:
            ps = np.array(ps, dtype=np.float64)
            if ps.shape != y.shape:
                raise ShapeError(f"pscore has shape {ps.shape}, expected {y.shape}")
            _check_pscore_range(ps)
            ps.flags.writeable = False
        for arr in (y, t, X):
            arr.flags.writeable = False
        object.__setattr__(self, "y", y)
        object.__setattr__(self, "t", t)
        object.__setattr__(self, "X", X)
        object.__setattr__(self, "feature_names", names)
        object.__setattr__(self, "pscore", ps)

    @property
    def n(self) -> int:
        return self.y.size

    @property
    def p(self) -> int:
        return self.X.shape[1]

    def arm_sizes(self) -> tuple[int, int]:
        """Row counts of the (control, treated) arms."""
        n1 = int(self.t.sum())
        return self.n - n1, n1

    def subset(self, rows) -> "Dataset":
        """New dataset restricted to the given row indices."""
        rows = np.asarray(rows)
        return Dataset(
            y=self.y[rows],
            t=self.t[rows],
            X=self.X[rows],
            feature_names=self.feature_names,
            pscore=None if self.pscore is None else self.pscore[rows],
        )

    def replace_y(self, y) -> "Dataset":
        return dataclasses.replace(self, y=np.asarray(y))


def _check_pscore_range(ps: np.ndarray) -> None:
    from .errors import PropensityRangeError

    if not np.all(np.isfinite(ps)):
        bad = np.nonzero(~np.isfinite(ps))[0][0]
        raise PropensityRangeError(f"non-finite propensity at row {bad}")
    bad = np.nonzero((ps <= 0.0) | (ps >= 1.0))[0]
    if bad.size:
        raise PropensityRangeError(
            f"propensity must lie in (0, 1); row {bad[0]} has {ps[bad[0]]!r}")


def _read_table(path: str | os.PathLike) -> tuple[list[str], np.ndarray]:
    """Parse a numeric CSV into (header, float matrix)."""
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise ParseError(f"{path}: file is empty") from None
        if len(set(header)) != len(header):
            dupes = sorted({c for c in header if header.count(c) > 1})
            raise ColumnError(f"{path}: duplicate column name {dupes[0]!r}")
        rows = []
        for i, rec in enumerate(reader):
            if len(rec) != len(header):
                raise ParseError(
                    f"{path}: row {i} has {len(rec)} cells, expected {len(header)}")
            try:
                rows.append([float(c) for c in rec])
            except ValueError:
                bad = next(j for j, c in enumerate(rec) if not _is_float(c))
                raise ParseError(
                    f"{path}: row {i}, column {header[bad]!r}: "
                    f"cannot parse {rec[bad]!r} as a number") from None
    if not rows:
        raise ParseError(f"{path}: no data rows")
    return header, np.asarray(rows, dtype=np.float64)


def _is_float(cell: str) -> bool:
    try:
        float(cell)
        return True
    except ValueError:
        return False


def load_csv(path: str | os.PathLike,
             spec: ColumnSpec) -> tuple[Dataset, np.ndarray | None]:
    """Load a dataset from CSV.

    Args:
        path: CSV file with a header row; all cells numeric.
        spec: Column role assignment.  Columns not named in the spec become
            covariates, keeping file order.

    Returns:
        The dataset and, when ``spec.truth`` names a column, that column as a
        separate array (it never enters the covariates).
    """
    header, table = _read_table(path)
    cols = {name: table[:, j] for j, name in enumerate(header)}

    def take(name, role):
        if name not in cols:
            raise ColumnError(f"{path}: no column {name!r} for {role}")
        return cols[name]

    y = take(spec.outcome, "outcome")
    t = take(spec.treatment, "treatment")
    ps = take(spec.pscore, "pscore") if spec.pscore is not None else None
    truth = take(spec.truth, "truth") if spec.truth is not None else None
    reserved = {spec.outcome, spec.treatment, spec.pscore, spec.truth}
    feature_names = [c for c in header if c not in reserved]
    if not feature_names:
        raise ValidationError(f"{path}: no covariate columns remain")
    X = np.column_stack([cols[c] for c in feature_names])
    ds = Dataset(y=y, t=t, X=X, feature_names=tuple(feature_names), pscore=ps)
    return ds, truth


def write_csv(path: str | os.PathLike,
              columns: Mapping[str, Sequence | np.ndarray | Iterable]) -> None:
    """Write named numeric columns as CSV with 17-significant-digit reals.

    The mapping's insertion order fixes the column order.  All columns must
    have equal length; an empty mapping is an error.
    """
    if not columns:
        raise ValidationError("write_csv needs at least one column")
    names = list(columns)
    arrays = [np.asarray(columns[c], dtype=np.float64) for c in names]
    lengths = {a.shape[0] for a in arrays}
    if len(lengths) != 1:
        raise ValidationError(f"column lengths differ: {sorted(lengths)}")
    for name, a in zip(names, arrays):
        if a.ndim != 1:
            raise ShapeError(f"column {name!r} must be 1-d")
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(names)
        for i in range(arrays[0].shape[0]):
            writer.writerow([format_real(a[i]) for a in arrays])
