"""Dataset container, CSV ingestion, equal-variance scaling and splitting."""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np


class DataError(ValueError):
    """Raised for malformed or degenerate input data."""


def _frozen(a: np.ndarray) -> np.ndarray:
    a = np.array(a, dtype=float, copy=True)
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class Dataset:
    """Case and control marker matrices sharing ``p`` columns.

    ``case_rows`` / ``control_rows`` record the original (file or labelled
    array) row position of every case and control, so the labelled view
    can be rebuilt in its original order.
    """

    cases: np.ndarray
    controls: np.ndarray
    marker_names: tuple[str, ...] = ()
    case_rows: np.ndarray | None = field(default=None, repr=False)
    control_rows: np.ndarray | None = field(default=None, repr=False)

    def __post_init__(self):
        cases = np.atleast_2d(np.asarray(self.cases, dtype=float))
        controls = np.atleast_2d(np.asarray(self.controls, dtype=float))
        if cases.ndim != 2 or controls.ndim != 2:
            raise DataError("cases and controls must be 2-d")
        if cases.shape[0] < 1 or controls.shape[0] < 1:
            raise DataError("need at least one case and one control")
        if cases.shape[1] != controls.shape[1] or cases.shape[1] < 1:
            raise DataError(
                f"column mismatch: cases have {cases.shape[1]}, controls have {controls.shape[1]}"
            )
        if not (np.isfinite(cases).all() and np.isfinite(controls).all()):
            raise DataError("marker values must be finite")
        p = cases.shape[1]
        names = tuple(self.marker_names) or tuple(f"X{k + 1}" for k in range(p))
        if len(names) != p:
            raise DataError(f"expected {p} marker names, got {len(names)}")
        n1, n0 = cases.shape[0], controls.shape[0]
        case_rows = self.case_rows
        control_rows = self.control_rows
        if case_rows is None or control_rows is None:
            case_rows = np.arange(n1)
            control_rows = np.arange(n1, n1 + n0)
        case_rows = np.asarray(case_rows, dtype=np.int64)
        control_rows = np.asarray(control_rows, dtype=np.int64)
        if case_rows.shape != (n1,) or control_rows.shape != (n0,):
            raise DataError("row bookkeeping does not match matrix sizes")
        object.__setattr__(self, "cases", _frozen(cases))
        object.__setattr__(self, "controls", _frozen(controls))
        object.__setattr__(self, "marker_names", names)
        case_rows.setflags(write=False)
        control_rows.setflags(write=False)
        object.__setattr__(self, "case_rows", case_rows)
        object.__setattr__(self, "control_rows", control_rows)

    @property
    def n1(self) -> int:
        return self.cases.shape[0]

    @property
    def n0(self) -> int:
        return self.controls.shape[0]

    @property
    def n(self) -> int:
        return self.n1 + self.n0

    @property
    def p(self) -> int:
        return self.cases.shape[1]

    def pooled(self) -> np.ndarray:
        """All observations stacked, cases first."""
        return np.vstack([self.cases, self.controls])

    @classmethod
    def from_labeled(cls, X, y, marker_names: Sequence[str] = ()) -> "Dataset":
        X = np.atleast_2d(np.asarray(X, dtype=float))
        y = np.asarray(y).astype(bool).ravel()
        if X.shape[0] != y.shape[0]:
            raise DataError("X and y have different lengths")
        rows = np.arange(len(y))
        return cls(X[y], X[~y], tuple(marker_names), rows[y], rows[~y])

    def to_labeled(self) -> tuple[np.ndarray, np.ndarray]:
        """Rebuild ``(X, y)`` in original row order."""
        rows = np.concatenate([self.case_rows, self.control_rows])
        X = self.pooled()
        y = np.concatenate([np.ones(self.n1, bool), np.zeros(self.n0, bool)])
        order = np.argsort(rows, kind="stable")
        return X[order], y[order]


def load_csv(path, label_column: str, positive_label: str) -> Dataset:
    """Read a comma-separated file with a header row.

    Rows whose ``label_column`` equals ``positive_label`` become cases; every
    other column is parsed as a real-valued marker, in header order.
    """
    path = Path(path)
    if not path.is_file():
        raise FileNotFoundError(f"no such file: {path}")
    with path.open(newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = [h.strip() for h in next(reader)]
        except StopIteration:
            raise DataError(f"{path}: empty file") from None
        if label_column not in header:
            raise DataError(f"{path}: label column {label_column!r} not in header")
        li = header.index(label_column)
        marker_cols = [k for k in range(len(header)) if k != li]
        if not marker_cols:
            raise DataError(f"{path}: no marker columns")
        labels, values = [], []
        for r, row in enumerate(reader, start=2):
            if not row or all(not c.strip() for c in row):
                continue
            if len(row) != len(header):
                raise DataError(f"{path}: row {r} has {len(row)} fields, expected {len(header)}")
            labels.append(row[li].strip())
            parsed = []
            for k in marker_cols:
                try:
                    v = float(row[k])
                except ValueError:
                    raise DataError(
                        f"{path}: non-numeric value {row[k]!r} at row {r}, column {header[k]!r}"
                    ) from None
                if not math.isfinite(v):
                    raise DataError(f"{path}: non-finite value at row {r}, column {header[k]!r}")
                parsed.append(v)
            values.append(parsed)
    tokens = set(labels)
    if len(tokens) > 2:
        raise DataError(f"{path}: label column has {len(tokens)} distinct tokens, expected 2")
    y = np.array([lab == positive_label for lab in labels], dtype=bool)
    if y.sum() < 1 or (~y).sum() < 1:
        raise DataError(f"{path}: need at least one case and one control")
    return Dataset.from_labeled(np.array(values), y, [header[k] for k in marker_cols])


def write_csv(data: Dataset, path, label_column: str = "label") -> None:
    """Inverse of :func:`load_csv` with labels ``1`` (case) / ``0`` (control)."""
    X, y = data.to_labeled()
    with Path(path).open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow([*data.marker_names, label_column])
        for row, lab in zip(X, y):
            w.writerow([repr(float(v)) for v in row] + [int(lab)])


@dataclass(frozen=True)
class ScalingTransform:
    factors: np.ndarray
    train_derived: bool = True

    def __post_init__(self):
        f = _frozen(np.ravel(self.factors))
        if not (np.isfinite(f).all() and (f > 0).all()):
            raise DataError("scale factors must be positive and finite")
        object.__setattr__(self, "factors", f)

    def invert(self, data: Dataset) -> Dataset:
        """Undo :func:`apply_scaling`."""
        return _rescale(data, self.factors)


def fit_scaling(train: Dataset) -> ScalingTransform:
    """Pooled sample SD (n - 1 denominator) of each marker over cases and controls."""
    sd = train.pooled().std(axis=0, ddof=1) if train.n > 1 else np.zeros(train.p)
    bad = [name for name, s in zip(train.marker_names, sd) if not s > 0]
    if bad:
        raise DataError(f"zero-variance marker(s): {', '.join(bad)}")
    return ScalingTransform(sd, train_derived=True)


def _rescale(data: Dataset, mult: np.ndarray) -> Dataset:
    return Dataset(
        data.cases * mult, data.controls * mult, data.marker_names, data.case_rows, data.control_rows
    )


def apply_scaling(data: Dataset, transform: ScalingTransform) -> Dataset:
    if transform.factors.shape[0] != data.p:
        raise DataError(f"transform has {transform.factors.shape[0]} factors, data has p={data.p}")
    return _rescale(data, 1.0 / transform.factors)


@dataclass(frozen=True)
class SplitSpec:
    """Row indices (zero-based, original row order) forming the training set."""

    train_rows: tuple[int, ...]

    def __post_init__(self):
        rows = tuple(int(i) for i in self.train_rows)
        if len(set(rows)) != len(rows):
            raise DataError("duplicate indices in split")
        if any(i < 0 for i in rows):
            raise DataError("negative index in split")
        object.__setattr__(self, "train_rows", rows)

    @classmethod
    def read(cls, path) -> "SplitSpec":
        rows = []
        for ln, line in enumerate(Path(path).read_text().splitlines(), start=1):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            try:
                rows.append(int(line))
            except ValueError:
                raise DataError(f"{path}: line {ln} is not an integer index: {line!r}") from None
        return cls(tuple(rows))

    def write(self, path) -> None:
        Path(path).write_text("".join(f"{i}\n" for i in self.train_rows))

    @classmethod
    def random(cls, n: int, n_train: int, seed=None) -> "SplitSpec":
        rng = np.random.default_rng(seed)
        return cls(tuple(sorted(rng.choice(n, size=n_train, replace=False).tolist())))


def _subset(data: Dataset, X: np.ndarray, y: np.ndarray, keep: np.ndarray) -> Dataset:
    return Dataset.from_labeled(X[keep], y[keep], data.marker_names)


def split(data: Dataset, spec: SplitSpec) -> tuple[Dataset, Dataset]:
    """Partition ``data`` into ``(train, test)``; row order is preserved in both parts."""
    rows = np.asarray(spec.train_rows, dtype=np.int64)
    if rows.size and rows.max() >= data.n:
        raise DataError(f"split index {int(rows.max())} out of range for {data.n} rows")
    if rows.size == 0:
        raise DataError("split has an empty training set")
    if rows.size == data.n:
        raise DataError("split leaves an empty test set")
    X, y = data.to_labeled()
    keep = np.zeros(data.n, bool)
    keep[rows] = True
    for part, name in ((keep, "training"), (~keep, "test")):
        if not y[part].any() or y[part].all():
            raise DataError(f"{name} set needs at least one case and one control")
    return _subset(data, X, y, keep), _subset(data, X, y, ~keep)
