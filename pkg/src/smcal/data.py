"""Observations, propensity handling, and contrast-weight construction.

A :class:`Dataset` holds per-subject outcome ``y``, binary treatment ``a``
and covariates ``x``.  The contrast weight of subject ``i`` is

    w_i = (y_i - v_i) * (a_i - pi_i) / (pi_i * (1 - pi_i))

where ``pi_i`` is the treatment propensity and ``v_i`` a treatment-free
baseline, by default the mean outcome of the control (a = 0) subjects.
``w_i`` is an unbiased single-subject estimate of the treatment contrast and
drives every pairwise objective downstream.
"""

import csv
from dataclasses import dataclass

import numpy as np

from .exceptions import (
    DegenerateBaselineError,
    OverlapError,
    ParseError,
    ValidationError,
)

BASELINE_KINDS = ("zero", "control-mean")


def _freeze(arr):
    arr = np.ascontiguousarray(arr, dtype=float)
    arr.flags.writeable = False
    return arr


@dataclass(frozen=True)
class Dataset:
    """Validated (y, a, x) observations; immutable after construction."""

    y: np.ndarray
    a: np.ndarray
    x: np.ndarray

    def __post_init__(self):
        y = np.asarray(self.y, dtype=float)
        a = np.asarray(self.a, dtype=float)
        x = np.asarray(self.x, dtype=float)
        if y.ndim != 1 or a.ndim != 1 or x.ndim != 2:
            raise ValidationError("expected y (n,), a (n,), x (n, d)")
        n = y.shape[0]
        if n == 0:
            raise ValidationError("dataset has no rows")
        if a.shape[0] != n or x.shape[0] != n:
            raise ValidationError(
                f"length mismatch: y has {n} rows, a has {a.shape[0]}, x has {x.shape[0]}"
            )
        if x.shape[1] < 1:
            raise ValidationError("need at least one covariate column")
        for name, arr in (("y", y), ("a", a), ("x", x)):
            bad = ~np.isfinite(arr)
            if bad.any():
                row = int(np.argwhere(bad)[0][0])
                raise ValidationError(f"non-finite value in {name} at row {row}")
        bad = (a != 0.0) & (a != 1.0)
        if bad.any():
            row = int(np.argmax(bad))
            raise ValidationError(f"a must be 0 or 1 exactly; offending row {row}")
        object.__setattr__(self, "y", _freeze(y))
        object.__setattr__(self, "a", _freeze(a))
        object.__setattr__(self, "x", _freeze(x))

    @property
    def n(self):
        return self.y.shape[0]

    @property
    def d(self):
        return self.x.shape[1]

    def subset(self, idx):
        """Row-indexed view (copy) used by cross-validation and resampling."""
        idx = np.asarray(idx)
        return Dataset(self.y[idx], self.a[idx], self.x[idx])


@dataclass(frozen=True)
class Propensity:
    """Treatment propensity pi(x) = P(a = 1 | x), strictly inside (0, 1).

    ``kind`` is one of ``constant`` (one shared probability), ``vector``
    (per-subject values) or ``empirical`` (mean of the treatment indicator,
    resolved against the dataset at evaluation time).
    """

    kind: str
    value: object = None

    @classmethod
    def constant(cls, p):
        p = float(p)
        if not (0.0 < p < 1.0):
            raise OverlapError(f"constant propensity must lie in (0, 1), got {p}")
        return cls("constant", p)

    @classmethod
    def vector(cls, values):
        values = _freeze(np.asarray(values, dtype=float))
        if values.ndim != 1:
            raise ValidationError("propensity vector must be one-dimensional")
        if not np.all(np.isfinite(values)):
            raise ValidationError("propensity vector has non-finite entries")
        if np.any(values <= 0.0) or np.any(values >= 1.0):
            row = int(np.argmax((values <= 0.0) | (values >= 1.0)))
            raise OverlapError(f"propensity at row {row} is outside (0, 1)")
        return cls("vector", values)

    @classmethod
    def empirical(cls):
        return cls("empirical")

    def scores(self, data: Dataset) -> np.ndarray:
        """Per-subject pi values aligned with ``data`` rows."""
        if self.kind == "constant":
            return np.full(data.n, self.value)
        if self.kind == "vector":
            if len(self.value) != data.n:
                raise ValidationError(
                    f"propensity vector has {len(self.value)} entries for {data.n} subjects"
                )
            return np.asarray(self.value)
        if self.kind == "empirical":
            p = float(np.mean(data.a))
            if not (0.0 < p < 1.0):
                raise OverlapError("empirical propensity degenerate: all subjects share one arm")
            return np.full(data.n, p)
        raise ValidationError(f"unknown propensity kind {self.kind!r}")


@dataclass(frozen=True)
class ContrastWeights:
    """Per-subject contrast estimates ``w`` and the baseline values used."""

    w: np.ndarray
    baseline_v: np.ndarray

    def __post_init__(self):
        w = _freeze(np.asarray(self.w, dtype=float))
        v = _freeze(np.asarray(self.baseline_v, dtype=float))
        if w.shape != v.shape or w.ndim != 1:
            raise ValidationError("w and baseline_v must be matching vectors")
        if not np.all(np.isfinite(w)):
            raise ValidationError("contrast weights must be finite")
        object.__setattr__(self, "w", w)
        object.__setattr__(self, "baseline_v", v)


def contrast_weights(data: Dataset, prop: Propensity, baseline="control-mean") -> ContrastWeights:
    """Compute w_i = (y_i - v_i)(a_i - pi_i) / (pi_i (1 - pi_i)).

    ``baseline`` selects v: ``"zero"``, ``"control-mean"`` (mean outcome over
    the a = 0 subjects, the recommended default) or a user-supplied vector.
    """
    pi = prop.scores(data)
    if np.any(pi <= 0.0) or np.any(pi >= 1.0):
        raise OverlapError("propensity scores must lie strictly inside (0, 1)")
    if isinstance(baseline, str):
        if baseline == "zero":
            v = np.zeros(data.n)
        elif baseline == "control-mean":
            control = data.a == 0.0
            if not control.any():
                raise DegenerateBaselineError(
                    "control-mean baseline requested but no subject has a = 0"
                )
            v = np.full(data.n, float(np.mean(data.y[control])))
        else:
            raise ValidationError(f"unknown baseline {baseline!r}; expected {BASELINE_KINDS} or a vector")
    else:
        v = np.asarray(baseline, dtype=float)
        if v.shape != (data.n,):
            raise ValidationError(f"baseline vector must have length {data.n}")
        if not np.all(np.isfinite(v)):
            raise ValidationError("baseline vector has non-finite entries")
    w = (data.y - v) * (data.a - pi) / (pi * (1.0 - pi))
    return ContrastWeights(w=w, baseline_v=v)


def _expected_header(d):
    return ["y", "a"] + [f"x{j}" for j in range(1, d + 1)]


def load_dataset(path) -> Dataset:
    """Read a ``y,a,x1,...,xd`` CSV file into a validated :class:`Dataset`.

    Raises :class:`ParseError` (with the file line and column name) for
    malformed cells and :class:`ValidationError` for invariant violations.
    """
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise ParseError(f"{path}: file is empty") from None
        header = [h.strip() for h in header]
        if len(header) < 3 or header[:2] != ["y", "a"]:
            raise ParseError(f"{path}: header must be y,a,x1,...,xd, got {header[:3]}...")
        d = len(header) - 2
        if header != _expected_header(d):
            raise ParseError(f"{path}: covariate columns must be named x1..x{d} in order")
        y, a, x = [], [], []
        for line_no, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != d + 2:
                raise ParseError(f"{path}: line {line_no} has {len(row)} cells, expected {d + 2}")
            values = []
            for col_name, cell in zip(header, row):
                try:
                    values.append(float(cell))
                except ValueError:
                    raise ParseError(
                        f"{path}: line {line_no}, column {col_name}: not a number: {cell!r}"
                    ) from None
            if not np.isfinite(values).all():
                raise ValidationError(f"{path}: line {line_no} contains a non-finite value")
            if values[1] not in (0.0, 1.0):
                raise ValidationError(
                    f"{path}: line {line_no}: treatment must be 0 or 1, got {values[1]}"
                )
            y.append(values[0])
            a.append(values[1])
            x.append(values[2:])
    if not y:
        raise ValidationError(f"{path}: no data rows")
    return Dataset(y=np.array(y), a=np.array(a), x=np.array(x))


def save_dataset(data: Dataset, path) -> None:
    """Write a dataset in the ``y,a,x1,...,xd`` format read by load_dataset."""
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(_expected_header(data.d))
        for i in range(data.n):
            row = [repr(float(data.y[i])), int(data.a[i])]
            row += [repr(float(v)) for v in data.x[i]]
            writer.writerow(row)
