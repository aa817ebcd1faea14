"""Dataset ingestion and trace serialization.

LIBSVM sparse text is materialized into dense arrays (the problems build
dense Hessians anyway and d stays small).  Labels are normalized to
{+1, -1} whatever the source encoding.  Trace CSV rendering uses 17
significant digits so every float survives a write/read round trip
bit-exactly.
"""

from __future__ import annotations

import io
import math
import os
from dataclasses import dataclass, replace

import numpy as np

from .solver import IterationRecord, Trace


class ParseError(ValueError):
    """Malformed input; carries the 1-based line number."""

    def __init__(self, line_no, message):
        super().__init__(f"line {line_no}: {message}")
        self.line_no = line_no


class FeatureIndexError(ParseError):
    """Feature index out of order, zero, or beyond a fixed dimension."""


class ColumnOutOfRange(ValueError):
    """Requested feature column does not exist."""


@dataclass(frozen=True)
class Dataset:
    """Dense binary-classification dataset.

    ``labels`` and the optional ``protected`` attribute are +1/-1 integer
    arrays of length m.  ``notes`` records provenance events such as
    protected-column extraction or scaling.
    """

    features: np.ndarray
    labels: np.ndarray
    protected: np.ndarray | None = None
    source: str = "<memory>"
    notes: tuple[str, ...] = ()

    @property
    def m(self) -> int:
        return self.features.shape[0]

    @property
    def n_features(self) -> int:
        return self.features.shape[1]


def parse_libsvm(lines, n_features=None) -> Dataset:
    """Parse LIBSVM sparse text: ``<label> <index>:<value> ...`` per line.

    Indices are 1-based and must be strictly increasing within a line.
    Blank lines are skipped and ``#`` starts a comment.  Labels map to +1
    when positive and -1 otherwise (covers {0,1} encodings).  The feature
    dimension is the largest index seen unless ``n_features`` fixes it.
    """
    if isinstance(lines, str):
        lines = io.StringIO(lines)
    rows = []
    max_index = 0
    for line_no, raw in enumerate(lines, start=1):
        text = raw.split("#", 1)[0].strip()
        if not text:
            continue
        tokens = text.split()
        try:
            label_value = float(tokens[0])
        except ValueError:
            raise ParseError(line_no, f"bad label token {tokens[0]!r}") from None
        if not math.isfinite(label_value):
            raise ParseError(line_no, f"non-finite label {tokens[0]!r}")
        label = 1 if label_value > 0 else -1

        indices = []
        values = []
        prev = 0
        for token in tokens[1:]:
            try:
                index_text, value_text = token.split(":", 1)
                index = int(index_text)
                value = float(value_text)
            except ValueError:
                raise ParseError(line_no, f"bad feature token {token!r}") from None
            if index < 1:
                raise FeatureIndexError(line_no, f"feature index {index} must be >= 1")
            if index <= prev:
                raise FeatureIndexError(
                    line_no, f"feature index {index} not increasing (previous {prev})")
            if n_features is not None and index > n_features:
                raise FeatureIndexError(
                    line_no, f"feature index {index} exceeds fixed dimension {n_features}")
            if not math.isfinite(value):
                raise ParseError(line_no, f"non-finite value in token {token!r}")
            prev = index
            indices.append(index)
            values.append(value)
        max_index = max(max_index, prev)
        rows.append((label, indices, values))

    if not rows:
        raise ParseError(0, "no data rows found")
    d = n_features if n_features is not None else max_index
    features = np.zeros((len(rows), d))
    labels = np.empty(len(rows), dtype=np.int64)
    for i, (label, indices, values) in enumerate(rows):
        labels[i] = label
        for index, value in zip(indices, values):
            features[i, index - 1] = value
    return Dataset(features=features, labels=labels)


def load_libsvm(path, n_features=None) -> Dataset:
    with open(path, "r", encoding="utf-8") as handle:
        ds = parse_libsvm(handle, n_features=n_features)
    return replace(ds, source=str(path))


def format_libsvm(ds: Dataset) -> str:
    """Serialize back to LIBSVM text (zeros omitted, 17 significant digits)."""
    lines = []
    for i in range(ds.m):
        parts = ["+1" if ds.labels[i] > 0 else "-1"]
        row = ds.features[i]
        for j in np.nonzero(row)[0]:
            parts.append(f"{j + 1}:{row[j]:.17g}")
        lines.append(" ".join(parts))
    return "\n".join(lines) + "\n"


def extract_protected(ds: Dataset, column: int) -> Dataset:
    """Move one feature column into the protected attribute.

    The column is removed from the feature matrix and thresholded
    (> 0 maps to +1, else -1).  The removal is recorded in ``notes`` so
    later column indices can be interpreted.
    """
    if not 0 <= column < ds.n_features:
        raise ColumnOutOfRange(
            f"column {column} out of range for {ds.n_features} features")
    protected = np.where(ds.features[:, column] > 0, 1, -1).astype(np.int64)
    features = np.delete(ds.features, column, axis=1)
    note = f"protected attribute extracted from feature column {column}"
    return replace(ds, features=features, protected=protected,
                   notes=ds.notes + (note,))


def synth_binary(seed, m, d, positive_fraction=0.5, separation=1.0,
                 protected_col=None) -> Dataset:
    """Seeded Gaussian class-conditional dataset.

    Class means sit ``separation`` apart along the normalized all-ones
    direction; the positive count is exactly round(positive_fraction * m).
    When ``protected_col`` is given, a protected attribute is derived from
    the sign of that feature (and therefore correlated with it).
    """
    if m < 2:
        raise ValueError(f"m must be at least 2, got {m}")
    if not 0.0 < positive_fraction < 1.0:
        raise ValueError(f"positive_fraction must be in (0, 1), got {positive_fraction}")
    if separation < 0:
        raise ValueError(f"separation must be non-negative, got {separation}")
    rng = np.random.default_rng(seed)
    n_pos = int(round(positive_fraction * m))
    n_pos = min(max(n_pos, 1), m - 1)
    labels = np.concatenate([np.ones(n_pos, dtype=np.int64),
                             -np.ones(m - n_pos, dtype=np.int64)])
    labels = labels[rng.permutation(m)]
    shift = (separation / 2.0) / np.sqrt(d)
    features = rng.standard_normal((m, d)) + labels[:, None] * shift
    protected = None
    notes = ()
    if protected_col is not None:
        if not 0 <= protected_col < d:
            raise ColumnOutOfRange(
                f"protected_col {protected_col} out of range for {d} features")
        protected = np.where(features[:, protected_col] > 0, 1, -1).astype(np.int64)
        notes = (f"protected attribute derived from feature column {protected_col}",)
    return Dataset(features=features, labels=labels, protected=protected,
                   source=f"<synthetic seed={seed}>", notes=notes)


def minmax_scale(ds: Dataset) -> Dataset:
    """Per-feature min-max scaling to [0, 1]; constant columns map to 0."""
    lo = ds.features.min(axis=0)
    hi = ds.features.max(axis=0)
    span = hi - lo
    span[span == 0] = 1.0
    features = (ds.features - lo) / span
    return replace(ds, features=features, notes=ds.notes + ("min-max scaled",))


TRACE_HEADER = "iter,lambda,r,step_time_ms,skipped_updates,eta"


def _fmt(x: float) -> str:
    return f"{x:.17g}"


def write_trace_csv(trace: Trace, sink) -> None:
    """Write one row per iteration record plus a terminal status comment.

    Floats are rendered with 17 significant digits (bit-exact round trip);
    the eta column is empty when the diagnostic was not tracked.
    """
    own = isinstance(sink, (str, os.PathLike))
    handle = open(sink, "w", encoding="utf-8", newline="") if own else sink
    try:
        handle.write(TRACE_HEADER + "\n")
        for rec in trace.records:
            eta = "" if rec.eta is None else _fmt(rec.eta)
            handle.write(
                f"{rec.k},{_fmt(rec.grad_norm)},{_fmt(rec.step_norm)},"
                f"{_fmt(rec.step_time_ms)},{rec.skipped_updates},{eta}\n")
        handle.write(f"# status={trace.status}\n")
    finally:
        if own:
            handle.close()


def read_trace_csv(source) -> tuple[list[IterationRecord], str]:
    """Parse a trace CSV back into records and the terminal status."""
    own = isinstance(source, (str, os.PathLike))
    handle = open(source, "r", encoding="utf-8") if own else source
    try:
        lines = handle.read().splitlines()
    finally:
        if own:
            handle.close()
    if not lines or lines[0] != TRACE_HEADER:
        raise ParseError(1, "missing trace header")
    records = []
    status = None
    for line_no, line in enumerate(lines[1:], start=2):
        if line.startswith("# status="):
            status = line[len("# status="):]
            continue
        if not line.strip():
            continue
        parts = line.split(",")
        if len(parts) != 6:
            raise ParseError(line_no, f"expected 6 columns, got {len(parts)}")
        records.append(IterationRecord(
            k=int(parts[0]),
            grad_norm=float(parts[1]),
            step_norm=float(parts[2]),
            step_time_ms=float(parts[3]),
            skipped_updates=int(parts[4]),
            eta=None if parts[5] == "" else float(parts[5]),
        ))
    if status is None:
        raise ParseError(len(lines), "missing status line")
    return records, status
