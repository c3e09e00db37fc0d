"""
Cohort schema, raw longitudinal panels and their encoded numeric form.

A raw cohort is a long table with one row per (subject, wave). Encoding
fills missing numeric cells with the column mean and missing categorical
cells with the column mode (both pooled over all waves and subjects), then
expands categoricals to one-hot groups in schema order.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import List, Optional, Sequence, Tuple

import numpy as np
import pandas as pd

from ..exceptions import ParameterError, SchemaError, ShapeError
from ..losses import as_binary_labels

logger = logging.getLogger(__name__)

NUMERIC = "numeric"
CATEGORICAL = "categorical"
ID_COLUMNS = ("subject_id", "wave")


@dataclass(frozen=True)
class ColumnSpec:
    name: str
    kind: str
    categories: Tuple[str, ...] = ()

    def __post_init__(self):
        if self.kind not in (NUMERIC, CATEGORICAL):
            raise SchemaError(f"column {self.name!r} has unknown kind {self.kind!r}")
        object.__setattr__(self, "categories", tuple(str(c) for c in self.categories))
        if self.kind == CATEGORICAL:
            if len(self.categories) < 2:
                raise SchemaError(f"categorical column {self.name!r} needs at least 2 categories")
            if len(set(self.categories)) != len(self.categories):
                raise SchemaError(f"categorical column {self.name!r} repeats a category")
        elif self.categories:
            raise SchemaError(f"numeric column {self.name!r} cannot list categories")

    @property
    def width(self) -> int:
        return len(self.categories) if self.kind == CATEGORICAL else 1


@dataclass(frozen=True)
class CohortSchema:
    columns: Tuple[ColumnSpec, ...]
    waves: int

    def __post_init__(self):
        object.__setattr__(self, "columns", tuple(self.columns))
        names = [c.name for c in self.columns]
        if len(set(names)) != len(names):
            raise SchemaError("column names must be unique")
        if set(names) & set(ID_COLUMNS):
            raise SchemaError(f"column names {ID_COLUMNS} are reserved")
        if self.waves < 1:
            raise SchemaError(f"waves must be positive, got {self.waves}")

    @property
    def names(self) -> List[str]:
        return [c.name for c in self.columns]

    @property
    def encoded_dim(self) -> int:
        return sum(c.width for c in self.columns)

    def without(self, dropped: Sequence[str]) -> "CohortSchema":
        return CohortSchema(tuple(c for c in self.columns if c.name not in set(dropped)), self.waves)

    def to_dict(self) -> dict:
        return {
            "waves": self.waves,
            "columns": [
                {"name": c.name, "kind": c.kind, "categories": list(c.categories)} for c in self.columns
            ],
        }

    @classmethod
    def from_dict(cls, doc: dict) -> "CohortSchema":
        try:
            columns = tuple(
                ColumnSpec(str(c["name"]), str(c["kind"]), tuple(c.get("categories", ())))
                for c in doc["columns"]
            )
            return cls(columns, int(doc["waves"]))
        except (KeyError, TypeError) as e:
            raise SchemaError(f"malformed schema document: {e}") from e


@dataclass(eq=False)
class RawCohort:
    """Long-format panel: ``frame`` holds subject_id, wave and the schema columns; NaN/None marks missing"""
    subject_ids: List[str]
    frame: pd.DataFrame
    labels: np.ndarray

    def __post_init__(self):
        self.subject_ids = [str(s) for s in self.subject_ids]
        self.labels = as_binary_labels(self.labels)
        if self.labels.shape != (len(self.subject_ids),):
            raise SchemaError(f"{self.labels.size} labels for {len(self.subject_ids)} subjects")

    @property
    def n_subjects(self) -> int:
        return len(self.subject_ids)

    def missing_count(self, columns: Optional[Sequence[str]] = None) -> int:
        cols = list(columns) if columns is not None else [c for c in self.frame.columns if c not in ID_COLUMNS]
        return int(self.frame[cols].isna().sum().sum())

    def ordered(self, schema: CohortSchema) -> pd.DataFrame:
        """Rows sorted subject-major in ``subject_ids`` order, waves 1..w; validates shape"""
        missing_cols = [n for n in (*ID_COLUMNS, *schema.names) if n not in self.frame.columns]
        if missing_cols:
            raise SchemaError(f"raw data lacks columns {missing_cols}")
        frame = self.frame.copy()
        frame["subject_id"] = frame["subject_id"].astype(str)
        order = {sid: i for i, sid in enumerate(self.subject_ids)}
        unknown = set(frame["subject_id"]) - set(order)
        if unknown:
            raise SchemaError(f"rows for unlabelled subjects {sorted(unknown)[:5]}")
        frame["_order"] = frame["subject_id"].map(order)
        frame = frame.sort_values(["_order", "wave"], kind="mergesort").reset_index(drop=True)
        counts = frame.groupby("_order").size().reindex(range(self.n_subjects), fill_value=0)
        if not (counts == schema.waves).all():
            bad = counts[counts != schema.waves].index[:5]
            raise SchemaError(
                f"every subject needs exactly {schema.waves} waves; "
                f"subjects {[self.subject_ids[i] for i in bad]} do not"
            )
        expected = np.tile(np.arange(1, schema.waves + 1), self.n_subjects)
        if not np.array_equal(frame["wave"].to_numpy(dtype=np.int64), expected):
            raise SchemaError(f"waves must be numbered 1..{schema.waves} for every subject")
        return frame.drop(columns="_order")


@dataclass(eq=False)
class EncodedCohort:
    """N subjects x w waves x D encoded features with binary labels"""
    data: np.ndarray
    labels: np.ndarray
    feature_names: List[str]
    subject_ids: List[str] = field(default_factory=list)
    groups: List[Tuple[int, int]] = field(default_factory=list)

    def __post_init__(self):
        self.data = np.asarray(self.data, dtype=np.float64)
        self.labels = as_binary_labels(self.labels)
        if self.data.ndim != 3:
            raise ShapeError(f"encoded data must be N x w x D, got shape {self.data.shape}")
        if self.labels.shape != (self.data.shape[0],):
            raise ShapeError(f"{self.labels.size} labels for {self.data.shape[0]} subjects")
        if len(self.feature_names) != self.data.shape[2]:
            raise ShapeError(f"{len(self.feature_names)} feature names for {self.data.shape[2]} features")
        if not np.all(np.isfinite(self.data)):
            raise SchemaError("encoded data contains missing or non-finite values")
        if not self.subject_ids:
            self.subject_ids = [f"S{i:05d}" for i in range(self.data.shape[0])]
        if not self.groups:
            self.groups = [(j, j + 1) for j in range(self.data.shape[2])]
        self.groups = [(int(a), int(b)) for a, b in self.groups]

    @property
    def N(self) -> int:
        return self.data.shape[0]

    @property
    def w(self) -> int:
        return self.data.shape[1]

    @property
    def D(self) -> int:
        return self.data.shape[2]

    @property
    def n_positive(self) -> int:
        return int(self.labels.sum())

    def subset(self, indices) -> "EncodedCohort":
        idx = np.asarray(indices, dtype=np.int64)
        return EncodedCohort(
            self.data[idx],
            self.labels[idx],
            list(self.feature_names),
            [self.subject_ids[i] for i in idx],
            list(self.groups),
        )

    def window(self, n_waves: int) -> "EncodedCohort":
        """Keep the first ``n_waves`` waves"""
        if not 1 <= n_waves <= self.w:
            raise ParameterError(f"window of {n_waves} waves is outside 1..{self.w}")
        return EncodedCohort(
            self.data[:, :n_waves], self.labels, list(self.feature_names), list(self.subject_ids), list(self.groups)
        )


def screen_columns(raw: RawCohort, schema: CohortSchema, max_missing: float = 0.5) -> CohortSchema:
    """Schema without the columns whose missing fraction exceeds ``max_missing``"""
    if not 0.0 <= max_missing <= 1.0:
        raise ParameterError(f"max_missing must lie in [0, 1], got {max_missing}")
    fractions = raw.frame[schema.names].isna().mean()
    dropped = [name for name in schema.names if fractions[name] > max_missing]
    if dropped:
        logger.warning("Dropping %d columns with more than %.0f%% missing: %s",
                       len(dropped), 100 * max_missing, dropped[:10])
    return schema.without(dropped)


def _encode_numeric(values: pd.Series, name: str) -> np.ndarray:
    try:
        col = pd.to_numeric(values, errors="raise").to_numpy(dtype=np.float64)
    except (ValueError, TypeError) as e:
        raise SchemaError(f"numeric column {name!r} holds a non-numeric value: {e}") from e
    present = ~np.isnan(col)
    if not present.any():
        logger.warning("Column %s has no observed values; filling with 0", name)
        fill = 0.0
    else:
        fill = col[present].mean()
    return np.where(present, col, fill)[:, np.newaxis]


def _encode_categorical(values: pd.Series, spec: ColumnSpec) -> np.ndarray:
    present = values.notna().to_numpy()
    as_text = values[present].astype(str)
    unknown = sorted(set(as_text) - set(spec.categories))
    if unknown:
        raise SchemaError(f"column {spec.name!r} has unknown category {unknown[0]!r}")
    codes = np.full(len(values), -1, dtype=np.int64)
    codes[present] = pd.Categorical(as_text, categories=list(spec.categories)).codes
    counts = np.bincount(codes[present], minlength=len(spec.categories))
    # argmax picks the first category among ties
    codes[~present] = int(np.argmax(counts))
    return np.eye(len(spec.categories))[codes]


def impute_and_encode(raw: RawCohort, schema: CohortSchema, screen_missing: bool = False,
                      max_missing: float = 0.5) -> EncodedCohort:
    if screen_missing:
        schema = screen_columns(raw, schema, max_missing)
    frame = raw.ordered(schema)
    blocks, names, groups = [], [], []
    start = 0
    for spec in schema.columns:
        if spec.kind == NUMERIC:
            block = _encode_numeric(frame[spec.name], spec.name)
            names.append(spec.name)
        else:
            block = _encode_categorical(frame[spec.name], spec)
            names.extend(f"{spec.name}={cat}" for cat in spec.categories)
        blocks.append(block)
        groups.append((start, start + spec.width))
        start += spec.width
    flat = np.hstack(blocks) if blocks else np.zeros((len(frame), 0))
    data = flat.reshape(raw.n_subjects, schema.waves, start)
    logger.info("Encoded %d subjects x %d waves into %d features", raw.n_subjects, schema.waves, start)
    return EncodedCohort(data, raw.labels, names, list(raw.subject_ids), groups)
