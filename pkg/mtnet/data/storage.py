"""
On-disk cohort formats.

A raw cohort directory holds ``schema.json`` (columns, kinds, categories,
waves), ``raw.csv`` (one row per subject and wave: subject_id, wave, then the
schema columns; an empty field marks a missing cell) and ``labels.csv``
(subject_id, label). The generator also writes ``archetypes.csv``.

An encoded cohort is one binary file: the 8-byte magic ``MTCOHORT``, a
version byte, the JSON header length as little-endian uint64, the JSON header
(N, w, D, feature_names, labels, subject_ids, groups), then the N x w x D
values as little-endian float64 in C order.
"""

import json
import logging
from pathlib import Path

import numpy as np
import pandas as pd

from ..exceptions import CheckpointError, DataFileError, SchemaError
from ..utils.helpers import read_container, write_container
from .cohort import NUMERIC, CohortSchema, EncodedCohort, RawCohort

logger = logging.getLogger(__name__)

SCHEMA_FILE = "schema.json"
RAW_FILE = "raw.csv"
LABELS_FILE = "labels.csv"
ARCHETYPES_FILE = "archetypes.csv"
COHORT_MAGIC = b"MTCOHORT"
COHORT_VERSION = 1


def save_schema(schema: CohortSchema, path):
    try:
        Path(path).write_text(json.dumps(schema.to_dict(), indent=2))
    except OSError as e:
        raise DataFileError(f"cannot write {path}: {e}") from e


def load_schema(path) -> CohortSchema:
    try:
        doc = json.loads(Path(path).read_text())
    except OSError as e:
        raise DataFileError(f"cannot read schema {path}: {e}") from e
    except ValueError as e:
        raise SchemaError(f"schema {path} is not valid JSON: {e}") from e
    return CohortSchema.from_dict(doc)


def save_raw_cohort(raw: RawCohort, schema: CohortSchema, directory, truth=None):
    """Write schema, panel, labels and (optionally) archetype truth into ``directory``"""
    directory = Path(directory)
    try:
        directory.mkdir(parents=True, exist_ok=True)
        save_schema(schema, directory / SCHEMA_FILE)
        raw.ordered(schema)[["subject_id", "wave", *schema.names]].to_csv(directory / RAW_FILE, index=False)
        pd.DataFrame({"subject_id": raw.subject_ids, "label": raw.labels}).to_csv(
            directory / LABELS_FILE, index=False
        )
        if truth is not None:
            truth.to_frame(raw.subject_ids).to_csv(directory / ARCHETYPES_FILE, index=False)
    except OSError as e:
        raise DataFileError(f"cannot write cohort files into {directory}: {e}") from e
    logger.info("Wrote raw cohort to %s", directory)


def load_raw_cohort(directory):
    """Read a directory written by save_raw_cohort; returns ``(raw, schema)``"""
    directory = Path(directory)
    for name in (SCHEMA_FILE, RAW_FILE, LABELS_FILE):
        if not (directory / name).is_file():
            raise DataFileError(f"cohort directory {directory} lacks {name}")
    schema = load_schema(directory / SCHEMA_FILE)
    dtypes = {"subject_id": str, "wave": np.int64}
    dtypes.update({c.name: (np.float64 if c.kind == NUMERIC else object) for c in schema.columns})
    try:
        frame = pd.read_csv(directory / RAW_FILE, dtype=dtypes, keep_default_na=False, na_values=[""])
        labels = pd.read_csv(directory / LABELS_FILE, dtype={"subject_id": str, "label": np.int64})
    except (ValueError, pd.errors.ParserError) as e:
        raise SchemaError(f"cannot parse cohort files in {directory}: {e}") from e
    raw = RawCohort(labels["subject_id"].tolist(), frame, labels["label"].to_numpy())
    return raw, schema


def save_encoded(encoded: EncodedCohort, path):
    meta = {
        "N": encoded.N,
        "w": encoded.w,
        "D": encoded.D,
        "feature_names": list(encoded.feature_names),
        "labels": encoded.labels.tolist(),
        "subject_ids": list(encoded.subject_ids),
        "groups": [list(g) for g in encoded.groups],
    }
    write_container(path, COHORT_MAGIC, COHORT_VERSION, meta, {"data": encoded.data})


def load_encoded(path) -> EncodedCohort:
    try:
        meta, arrays = read_container(path, COHORT_MAGIC, COHORT_VERSION)
    except CheckpointError as e:
        raise DataFileError(f"cannot load encoded cohort: {e}") from e
    data = arrays.get("data")
    if data is None or data.shape != tuple(meta.get(k) for k in ("N", "w", "D")):
        raise DataFileError(f"encoded cohort {path} payload does not match its header")
    try:
        return EncodedCohort(data, np.asarray(meta["labels"]), meta["feature_names"],
                             meta["subject_ids"], [tuple(g) for g in meta["groups"]])
    except (KeyError, TypeError) as e:
        raise DataFileError(f"encoded cohort {path} has a malformed header: {e}") from e
