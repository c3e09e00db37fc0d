"""
Synthetic longitudinal cohort with several planted causes of the positive class.

Every subject has a stable per-column baseline plus autocorrelated wave-to-wave
noise. Each positive belongs to one archetype; an archetype shifts its own
disjoint set of columns with a trend that grows towards the last wave.
Categorical columns are read off a latent value through fixed Gaussian
quantile cut points, so shifts reach them too.
"""

from __future__ import annotations

import logging
import math
from dataclasses import asdict, dataclass
from typing import List, Tuple

import numpy as np
import pandas as pd
from scipy.stats import norm

from ..diffcore import make_rng
from ..exceptions import SynthConfigError
from .cohort import CATEGORICAL, NUMERIC, CohortSchema, ColumnSpec, RawCohort

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class SynthConfig:
    n_subjects: int = 4000
    waves: int = 5
    n_numeric: int = 60
    n_categorical: int = 30
    categories: int = 3
    n_archetypes: int = 5
    positive_rate: float = 0.06
    relevant_fraction: float = 0.1
    trend_strength: float = 2.5
    baseline_sigma: float = 0.5
    noise_sigma: float = 1.0
    autocorrelation: float = 0.5
    missing_rate: float = 0.05
    seed: int = 0

    def __post_init__(self):
        if self.n_subjects < 1 or self.waves < 1:
            raise SynthConfigError("n_subjects and waves must be positive")
        if self.n_numeric < 0 or self.n_categorical < 0 or self.n_numeric + self.n_categorical < 1:
            raise SynthConfigError("the cohort needs at least one column")
        if self.categories < 2:
            raise SynthConfigError(f"categorical columns need at least 2 categories, got {self.categories}")
        if not 0.0 < self.positive_rate < 0.5:
            raise SynthConfigError(f"positive_rate must lie in (0, 0.5), got {self.positive_rate}")
        if self.n_archetypes < 2:
            raise SynthConfigError(f"n_archetypes must be at least 2, got {self.n_archetypes}")
        if not 0.0 < self.relevant_fraction <= 1.0:
            raise SynthConfigError(f"relevant_fraction must lie in (0, 1], got {self.relevant_fraction}")
        if self.trend_strength < 0 or self.baseline_sigma < 0 or self.noise_sigma < 0:
            raise SynthConfigError("trend_strength, baseline_sigma and noise_sigma must be non-negative")
        if not 0.0 <= self.autocorrelation < 1.0:
            raise SynthConfigError(f"autocorrelation must lie in [0, 1), got {self.autocorrelation}")
        if not 0.0 <= self.missing_rate < 1.0:
            raise SynthConfigError(f"missing_rate must lie in [0, 1), got {self.missing_rate}")

    @property
    def n_columns(self) -> int:
        return self.n_numeric + self.n_categorical

    @property
    def relevant_per_archetype(self) -> int:
        return max(1, math.ceil(self.relevant_fraction * self.n_columns))

    @property
    def n_positive(self) -> int:
        return int(math.floor(self.positive_rate * self.n_subjects + 0.5))

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass(eq=False)
class ArchetypeTruth:
    """Archetype id per subject (-1 for negatives) and the columns each archetype perturbs"""
    assignment: np.ndarray
    columns: List[List[str]]

    def to_frame(self, subject_ids) -> pd.DataFrame:
        return pd.DataFrame({"subject_id": list(subject_ids), "archetype": self.assignment})


def build_schema(cfg: SynthConfig) -> CohortSchema:
    levels = tuple(f"level_{k}" for k in range(cfg.categories))
    columns = [ColumnSpec(f"num_{j:03d}", NUMERIC) for j in range(cfg.n_numeric)]
    columns += [ColumnSpec(f"cat_{j:03d}", CATEGORICAL, levels) for j in range(cfg.n_categorical)]
    return CohortSchema(tuple(columns), cfg.waves)


def generate_synthetic(cfg: SynthConfig) -> Tuple[RawCohort, CohortSchema, ArchetypeTruth]:
    r, K, C = cfg.relevant_per_archetype, cfg.n_archetypes, cfg.n_columns
    if r * K > C:
        raise SynthConfigError(
            f"{K} archetypes x {r} relevant columns need {r * K} columns, the cohort has {C}"
        )
    rng = make_rng(cfg.seed)
    N, w = cfg.n_subjects, cfg.waves
    schema = build_schema(cfg)

    labels = np.zeros(N, dtype=np.int64)
    positives = np.sort(rng.permutation(N)[:cfg.n_positive])
    labels[positives] = 1
    assignment = np.full(N, -1, dtype=np.int64)
    assignment[positives] = rng.permutation(np.arange(positives.size) % K)

    column_order = rng.permutation(C)
    subsets = [np.sort(column_order[k * r:(k + 1) * r]) for k in range(K)]
    signs = rng.choice(np.array([-1.0, 1.0]), size=(K, r))

    latent = np.empty((N, w, C))
    baseline = cfg.baseline_sigma * rng.standard_normal((N, C))
    rho = cfg.autocorrelation
    noise = cfg.noise_sigma * rng.standard_normal((N, C))
    for t in range(w):
        if t > 0:
            noise = rho * noise + cfg.noise_sigma * math.sqrt(1.0 - rho * rho) * rng.standard_normal((N, C))
        latent[:, t, :] = baseline + noise

    ramp = (np.arange(1, w + 1) / w)[np.newaxis, :, np.newaxis]
    for k in range(K):
        members = np.flatnonzero(assignment == k)
        shift = cfg.trend_strength * ramp * signs[k][np.newaxis, np.newaxis, :]
        latent[np.ix_(members, np.arange(w), subsets[k])] += shift

    missing = rng.random((N, w, C)) < cfg.missing_rate

    flat = latent.reshape(N * w, C)
    flat_missing = missing.reshape(N * w, C)
    subject_ids = [f"S{i:05d}" for i in range(N)]
    columns = {
        "subject_id": np.repeat(subject_ids, w),
        "wave": np.tile(np.arange(1, w + 1), N),
    }
    spread = math.sqrt(cfg.baseline_sigma ** 2 + cfg.noise_sigma ** 2)
    cuts = spread * norm.ppf(np.arange(1, cfg.categories) / cfg.categories)
    levels = np.array(schema.columns[-1].categories if cfg.n_categorical else [], dtype=object)
    for j, spec in enumerate(schema.columns):
        if spec.kind == NUMERIC:
            values = np.round(flat[:, j], 6)
            columns[spec.name] = np.where(flat_missing[:, j], np.nan, values)
        else:
            values = levels[np.searchsorted(cuts, flat[:, j])].astype(object)
            values[flat_missing[:, j]] = None
            columns[spec.name] = values

    raw = RawCohort(subject_ids, pd.DataFrame(columns), labels)
    names = schema.names
    truth = ArchetypeTruth(assignment, [[names[j] for j in subset] for subset in subsets])
    logger.info("Generated %d subjects (%d positive, %d archetypes) over %d waves and %d columns",
                N, positives.size, K, w, C)
    return raw, schema, truth
