# Make the data module a package
# This allows imports like: from mtnet.data import impute_and_encode

from .cohort import (CATEGORICAL, NUMERIC, CohortSchema, ColumnSpec, EncodedCohort, RawCohort,
                     impute_and_encode, screen_columns)
from .splits import SplitIndices, largest_remainder, stratified_split, stratified_subsample
from .storage import (load_encoded, load_raw_cohort, load_schema, save_encoded, save_raw_cohort,
                      save_schema)
from .synthetic import ArchetypeTruth, SynthConfig, build_schema, generate_synthetic

__all__ = [
    'CATEGORICAL', 'NUMERIC', 'ArchetypeTruth', 'CohortSchema', 'ColumnSpec', 'EncodedCohort',
    'RawCohort', 'SplitIndices', 'SynthConfig', 'build_schema', 'generate_synthetic',
    'impute_and_encode', 'largest_remainder', 'load_encoded', 'load_raw_cohort', 'load_schema',
    'save_encoded', 'save_raw_cohort', 'save_schema', 'screen_columns', 'stratified_split',
    'stratified_subsample',
]
