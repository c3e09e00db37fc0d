"""Error types raised across the mtnet package."""


class MTNetError(Exception):
    """Base class for every error raised by mtnet"""


class ShapeError(MTNetError, ValueError):
    """Operand shapes do not conform"""


class ParameterError(MTNetError, ValueError):
    """A numeric parameter is outside its valid range"""


class EvaluationError(MTNetError, ArithmeticError):
    """A function evaluated to a non-finite value"""


class ConsistencyError(MTNetError, ValueError):
    """A forward trace does not belong to the parameters it is replayed with"""


class LabelError(MTNetError, ValueError):
    """Labels are not binary"""


class BatchError(MTNetError, ValueError):
    """A batch is empty or malformed"""


class DivergenceError(MTNetError, ArithmeticError):
    """Training produced a non-finite loss or gradient"""

    def __init__(self, message, epoch=None, batch=None):
        if epoch is not None:
            message = f"{message} (epoch {epoch}, batch {batch})"
        super().__init__(message)
        self.epoch = epoch
        self.batch = batch


class SchemaError(MTNetError, ValueError):
    """Raw data does not conform to its cohort schema"""


class StratificationError(MTNetError, ValueError):
    """A class is too small to be split"""


class SynthConfigError(MTNetError, ValueError):
    """The synthetic cohort configuration cannot be realised"""


class SamplingError(MTNetError, ValueError):
    """Balanced sampling is impossible for the given labels"""


class AugmentationError(MTNetError, ValueError):
    """Not enough positives to augment"""


class SubsampleError(MTNetError, ValueError):
    """A training fraction leaves a class empty"""


class MetricError(MTNetError, ValueError):
    """A metric is undefined for the given labels"""


class AggregationError(MTNetError, ValueError):
    """Nothing to aggregate"""


class CheckpointError(MTNetError):
    """A checkpoint cannot be read"""


class CorruptCheckpointError(CheckpointError):
    """The file is truncated or its contents are malformed"""


class CheckpointVersionError(CheckpointError):
    """The file was written by an unsupported format version"""

    def __init__(self, found, expected):
        super().__init__(f"unsupported format version {found} (expected {expected})")
        self.found = found
        self.expected = expected


class ConfigError(MTNetError, ValueError):
    """The experiment configuration is invalid"""


class DataFileError(MTNetError, OSError):
    """Input files are missing or output files cannot be written"""
