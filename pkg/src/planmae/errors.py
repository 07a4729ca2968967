"""Exception types shared across the package."""


class PlanMaeError(Exception):
    """Base class for all errors raised by this package."""


class NonDivisiblePatchSize(PlanMaeError):
    """Patch size does not divide the image height or width."""


class InconsistentSequence(PlanMaeError):
    """Patch sequence disagrees with its own grid geometry."""


class BadDim(PlanMaeError):
    """Embedding width not divisible by 4."""


class BadRatio(PlanMaeError):
    """Masking ratio outside [0, 1]."""


class BadConfig(PlanMaeError):
    """Model configuration violates a structural constraint."""


class GeometryMismatch(PlanMaeError):
    """Two values disagree on image/grid geometry."""


class CorruptCheckpoint(PlanMaeError):
    """Checkpoint file fails structural validation."""


class ShapeMismatch(PlanMaeError):
    """Tensor shapes disagree where they must match."""


class EmptyCorpus(PlanMaeError):
    """Training requested over a corpus with no images."""


class EmptySplit(PlanMaeError):
    """Evaluation requested over a split with no images."""


class ConstraintUnsatisfiable(PlanMaeError):
    """Layout generation exhausted its retry budget."""


class TooSmall(PlanMaeError):
    """Image smaller than the metric window."""


class ConfigError(PlanMaeError):
    """Run configuration failed validation."""
