""" Exceptions raised by the `semgrasp` package.

Every error derives from `SemgraspError`, so callers (the command line
applications in particular) can catch the whole family at once.
"""

__all__ = [
    "SemgraspError",
    "DatasetError",
    "DatasetFormatError",
    "VocabularyError",
    "GeometryError",
    "ShapeError",
    "NonFiniteError",
    "ModelError",
    "TrainingDivergedError",
    "CheckpointError",
    "EvaluationError",
]


class SemgraspError(Exception):
    """ Base class for all the errors raised by this package. """


class DatasetError(SemgraspError, ValueError):
    """ A dataset (or one of its records) violates an invariant. """


class DatasetFormatError(DatasetError):
    """ A dataset file contains a malformed record.

    Attributes:
        line_number (int|None): 1-based line of the offending record.
    """
    def __init__(self, message, line_number=None):
        # type: (str, int|None) -> None
        if line_number is not None:
            message = "line %d: %s" % (line_number, message)
        super(DatasetFormatError, self).__init__(message)
        self.line_number = line_number


class VocabularyError(DatasetError):
    """ A label is not part of the vocabulary it should belong to.

    Attributes:
        kind (str): The vocabulary that was searched (e.g. `tasks`).
        label (str): The offending label.
        line_number (int|None): 1-based line, when raised while loading a file.
    """
    def __init__(self, kind, label, line_number=None):
        # type: (str, str, int|None) -> None
        message = "Unknown label '%s' for vocabulary '%s'" % (label, kind)
        if line_number is not None:
            message = "line %d: %s" % (line_number, message)
        super(VocabularyError, self).__init__(message)
        self.kind = kind
        self.label = label
        self.line_number = line_number


class GeometryError(SemgraspError, ValueError):
    """ Invalid point cloud or query point. """


class ShapeError(SemgraspError, ValueError):
    """ Array shapes do not agree. """


class NonFiniteError(SemgraspError, ValueError):
    """ A NaN or infinite value was found where finite values are required. """


class ModelError(SemgraspError, ValueError):
    """ Invalid model configuration or model usage. """


class TrainingDivergedError(SemgraspError, RuntimeError):
    """ The training loss became non-finite.

    Attributes:
        epoch (int): 1-based epoch in which the divergence was detected.
    """
    def __init__(self, epoch, loss):
        # type: (int, float) -> None
        super(TrainingDivergedError, self).__init__(
            "Training diverged at epoch %d (mean loss %r). Try a lower learning rate." % (epoch, loss)
        )
        self.epoch = epoch
        self.loss = loss


class CheckpointError(SemgraspError, ValueError):
    """ A checkpoint file cannot be read back. """


class EvaluationError(SemgraspError, ValueError):
    """ Invalid input to a metric, split or statistical test. """
