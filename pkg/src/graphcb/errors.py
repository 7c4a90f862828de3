"""Exception types raised by the toolkit.

Everything derives from GraphCBError so callers can catch the whole family;
the CLI maps DataFormatError/ParseError/ValidationError/ConfigurationError
to exit code 2 (bad input) and the rest to exit code 1.
"""


class GraphCBError(Exception):
    pass


class DataFormatError(GraphCBError):
    """A required file is missing or structurally unreadable."""


class ParseError(GraphCBError):
    """A line of an input file is malformed; carries the offending line."""

    def __init__(self, message, path=None, line_no=None):
        self.path = path
        self.line_no = line_no
        if path is not None and line_no is not None:
            message = f"{path}:{line_no}: {message}"
        super().__init__(message)


class ValidationError(GraphCBError):
    """Parsed data violates a structural invariant."""


class StratificationError(GraphCBError):
    """A class is too small for the requested number of folds."""


class VocabularyMissError(GraphCBError):
    """A WL code or token is absent from the vocabulary it is looked up in."""


class DegenerateCorpusError(GraphCBError):
    """The sentence corpus is too small to train embeddings on."""


class ConfigurationError(GraphCBError):
    """A configuration value is out of its legal range or inconsistent."""


class ShapeError(GraphCBError):
    """Vector/matrix dimensions disagree."""


class NumericError(GraphCBError):
    """A non-finite value appeared; carries the name of the component."""


class TrainingError(GraphCBError):
    """Training preconditions unmet (e.g. a single-class dataset)."""


class EmptyTargetError(GraphCBError):
    """An intervention statistic was requested over an empty target set."""


class NearZeroActivationError(GraphCBError):
    """Mean target-concept activation is below the numerical floor."""


class UndefinedAUCError(GraphCBError):
    """ROC AUC is undefined because only one class is present."""
