"""Exception hierarchy.

Every error carries the name of the module that raised it so the CLI can
attribute failures. ``exit_code`` follows the CLI contract: 1 for hypothesis
and validation problems, 2 for numerical failures.
"""


class PlapError(Exception):
    exit_code = 1
    module = "plaplog"

    def __init__(self, message, *, module=None):
        super().__init__(message)
        if module is not None:
            self.module = module


class ConfigurationError(PlapError, ValueError):
    """Invalid parameters, grid sizes or estimator settings."""

    module = "domain"

    def __init__(self, message, clauses=(), *, module=None):
        super().__init__(message, module=module)
        self.clauses = list(clauses)


class ParseError(ConfigurationError):
    """Malformed configuration document."""

    module = "cli-io"


class DomainError(PlapError, ValueError):
    """Argument outside the domain of a closed-form formula."""

    module = "constants"


class HypothesisError(PlapError, ValueError):
    """A theorem's hypothesis does not hold for the supplied data."""

    module = "theorem-checkers"


class NumericalFailure(PlapError, ArithmeticError):
    exit_code = 2
    module = "evolution"


class ProjectionError(NumericalFailure):
    """No sign change of the fibering map inside the search window."""

    module = "nehari-well"


class EstimationError(NumericalFailure):
    module = "nehari-well"


class LemmaViolation(NumericalFailure):
    """A proven inequality failed numerically; indicates a transcription bug."""

    module = "theorem-checkers"
