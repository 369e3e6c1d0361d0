# src/utils/errors.py

"""
Exception hierarchy for the probit network toolkit.

Every error carries a machine-readable ``code`` and the process ``exit_status``
the command line uses when the error escapes (2 = input/format, 3 = solver).
"""

INPUT_EXIT_STATUS = 2
SOLVER_EXIT_STATUS = 3


class ProbitNetworkError(Exception):
    """Base class for all toolkit errors."""

    code = 'error'
    exit_status = INPUT_EXIT_STATUS

    def __init__(self, message, **details):
        super().__init__(message)
        self.message = message
        self.details = details

    def to_dict(self):
        """
        Machine-readable form of the error.

        Returns:
        --------
        dict with keys 'error', 'message' and any extra detail fields
        """
        out = {'error': self.code, 'message': self.message}
        for key, value in self.details.items():
            if hasattr(value, 'tolist'):
                value = value.tolist()
            elif hasattr(value, 'to_dict'):
                value = value.to_dict()
            out[key] = value
        return out


class InvalidInputError(ProbitNetworkError, ValueError):
    code = 'invalid-input'


class InvalidSizeError(InvalidInputError):
    code = 'invalid-size'


class InvalidPairError(InvalidInputError):
    code = 'invalid-pair'


class InvalidIndexError(InvalidInputError):
    code = 'invalid-index'


class DomainError(InvalidInputError):
    code = 'domain'


class InvalidSpecError(InvalidInputError):
    code = 'invalid-spec'


class NotPositiveSemidefiniteError(InvalidSpecError):
    code = 'not-psd'

    def __init__(self, message, pivot=None, **details):
        super().__init__(message, pivot=pivot, **details)
        self.pivot = pivot


class MustValidateError(InvalidSpecError):
    code = 'must-validate'


class DiagonalQueryError(InvalidInputError):
    code = 'diagonal-query'


class SelfLoopError(InvalidInputError):
    code = 'self-loop'


class FormatError(InvalidInputError):
    code = 'format'

    def __init__(self, message, line=None, **details):
        super().__init__(message, line=line, **details)
        self.line = line


class DuplicateEdgeError(FormatError):
    code = 'duplicate-edge'


class ConfigError(InvalidInputError):
    code = 'config'


class SolverError(ProbitNetworkError):
    code = 'solver'
    exit_status = SOLVER_EXIT_STATUS


class BoundaryDegreeError(SolverError):
    code = 'boundary-degree'

    def __init__(self, message, node=None, **details):
        super().__init__(message, node=node, **details)
        self.node = node


class NoConvergenceError(SolverError):
    code = 'no-convergence'

    def __init__(self, message, best=None, **details):
        super().__init__(message, **details)
        # best iterate (or best report) found before giving up
        self.best = best

    def to_dict(self):
        out = super().to_dict()
        if self.best is not None:
            out['best'] = self.best.to_dict() if hasattr(self.best, 'to_dict') else list(self.best)
        return out


class SingularMatrixError(SolverError):
    code = 'singular-matrix'


class BoundaryEstimateError(SolverError):
    code = 'boundary-estimate'

    def __init__(self, message, g_low=None, g_high=None, **details):
        super().__init__(message, g_low=g_low, g_high=g_high, **details)
        self.g_low = g_low
        self.g_high = g_high
