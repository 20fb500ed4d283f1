"""Exception hierarchy for the benchmark harness.

ConfigError and DataError are the two classes the CLI maps to exit codes;
everything a module can raise on bad input derives from one of them.
"""


class BenchError(Exception):
    """Root of every error raised by the harness."""


class ConfigError(BenchError):
    """Experiment configuration is malformed or violates a bound."""


class DataError(BenchError):
    """Input data does not satisfy an operation's preconditions."""


class MissingColumn(DataError):
    pass


class EmptySeries(DataError):
    pass


class NonConsecutiveYears(DataError):
    pass


class TooShort(DataError):
    pass


class NonPositiveInput(DataError):
    pass


class DegenerateData(DataError):
    pass


class InverseDomain(DataError):
    pass


class SingularRegression(DataError):
    pass


class WindowTooLarge(DataError):
    pass


class KTooLarge(DataError):
    pass


class InsufficientData(DataError):
    pass


class LengthMismatch(DataError):
    pass


class NotDivisible(DataError):
    pass


class AllCandidatesFailed(BenchError):
    """Every hyperparameter candidate raised during random search."""


class IoFailure(BenchError):
    """Writing an output artifact failed."""
