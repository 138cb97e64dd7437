"""Exception hierarchy shared across the package.

The CLI maps these onto process exit codes, so library code should raise
the most specific class that applies.
"""


class KerndebiasError(Exception):
    """Base class for all errors raised by this package."""


class FormatError(KerndebiasError):
    """Malformed input file or config (bad embedding line, bad JSON, ...)."""


class DataError(KerndebiasError):
    """Inputs are well-formed but insufficient or degenerate for the task.

    Examples: requesting more components than the available rank, an
    all-out-of-vocabulary word list, a constant vector where a correlation
    is required.
    """


class NumericalError(KerndebiasError):
    """A numerical routine failed: non-finite values, asymmetry,
    non-convergence."""
