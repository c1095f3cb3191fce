"""Exception hierarchy shared by every ccakit module.

The CLI maps these onto exit codes: config problems exit 2, data-content
problems exit 3, numerical/degeneracy problems exit 4.
"""


class CcakitError(Exception):
    """Base class for all errors raised by ccakit."""


class ConfigError(CcakitError):
    """Invalid or incomplete run configuration (exit code 2)."""


class DataError(CcakitError):
    """Problems with the content of the input data (exit code 3)."""


class NumericalError(CcakitError):
    """Degenerate or ill-conditioned numerical situations (exit code 4)."""


# --- data-content errors (exit 3) -------------------------------------------

class ParseError(DataError):
    """CSV cell or row that cannot be parsed; message carries row/column."""


class SchemaError(DataError):
    """Column-name problems: duplicates, unknown names, overlap, mismatch."""


class DegenerateColumnError(DataError):
    """A column is constant and cannot be standardized."""


class UnimputableColumnError(DataError):
    """A column has no observed values left to impute from."""


class DomainError(DataError):
    """Value outside the mathematical domain of a transform (e.g. Box-Cox)."""


# --- numerical errors (exit 4) ----------------------------------------------

class DegeneracyError(NumericalError):
    """Classical CCA attempted without n > max(p, q)."""


class ConditioningError(NumericalError):
    """Covariance matrix numerically singular beyond the conditioning floor."""


class CollinearityError(NumericalError):
    """Rank-deficient confound matrix."""


class DimensionError(NumericalError):
    """Requested mode/component count outside the feasible range."""


class ParameterError(NumericalError):
    """Solver parameter outside its feasible range (e.g. sparsity budget)."""


class InternalConsistencyError(NumericalError):
    """An internal invariant was violated (e.g. singular value > 1 + 1e-8)."""


class ConvergenceWarning(UserWarning):
    """A sparse mode hit the iteration cap before reaching tolerance."""
