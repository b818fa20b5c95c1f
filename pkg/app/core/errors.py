"""
Error hierarchy shared by the services and the command-line harness.

Every error carries the process exit code the CLI reports for it:
0 success, 1 usage error, 2 data error, 3 numerical failure.
"""


class MknnError(Exception):
    """Base class for all toolkit errors"""

    exit_code: int = 1


class UsageError(MknnError, ValueError):
    """Invalid parameters, unknown options or violated call preconditions"""

    exit_code = 1


class DataError(MknnError, ValueError):
    """Input data cannot be used"""

    exit_code = 2


class ParseError(DataError):
    """A CSV row could not be parsed"""

    def __init__(self, message: str, row: int):
        super().__init__(f"row {row}: {message}")
        self.row = row


class EmptyDatasetError(DataError):
    """The input contained no sample rows"""


class NoLabeledSamplesError(DataError):
    """Training requires at least one labeled sample"""

    def __init__(self, message: str = "no labeled samples"):
        super().__init__(message)


class SplitError(DataError):
    """A class holds fewer samples than the split asks for"""


class DimensionError(DataError):
    """Array shapes do not agree"""


class NumericalError(MknnError, ArithmeticError):
    """A numerical routine failed"""

    exit_code = 3


class IsolatedVertexError(NumericalError):
    """A graph vertex has zero degree"""

    def __init__(self, vertex: int):
        super().__init__(f"vertex {vertex} is isolated (zero row sum in W)")
        self.vertex = vertex


class SingularSystemError(NumericalError):
    """The linear system I - alpha*P is numerically singular"""


class FactorizationError(NumericalError):
    """Cholesky factorization of the R-matrix failed"""
