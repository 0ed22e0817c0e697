"""Exception hierarchy.

Every solver error carries a stable ``code`` string which the CLI emits in
its machine-readable error report.
"""


class TTDecompError(Exception):
    code = "Error"

    def __init__(self, message="", **details):
        super().__init__(message or self.code)
        self.details = details

    def to_dict(self):
        out = {"error": self.code, "message": str(self)}
        out.update({k: v for k, v in self.details.items() if _jsonable(v)})
        return out


def _jsonable(v):
    return isinstance(v, (int, float, str, bool, type(None), list, tuple))


class DimensionError(TTDecompError, ValueError):
    code = "DimensionError"


class InvalidTrain(TTDecompError, ValueError):
    code = "InvalidTrain"


class NumericalError(TTDecompError, ArithmeticError):
    code = "NumericalError"


class DivisionByZero(TTDecompError, ZeroDivisionError):
    code = "DivisionByZero"


class PsdSearchFailed(TTDecompError):
    code = "PsdSearchFailed"


class DegenerateInnerProduct(TTDecompError):
    code = "DegenerateInnerProduct"


class EmptyDecomposition(TTDecompError):
    code = "EmptyDecomposition"


class DegenerateContraction(TTDecompError):
    code = "DegenerateContraction"


class NoSymmetrizer(TTDecompError):
    code = "NoSymmetrizer"


class CompletionAmbiguous(TTDecompError):
    code = "CompletionAmbiguous"


class DecompositionFailed(TTDecompError):
    code = "DecompositionFailed"


class InvalidInflation(TTDecompError, ValueError):
    code = "InvalidInflation"


class ZeroEntry(TTDecompError, ValueError):
    code = "ZeroEntry"


class NotConverged(TTDecompError):
    """Iteration budget exhausted; ``factors`` holds the last iterate."""

    code = "NotConverged"

    def __init__(self, message="", factors=None, **details):
        super().__init__(message, **details)
        self.factors = factors


class DegenerateStart(TTDecompError, ValueError):
    code = "DegenerateStart"


class SingularScaling(TTDecompError):
    code = "SingularScaling"


class InvalidConfig(TTDecompError, ValueError):
    code = "InvalidConfig"
