"""
Exceptions raised by the FEC laboratory
"""


class FECLabError(Exception):
    """Base class for every error the laboratory raises on purpose"""


class InvalidDistributionError(FECLabError, ValueError):
    """Degree distribution does not sum to one, has negative or degree-0 entries"""


class AllDegreeOneError(FECLabError, ValueError):
    """Renormalization over degrees > 1 requested with lambda_1 = 1"""


class DegenerateRateError(FECLabError, ValueError):
    """Design rate is zero or negative"""


class InputValueError(FECLabError, ValueError):
    """NaN input, length mismatch or probability outside [0, 1]"""


class ConstructionError(FECLabError):
    """An instance or base code cannot be built with the requested parameters"""


class EnumerationBudgetError(FECLabError):
    """Exhaustive enumeration would exceed the configured budget"""


class StructuralError(FECLabError):
    """Instance violates the bounded-cluster structure expected by the analysis"""


class NodeWeightError(FECLabError):
    """A cycle's completions do not produce a codeword of the expected weight"""


class NoDistributionError(FECLabError):
    """Degree optimization is infeasible"""


class ContradictionError(FECLabError):
    """Known values are inconsistent with every codeword"""
