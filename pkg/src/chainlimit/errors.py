"""Exception and warning types shared across the package."""


class ChainError(ValueError):
    """Base class for domain and numerical errors (CLI exit status 1)."""


class NegativeRate(ChainError):
    def __init__(self, row, col, value):
        self.row, self.col, self.value = row, col, value
        super().__init__(f"negative off-diagonal rate {value:.3g} at ({row}, {col})")


class RowSumViolation(ChainError):
    def __init__(self, row, total):
        self.row, self.total = row, total
        super().__init__(f"row {row} sums to {total:.6g}, expected 0")


class Reducible(ChainError):
    pass


class Degenerate(ChainError):
    pass


class NotReversible(ChainError):
    pass


class NumericalOverflow(ChainError):
    pass


class EigensolveFailure(ChainError):
    pass


class TooManyIndices(ChainError):
    pass


class AxiomViolation(ChainError):
    def __init__(self, failed, report=None):
        self.failed = list(failed)
        self.report = report
        super().__init__("axiom functional(s) out of tolerance: " + ", ".join(self.failed))


class NotPositiveDefinite(ChainError):
    pass


class NonStochastic(ChainError):
    pass


class ZeroRow(ChainError):
    pass


class UnknownFamily(ChainError):
    pass


class NotNormalized(ChainError):
    pass


class ParseError(Exception):
    """Malformed input file (CLI exit status 2)."""


class ZeroMixingWarning(UserWarning):
    """The chain has (numerically) no mixing left at time 1: G(1) is 1."""


class ChainedMergeWarning(UserWarning):
    """Single-linkage merged states further apart than the tolerance."""


class DenseCostWarning(UserWarning):
    pass
