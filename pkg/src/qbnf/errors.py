"""Exception types raised across the package."""


class QBNFError(Exception):
    """Base class; the CLI maps these to structured error output."""


class CutoffMismatchError(QBNFError, ValueError):
    pass


class WeylParityError(QBNFError, ArithmeticError):
    """A commutator produced an h-free term (an algebra bug, never valid input)."""


class DiophantineError(QBNFError, ValueError):
    def __init__(self, message, k=None, achieved=None, required=None):
        super().__init__(message)
        self.k = k
        self.achieved = achieved
        self.required = required


class UncertifiedModeError(QBNFError, ValueError):
    pass


class GeneratorGradingError(QBNFError, ValueError):
    pass


class CutoffOverflowError(QBNFError, ValueError):
    pass


class SearchBoundError(QBNFError, RuntimeError):
    pass


class ScheduleError(QBNFError, ValueError):
    pass


class RankDeficiencyError(QBNFError, ArithmeticError):
    def __init__(self, message, rank=None, needed=None):
        super().__init__(message)
        self.rank = rank
        self.needed = needed


class OrderingError(QBNFError, RuntimeError):
    """A class was fitted before every slower class was known."""


class TruncationWarning(UserWarning):
    """A transformation lost terms to the Fourier cutoff."""
