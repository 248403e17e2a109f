"""Exception hierarchy shared by all cvsheet modules."""


class CVSheetError(Exception):
    """Base class; the CLI maps these to exit status 1."""


class DomainError(CVSheetError, ValueError):
    """Input outside the mathematical domain of an operation."""


class SingularFormError(CVSheetError):
    """The ratio form of the symbol is undefined (mu+ + mu- = 0)."""


class RegimeError(CVSheetError):
    """Operation requires a different stability regime."""


class DegenerateFrequencyError(CVSheetError):
    """The interface system is singular at this frequency."""


class NearSingularError(CVSheetError):
    """Symbol too close to zero on a solve lattice."""


class SearchInconsistencyError(CVSheetError):
    """Root search contradicts the closed-form prediction."""


class StepSizeError(CVSheetError, ValueError):
    """Time step violates the CFL bound."""


class InvalidRunError(CVSheetError):
    """Simulation invalidated by its own diagnostics (e.g. reflections)."""


class TruncationWarning(UserWarning):
    """Half-line integral truncated where the integrand has not decayed."""


class GrowthWarning(UserWarning):
    """Interior profile contains an exponentially growing component."""
