"""Linear stability of compressible current-vortex sheets.

Background classification, the front symbol and its zeros, the interface
trace system, a spectral solver for the front equation and a time-domain
mode simulator.
"""

__version__ = "0.1.0"

from .errors import (  # noqa: F401
    CVSheetError, DegenerateFrequencyError, DomainError, InvalidRunError, NearSingularError,
    RegimeError, SearchInconsistencyError, SingularFormError, StepSizeError,
)
from .params import MediumParams, Regime, classify_regime, derive_params  # noqa: F401
from .symbol import Frequency, mu, sigma  # noqa: F401
from .roots import critical_velocity, find_hemisphere_zeros, neutral_roots  # noqa: F401
