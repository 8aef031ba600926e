"""Sharp partial-identification bounds under likelihood-ratio sensitivity bands."""

from .bounds import BoundProblem, BoundResult, SensitivityBand, sharp_bound
from .errors import SharpBoundsError

__version__ = "0.1.0"

__all__ = [
    "BoundProblem",
    "BoundResult",
    "SensitivityBand",
    "SharpBoundsError",
    "sharp_bound",
    "__version__",
]
