"""k-producibility bounds of two-body permutationally invariant Bell inequalities
and device-independent witnesses of entanglement depth."""
from diwed.core import (
    DEFAULT_INEQUALITY,
    CapacityError,
    InvalidInputError,
    MeasurementSettings,
    Partition,
    PibiCoefficients,
    load_inequality,
)

__version__ = "0.1.0"

__all__ = [
    "DEFAULT_INEQUALITY",
    "CapacityError",
    "InvalidInputError",
    "MeasurementSettings",
    "Partition",
    "PibiCoefficients",
    "__version__",
    "load_inequality",
]
