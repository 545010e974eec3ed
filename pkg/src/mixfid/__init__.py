"""Fidelity measures for mixed quantum states and tools for comparing them."""

__version__ = "0.1.0"

from .errors import FidelityError
from .linalg import DensityMatrix, PureState, validate_density
from .measures import (
    CORE_MEASURES,
    MeasureId,
    evaluate,
    f1,
    f2,
    fa,
    fam,
    fc,
    fgm,
    fhm,
    fmin,
    fn,
    fp,
    fq,
)

__all__ = [
    "__version__",
    "FidelityError",
    "DensityMatrix",
    "PureState",
    "validate_density",
    "CORE_MEASURES",
    "MeasureId",
    "evaluate",
    "f1",
    "f2",
    "fa",
    "fam",
    "fc",
    "fgm",
    "fhm",
    "fmin",
    "fn",
    "fp",
    "fq",
]
