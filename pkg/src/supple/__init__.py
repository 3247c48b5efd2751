"""Generalized functions as eps-nets: classification, embedding and splitting along closed sets."""

from .errors import IllConditioned, InsufficientData, QuadratureError, RejectedInput
from .nets import (DEFAULT_SCHEDULE, CompactBox, EpsSchedule, Net, fit_order, is_ginfty, is_moderate,
                   is_negligible, sup_on_compact)

__version__ = "0.1.0"

__all__ = [
    "CompactBox", "DEFAULT_SCHEDULE", "EpsSchedule", "IllConditioned", "InsufficientData", "Net",
    "QuadratureError", "RejectedInput", "fit_order", "is_ginfty", "is_moderate", "is_negligible",
    "sup_on_compact", "__version__",
]
