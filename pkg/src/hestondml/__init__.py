"""Heston put pricing, differential labels, twin-network training, calibration."""

from .errors import DomainError, IntegrationError, TrainingDivergence
from .pricing import (
    DEFAULT_QUAD,
    HestonParams,
    MarketPoint,
    QuadratureConfig,
    bs_effective_vol,
    bs_normalized_forward_put,
    char_fn,
    mc_price,
    normalized_forward_call,
    normalized_forward_put,
    put_price,
)

__version__ = "0.1.0"

__all__ = [
    "DEFAULT_QUAD",
    "DomainError",
    "HestonParams",
    "IntegrationError",
    "MarketPoint",
    "QuadratureConfig",
    "TrainingDivergence",
    "bs_effective_vol",
    "bs_normalized_forward_put",
    "char_fn",
    "mc_price",
    "normalized_forward_call",
    "normalized_forward_put",
    "put_price",
]
