"""
Finite-blocklength channel model.

A rate-R code of length L sent over a quasi-static channel with power
gain g fails with probability Q(W), where

    W = √L (ln(1+gP) - R) / √(1 - 1/(1+gP)²)

is the normal-approximation (dispersion) argument. Rates are in nats per
channel use throughout. Both functions accept scalars or numpy arrays of
gains.
"""

import numpy as np

from core.schemas.data_models import ChannelSpec, CodeBlock
from core.services.special_functions import q_function


def _as_gains(gain) -> np.ndarray:
    gains = np.asarray(gain, dtype=float)
    if not np.all(np.isfinite(gains)):
        raise ValueError("channel gain must be finite")
    if np.any(gains < 0):
        raise ValueError("channel gain must be non-negative")
    return gains


def dispersion_argument(block: CodeBlock, spec: ChannelSpec, gain):
    """
    W(g) for the given block. At g = 0 returns -inf for R > 0 and +inf for
    R = 0 (a zero-rate code never fails).
    """
    gains = _as_gains(gain)
    snr_gain = gains * spec.snr
    log_snr = np.log1p(snr_gain)
    numerator = np.sqrt(block.length) * (log_snr - block.rate)
    # 1 - (1+s)^-2 written to stay accurate for small s
    denominator = np.sqrt(-np.expm1(-2.0 * log_snr))

    with np.errstate(divide="ignore", invalid="ignore"):
        w = numerator / denominator
    limit = -np.inf if block.rate > 0 else np.inf
    w = np.where(snr_gain == 0, limit, w)
    return float(w) if np.ndim(w) == 0 else w


def conditional_error_prob(block: CodeBlock, spec: ChannelSpec, gain):
    """δ(L, R, P | g) = Q(W(g)), in [0, 1] and non-increasing in g."""
    return q_function(dispersion_argument(block, spec, gain))
