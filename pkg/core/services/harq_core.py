"""
Renewal-reward accounting for INR HARQ with feedback delay.

A packet stopped after round m costs τ_(m) channel uses (feedback after
every round except the last). With Ω_0 = 1,

    𝒯 = Σ_m l_m Ω_(m-1) + D Σ_(m<M) Ω_(m-1),    𝒦 = K (1 - Ω_M),    η = 𝒦/𝒯.
"""

import logging
import math
from typing import Tuple

from core.exceptions import NonMonotoneOutage
from core.schemas.data_models import HarqScheme, OutageVector, ThroughputReport

logger = logging.getLogger(__name__)

# Estimator noise allowed before a rise in Ω_m counts as a nesting violation
MONOTONE_SLACK = 1e-9
IDENTITY_RTOL = 1e-12


def stop_time(scheme: HarqScheme, m: int) -> float:
    """τ_(m): l_(m) + mD before the last round, l_(M) + (M-1)D at m = M."""
    if not 1 <= m <= scheme.max_rounds:
        raise IndexError(f"round {m} outside 1..{scheme.max_rounds}")
    feedbacks = m if m < scheme.max_rounds else m - 1
    return scheme.cumulative_lengths[m - 1] + feedbacks * scheme.feedback_delay


def stop_times(scheme: HarqScheme) -> Tuple[float, ...]:
    return tuple(stop_time(scheme, m) for m in range(1, scheme.max_rounds + 1))


def _checked_outages(scheme: HarqScheme, omegas: OutageVector) -> Tuple[float, ...]:
    if omegas.rounds != scheme.max_rounds:
        raise ValueError(
            f"{omegas.rounds} outage probabilities given for {scheme.max_rounds} rounds"
        )
    with_zero = omegas.with_round_zero()
    for m in range(1, len(with_zero)):
        if with_zero[m] > with_zero[m - 1] + MONOTONE_SLACK:
            raise NonMonotoneOutage(
                f"Ω_{m} = {with_zero[m]:.12g} exceeds Ω_{m - 1} = {with_zero[m - 1]:.12g}"
            )
    return with_zero


def expected_uses(scheme: HarqScheme, omegas: OutageVector) -> float:
    """𝒯, the expected channel uses per packet period."""
    with_zero = _checked_outages(scheme, omegas)
    data = math.fsum(
        length * with_zero[m] for m, length in enumerate(scheme.lengths)
    )
    feedback = scheme.feedback_delay * math.fsum(with_zero[: scheme.max_rounds - 1])
    return data + feedback


def expected_nats(scheme: HarqScheme, omegas: OutageVector) -> float:
    """𝒦 = K (1 - Ω_M)."""
    return scheme.nats * (1.0 - omegas.outage)


def throughput_rate_form(scheme: HarqScheme, omegas: OutageVector) -> float:
    """
    η written through the equivalent rates and the relative delay:
    (1 - Ω_M) / (Σ (1/R_(m) - 1/R_(m-1)) Ω_(m-1) + (D^f/R_(M)) Σ_(m<M) Ω_(m-1)),
    with 1/R_(0) = 0.
    """
    with_zero = _checked_outages(scheme, omegas)
    inverse_rates = (0.0,) + tuple(1.0 / rate for rate in scheme.rates)
    data = math.fsum(
        (inverse_rates[m] - inverse_rates[m - 1]) * with_zero[m - 1]
        for m in range(1, scheme.max_rounds + 1)
    )
    feedback = (scheme.relative_delay * inverse_rates[-1]) * math.fsum(
        with_zero[: scheme.max_rounds - 1]
    )
    return (1.0 - omegas.outage) / (data + feedback)


def throughput(scheme: HarqScheme, omegas: OutageVector) -> ThroughputReport:
    """η = 𝒦/𝒯, cross-checked against the rate form."""
    uses = expected_uses(scheme, omegas)
    nats = expected_nats(scheme, omegas)
    eta = scheme.nats * (1.0 - omegas.outage) / uses

    rate_form = throughput_rate_form(scheme, omegas)
    if not math.isclose(eta, rate_form, rel_tol=IDENTITY_RTOL, abs_tol=1e-300):
        logger.warning(f"throughput forms disagree: {eta!r} vs {rate_form!r}")

    return ThroughputReport(
        eta=eta,
        outage=omegas.outage,
        expected_uses=uses,
        expected_nats=nats,
        omegas=omegas,
        per_round_uses=stop_times(scheme),
    )


def open_loop_throughput(length: int, nats: float, omega: float) -> float:
    """One-shot transmission of the parent codeword: (K/l_(M))(1 - Ω_M)."""
    if not 0.0 <= omega <= 1.0:
        raise ValueError(f"outage probability out of [0, 1]: {omega}")
    if length <= 0:
        raise ValueError(f"length must be positive, got {length}")
    return nats * (1.0 - omega) / length
