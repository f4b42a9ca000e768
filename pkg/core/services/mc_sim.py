"""
Monte Carlo check of the analytical INR HARQ quantities.

Each packet draws one power gain g ~ Exp(1) and one uniform u. The packet
is decoded in the first round m with u >= ε_m(g), where ε_m is the
finite-blocklength error probability at the cumulative length l_(m).
Because ε_m(g) is non-increasing in m, the events "not decoded by round m"
are nested packet by packet and Pr(not decoded by m) = E[ε_m(g)] = Ω_m.

Each random stream is one Philox sequence keyed by (seed, stream); packet i
uses its i-th output. Blocks only jump ahead to their first packet, so the
results depend on neither the block size nor the worker count, and the
reduction only adds integer counts.
"""

import logging
import math
from typing import Any, Dict, List, Sequence

import numpy as np

from core.schemas.data_models import SimConfig, SimStats
from core.services.channel_fbl import conditional_error_prob
from core.services.dispatch import run_jobs
from core.services.harq_core import stop_times

logger = logging.getLogger(__name__)

BLOCK_PACKETS = 1 << 16
GAIN_STREAM = 0
DECODE_STREAM = 1
PHILOX_WORDS = 4
Z_95 = 1.959963984540054


def packet_generator(seed: int, stream: int, first_packet: int) -> np.random.Generator:
    """Generator for stream (seed, stream) positioned at packet first_packet."""
    bit_generator = np.random.Philox(np.random.SeedSequence(seed, spawn_key=(stream,)))
    # one Philox counter step yields PHILOX_WORDS doubles
    bit_generator.advance(first_packet // PHILOX_WORDS)
    generator = np.random.Generator(bit_generator)
    generator.random(first_packet % PHILOX_WORDS)
    return generator


def block_count(packets: int) -> int:
    return (packets + BLOCK_PACKETS - 1) // BLOCK_PACKETS


def simulate_block(config: SimConfig, block: int) -> List[int]:
    """
    Stopping-round counts for one block: entry m-1 counts packets first
    decoded in round m, the last entry counts outages.
    """
    start = block * BLOCK_PACKETS
    size = min(BLOCK_PACKETS, config.packets - start)
    rounds = config.scheme.max_rounds
    if size <= 0:
        return [0] * (rounds + 1)

    uniforms = packet_generator(config.seed, GAIN_STREAM, start).random(size)
    gains = -np.log1p(-uniforms)
    decode = packet_generator(config.seed, DECODE_STREAM, start).random(size)

    errors = np.vstack(
        [
            conditional_error_prob(geom.block, config.spec, gains)
            for geom in config.scheme.geometries()
        ]
    )
    decoded = decode[np.newaxis, :] >= errors
    first_round = np.where(decoded.any(axis=0), decoded.argmax(axis=0), rounds)
    return np.bincount(first_round, minlength=rounds + 1).tolist()


def simulate_block_job(payload: Dict[str, Any]) -> List[int]:
    """JSON-payload wrapper so blocks can run in a process pool or on Celery."""
    config = SimConfig.model_validate(payload["config"])
    return simulate_block(config, int(payload["block"]))


def summarize(config: SimConfig, counts: Sequence[int]) -> SimStats:
    """SimStats from the per-round counts; every statistic is a function of counts."""
    scheme = config.scheme
    rounds = scheme.max_rounds
    packets = config.packets
    decoded_at = tuple(int(c) for c in counts[:rounds])
    outages = int(counts[rounds])

    omegas = []
    half_widths = []
    remaining = packets
    for decoded in decoded_at:
        remaining -= decoded
        omega = remaining / packets
        omegas.append(omega)
        half_widths.append(Z_95 * math.sqrt(omega * (1.0 - omega) / packets))

    taus = stop_times(scheme)
    # outcome k < M: decoded in round k+1; outcome M: outage, which also runs all rounds
    outcome_uses = list(taus) + [taus[-1]]
    outcome_counts = list(decoded_at) + [outages]
    outcome_reward = [scheme.nats] * rounds + [0.0]

    total_uses = math.fsum(c * t for c, t in zip(outcome_counts, outcome_uses))
    mean_uses = total_uses / packets
    eta = scheme.nats * (packets - outages) / total_uses

    if packets > 1:
        var_uses = math.fsum(
            c * (t - mean_uses) ** 2 for c, t in zip(outcome_counts, outcome_uses)
        ) / (packets - 1)
        # delta method for the ratio estimator Σ reward / Σ uses
        mean_residual = math.fsum(
            c * (r - eta * t) for c, r, t in zip(outcome_counts, outcome_reward, outcome_uses)
        ) / packets
        var_residual = math.fsum(
            c * (r - eta * t - mean_residual) ** 2
            for c, r, t in zip(outcome_counts, outcome_reward, outcome_uses)
        ) / (packets - 1)
    else:
        var_uses = var_residual = 0.0

    return SimStats(
        packets=packets,
        decoded_at=decoded_at,
        outages=outages,
        omegas=tuple(omegas),
        omega_half_widths=tuple(half_widths),
        throughput=eta,
        throughput_half_width=Z_95 * math.sqrt(var_residual / packets) / mean_uses,
        expected_uses=mean_uses,
        expected_uses_half_width=Z_95 * math.sqrt(var_uses / packets),
        seed=config.seed,
    )


def simulate(config: SimConfig, fan_out: bool = True) -> SimStats:
    """
    Run all blocks and reduce the counts. With fan_out the blocks go
    through the dispatcher (config.workers processes or Celery).
    """
    blocks = block_count(config.packets)
    if not fan_out:
        counts = np.zeros(config.scheme.max_rounds + 1, dtype=np.int64)
        for block in range(blocks):
            counts += np.asarray(simulate_block(config, block), dtype=np.int64)
        return summarize(config, counts.tolist())

    logger.info(
        f"simulating {config.packets} packets in {blocks} blocks on {config.workers} worker(s)"
    )
    payload_config = config.model_dump(mode="json")
    results = run_jobs(
        "simulate_block",
        [{"config": payload_config, "block": block} for block in range(blocks)],
        workers=config.workers,
    )
    counts = np.sum(np.asarray(results, dtype=np.int64), axis=0)
    return summarize(config, counts.tolist())
