import math

import numpy as np
import pytest

from core.schemas.data_models import ChannelSpec, HarqScheme, SimConfig
from core.services import mc_sim
from core.services.harq_core import throughput
from core.services.mc_sim import (
    BLOCK_PACKETS,
    Z_95,
    block_count,
    packet_generator,
    simulate,
    simulate_block,
    summarize,
)
from core.services.outage import estimate_outages


def config(snr, packets, nats=600.0, lengths=(300, 300), seed=7, workers=1, delay=0.0):
    return SimConfig(
        scheme=HarqScheme(nats=nats, lengths=lengths, feedback_delay=delay),
        spec=ChannelSpec(snr=snr),
        packets=packets,
        seed=seed,
        workers=workers,
    )


def test_summary_from_known_counts():
    stats = summarize(config(10.0, 10), [5, 3, 2])
    assert stats.decoded_at == (5, 3)
    assert stats.outages == 2
    assert stats.omegas == (0.5, 0.2)
    assert stats.expected_uses == pytest.approx(450.0)
    assert stats.throughput == pytest.approx(600 * 8 / 4500)


def test_counts_add_up_across_partial_blocks():
    packets = BLOCK_PACKETS + 1234
    assert block_count(packets) == 2
    stats = simulate(config(5.0, packets))
    assert sum(stats.decoded_at) + stats.outages == packets
    assert simulate_block(config(5.0, packets), 2) == [0, 0, 0]


def test_tiny_message_always_decodes_in_the_first_round():
    stats = simulate(config(1e6, 1000, nats=1e-3, lengths=(100,)))
    assert stats.decoded_at == (1000,)
    assert stats.outages == 0


def test_vanishing_snr_is_always_in_outage():
    stats = simulate(config(1e-6, 1000))
    assert stats.outages == 1000
    assert stats.throughput == 0.0


def test_same_seed_is_reproducible_and_seeds_differ():
    first = simulate(config(10.0, 5000, seed=11))
    assert simulate(config(10.0, 5000, seed=11)) == first
    assert simulate(config(10.0, 5000, seed=12)).decoded_at != first.decoded_at


@pytest.mark.parametrize('workers', [2, 4, 8])
def test_worker_count_does_not_change_results(workers):
    packets = 3 * BLOCK_PACKETS + 17
    single = simulate(config(10.0, packets, workers=1))
    assert simulate(config(10.0, packets, workers=workers)) == single
    assert simulate(config(10.0, packets), fan_out=False) == single


@pytest.mark.parametrize('first_packet', [1, 5, 4096, 70_001])
def test_packet_draws_do_not_depend_on_where_a_block_starts(first_packet):
    full = packet_generator(3, 0, 0).random(first_packet + 10)
    np.testing.assert_array_equal(packet_generator(3, 0, first_packet).random(10), full[first_packet:])


def test_block_size_does_not_change_results(monkeypatch):
    packets = 5000
    reference = simulate(config(10.0, packets), fan_out=False)
    monkeypatch.setattr(mc_sim, 'BLOCK_PACKETS', 1001)
    assert block_count(packets) == 5
    assert simulate(config(10.0, packets), fan_out=False) == reference


@pytest.mark.parametrize('snr', [2.0, 10.0, 100.0])
def test_agrees_with_the_analysis(snr):
    packets = 1_000_000
    cfg = config(snr, packets, workers=4)
    stats = simulate(cfg)
    omegas = estimate_outages(cfg.scheme, cfg.spec)
    analytic = throughput(cfg.scheme, omegas)

    for empirical, expected in zip(stats.omegas, omegas.values):
        spread = math.sqrt(expected * (1 - expected) / packets)
        assert abs(empirical - expected) <= 4 * spread + 1e-12

    previous = 1.0
    for decoded, expected in zip(stats.decoded_at, omegas.values):
        probability = previous - expected
        spread = math.sqrt(probability * (1 - probability) / packets)
        assert abs(decoded / packets - probability) <= 4 * spread + 1e-12
        previous = expected

    standard_error = stats.throughput_half_width / Z_95
    assert abs(stats.throughput - analytic.eta) <= 4 * standard_error + 1e-12
    assert abs(stats.expected_uses - analytic.expected_uses) <= 4 * stats.expected_uses_half_width / Z_95 + 1e-9
