import math

import pytest
from pydantic import ValidationError

from core.schemas.data_models import (
    ChannelSpec,
    CodeBlock,
    HarqScheme,
    OutageMethod,
    OutageVector,
    RoundGeometry,
    SimStats,
    SweepSpec,
)


def test_scheme_geometry():
    scheme = HarqScheme(nats=600.0, lengths=(200, 300, 100), feedback_delay=60.0)
    assert scheme.max_rounds == 3
    assert scheme.cumulative_lengths == (200, 500, 600)
    assert scheme.rates == (3.0, 1.2, 1.0)
    assert scheme.relative_delay == 0.1
    assert scheme.geometry(2) == RoundGeometry(cumulative_length=500, nats=600.0)
    with pytest.raises(IndexError):
        scheme.geometry(0)


def test_scheme_rejects_short_subcodewords():
    with pytest.raises(ValidationError):
        HarqScheme(nats=600.0, lengths=(99, 501))
    HarqScheme(nats=600.0, lengths=(50, 550), min_subcodeword_length=50)


def test_fixed_length_puts_the_remainder_last():
    scheme = HarqScheme.fixed_length(600.0, 701, 3, feedback_delay=10.0)
    assert scheme.lengths == (234, 234, 233)
    assert scheme.total_length == 701

    delayed = HarqScheme.with_relative_delay(600.0, (300, 300), 0.25)
    assert delayed.feedback_delay == 150.0


def test_round_geometry_parameters():
    geom = RoundGeometry(cumulative_length=600, nats=600.0)
    spec = ChannelSpec(snr=10.0)
    assert geom.theta(spec) == pytest.approx(math.expm1(1.0) / 10.0)
    assert geom.b(spec) == pytest.approx(10.0 * math.sqrt(600) / math.sqrt(math.expm1(2.0)))
    assert geom.theta_b_product() == pytest.approx(geom.theta(spec) * geom.b(spec))
    assert RoundGeometry(cumulative_length=100, nats=1e5).theta(spec) == math.inf


def test_value_type_validation():
    with pytest.raises(ValidationError):
        ChannelSpec(snr=0.0)
    with pytest.raises(ValidationError):
        CodeBlock(length=0, rate=1.0)
    with pytest.raises(ValidationError):
        OutageVector(values=(1.2,), method=OutageMethod.ORACLE)
    assert CodeBlock.from_nats(300, 600.0).rate == 2.0
    assert OutageVector(values=(0.5, 0.1), method=OutageMethod.ORACLE).with_round_zero() == (1.0, 0.5, 0.1)


def test_sim_stats_counts_must_add_up():
    with pytest.raises(ValidationError):
        SimStats(
            packets=10, decoded_at=(5, 3), outages=1, omegas=(0.5, 0.2), omega_half_widths=(0.1, 0.1),
            throughput=1.0, throughput_half_width=0.1, expected_uses=450.0,
            expected_uses_half_width=1.0, seed=7,
        )


def test_sweep_validation():
    with pytest.raises(ValidationError):
        SweepSpec(snr_db=(10.0, 5.0))
    with pytest.raises(ValidationError):
        SweepSpec(snr_db=(10.0,), lengths=(300, 300), max_rounds=3)
    with pytest.raises(ValidationError):
        SweepSpec(snr_db=(10.0,), lengths=(300, 300), relative_delay=0.1, feedback_delay=20.0)
    with pytest.raises(ValidationError):
        SweepSpec(snr_db=(10.0,), feedback_delay=20.0)

    sweep = SweepSpec(snr_db=(0.0, 10.0), lengths=(300, 300), feedback_delay=20.0)
    assert sweep.rounds == 2
    assert sweep.scheme(600.0).feedback_delay == 20.0
    assert [spec.snr for spec in sweep.channel_specs()] == [1.0, 10.0]
    assert SweepSpec(snr_db=(10.0,)).rounds == 2
