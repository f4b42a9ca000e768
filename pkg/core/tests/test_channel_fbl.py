import math

import numpy as np
import pytest

from core.schemas.data_models import ChannelSpec, CodeBlock
from core.services.channel_fbl import conditional_error_prob, dispersion_argument


@pytest.fixture
def block():
    return CodeBlock.from_nats(300, 600.0)


def test_dispersion_argument_closed_form(block):
    spec = ChannelSpec(snr=10.0)
    expected = math.sqrt(300) * (math.log(11.0) - 2.0) / math.sqrt(1 - 1 / 121.0)
    assert dispersion_argument(block, spec, 1.0) == pytest.approx(expected, rel=1e-13)


def test_zero_gain_limits(block):
    spec = ChannelSpec(snr=10.0)
    assert dispersion_argument(block, spec, 0.0) == -math.inf
    assert conditional_error_prob(block, spec, 0.0) == 1.0

    zero_rate = CodeBlock(length=300, rate=0.0)
    assert dispersion_argument(zero_rate, spec, 0.0) == math.inf
    assert conditional_error_prob(zero_rate, spec, 0.0) == 0.0


@pytest.mark.parametrize('gain', [-1.0, math.nan, math.inf])
def test_rejects_invalid_gain(block, gain):
    with pytest.raises(ValueError):
        dispersion_argument(block, ChannelSpec(snr=10.0), gain)


def test_error_probability_is_a_decreasing_probability(block):
    spec = ChannelSpec.from_db(10.0)
    gains = np.linspace(0.0, 5.0, 2001)
    errors = conditional_error_prob(block, spec, gains)
    assert errors.shape == gains.shape
    assert np.all((errors >= 0.0) & (errors <= 1.0))
    assert np.all(np.diff(errors) <= 0.0)


def test_array_and_scalar_agree(block):
    spec = ChannelSpec(snr=3.0)
    gains = np.array([0.1, 0.7, 2.0])
    array_values = conditional_error_prob(block, spec, gains)
    for gain, value in zip(gains, array_values):
        assert conditional_error_prob(block, spec, float(gain)) == pytest.approx(value, rel=1e-12)


def test_longer_code_fails_less_above_capacity_threshold():
    spec = ChannelSpec(snr=10.0)
    gain = 1.0  # ln(1 + 10) > R = 1
    short = CodeBlock.from_nats(300, 300.0)
    long = CodeBlock.from_nats(3000, 3000.0)
    assert conditional_error_prob(long, spec, gain) < conditional_error_prob(short, spec, gain)


@pytest.mark.parametrize('snr', [1.0, 10.0, 100.0])
def test_cumulative_rounds_are_nested_at_fixed_nats(snr):
    spec = ChannelSpec(snr=snr)
    gains = np.linspace(0.0, 3.0, 1501)
    cumulative = [200, 400, 600, 1200]
    errors = [conditional_error_prob(CodeBlock.from_nats(l, 600.0), spec, gains) for l in cumulative]
    for shorter, longer in zip(errors, errors[1:]):
        assert np.all(longer <= shorter + 1e-15)


def test_db_conversion_is_exact_at_decades():
    assert ChannelSpec.from_db(0.0).snr == 1.0
    assert ChannelSpec.from_db(10.0).snr == 10.0
