"""
Pydantic value types shared by the analysis services.

All models are frozen: services treat them as immutable inputs, which
keeps every estimator a pure function that is safe to call from any
worker. The same models serialize to JSON for Celery fan-out.
"""

import math
from enum import Enum
from typing import Any, Dict, List, Optional, Tuple

from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

DEFAULT_MIN_SUBCODEWORD_LENGTH = 100


class FadingModel(str, Enum):
    RAYLEIGH = "rayleigh"


class OutageMethod(str, Enum):
    """Estimators for Ω_m."""

    ORACLE = "oracle"
    HIGH_SNR = "high_snr"
    LINEARIZED = "linearized"
    LOWER_BOUND = "lower_bound"
    UPPER_BOUND = "upper_bound"


class OptimizationMode(str, Enum):
    VARIABLE_LENGTH = "variable"
    FIXED_LENGTH = "fixed"
    OPEN_LOOP = "openloop"


def db_to_linear(snr_db: float) -> float:
    """P = 10^(dB/10); exact for 0 dB and 10 dB."""
    return 10.0 ** (snr_db / 10.0)


class ChannelSpec(BaseModel):
    """Transmit SNR and fading law (unit-mean Rayleigh: f_g(x) = e^-x)."""

    model_config = ConfigDict(frozen=True)

    snr: float
    fading: FadingModel = FadingModel.RAYLEIGH

    @field_validator("snr")
    @classmethod
    def _snr_positive(cls, value: float) -> float:
        if not math.isfinite(value) or value <= 0:
            raise ValueError(f"snr must be positive and finite, got {value}")
        return value

    @classmethod
    def from_db(cls, snr_db: float) -> "ChannelSpec":
        return cls(snr=db_to_linear(snr_db))


class CodeBlock(BaseModel):
    """A length-L code at R nats per channel use (K = L·R)."""

    model_config = ConfigDict(frozen=True)

    length: int = Field(ge=1)
    rate: float = Field(ge=0)

    @field_validator("rate")
    @classmethod
    def _rate_finite(cls, value: float) -> float:
        if not math.isfinite(value):
            raise ValueError("rate must be finite")
        return value

    @classmethod
    def from_nats(cls, length: int, nats: float) -> "CodeBlock":
        return cls(length=length, rate=nats / length)

    @property
    def nats(self) -> float:
        return self.length * self.rate


def _log_expm1(x: float) -> float:
    """log(e^x - 1) without overflow for large x."""
    if x > 30.0:
        return x + math.log1p(-math.exp(-x))
    return math.log(math.expm1(x))


class RoundGeometry(BaseModel):
    """
    Round m of an INR scheme seen by the outage estimators.

    θ_m and b_m depend on the SNR, so they are evaluated against a
    ChannelSpec rather than stored.
    """

    model_config = ConfigDict(frozen=True)

    cumulative_length: int = Field(ge=1)
    nats: float = Field(gt=0)

    @field_validator("nats")
    @classmethod
    def _nats_finite(cls, value: float) -> float:
        if not math.isfinite(value):
            raise ValueError("nats must be finite")
        return value

    @property
    def rate(self) -> float:
        return self.nats / self.cumulative_length

    @property
    def block(self) -> CodeBlock:
        return CodeBlock(length=self.cumulative_length, rate=self.rate)

    def theta(self, spec: ChannelSpec) -> float:
        # θ_m = (e^R - 1)/P; inf once e^R overflows
        try:
            return math.expm1(self.rate) / spec.snr
        except OverflowError:
            return math.inf

    def log_b(self, spec: ChannelSpec) -> float:
        return (
            math.log(spec.snr)
            + 0.5 * math.log(self.cumulative_length)
            - 0.5 * _log_expm1(2.0 * self.rate)
        )

    def b(self, spec: ChannelSpec) -> float:
        return math.exp(self.log_b(spec))

    def theta_b_product(self) -> float:
        """θ_m·b_m, which does not depend on P."""
        return math.sqrt(self.cumulative_length) * math.exp(
            _log_expm1(self.rate) - 0.5 * _log_expm1(2.0 * self.rate)
        )


class OutageEstimate(BaseModel):
    """Ω_m from one estimator; diagnostics always carry the unclamped 'raw' value."""

    model_config = ConfigDict(frozen=True)

    value: float = Field(ge=0, le=1)
    method: OutageMethod
    diagnostics: Dict[str, Any] = Field(default_factory=dict)


class OutageVector(BaseModel):
    """Ω_1..Ω_M tagged with the estimator that produced them."""

    model_config = ConfigDict(frozen=True)

    values: Tuple[float, ...] = Field(min_length=1)
    method: OutageMethod

    @field_validator("values")
    @classmethod
    def _probabilities(cls, values: Tuple[float, ...]) -> Tuple[float, ...]:
        for value in values:
            if not (0.0 <= value <= 1.0):
                raise ValueError(f"outage probability out of [0, 1]: {value}")
        return values

    @property
    def rounds(self) -> int:
        return len(self.values)

    @property
    def outage(self) -> float:
        return self.values[-1]

    def with_round_zero(self) -> Tuple[float, ...]:
        """(Ω_0, Ω_1, .., Ω_M) with Ω_0 = 1."""
        return (1.0,) + tuple(self.values)


class HarqScheme(BaseModel):
    """
    INR HARQ configuration: K nats spread over M sub-codewords.

    feedback_delay is D in channel uses; the relative delay D^f = D / l_(M).
    """

    model_config = ConfigDict(frozen=True)

    nats: float = Field(gt=0)
    lengths: Tuple[int, ...] = Field(min_length=1)
    feedback_delay: float = Field(default=0.0, ge=0)
    min_subcodeword_length: int = Field(default=DEFAULT_MIN_SUBCODEWORD_LENGTH, ge=1)

    @model_validator(mode="after")
    def _check_lengths(self) -> "HarqScheme":
        if not math.isfinite(self.nats) or not math.isfinite(self.feedback_delay):
            raise ValueError("nats and feedback_delay must be finite")
        short = [l for l in self.lengths if l < self.min_subcodeword_length]
        if short:
            raise ValueError(
                f"sub-codeword lengths {short} are below the minimum "
                f"{self.min_subcodeword_length} channel uses"
            )
        return self

    @classmethod
    def fixed_length(
        cls,
        nats: float,
        total_length: int,
        rounds: int,
        feedback_delay: float = 0.0,
        min_subcodeword_length: int = DEFAULT_MIN_SUBCODEWORD_LENGTH,
    ) -> "HarqScheme":
        """l_m = round(l_(M)/M), remainder on the last round."""
        base = int(round(total_length / rounds))
        lengths = [base] * (rounds - 1) + [total_length - base * (rounds - 1)]
        return cls(
            nats=nats,
            lengths=tuple(lengths),
            feedback_delay=feedback_delay,
            min_subcodeword_length=min_subcodeword_length,
        )

    @classmethod
    def with_relative_delay(
        cls,
        nats: float,
        lengths: Tuple[int, ...],
        relative_delay: float,
        min_subcodeword_length: int = DEFAULT_MIN_SUBCODEWORD_LENGTH,
    ) -> "HarqScheme":
        return cls(
            nats=nats,
            lengths=tuple(lengths),
            feedback_delay=relative_delay * sum(lengths),
            min_subcodeword_length=min_subcodeword_length,
        )

    @property
    def max_rounds(self) -> int:
        return len(self.lengths)

    @property
    def total_length(self) -> int:
        return sum(self.lengths)

    @property
    def cumulative_lengths(self) -> Tuple[int, ...]:
        out: List[int] = []
        running = 0
        for length in self.lengths:
            running += length
            out.append(running)
        return tuple(out)

    @property
    def rates(self) -> Tuple[float, ...]:
        """R_(1) > .. > R_(M)."""
        return tuple(self.nats / l for l in self.cumulative_lengths)

    @property
    def relative_delay(self) -> float:
        return self.feedback_delay / self.total_length

    def geometry(self, m: int) -> RoundGeometry:
        """RoundGeometry of round m (1-based)."""
        if not 1 <= m <= self.max_rounds:
            raise IndexError(f"round {m} outside 1..{self.max_rounds}")
        return RoundGeometry(cumulative_length=self.cumulative_lengths[m - 1], nats=self.nats)

    def geometries(self) -> List[RoundGeometry]:
        return [self.geometry(m) for m in range(1, self.max_rounds + 1)]


class ThroughputReport(BaseModel):
    """Renewal-reward throughput η = 𝒦/𝒯 with its ingredients."""

    model_config = ConfigDict(frozen=True)

    eta: float
    outage: float
    expected_uses: float
    expected_nats: float
    omegas: OutageVector
    per_round_uses: Tuple[float, ...]


class OptimizationProblem(BaseModel):
    model_config = ConfigDict(frozen=True)

    spec: ChannelSpec
    max_rounds: int = Field(ge=1)
    mode: OptimizationMode = OptimizationMode.VARIABLE_LENGTH
    relative_delay: float = Field(default=0.0, ge=0)
    nats_range: Tuple[float, float] = (50.0, 4000.0)
    length_range: Optional[Tuple[int, int]] = None
    min_subcodeword_length: int = Field(default=DEFAULT_MIN_SUBCODEWORD_LENGTH, ge=1)
    nats_points: int = Field(default=16, ge=1)
    length_points: int = Field(default=16, ge=1)
    split_levels: int = Field(default=8, ge=2)
    estimator: OutageMethod = OutageMethod.LINEARIZED
    final_estimator: OutageMethod = OutageMethod.ORACLE

    @model_validator(mode="after")
    def _check_bounds(self) -> "OptimizationProblem":
        lo, hi = self.nats_range
        if lo <= 0 or hi < lo:
            raise ValueError(f"invalid nats range {self.nats_range}")
        if self.length_range is not None:
            l_lo, l_hi = self.length_range
            if l_lo < self.min_subcodeword_length:
                raise ValueError(
                    f"length lower bound {l_lo} is below the minimum "
                    f"sub-codeword length {self.min_subcodeword_length}"
                )
            if l_hi < l_lo:
                raise ValueError(f"invalid length range {self.length_range}")
        return self

    @property
    def lengths_bounds(self) -> Tuple[int, int]:
        """Admissible l_(M); defaults to [min_len·M, 10^4]."""
        if self.length_range is not None:
            return self.length_range
        return (self.min_subcodeword_length * self.max_rounds, 10_000)


class DelayThresholdReport(BaseModel):
    """Usefulness threshold r of the relative feedback delay and its bounds."""

    model_config = ConfigDict(frozen=True)

    r: float
    r_lower: float
    r_upper: float
    r_linearized: Optional[float] = None
    omegas: OutageVector
    lower_omegas: OutageVector
    upper_omegas: OutageVector
    scheme: HarqScheme
    open_loop_eta: float


class GainReport(BaseModel):
    """Δ = (η - η_open-loop)/η_open-loop in percent."""

    model_config = ConfigDict(frozen=True)

    gain_percent: float
    eta: float
    eta_open_loop: float
    scheme: HarqScheme
    open_loop_scheme: HarqScheme


class SimConfig(BaseModel):
    model_config = ConfigDict(frozen=True)

    scheme: HarqScheme
    spec: ChannelSpec
    packets: int = Field(ge=1)
    seed: int = Field(default=7, ge=0, lt=2**64)
    workers: int = Field(default=1, ge=1)


class SimStats(BaseModel):
    """Monte Carlo counts and estimates; half-widths are 95% intervals."""

    model_config = ConfigDict(frozen=True)

    packets: int
    decoded_at: Tuple[int, ...]
    outages: int
    omegas: Tuple[float, ...]
    omega_half_widths: Tuple[float, ...]
    throughput: float
    throughput_half_width: float
    expected_uses: float
    expected_uses_half_width: float
    seed: int

    @model_validator(mode="after")
    def _counts_add_up(self) -> "SimStats":
        if sum(self.decoded_at) + self.outages != self.packets:
            raise ValueError("decode counts do not add up to the packet count")
        return self


class SweepSpec(BaseModel):
    """
    One command invocation: the SNR axis in dB, the fixed parameters and
    the numerical options. lengths=None means the lengths are optimized.
    """

    model_config = ConfigDict(frozen=True)

    snr_db: Tuple[float, ...] = Field(min_length=1)
    nats: Tuple[float, ...] = ()
    max_rounds: Optional[int] = Field(default=None, ge=1)
    lengths: Optional[Tuple[int, ...]] = None
    relative_delay: Optional[float] = Field(default=None, ge=0)
    feedback_delay: Optional[float] = Field(default=None, ge=0)
    method: OutageMethod = OutageMethod.ORACLE
    out: Optional[str] = None

    min_subcodeword_length: int = Field(default=DEFAULT_MIN_SUBCODEWORD_LENGTH, ge=1)
    oracle_tol: float = Field(default=1e-8, gt=0)
    series_tol: float = Field(default=1e-10, gt=0)
    eps_points: int = Field(default=32, ge=1)
    eps_range: Tuple[float, float] = (1e-6, 1.0)
    nats_range: Tuple[float, float] = (50.0, 4000.0)
    length_max: int = Field(default=10_000, ge=1)
    packets: int = Field(default=0, ge=0)
    seed: int = Field(default=7, ge=0, lt=2**64)
    workers: int = Field(default=1, ge=1)

    @field_validator("snr_db")
    @classmethod
    def _strictly_increasing(cls, axis: Tuple[float, ...]) -> Tuple[float, ...]:
        for left, right in zip(axis, axis[1:]):
            if not right > left:
                raise ValueError("SNR axis must be strictly increasing")
        return axis

    @field_validator("nats")
    @classmethod
    def _nats_positive(cls, values: Tuple[float, ...]) -> Tuple[float, ...]:
        for value in values:
            if not math.isfinite(value) or value <= 0:
                raise ValueError(f"K must be positive and finite, got {value}")
        return values

    @model_validator(mode="after")
    def _check_protocol(self) -> "SweepSpec":
        if self.lengths is not None:
            if not self.lengths:
                raise ValueError("at least one sub-codeword length is required")
            if self.max_rounds is not None and self.max_rounds != len(self.lengths):
                raise ValueError(
                    f"-M {self.max_rounds} disagrees with {len(self.lengths)} lengths"
                )
        if self.relative_delay is not None and self.feedback_delay is not None:
            raise ValueError("give either the relative delay --df or the absolute delay --d")
        if self.lengths is None and self.feedback_delay is not None:
            raise ValueError("optimized lengths need the relative delay --df, not --d")
        lo, hi = self.eps_range
        if not 0 < lo <= hi:
            raise ValueError(f"invalid ε range {self.eps_range}")
        return self

    @property
    def optimize_lengths(self) -> bool:
        return self.lengths is None

    @property
    def rounds(self) -> int:
        if self.lengths is not None:
            return len(self.lengths)
        return self.max_rounds or 2

    @property
    def delay_fraction(self) -> float:
        """D^f for searches; 0 unless --df was given."""
        return self.relative_delay or 0.0

    def channel_specs(self) -> List[ChannelSpec]:
        return [ChannelSpec.from_db(db) for db in self.snr_db]

    def scheme(self, nats: float) -> HarqScheme:
        """The scheme given by --lengths, with D from --d or D^f·l_(M)."""
        if self.lengths is None:
            raise ValueError("this command needs explicit --lengths")
        if self.feedback_delay is not None:
            delay = self.feedback_delay
        else:
            delay = self.delay_fraction * sum(self.lengths)
        return HarqScheme(
            nats=nats,
            lengths=self.lengths,
            feedback_delay=delay,
            min_subcodeword_length=self.min_subcodeword_length,
        )
