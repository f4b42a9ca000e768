"""
Per-round outage probabilities Ω_m of INR HARQ over Rayleigh fading.

Ω_m = ∫_0^∞ e^-x Q(W_(m)(x)) dx has no closed form. Four interchangeable
estimators are provided:

- omega_oracle:      adaptive Gauss-Kronrod quadrature (QUADPACK) of the integral
- omega_high_snr:    partial-integration series, valid at medium/high SNR
- omega_linearized:  piecewise-linear surrogate of Q(W) around x = θ_m
- omega_bounds:      closed-form lower bound v_m and ε-minimized upper bound u_m

Every estimate is clamped to [0, 1]; the unclamped value is kept in
diagnostics['raw'].
"""

import logging
import math
import warnings
from typing import Any, Dict, Optional, Sequence, Tuple

import numpy as np
from scipy import integrate, special

from core.exceptions import GammaKernelFailure, NonConvergence, SeriesUnstable
from core.schemas.data_models import (
    ChannelSpec,
    HarqScheme,
    OutageEstimate,
    OutageMethod,
    OutageVector,
    RoundGeometry,
)
from core.services.channel_fbl import conditional_error_prob
from core.services.special_functions import log_q_function, upper_incomplete_gamma

logger = logging.getLogger(__name__)

DEFAULT_ORACLE_TOL = 1e-8
ORACLE_SUBINTERVALS = 500
DEFAULT_SERIES_TOL = 1e-10
SERIES_STALL_TERMS = 5
SERIES_CANCELLATION_GUARD = 1e12
LOG_OVERFLOW_GUARD = 700.0
EPS_GRID_POINTS = 32
EPS_GRID_RANGE = (1e-6, 1.0)


def default_eps_grid(
    points: int = EPS_GRID_POINTS,
    lo: float = EPS_GRID_RANGE[0],
    hi: float = EPS_GRID_RANGE[1],
) -> Tuple[float, ...]:
    """Log-spaced ε values for the upper bound, ascending."""
    return tuple(float(e) for e in np.logspace(math.log10(lo), math.log10(hi), points))


def _estimate(raw: float, method: OutageMethod, **diagnostics: Any) -> OutageEstimate:
    if math.isnan(raw):
        raise ValueError(f"{method.value} estimator produced NaN")
    return OutageEstimate(
        value=min(1.0, max(0.0, raw)),
        method=method,
        diagnostics={"raw": raw, **diagnostics},
    )


def asymptotic_outage(geom: RoundGeometry, spec: ChannelSpec) -> float:
    """Infinite-blocklength outage Pr(ln(1+gP) < R_(m)) = 1 - e^-θ_m."""
    return -math.expm1(-geom.theta(spec))


def omega_oracle(
    geom: RoundGeometry,
    spec: ChannelSpec,
    tol: float = DEFAULT_ORACLE_TOL,
    subintervals: int = ORACLE_SUBINTERVALS,
) -> OutageEstimate:
    """
    Ω_m by adaptive quadrature on [0, x_max].

    x_max is chosen so that e^-x_max = tol·1e-3; since Q(W(x)) decreases
    in x, the tail is at most e^-x_max·Q(W(x_max)). Half of that bound is
    added to the value and half to the error estimate.
    """
    if not 0 < tol <= 1e-3:
        raise ValueError(f"oracle tolerance must lie in (0, 1e-3], got {tol}")

    block = geom.block
    x_max = -math.log(tol * 1e-3)
    tail = math.exp(-x_max) * conditional_error_prob(block, spec, x_max)

    theta = geom.theta(spec)
    width = 8.0 / geom.b(spec)
    breakpoints = sorted({p for p in (theta - width, theta, theta + width) if 0.0 < p < x_max})

    def integrand(x: float) -> float:
        return math.exp(-x) * conditional_error_prob(block, spec, x)

    with warnings.catch_warnings():
        warnings.simplefilter("ignore", integrate.IntegrationWarning)
        result = integrate.quad(
            integrand,
            0.0,
            x_max,
            points=breakpoints or None,
            epsabs=0.0,
            epsrel=tol,
            limit=subintervals,
            full_output=1,
        )
    value, abserr, info = result[0], result[1], result[2]
    message = result[3] if len(result) > 3 else ""

    value += 0.5 * tail
    error = abserr + 0.5 * tail
    if error > tol * abs(value) and error > 1e-300:
        raise NonConvergence(
            f"Ω oracle for l={geom.cumulative_length}, K={geom.nats}, P={spec.snr} "
            f"reached error {error:.3g} (> tol {tol:g}): {message}",
            budget=subintervals,
            error_estimate=error,
        )
    return _estimate(
        value,
        OutageMethod.ORACLE,
        error_estimate=error,
        tail_bound=tail,
        evaluations=int(info.get("neval", 0)),
        budget=subintervals,
    )


def omega_high_snr(
    geom: RoundGeometry,
    spec: ChannelSpec,
    series_tol: float = DEFAULT_SERIES_TOL,
) -> OutageEstimate:
    """
    Medium/high-SNR series for Ω_m (the dispersion denominator is dropped).

    Partial integration and a Taylor expansion of e^-x give

        Ω_m ≈ ½erfc(-K/√(2l)) - Σ_i t_i,
        t_i = e^(1/P) (1/i!) (-e^R/P)^i e^(i²/(2l)) ½erfc(-(K+i)/√(2l)),

    summed in log-magnitude/sign form with exactly rounded accumulation.
    The series is asymptotic: it stops once |t_i| < series_tol·|Σ| for five
    consecutive terms, and raises SeriesUnstable when cancellation, overflow
    or renewed growth of the terms makes the sum meaningless.
    """
    nats = geom.nats
    length = geom.cumulative_length
    snr = spec.snr
    scale = math.sqrt(2.0 * length)
    log_ratio = geom.rate - math.log(snr)
    i_max = int(math.ceil(nats + 20.0 * scale))

    base = 0.5 * special.erfc(-nats / scale)
    terms = []
    running = 0.0
    peak_log = -math.inf
    previous_log = -math.inf
    past_peak = False
    stall = 0
    index = 0
    for index in range(i_max + 1):
        log_mag = (
            1.0 / snr
            + index * log_ratio
            - special.gammaln(index + 1)
            + index * index / (2.0 * length)
            + math.log(0.5 * special.erfc(-(nats + index) / scale))
        )
        if log_mag > LOG_OVERFLOW_GUARD:
            raise SeriesUnstable(f"series term {index} overflows (log|t| = {log_mag:.1f})")
        if past_peak and log_mag > previous_log:
            raise SeriesUnstable(
                f"series terms grow again at i={index} before reaching tolerance {series_tol:g}"
            )
        if log_mag < previous_log:
            past_peak = True
        previous_log = log_mag
        peak_log = max(peak_log, log_mag)

        term = math.exp(log_mag) if index % 2 == 0 else -math.exp(log_mag)
        terms.append(term)
        running += term

        if running != 0.0 and log_mag < math.log(series_tol) + math.log(abs(running)):
            stall += 1
            if stall >= SERIES_STALL_TERMS:
                break
        else:
            stall = 0
    else:
        logger.debug(f"high-SNR series hit the index cap {i_max}")

    series = math.fsum(terms)
    raw = base - series
    peak = math.exp(peak_log)
    if peak > SERIES_CANCELLATION_GUARD * max(abs(raw), np.finfo(float).tiny):
        raise SeriesUnstable(
            f"cancellation: peak term {peak:.3g} against result {raw:.3g} "
            f"(l={length}, K={nats}, P={snr})"
        )
    return _estimate(
        raw,
        OutageMethod.HIGH_SNR,
        truncation_index=index,
        peak_term=peak,
        series_tol=series_tol,
    )


def omega_linearized(geom: RoundGeometry, spec: ChannelSpec) -> OutageEstimate:
    """
    Ω_m with Q(W) replaced by Z_m(x): 1 up to θ-w, linear with slope
    -b/√(2π) on [θ-w, θ+w], 0 afterwards, where w = √(π/(2b²)).

    When θ < w the window is cut at x = 0 and the closed form becomes
    Z_m(0) - c(1 - e^-(θ+w)) with c = b/√(2π).
    """
    theta = geom.theta(spec)
    if math.isinf(theta):
        return _estimate(1.0, OutageMethod.LINEARIZED, truncated_window=False)

    b = geom.b(spec)
    half_width = math.sqrt(math.pi / 2.0) / b
    slope = b / math.sqrt(2.0 * math.pi)
    if theta >= half_width:
        raw = 1.0 - slope * math.exp(-theta) * 2.0 * math.sinh(half_width)
        truncated = False
    else:
        raw = 0.5 + slope * theta + slope * math.expm1(-(theta + half_width))
        truncated = True
    return _estimate(
        raw,
        OutageMethod.LINEARIZED,
        theta=theta,
        b=b,
        half_width=half_width,
        truncated_window=truncated,
    )


def lower_bound(geom: RoundGeometry, spec: ChannelSpec) -> float:
    """
    v_m = ½(1 - erf(-θb/√2) - e^((1-2θb²)/(2b²)) (1 - erf((1-b²θ)/(√2 b)))),
    evaluated as Φ(θb) - exp(-θ + 1/(2b²) + log Φ(θb - 1/b)).
    """
    theta = geom.theta(spec)
    if math.isinf(theta):
        return 1.0
    b = geom.b(spec)
    first = float(special.ndtr(theta * b))
    log_second = -theta + 0.5 / (b * b) + log_q_function(1.0 / b - theta * b)
    return first - math.exp(log_second)


def upper_bound(geom: RoundGeometry, spec: ChannelSpec, eps: float) -> float:
    """
    u_m(ε) = 1 - (e^-θ + e^-ψ)/2 + ½ e^α P^(-εl) Γ(1-εl, ψ+1/P),
    ψ = (e^(R+ε/2) - 1)/P, α = 1/P + Kε + lε²/2.
    """
    if eps <= 0:
        raise ValueError(f"ε must be positive, got {eps}")
    snr = spec.snr
    length = geom.cumulative_length
    theta = geom.theta(spec)
    try:
        psi = math.expm1(geom.rate + eps / 2.0) / snr
    except OverflowError:
        return 1.0
    if math.isinf(theta) or math.isinf(psi):
        return 1.0
    alpha = 1.0 / snr + geom.nats * eps + length * eps * eps / 2.0
    log_gamma, sign = upper_incomplete_gamma(1.0 - eps * length, psi + 1.0 / snr)
    log_tail = alpha - eps * length * math.log(snr) + log_gamma
    tail = math.inf if log_tail > LOG_OVERFLOW_GUARD else sign * math.exp(log_tail)
    return 1.0 - (math.exp(-theta) + math.exp(-psi)) / 2.0 + 0.5 * tail


def omega_bounds(
    geom: RoundGeometry,
    spec: ChannelSpec,
    eps_grid: Optional[Sequence[float]] = None,
) -> Tuple[OutageEstimate, OutageEstimate]:
    """
    (v_m, min_ε u_m). The ε grid is scanned in ascending order and only a
    strictly smaller u replaces the incumbent, so ties go to the smaller ε.
    """
    grid = sorted(default_eps_grid() if eps_grid is None else eps_grid)
    if not grid:
        raise ValueError("ε grid must not be empty")
    if grid[0] <= 0:
        raise ValueError("ε grid entries must be positive")

    best_eps = None
    best_raw = math.inf
    failures = 0
    for eps in grid:
        try:
            candidate = upper_bound(geom, spec, eps)
        except NonConvergence as exc:
            failures += 1
            logger.debug(f"u_m skipped ε={eps:g}: {exc}")
            continue
        if candidate < best_raw:
            best_raw = candidate
            best_eps = eps
    if best_eps is None:
        raise GammaKernelFailure(
            f"Γ kernel failed for all {len(grid)} ε values "
            f"(l={geom.cumulative_length}, K={geom.nats}, P={spec.snr})"
        )

    lower = _estimate(lower_bound(geom, spec), OutageMethod.LOWER_BOUND)
    upper = _estimate(
        best_raw,
        OutageMethod.UPPER_BOUND,
        eps_star=best_eps,
        grid_points=len(grid),
        kernel_failures=failures,
    )
    if lower.value > upper.value:
        logger.warning(
            f"lower bound {lower.value:.6g} exceeds upper bound {upper.value:.6g} "
            f"(l={geom.cumulative_length}, K={geom.nats}, P={spec.snr})"
        )
    return lower, upper


def estimate_outage(
    geom: RoundGeometry,
    spec: ChannelSpec,
    method: OutageMethod,
    tol: float = DEFAULT_ORACLE_TOL,
    series_tol: float = DEFAULT_SERIES_TOL,
    eps_grid: Optional[Sequence[float]] = None,
    fallback: bool = False,
) -> OutageEstimate:
    """
    Ω_m with the chosen estimator. With fallback=True an unstable high-SNR
    series is replaced by the oracle.
    """
    if method == OutageMethod.ORACLE:
        return omega_oracle(geom, spec, tol=tol)
    if method == OutageMethod.HIGH_SNR:
        try:
            return omega_high_snr(geom, spec, series_tol=series_tol)
        except SeriesUnstable as exc:
            if not fallback:
                raise
            logger.warning(f"high-SNR series unstable, using oracle: {exc}")
            return omega_oracle(geom, spec, tol=tol)
    if method == OutageMethod.LINEARIZED:
        return omega_linearized(geom, spec)
    lower, upper = omega_bounds(geom, spec, eps_grid=eps_grid)
    return lower if method == OutageMethod.LOWER_BOUND else upper


def estimate_outages(
    scheme: HarqScheme,
    spec: ChannelSpec,
    method: OutageMethod = OutageMethod.ORACLE,
    **options: Any,
) -> OutageVector:
    """Ω_1..Ω_M of a scheme, all from the same estimator."""
    values = [
        estimate_outage(geom, spec, method, **options).value for geom in scheme.geometries()
    ]
    return OutageVector(values=tuple(values), method=method)


def outage_table(
    geom: RoundGeometry,
    spec: ChannelSpec,
    tol: float = DEFAULT_ORACLE_TOL,
    eps_grid: Optional[Sequence[float]] = None,
) -> Dict[str, Optional[float]]:
    """
    All estimators for one round; failures become None so a sweep can
    report them as empty fields.
    """
    row: Dict[str, Optional[float]] = {}
    try:
        row["omega_oracle"] = omega_oracle(geom, spec, tol=tol).value
    except NonConvergence as exc:
        logger.warning(f"oracle failed: {exc}")
        row["omega_oracle"] = None
    try:
        row["omega_high_snr"] = omega_high_snr(geom, spec).value
    except SeriesUnstable as exc:
        logger.warning(f"high-SNR series unavailable: {exc}")
        row["omega_high_snr"] = None
    row["omega_linearized"] = omega_linearized(geom, spec).value
    try:
        lower, upper = omega_bounds(geom, spec, eps_grid=eps_grid)
        row["v_m"] = lower.value
        row["u_m"] = upper.value
        row["eps_star"] = upper.diagnostics["eps_star"]
    except GammaKernelFailure as exc:
        logger.warning(f"outage bounds unavailable: {exc}")
        row["v_m"] = row["u_m"] = row["eps_star"] = None
    return row
