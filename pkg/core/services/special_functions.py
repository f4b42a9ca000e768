"""
Special-function kernel for the outage estimators.

Q(x) and log Q(x) come from scipy.special (erfc / log_ndtr). The upper
incomplete Gamma function Γ(a, x) is needed with a large negative first
argument (a = 1 - ε·l_(m)), which scipy does not cover, so it is evaluated
here in the log domain: a Lentz continued fraction for x >= 1 and a
downward recurrence from scipy values for x < 1.
"""

import logging
import math
import sys
from typing import Tuple

import numpy as np
from scipy import special

from core.exceptions import NonConvergence

logger = logging.getLogger(__name__)

SQRT2 = math.sqrt(2.0)
GAMMA_CF_TOL = 1e-14
GAMMA_CF_MAX_ITER = 100_000
_TINY = sys.float_info.min / sys.float_info.epsilon


def q_function(x):
    """Gaussian tail Q(x) = ½·erfc(x/√2); saturates to 1 at -inf and 0 at +inf."""
    result = 0.5 * special.erfc(np.asarray(x, dtype=float) / SQRT2)
    return float(result) if np.ndim(result) == 0 else result


def log_q_function(x):
    """log Q(x), accurate deep into the tail."""
    result = special.log_ndtr(-np.asarray(x, dtype=float))
    return float(result) if np.ndim(result) == 0 else result


def _gamma_continued_fraction(a: float, x: float, tol: float, max_iter: int) -> float:
    """
    log Γ(a, x) from the Legendre continued fraction (modified Lentz).

    Γ(a, x) = e^-x x^a / (x+1-a - 1(1-a)/(x+3-a - 2(2-a)/(x+5-a - ...)))
    converges for every real a when x > 0.
    """
    b = x + 1.0 - a
    c = 1.0 / _TINY
    d = 1.0 / b if b != 0.0 else 1.0 / _TINY
    h = d
    for i in range(1, max_iter + 1):
        an = -i * (i - a)
        b += 2.0
        d = an * d + b
        if abs(d) < _TINY:
            d = _TINY
        c = b + an / c
        if abs(c) < _TINY:
            c = _TINY
        d = 1.0 / d
        delta = d * c
        h *= delta
        if abs(delta - 1.0) < tol:
            logger.debug(f"Γ({a}, {x}) continued fraction converged after {i} terms")
            return -x + a * math.log(x) + math.log(h)
    raise NonConvergence(
        f"continued fraction for Γ({a}, {x}) did not converge in {max_iter} terms",
        budget=max_iter,
        error_estimate=abs(delta - 1.0),
    )


def upper_incomplete_gamma(
    a: float,
    x: float,
    tol: float = GAMMA_CF_TOL,
    max_iter: int = GAMMA_CF_MAX_ITER,
) -> Tuple[float, int]:
    """
    Γ(a, x) = ∫_x^∞ t^(a-1) e^-t dt as (log|Γ(a, x)|, sign).

    For x > 0 the integrand is positive, so the sign is always +1; it is
    returned to keep callers working in log-magnitude form. Positive a with
    x < a + 1 uses the regularized scipy function, a <= 0 with x < 1 the
    downward recurrence, everything else the continued fraction.
    """
    if not (math.isfinite(a) and math.isfinite(x)):
        raise ValueError(f"Γ(a, x) needs finite arguments, got a={a}, x={x}")
    if x <= 0:
        raise ValueError(f"Γ(a, x) is evaluated for x > 0 only, got x={x}")

    if a > 0 and x < a + 1.0:
        regularized = special.gammaincc(a, x)
        if regularized > 0:
            return math.log(regularized) + special.gammaln(a), 1
    if a <= 0 and x < 1.0:
        return _gamma_recurrence(a, x), 1
    return _gamma_continued_fraction(a, x, tol, max_iter), 1


def _gamma_recurrence(a: float, x: float) -> float:
    """
    log Γ(a, x) for a <= 0 and x < 1, where the continued fraction stalls.

    Starts from Γ(a + n, x) with a + n in (0, 1) (or from E1(x) = Γ(0, x)
    for integer a) and steps down with

        Γ(s, x) = (x^s e^-x - Γ(s + 1, x)) / (-s),   s < 0.

    Both terms are positive and the first dominates, so every step is a
    log1p of a negative ratio.
    """
    nearest = round(a)
    if abs(a - nearest) < 1e-12:
        steps = int(-nearest)
        log_value = math.log(special.exp1(x))
        top = 0.0
    else:
        steps = int(math.floor(-a)) + 1
        top = a + steps
        log_value = math.log(special.gammaincc(top, x)) + special.gammaln(top)

    log_x = math.log(x)
    for k in range(1, steps + 1):
        s = top - k
        log_lead = s * log_x - x
        ratio = log_value - log_lead
        if ratio >= 0.0:
            raise NonConvergence(
                f"Γ({a}, {x}) recurrence lost precision at s={s}",
                budget=steps,
                error_estimate=math.exp(ratio),
            )
        log_value = log_lead + math.log1p(-math.exp(ratio)) - math.log(-s)
    return log_value
