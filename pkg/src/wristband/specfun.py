"""Scalar special functions with documented accuracy targets.

Everything here is pure and total over the stated domains: NaN or
out-of-domain inputs raise :class:`DomainError` instead of propagating
NaN.  The iterative routines report their iteration count through
:class:`SpecFunResult` so callers can audit convergence.

Accuracy targets (verified by the test suite against high-precision
oracles):

==================  =========================================
log_gamma           rel. error <= 1e-12 on [1e-3, 1e6]
reg_lower_gamma     abs. error <= 1e-12
chi2_cdf / chi2_pdf inherit the incomplete-gamma accuracy
scaled_bessel_i     rel. error <= 1e-10 for c <= 1e4
inv_norm_cdf        |Phi(result) - p| <= 1e-10
==================  =========================================
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ConvergenceError, DomainError

__all__ = [
    "SpecFunResult",
    "log_gamma",
    "reg_lower_gamma",
    "chi2_cdf",
    "chi2_pdf",
    "scaled_bessel_i",
    "inv_norm_cdf",
    "norm_cdf",
    "chi2_cdf_array",
    "chi2_pdf_array",
    "gaussian_quantile_grid",
]

_MAX_ITER = 500
_TOL = 1e-15
_TINY = 1e-300

# Lanczos approximation, g = 7, 9 coefficients (Godfrey's tabulation).
# Relative error of the resulting Gamma is below 1e-13 on the real axis.
_LANCZOS_G = 7.0
_LANCZOS_COEF = (
    0.99999999999980993,
    676.5203681218851,
    -1259.1392167224028,
    771.32342877765313,
    -176.61502916214059,
    12.507343278686905,
    -0.13857109526572012,
    9.9843695780195716e-6,
    1.5056327351493116e-7,
)

_LN_SQRT_2PI = 0.5 * math.log(2.0 * math.pi)


@dataclass(frozen=True)
class SpecFunResult:
    """Value of an iteratively computed special function.

    ``converged`` is False only if the iteration cap was hit before the
    stopping tolerance; ``value`` is still the best available estimate.
    """

    value: float
    converged: bool
    iterations: int


def _require_finite(name: str, x: float) -> float:
    x = float(x)
    if math.isnan(x) or math.isinf(x):
        raise DomainError(f"{name} must be finite, got {x!r}")
    return x


def log_gamma(a: float) -> float:
    """Natural log of the Gamma function for a > 0 (Lanczos, g=7)."""
    a = _require_finite("a", a)
    if a <= 0.0:
        raise DomainError(f"log_gamma requires a > 0, got {a}")
    if a < 0.5:
        # Reflection keeps the Lanczos series in its accurate range.
        return math.log(math.pi / math.sin(math.pi * a)) - log_gamma(1.0 - a)
    z = a - 1.0
    x = _LANCZOS_COEF[0]
    for i in range(1, len(_LANCZOS_COEF)):
        x += _LANCZOS_COEF[i] / (z + i)
    t = z + _LANCZOS_G + 0.5
    return _LN_SQRT_2PI + (z + 0.5) * math.log(t) - t + math.log(x)


def _lower_gamma_series(a: float, x: float) -> tuple[float, bool, int]:
    """Power series for P(a, x), effective for x < a + 1."""
    ap = a
    summ = 1.0 / a
    delt = summ
    for it in range(1, _MAX_ITER + 1):
        ap += 1.0
        delt *= x / ap
        summ += delt
        if abs(delt) < abs(summ) * _TOL:
            return summ * math.exp(-x + a * math.log(x) - log_gamma(a)), True, it
    return summ * math.exp(-x + a * math.log(x) - log_gamma(a)), False, _MAX_ITER


def _upper_gamma_cf(a: float, x: float) -> tuple[float, bool, int]:
    """Continued fraction for Q(a, x) (modified Lentz), for x >= a + 1."""
    b = x + 1.0 - a
    c = 1.0 / _TINY
    d = 1.0 / b
    h = d
    for it in range(1, _MAX_ITER + 1):
        an = -it * (it - a)
        b += 2.0
        d = an * d + b
        if abs(d) < _TINY:
            d = _TINY
        c = b + an / c
        if abs(c) < _TINY:
            c = _TINY
        d = 1.0 / d
        delt = d * c
        h *= delt
        if abs(delt - 1.0) < _TOL:
            return h * math.exp(-x + a * math.log(x) - log_gamma(a)), True, it
    return h * math.exp(-x + a * math.log(x) - log_gamma(a)), False, _MAX_ITER


def reg_lower_gamma(a: float, x: float) -> SpecFunResult:
    """Regularized lower incomplete gamma P(a, x) = gamma(a, x) / Gamma(a).

    Series expansion for x < a + 1, continued fraction otherwise; both
    regimes are well conditioned and converge within the 500-iteration
    cap for all practical arguments.
    """
    a = _require_finite("a", a)
    x = _require_finite("x", x)
    if a <= 0.0:
        raise DomainError(f"reg_lower_gamma requires a > 0, got a={a}")
    if x < 0.0:
        raise DomainError(f"reg_lower_gamma requires x >= 0, got x={x}")
    if x == 0.0:
        return SpecFunResult(0.0, True, 0)
    if x < a + 1.0:
        value, ok, it = _lower_gamma_series(a, x)
    else:
        q, ok, it = _upper_gamma_cf(a, x)
        value = 1.0 - q
    # Clip the last-ulp excursions so the result is a valid probability.
    return SpecFunResult(min(max(value, 0.0), 1.0), ok, it)


def chi2_cdf(d: int, s: float) -> float:
    """CDF of the chi-squared distribution with d degrees of freedom."""
    if d < 1:
        raise DomainError(f"chi2_cdf requires d >= 1, got {d}")
    s = _require_finite("s", s)
    if s < 0.0:
        raise DomainError(f"chi2_cdf requires s >= 0, got {s}")
    res = reg_lower_gamma(0.5 * d, 0.5 * s)
    if not res.converged:
        raise ConvergenceError(f"chi2_cdf did not converge at d={d}, s={s}")
    return res.value


def chi2_pdf(d: int, s: float) -> float:
    """Density of the chi-squared distribution with d degrees of freedom.

    Defined for s > 0 only; callers working near the origin must floor s
    first (the d = 1 density diverges at 0).
    """
    if d < 1:
        raise DomainError(f"chi2_pdf requires d >= 1, got {d}")
    s = _require_finite("s", s)
    if s <= 0.0:
        raise DomainError(f"chi2_pdf requires s > 0, got {s}")
    half_d = 0.5 * d
    return math.exp(
        (half_d - 1.0) * math.log(s)
        - 0.5 * s
        - half_d * math.log(2.0)
        - log_gamma(half_d)
    )


# ---------------------------------------------------------------------------
# Exponentially scaled modified Bessel function of the first kind
# ---------------------------------------------------------------------------


def _scaled_bessel_series(nu: float, c: float) -> tuple[float, bool, int]:
    """Ascending series with the e^{-c} factor folded into the first term.

    All terms are positive, so the truncation error is bounded by the
    first omitted term; renormalization guards against overflow of the
    running sum when the leading term is denormal.
    """
    log_t0 = nu * math.log(0.5 * c) - log_gamma(nu + 1.0) - c
    q = 0.25 * c * c
    term = 1.0
    summ = 1.0
    log_scale = 0.0
    for it in range(1, 5 * _MAX_ITER + 1):
        term *= q / (it * (nu + it))
        summ += term
        if summ > 1e250:
            term *= 1e-250
            summ *= 1e-250
            log_scale += 250.0 * math.log(10.0)
        if term < summ * 1e-17:
            return math.exp(log_t0 + log_scale + math.log(summ)), True, it
    return math.exp(log_t0 + log_scale + math.log(summ)), False, 5 * _MAX_ITER


def _scaled_bessel_hankel(mu: float, c: float) -> float:
    """Large-argument asymptotic series for e^{-c} I_mu(c), mu in [0, 2).

    The truncation floor of the alternating series is O(e^{-2c}), far
    below the 1e-10 target for c > 30.
    """
    fmu2 = 4.0 * mu * mu
    term = 1.0
    summ = 1.0
    prev = math.inf
    for k in range(1, 60):
        term *= -(fmu2 - (2 * k - 1) ** 2) / (8.0 * k * c)
        if abs(term) >= prev:
            break
        summ += term
        prev = abs(term)
        if abs(term) < 1e-18:
            break
    return summ / math.sqrt(2.0 * math.pi * c)


def _bessel_ratio_cf(nu: float, c: float) -> tuple[float, bool, int]:
    """Continued fraction for I_{nu+1}(c) / I_nu(c) (modified Lentz)."""
    h = _TINY
    cc = h
    dd = 0.0
    for it in range(1, 4 * _MAX_ITER + 1):
        b = 2.0 * (nu + it) / c
        dd = b + dd
        if abs(dd) < _TINY:
            dd = _TINY
        cc = b + 1.0 / cc
        if abs(cc) < _TINY:
            cc = _TINY
        dd = 1.0 / dd
        delt = cc * dd
        h *= delt
        if abs(delt - 1.0) < _TOL:
            return h, True, it
    return h, False, 4 * _MAX_ITER


def scaled_bessel_i(nu: float, c: float) -> SpecFunResult:
    """Exponentially scaled modified Bessel function e^{-c} I_nu(c).

    The scaling keeps the result representable where the unscaled
    function overflows (I_nu(c) grows like e^c / sqrt(2 pi c)).

    Regimes: the ascending series (with on-the-fly scaling) for c <= 30;
    for larger c, a ratio continued fraction with stable downward
    recurrence anchored by the large-argument asymptotic series at the
    fractional order.
    """
    nu = _require_finite("nu", nu)
    c = _require_finite("c", c)
    if nu < 0.0:
        raise DomainError(f"scaled_bessel_i requires nu >= 0, got {nu}")
    if c < 0.0:
        raise DomainError(f"scaled_bessel_i requires c >= 0, got {c}")
    if c == 0.0:
        return SpecFunResult(1.0 if nu == 0.0 else 0.0, True, 0)
    if c <= 30.0:
        value, ok, it = _scaled_bessel_series(nu, c)
        return SpecFunResult(value, ok, it)

    # Ratio route: anchor at the fractional order mu = nu - floor(nu),
    # where the asymptotic series is valid for any c > 30, then rescale
    # the downward-recurrence solution to the anchored value.
    nsteps = int(math.floor(nu))
    mu = nu - nsteps
    anchor = _scaled_bessel_hankel(mu, c)
    if nsteps == 0:
        return SpecFunResult(anchor, True, 0)
    ratio, ok, it = _bessel_ratio_cf(nu, c)
    # v_k proportional to I_k(c); downward recurrence is stable because
    # I_k grows as the order decreases.
    v_hi = ratio  # order nu + 1
    v = 1.0  # order nu
    log_shift = 0.0
    k = nu
    for _ in range(nsteps):
        v_lo = v_hi + (2.0 * k / c) * v
        v_hi, v = v, v_lo
        k -= 1.0
        if v > 1e280:
            v *= 1e-280
            v_hi *= 1e-280
            log_shift += 280.0 * math.log(10.0)
    # v now holds the proxy at order mu; the true value at order nu is
    # anchor / (v * e^{log_shift}).
    value = math.exp(math.log(anchor) - math.log(v) - log_shift)
    return SpecFunResult(value, ok, it)


# ---------------------------------------------------------------------------
# Gaussian quantile function
# ---------------------------------------------------------------------------

# Acklam's rational initializer for the standard normal quantile
# (rel. error ~1.15e-9), sharpened to machine precision by one Halley
# step through math.erfc.
_ACK_A = (
    -3.969683028665376e01,
    2.209460984245205e02,
    -2.759285104469687e02,
    1.383577518672690e02,
    -3.066479806614716e01,
    2.506628277459239e00,
)
_ACK_B = (
    -5.447609879822406e01,
    1.615858368580409e02,
    -1.556989798598866e02,
    6.680131188771972e01,
    -1.328068155288572e01,
)
_ACK_C = (
    -7.784894002430293e-03,
    -3.223964580411365e-01,
    -2.400758277161838e00,
    -2.549732539343734e00,
    4.374664141464968e00,
    2.938163982698783e00,
)
_ACK_D = (
    7.784695709041462e-03,
    3.224671290700398e-01,
    2.445134137142996e00,
    3.754408661907416e00,
)
_ACK_P_LOW = 0.02425


def norm_cdf(x: float) -> float:
    """Standard normal CDF via the complementary error function."""
    return 0.5 * math.erfc(-x / math.sqrt(2.0))


def inv_norm_cdf(p: float) -> float:
    """Quantile of the standard normal distribution, p in (0, 1)."""
    p = _require_finite("p", p)
    if not 0.0 < p < 1.0:
        raise DomainError(f"inv_norm_cdf requires 0 < p < 1, got {p}")
    if p < _ACK_P_LOW:
        q = math.sqrt(-2.0 * math.log(p))
        x = (
            ((((_ACK_C[0] * q + _ACK_C[1]) * q + _ACK_C[2]) * q + _ACK_C[3]) * q + _ACK_C[4]) * q
            + _ACK_C[5]
        ) / ((((_ACK_D[0] * q + _ACK_D[1]) * q + _ACK_D[2]) * q + _ACK_D[3]) * q + 1.0)
    elif p <= 1.0 - _ACK_P_LOW:
        q = p - 0.5
        r = q * q
        x = (
            (((((_ACK_A[0] * r + _ACK_A[1]) * r + _ACK_A[2]) * r + _ACK_A[3]) * r + _ACK_A[4]) * r + _ACK_A[5])
            * q
            / (((((_ACK_B[0] * r + _ACK_B[1]) * r + _ACK_B[2]) * r + _ACK_B[3]) * r + _ACK_B[4]) * r + 1.0)
        )
    else:
        q = math.sqrt(-2.0 * math.log(1.0 - p))
        x = -(
            ((((_ACK_C[0] * q + _ACK_C[1]) * q + _ACK_C[2]) * q + _ACK_C[3]) * q + _ACK_C[4]) * q
            + _ACK_C[5]
        ) / ((((_ACK_D[0] * q + _ACK_D[1]) * q + _ACK_D[2]) * q + _ACK_D[3]) * q + 1.0)
    # Halley refinement: e = Phi(x) - p, u = e / phi(x).
    e = norm_cdf(x) - p
    u = e * math.sqrt(2.0 * math.pi) * math.exp(0.5 * x * x)
    return x - u / (1.0 + 0.5 * x * u)


# ---------------------------------------------------------------------------
# Vectorized batch paths (same algorithms, numpy arrays)
# ---------------------------------------------------------------------------


def chi2_cdf_array(d: int, s: np.ndarray) -> np.ndarray:
    """Vectorized chi2_cdf over an array of nonnegative arguments."""
    if d < 1:
        raise DomainError(f"chi2_cdf_array requires d >= 1, got {d}")
    s = np.asarray(s, dtype=np.float64)
    if not np.all(np.isfinite(s)) or np.any(s < 0.0):
        raise DomainError("chi2_cdf_array requires finite s >= 0")
    a = 0.5 * d
    x = 0.5 * s.ravel()
    out = np.zeros_like(x)
    lg_a = log_gamma(a)

    pos = x > 0.0
    ser = pos & (x < a + 1.0)
    cfr = pos & ~ser

    if np.any(ser):
        xs = x[ser]
        ap = a
        summ = np.full_like(xs, 1.0 / a)
        delt = summ.copy()
        for it in range(1, _MAX_ITER + 1):
            ap += 1.0
            delt = delt * xs / ap
            summ = summ + delt
            if np.all(np.abs(delt) < np.abs(summ) * _TOL):
                break
        else:
            raise ConvergenceError("chi2_cdf_array series did not converge")
        out[ser] = summ * np.exp(-xs + a * np.log(xs) - lg_a)

    if np.any(cfr):
        xc = x[cfr]
        b = xc + 1.0 - a
        c = np.full_like(xc, 1.0 / _TINY)
        dd = 1.0 / b
        h = dd.copy()
        for it in range(1, _MAX_ITER + 1):
            an = -it * (it - a)
            b = b + 2.0
            dd = an * dd + b
            np.copyto(dd, _TINY, where=np.abs(dd) < _TINY)
            c = b + an / c
            np.copyto(c, _TINY, where=np.abs(c) < _TINY)
            dd = 1.0 / dd
            delt = dd * c
            h = h * delt
            if np.all(np.abs(delt - 1.0) < _TOL):
                break
        else:
            raise ConvergenceError("chi2_cdf_array continued fraction did not converge")
        out[cfr] = 1.0 - h * np.exp(-xc + a * np.log(xc) - lg_a)

    return np.clip(out, 0.0, 1.0).reshape(s.shape)


def chi2_pdf_array(d: int, s: np.ndarray) -> np.ndarray:
    """Vectorized chi2_pdf over an array of positive arguments."""
    if d < 1:
        raise DomainError(f"chi2_pdf_array requires d >= 1, got {d}")
    s = np.asarray(s, dtype=np.float64)
    if not np.all(np.isfinite(s)) or np.any(s <= 0.0):
        raise DomainError("chi2_pdf_array requires finite s > 0")
    half_d = 0.5 * d
    return np.exp(
        (half_d - 1.0) * np.log(s)
        - 0.5 * s
        - half_d * math.log(2.0)
        - log_gamma(half_d)
    )


_QUANTILE_GRID_CACHE: dict[int, np.ndarray] = {}


def gaussian_quantile_grid(n: int) -> np.ndarray:
    """Standard normal quantiles at the midpoints (i - 1/2)/n, cached per n."""
    grid = _QUANTILE_GRID_CACHE.get(n)
    if grid is None:
        grid = np.array(
            [inv_norm_cdf((i + 0.5) / n) for i in range(n)], dtype=np.float64
        )
        grid.setflags(write=False)
        _QUANTILE_GRID_CACHE[n] = grid
    return grid
