"""Chi-square probability kernels.

Central distribution functions are thin wrappers over the regularized
incomplete gamma functions in :mod:`scipy.special`.  The non-central CDF is a
Poisson mixture of central CDFs, summed over a window around the Poisson mode
that is widened until the omitted Poisson mass is below a tolerance, which
bounds the truncation error directly.

All p-values leave this module on the natural-log scale.  Tail probabilities
that underflow double precision are recomputed with a log-space continued
fraction, so ``log_pvalue_from_chisq`` stays finite for any finite statistic.
"""

import math

import numpy as np
from scipy import special

from .errors import DomainError, NumericalError

#: Median of the 1-df chi-square distribution, used for genomic inflation.
CHI2_1DF_MEDIAN = 0.45493642311957283

_NCX_TOL = 1e-14
_NCX_MAX_TERMS = 2_000_000
# gammaincc loses relative accuracy once it enters the subnormal range.
_UNDERFLOW = 1e-290


def _check_df(df):
    if int(df) != df or df < 1:
        raise DomainError(f"degrees of freedom must be a positive integer, got {df!r}")
    return int(df)


def _check_x(x):
    arr = np.asarray(x, dtype=float)
    if np.any(np.isnan(arr)):
        raise DomainError("chi-square statistic is NaN")
    if np.any(arr < 0):
        raise DomainError(f"chi-square statistic must be >= 0, got min {arr.min()!r}")
    return arr


def _unwrap(arr):
    return float(arr) if np.ndim(arr) == 0 else arr


def chisq_cdf(x, df):
    """Central chi-square CDF ``F(x | df)``; ``x`` may be an array."""
    df = _check_df(df)
    arr = _check_x(x)
    return _unwrap(special.gammainc(df / 2.0, arr / 2.0))


def chisq_sf(x, df):
    """Central chi-square survival function ``1 - F(x | df)``."""
    df = _check_df(df)
    arr = _check_x(x)
    return _unwrap(special.gammaincc(df / 2.0, arr / 2.0))


def _log_upper_gamma_cf(a, x):
    """log Q(a, x) by the modified Lentz continued fraction (valid for x > a + 1)."""
    tiny = 1e-300
    b = x + 1.0 - a
    c = 1.0 / tiny
    d = 1.0 / b
    h = d
    for i in range(1, 10_000):
        an = -i * (i - a)
        b += 2.0
        d = an * d + b
        if abs(d) < tiny:
            d = tiny
        c = b + an / c
        if abs(c) < tiny:
            c = tiny
        d = 1.0 / d
        delta = d * c
        h *= delta
        if abs(delta - 1.0) < 1e-16:
            return -x + a * math.log(x) - special.gammaln(a) + math.log(h)
    raise NumericalError(f"upper incomplete gamma continued fraction did not converge (a={a}, x={x})")


def log_pvalue_from_chisq(x, df):
    """Natural log of the chi-square upper tail probability at ``x``.

    Accurate in log space far below the double-precision underflow limit;
    ``x`` may be an array.
    """
    df = _check_df(df)
    arr = _check_x(x)
    a = df / 2.0
    half = arr / 2.0
    q = special.gammaincc(a, half)
    with np.errstate(divide="ignore"):
        # near x = 0 the upper tail is 1 - tiny; log1p keeps it below zero
        out = np.where(q > 0.5, np.log1p(-special.gammainc(a, half)), np.log(q))
    deep = np.atleast_1d(q < _UNDERFLOW)
    if deep.any():
        out = np.atleast_1d(out)
        flat_half = np.atleast_1d(half)
        for i in np.flatnonzero(deep):
            out[i] = _log_upper_gamma_cf(a, float(flat_half[i]))
        out = out.reshape(np.shape(arr))
    return _unwrap(out)


def chisq_quantile(p, df):
    """Inverse of :func:`chisq_cdf` for ``0 < p < 1``."""
    df = _check_df(df)
    if not 0.0 < p < 1.0:
        raise DomainError(f"probability must lie in (0, 1), got {p!r}")
    if p > 0.5:
        return chisq_isf(1.0 - p, df)
    return float(2.0 * special.gammaincinv(df / 2.0, p))


def chisq_isf(q, df):
    """Upper-tail quantile: the ``x`` with ``1 - F(x | df) = q``.

    Preferred over ``chisq_quantile(1 - q, df)`` for GWAS-sized ``q`` because
    it avoids forming ``1 - q`` in floating point.
    """
    df = _check_df(df)
    if not 0.0 < q < 1.0:
        raise DomainError(f"tail probability must lie in (0, 1), got {q!r}")
    return float(2.0 * special.gammainccinv(df / 2.0, q))


def _poisson_window(lam, tol):
    """Smallest [lo, hi] around the mode holding all but ``tol`` of Poisson(lam)."""
    mode = int(math.floor(lam))
    step = max(1, int(math.ceil(math.sqrt(lam))))
    half_tol = tol / 2.0

    lo = mode
    # P(J < lo) = Q(lo, lam) = gammaincc(lo, lam)
    while lo > 0 and special.gammaincc(lo, lam) > half_tol:
        lo = max(0, lo - step)
    hi = mode
    # P(J > hi) = P(hi + 1, lam) = gammainc(hi + 1, lam)
    while special.gammainc(hi + 1, lam) > half_tol:
        hi += step
        if hi - lo > _NCX_MAX_TERMS:
            raise NumericalError(
                f"non-central chi-square series needs more than {_NCX_MAX_TERMS} terms (ncp={2 * lam})"
            )
    omitted = (special.gammaincc(lo, lam) if lo > 0 else 0.0) + special.gammainc(hi + 1, lam)
    return lo, hi, float(omitted)


def noncentral_chisq_cdf(x, df, ncp):
    """Non-central chi-square CDF ``F(x | df, ncp)``.

    Evaluated as ``sum_j Pois(j; ncp/2) * F(x | df + 2j)`` over a window whose
    omitted Poisson mass is below 1e-14.  Since every central CDF lies in
    [0, 1], that mass bounds the absolute truncation error.
    """
    df = _check_df(df)
    x = float(_check_x(x))
    if not ncp >= 0 or not math.isfinite(ncp):
        raise DomainError(f"non-centrality must be finite and >= 0, got {ncp!r}")
    if ncp == 0:
        return chisq_cdf(x, df)
    if x == 0:
        return 0.0
    lam = ncp / 2.0
    lo, hi, omitted = _poisson_window(lam, _NCX_TOL)
    j = np.arange(lo, hi + 1, dtype=float)
    log_w = -lam + j * math.log(lam) - special.gammaln(j + 1.0)
    terms = np.exp(log_w) * special.gammainc(df / 2.0 + j, x / 2.0)
    total = math.fsum(terms)
    if not math.isfinite(total) or omitted > 1e-10:
        raise NumericalError(f"non-central chi-square series failed (x={x}, df={df}, ncp={ncp})")
    return min(1.0, max(0.0, total))


def noncentral_chisq_sf(x, df, ncp):
    """Upper tail of the non-central chi-square, summed directly (no cancellation)."""
    df = _check_df(df)
    x = float(_check_x(x))
    if not ncp >= 0 or not math.isfinite(ncp):
        raise DomainError(f"non-centrality must be finite and >= 0, got {ncp!r}")
    if ncp == 0:
        return chisq_sf(x, df)
    lam = ncp / 2.0
    lo, hi, omitted = _poisson_window(lam, _NCX_TOL)
    j = np.arange(lo, hi + 1, dtype=float)
    log_w = -lam + j * math.log(lam) - special.gammaln(j + 1.0)
    terms = np.exp(log_w) * special.gammaincc(df / 2.0 + j, x / 2.0)
    return min(1.0, max(0.0, math.fsum(terms)))
