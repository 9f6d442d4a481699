"""Association statistics for a genotype against traits or PC scores.

Every test reports a natural-log p-value.  The per-variable statistic is the
Wald form ``n * r^2`` referred to a 1-df chi-square.
"""

import math
from dataclasses import dataclass

import numpy as np
from scipy import stats

from . import stats_dist
from .errors import DegenerateInputError, DomainError

_RANK_TOL = 1e-10


@dataclass(frozen=True)
class AssocResult:
    beta: float
    chi2: float
    log_p: float
    index: int = None

    @property
    def p(self):
        return math.exp(self.log_p)


@dataclass(frozen=True)
class GroupTestResult:
    statistic: float
    df: int
    log_p: float
    grouping: tuple = ()

    @property
    def p(self):
        return math.exp(self.log_p)


def _genotype_values(g):
    return np.asarray(getattr(g, "values", g), dtype=float)


def _centered_genotype(g, n):
    gv = _genotype_values(g)
    if gv.shape != (n,):
        raise DomainError(f"genotype length {gv.shape} does not match {n} subjects")
    gc = gv - gv.mean()
    ss = gc @ gc
    if not ss > 0 or ss < _RANK_TOL * n:
        raise DegenerateInputError("genotype is constant")
    return gc, ss


def wald_columns(Y, g):
    """Vectorized Wald scan of every column of ``Y`` against ``g``.

    Returns ``(beta, chi2)`` arrays; ``chi2 = n * r^2``.
    """
    Y = np.asarray(Y, dtype=float)
    if Y.ndim == 1:
        Y = Y[:, None]
    n = Y.shape[0]
    if n < 10:
        raise DomainError(f"need at least 10 subjects, got {n}")
    gc, ss_g = _centered_genotype(g, n)
    Yc = Y - Y.mean(axis=0)
    ss_y = np.einsum("ij,ij->j", Yc, Yc)
    cross = gc @ Yc
    beta = cross / ss_g
    with np.errstate(invalid="ignore", divide="ignore"):
        r2 = np.where(ss_y > 0, cross**2 / (ss_g * ss_y), 0.0)
    return beta, n * np.minimum(r2, 1.0)


def univariate_wald(y, g):
    """Least-squares slope of ``y`` on ``g`` with the Wald chi-square ``n r^2``."""
    y = np.asarray(y, dtype=float)
    if y.ndim != 1:
        raise DomainError("outcome must be a vector")
    beta, chi2 = wald_columns(y, g)
    chi2 = float(chi2[0])
    return AssocResult(float(beta[0]), chi2, stats_dist.log_pvalue_from_chisq(chi2, 1))


def _group(chi2, df, grouping=()):
    stat = float(np.sum(chi2))
    return GroupTestResult(stat, int(df), stats_dist.log_pvalue_from_chisq(stat, int(df)), tuple(grouping))


def combined_pc_test(scores, g):
    """Sum of per-PC Wald statistics on ``k`` degrees of freedom."""
    _, chi2 = wald_columns(scores, g)
    k = chi2.shape[0]
    return _group(chi2, k, (tuple(range(k)),))


def bonferroni_log(log_p_min, factor):
    """``log(min(1, factor * p))`` for a log p-value."""
    if factor < 1:
        raise DomainError(f"Bonferroni factor must be >= 1, got {factor}")
    return min(0.0, log_p_min + math.log(factor))


def best_pc_test(scores, g, n_tests=None):
    """Most significant single PC, Bonferroni-adjusted by ``n_tests``.

    ``n_tests`` defaults to the number of PCs.  The returned result carries the
    raw slope and chi-square of the winning PC, its adjusted log p and its index.
    """
    beta, chi2 = wald_columns(scores, g)
    log_p = stats_dist.log_pvalue_from_chisq(chi2, 1)
    log_p = np.atleast_1d(log_p)
    i = int(np.argmin(log_p))
    factor = chi2.shape[0] if n_tests is None else n_tests
    return AssocResult(float(beta[i]), float(chi2[i]), bonferroni_log(float(log_p[i]), factor), index=i)


def fisher_combine(log_ps):
    """Fisher's method on log p-values: ``-2 sum log p`` on ``2m`` df."""
    log_ps = np.asarray(log_ps, dtype=float)
    if log_ps.size == 0 or np.any(log_ps > 0):
        raise DomainError("need at least one log p-value, all <= 0")
    stat = max(0.0, -2.0 * float(np.sum(log_ps)))
    df = 2 * log_ps.size
    return stat, df, stats_dist.log_pvalue_from_chisq(stat, df)


def partition_test(pc_chi2, groups):
    """Fisher combination of the combined-chi-square p-values of ``groups``.

    ``groups`` is a sequence of index sequences into ``pc_chi2``; each group's
    sum is tested on as many df as it has members.
    """
    pc_chi2 = np.asarray(pc_chi2, dtype=float)
    log_ps = []
    for grp in groups:
        idx = np.asarray(grp, dtype=int)
        if idx.size == 0:
            raise DomainError("empty group in partition")
        if idx.min() < 0 or idx.max() >= pc_chi2.size:
            raise DomainError(f"group index out of range for {pc_chi2.size} PCs")
        log_ps.append(stats_dist.log_pvalue_from_chisq(float(pc_chi2[idx].sum()), idx.size))
    stat, df, log_p = fisher_combine(log_ps)
    return GroupTestResult(stat, df, log_p, tuple(tuple(int(i) for i in grp) for grp in groups))


def fisher_group_test(pc_chi2, K):
    """``T_K``: top-``K`` PCs versus the remaining ones, two-group Fisher (4 df)."""
    pc_chi2 = np.asarray(pc_chi2, dtype=float)
    N = pc_chi2.size
    if not 1 <= K < N:
        raise DomainError(f"K must satisfy 1 <= K < {N}, got {K}")
    return partition_test(pc_chi2, [range(K), range(K, N)])


def eigen_partition_scan(pc_chi2):
    """Top-``n`` and bottom-``(N-n+1)`` combined tests for every ``n`` in 1..N.

    Returns a list of ``(n, top, bottom)`` tuples.  The top group holds PCs
    1..n and the bottom group PCs n..N (1-based, descending eigenvalue order).
    """
    pc_chi2 = np.asarray(pc_chi2, dtype=float)
    N = pc_chi2.size
    if N < 2:
        raise DomainError(f"need at least 2 PCs, got {N}")
    top_sums = np.cumsum(pc_chi2)
    bottom_sums = np.cumsum(pc_chi2[::-1])[::-1]
    out = []
    for n in range(1, N + 1):
        top = GroupTestResult(float(top_sums[n - 1]), n,
                              stats_dist.log_pvalue_from_chisq(float(top_sums[n - 1]), n),
                              (tuple(range(n)),))
        m = N - n + 1
        bottom = GroupTestResult(float(bottom_sums[n - 1]), m,
                                 stats_dist.log_pvalue_from_chisq(float(bottom_sums[n - 1]), m),
                                 (tuple(range(n - 1, N)),))
        out.append((n, top, bottom))
    return out


def top_group(pc_chi2, n):
    pc_chi2 = np.asarray(pc_chi2, dtype=float)
    if not 1 <= n <= pc_chi2.size:
        raise DomainError(f"group size {n} out of range for {pc_chi2.size} PCs")
    return _group(pc_chi2[:n], n, (tuple(range(n)),))


def bottom_group(pc_chi2, n):
    """Combined test over the ``n`` PCs with the smallest eigenvalues."""
    pc_chi2 = np.asarray(pc_chi2, dtype=float)
    N = pc_chi2.size
    if not 1 <= n <= N:
        raise DomainError(f"group size {n} out of range for {N} PCs")
    return _group(pc_chi2[N - n:], n, (tuple(range(N - n, N)),))


def _multiple_r2(Y, g):
    """R^2 of ``g`` regressed on the columns of ``Y`` with an intercept."""
    Y = np.asarray(Y, dtype=float)
    if Y.ndim == 1:
        Y = Y[:, None]
    n, k = Y.shape
    gc, ss_g = _centered_genotype(g, n)
    Yc = Y - Y.mean(axis=0)
    q, r = np.linalg.qr(Yc)
    d = np.abs(np.diag(r))
    if k == 0 or d.min() <= _RANK_TOL * max(1.0, d.max()):
        raise DegenerateInputError("phenotype matrix is rank deficient")
    proj = q.T @ gc
    return float(proj @ proj / ss_g)


def manova_wilks(Y, g):
    """One-way MANOVA of ``Y`` on a single continuous predictor ``g``.

    With one predictor Wilks' lambda is ``1 - R^2(g ~ Y)`` and the F transform
    is exact on ``(k, n - k - 1)`` df.  Returns ``(wilks, F, log_p)``.
    """
    Y = np.asarray(Y, dtype=float)
    if Y.ndim == 1:
        Y = Y[:, None]
    n, k = Y.shape
    if n <= k + 1:
        raise DomainError(f"need n > traits + 1, got n={n}, traits={k}")
    r2 = min(_multiple_r2(Y, g), 1.0)
    wilks = 1.0 - r2
    df2 = n - k - 1
    if wilks <= 0:
        return wilks, math.inf, -math.inf
    F = (r2 / wilks) * (df2 / k)
    return wilks, F, float(stats.f.logsf(F, k, df2))


def residualize_covariates(y, X):
    """Least-squares residuals of ``y`` on covariates ``X`` (which must include
    an intercept column)."""
    y = np.asarray(y, dtype=float)
    X = np.asarray(X, dtype=float)
    if X.ndim == 1:
        X = X[:, None]
    n, p = X.shape
    if y.shape != (n,):
        raise DomainError(f"outcome length {y.shape} does not match {n} covariate rows")
    if n <= p:
        raise DomainError(f"need more rows than covariates, got n={n}, p={p}")
    const = np.all(np.isclose(X, X[:1]), axis=0) & np.any(X != 0, axis=0)
    if not const.any():
        raise DomainError("covariate matrix must contain an intercept column")
    q, r = np.linalg.qr(X)
    d = np.abs(np.diag(r))
    if d.min() <= _RANK_TOL * max(1.0, d.max()):
        raise DegenerateInputError("covariate matrix is rank deficient")
    resid = y - q @ (q.T @ y)
    # one refinement pass tightens orthogonality to round-off level
    return resid - q @ (q.T @ resid)
