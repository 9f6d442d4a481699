"""Closed-form power for the two-trait model.

With traits ``y1, y2`` sharing a latent fraction ``c`` and a SNP explaining
``v1``/``v2``, the two PCs are ``(y1 +/- y2)/sqrt(2)``.  This module gives the
variance each PC carries, the genetic variance each captures, and the power
of the resulting 1-df and 2-df Wald tests.  At ``v2 = 0`` the genetic
variances reduce exactly to ``v1 / (2(1 + c))`` and ``v1 / (2(1 - c))``; no
separate approximation is used.
"""

import itertools
import math
from dataclasses import dataclass

from . import stats_dist
from .errors import DomainError
from .pheno_sim import BivariateParams


@dataclass(frozen=True)
class PowerQuery:
    n: int
    alpha: float
    v: float

    def __post_init__(self):
        if self.n < 1:
            raise DomainError(f"sample size must be >= 1, got {self.n}")
        if not 0.0 < self.alpha < 1.0:
            raise DomainError(f"alpha must lie in (0, 1), got {self.alpha!r}")
        if not 0.0 <= self.v < 1.0:
            raise DomainError(f"variance fraction must lie in [0, 1), got {self.v!r}")


def pc_variance_fractions(c, v1, v2):
    """Share of total variance carried by PC1 and PC2 (concordant effects)."""
    BivariateParams(c, v1, v2)
    shared = c + math.sqrt(v1 * v2)
    return (1.0 + shared) / 2.0, (1.0 - shared) / 2.0


def pc_genetic_variance(c, v1, v2, sign2="concordant"):
    """Fraction of each PC's variance explained by the SNP.

    Concordant effects add on PC1 and cancel on PC2; opposite effects swap
    the roles of the two numerators.
    """
    BivariateParams(c, v1, v2, sign2)
    cross = math.sqrt(v1 * v2)
    if c + cross >= 1.0:
        raise DomainError(f"c + sqrt(v1*v2) must stay below 1, got {c + cross!r}")
    # (sqrt v1 +/- sqrt v2)^2 == v1 + v2 +/- 2 sqrt(v1 v2), exactly zero when v1 == v2
    plus = (math.sqrt(v1) + math.sqrt(v2)) ** 2
    minus = (math.sqrt(v1) - math.sqrt(v2)) ** 2
    if sign2 == "opposite":
        plus, minus = minus, plus
    # the PC variances use the correlation implied by the sign of the effects
    rho = c + cross if sign2 == "concordant" else c - cross
    return plus / (2.0 * (1.0 + rho)), minus / (2.0 * (1.0 - rho))


def power_1df(q, v=None, alpha=None):
    """Power of a 1-df Wald test with non-centrality ``n * v``.

    Accepts a :class:`PowerQuery` or ``(n, v, alpha)`` positionally.
    """
    if not isinstance(q, PowerQuery):
        q = PowerQuery(n=q, alpha=alpha, v=v)
    return _upper_tail(stats_dist.chisq_isf(q.alpha, 1), 1, q.n * q.v)


def power_2df(n, v_pc1, v_pc2, alpha):
    """Power of the combined two-PC test, 2 df with non-centrality ``n (v_pc1 + v_pc2)``."""
    PowerQuery(n, alpha, v_pc1)
    PowerQuery(n, alpha, v_pc2)
    return _upper_tail(stats_dist.chisq_isf(alpha, 2), 2, n * (v_pc1 + v_pc2))


def _upper_tail(crit, df, ncp):
    # 1 - F, taking whichever side of the series is the small one
    cdf = stats_dist.noncentral_chisq_cdf(crit, df, ncp)
    if cdf < 0.5:
        return 1.0 - cdf
    return stats_dist.noncentral_chisq_sf(crit, df, ncp)


POWER_COLUMNS = ("c", "n", "v1", "v2", "sign", "alpha",
                 "power_Y1", "power_PC1", "power_PC2", "power_combined")

DEFAULT_GRID = dict(
    c=tuple(round(0.05 * i, 2) for i in range(19)),
    n=(5000,),
    v1=(0.005,),
    v2=(0.0, 0.0025, 0.005),
    sign=("concordant", "opposite"),
    alpha=(5e-8,),
)


def power_row(c, n, v1, v2, sign, alpha):
    v_pc1, v_pc2 = pc_genetic_variance(c, v1, v2, sign)
    return {
        "c": c, "n": n, "v1": v1, "v2": v2, "sign": sign, "alpha": alpha,
        "power_Y1": power_1df(n, v1, alpha),
        "power_PC1": power_1df(n, v_pc1, alpha),
        "power_PC2": power_1df(n, v_pc2, alpha),
        "power_combined": power_2df(n, v_pc1, v_pc2, alpha),
    }


def power_curves(grid=None):
    """Evaluate :func:`power_row` over the Cartesian product of ``grid``.

    ``grid`` maps each of c, n, v1, v2, sign, alpha to a sequence; missing
    keys fall back to :data:`DEFAULT_GRID`.  Invalid combinations (for
    instance ``c + v`` reaching 1) are skipped.
    """
    grid = {**DEFAULT_GRID, **(grid or {})}
    unknown = set(grid) - set(DEFAULT_GRID)
    if unknown:
        raise DomainError(f"unknown grid keys: {sorted(unknown)}")
    rows = []
    for c, n, v1, v2, sign, alpha in itertools.product(
        grid["c"], grid["n"], grid["v1"], grid["v2"], grid["sign"], grid["alpha"]
    ):
        try:
            rows.append(power_row(c, n, v1, v2, sign, alpha))
        except DomainError:
            continue
    return rows
