"""Genotype and correlated-phenotype simulators.

Three generative families are covered:

* the bivariate model, two traits sharing a latent factor and a SNP;
* the five-trait correlation models (``model1`` .. ``model4``) with a SNP
  acting on a random subset of traits;
* latent-variable schemes SC1/SC2/SC3 for large trait panels.

Every simulator takes an explicit :class:`numpy.random.Generator` and never
touches global random state.  Every phenotype column has population variance
one by construction.
"""

from dataclasses import dataclass, field

import numpy as np

from .errors import DomainError

# Y1 and Y2 are exchangeable in model1, so their correlation with Y5 is 0.07
MODELS = {
    "model1": np.array([
        [1.00, 0.50, 0.31, 0.15, 0.07],
        [0.50, 1.00, 0.31, 0.15, 0.07],
        [0.31, 0.31, 1.00, 0.09, 0.04],
        [0.15, 0.15, 0.09, 1.00, 0.02],
        [0.07, 0.07, 0.04, 0.02, 1.00],
    ]),
    "model2": np.array([
        [1.00, 0.80, 0.63, 0.32, 0.09],
        [0.80, 1.00, 0.63, 0.32, 0.09],
        [0.63, 0.63, 1.00, 0.09, 0.07],
        [0.32, 0.32, 0.09, 1.00, 0.03],
        [0.09, 0.09, 0.07, 0.03, 1.00],
    ]),
    "model3": np.full((5, 5), 0.30) + np.eye(5) * 0.70,
    "model4": np.full((5, 5), 0.70) + np.eye(5) * 0.30,
}

GENOTYPE_CODINGS = ("biallelic", "gaussian")
SELECTION_MODES = ("uniform", "correlation")
SIGN_MODES = ("positive", "random")
SCHEMES = ("SC1", "SC2", "SC3")

_PSD_TOL = 1e-10


@dataclass(frozen=True)
class GenotypeVector:
    values: np.ndarray
    coding: str = "biallelic"
    maf: float = 0.3


@dataclass
class Simulation:
    """One simulated data set.

    ``effects`` holds the signed genetic variance fraction per trait (zero for
    unaffected traits); ``metadata`` carries generator-specific extras.
    """

    phenotypes: np.ndarray
    genotype: GenotypeVector
    effects: np.ndarray
    metadata: dict = field(default_factory=dict)

    @property
    def assoc_mask(self):
        return self.effects != 0


def hardy_weinberg(maf):
    """Genotype-count probabilities for 0, 1, 2 copies of the minor allele."""
    return np.array([(1 - maf) ** 2, 2 * maf * (1 - maf), maf**2])


def gen_genotype(n, rng, maf=0.3, coding="biallelic"):
    """Draw a standardized genotype for ``n`` subjects.

    Biallelic genotypes are binomial(2, maf) counts centred on ``2*maf`` and
    scaled by ``sqrt(2*maf*(1-maf))``; the Gaussian surrogate is N(0, 1).
    """
    if n < 2:
        raise DomainError(f"need at least 2 subjects, got {n}")
    if not 0.0 < maf <= 0.5:
        raise DomainError(f"minor allele frequency must lie in (0, 0.5], got {maf!r}")
    if coding == "biallelic":
        counts = rng.binomial(2, maf, size=n)
        values = (counts - 2 * maf) / np.sqrt(2 * maf * (1 - maf))
    elif coding == "gaussian":
        values = rng.standard_normal(n)
    else:
        raise DomainError(f"unknown genotype coding {coding!r}; expected one of {GENOTYPE_CODINGS}")
    return GenotypeVector(values=values, coding=coding, maf=maf)


# ---------------------------------------------------------------------------
# bivariate model


@dataclass(frozen=True)
class BivariateParams:
    c: float
    v1: float
    v2: float
    sign2: str = "concordant"

    def __post_init__(self):
        for name in ("c", "v1", "v2"):
            val = getattr(self, name)
            if not 0.0 <= val < 1.0:
                raise DomainError(f"{name} must lie in [0, 1), got {val!r}")
        if self.c + max(self.v1, self.v2) > 1.0:
            raise DomainError(
                f"c + max(v1, v2) must not exceed 1 (c={self.c}, v1={self.v1}, v2={self.v2})"
            )
        if self.sign2 not in ("concordant", "opposite"):
            raise DomainError(f"sign2 must be 'concordant' or 'opposite', got {self.sign2!r}")


def simulate_bivariate(n, params, rng, maf=0.3, coding="biallelic"):
    """Two traits sharing a latent factor ``u`` and a genotype ``g``.

    ``y1 = sqrt(c) u + sqrt(v1) g + sqrt(1-c-v1) e1`` and likewise for ``y2``,
    with the sign of the genetic term on ``y2`` set by ``params.sign2``.
    """
    if not isinstance(params, BivariateParams):
        params = BivariateParams(**params)
    g = gen_genotype(n, rng, maf=maf, coding=coding)
    u = rng.standard_normal(n)
    e = rng.standard_normal((n, 2))
    s2 = 1.0 if params.sign2 == "concordant" else -1.0
    c = params.c
    y1 = np.sqrt(c) * u + np.sqrt(params.v1) * g.values + np.sqrt(1 - c - params.v1) * e[:, 0]
    y2 = np.sqrt(c) * u + s2 * np.sqrt(params.v2) * g.values + np.sqrt(1 - c - params.v2) * e[:, 1]
    effects = np.array([params.v1, s2 * params.v2])
    return Simulation(np.column_stack([y1, y2]), g, effects, {"generator": "bivariate"})


# ---------------------------------------------------------------------------
# five-trait correlation models


def validate_correlation(corr):
    """Check symmetry, unit diagonal and PSD; return the matrix with tiny
    negative eigenvalues clipped to zero."""
    corr = np.asarray(corr, dtype=float)
    if corr.ndim != 2 or corr.shape[0] != corr.shape[1]:
        raise DomainError(f"correlation matrix must be square, got shape {corr.shape}")
    if not np.allclose(corr, corr.T, atol=1e-12):
        raise DomainError("correlation matrix is not symmetric")
    if not np.allclose(np.diag(corr), 1.0, atol=1e-12):
        raise DomainError("correlation matrix must have a unit diagonal")
    lam, vec = np.linalg.eigh(corr)
    if lam[0] < -_PSD_TOL:
        raise DomainError(
            f"correlation matrix is not positive semi-definite (smallest eigenvalue {lam[0]:.3g})"
        )
    if lam[0] < 0:
        corr = (vec * np.clip(lam, 0, None)) @ vec.T
        d = np.sqrt(np.diag(corr))
        corr = corr / np.outer(d, d)
    return corr


def _matrix_root(corr):
    """A factor ``L`` with ``L @ L.T == corr``; Cholesky when definite."""
    try:
        return np.linalg.cholesky(corr)
    except np.linalg.LinAlgError:
        lam, vec = np.linalg.eigh(corr)
        return vec * np.sqrt(np.clip(lam, 0, None))


def correlation_weights(corr):
    """Selection weight per trait: summed absolute correlation with all others."""
    corr = np.asarray(corr, dtype=float)
    w = np.abs(corr).sum(axis=1) - np.abs(np.diag(corr))
    if w.sum() <= 0:
        return np.full(len(w), 1.0 / len(w))
    return w / w.sum()


def draw_effects(n_traits, k_assoc, rng, effect_range=(0.001, 0.005),
                 selection="uniform", signs="positive", corr=None):
    """Signed per-trait genetic variance fractions for one replicate.

    ``k_assoc`` traits are chosen without replacement, either uniformly or
    with probability proportional to :func:`correlation_weights` of ``corr``;
    each receives ``v ~ Uniform(effect_range)``.
    """
    if not 0 <= k_assoc <= n_traits:
        raise DomainError(f"k_assoc={k_assoc} must lie in [0, n_traits={n_traits}]")
    effects = np.zeros(n_traits)
    if k_assoc == 0:
        return effects
    if selection == "uniform":
        p = None
    elif selection == "correlation":
        if corr is None:
            raise DomainError("correlation-weighted selection needs a correlation matrix")
        p = correlation_weights(corr)
    else:
        raise DomainError(f"unknown selection mode {selection!r}; expected one of {SELECTION_MODES}")
    chosen = rng.choice(n_traits, size=k_assoc, replace=False, p=p)
    lo, hi = effect_range
    v = rng.uniform(lo, hi, size=k_assoc)
    if signs == "random":
        v = v * rng.choice([-1.0, 1.0], size=k_assoc)
    elif signs != "positive":
        raise DomainError(f"unknown sign mode {signs!r}; expected one of {SIGN_MODES}")
    effects[chosen] = v
    return effects


@dataclass(frozen=True)
class MultiTraitScenario:
    corr: np.ndarray
    k_assoc: int = 0
    effect_range: tuple = (0.001, 0.005)
    selection: str = "uniform"
    signs: str = "positive"

    def __post_init__(self):
        corr = self.corr
        if isinstance(corr, str):
            if corr not in MODELS:
                raise DomainError(f"unknown correlation model {corr!r}; expected one of {sorted(MODELS)}")
            corr = MODELS[corr]
        object.__setattr__(self, "corr", validate_correlation(corr))
        lo, hi = self.effect_range
        if not 0.0 < lo <= hi < 1.0:
            raise DomainError(f"effect range must satisfy 0 < lo <= hi < 1, got {self.effect_range!r}")
        if not 0 <= self.k_assoc <= self.n_traits:
            raise DomainError(f"k_assoc={self.k_assoc} exceeds n_traits={self.n_traits}")
        if self.selection not in SELECTION_MODES:
            raise DomainError(f"unknown selection mode {self.selection!r}")
        if self.signs not in SIGN_MODES:
            raise DomainError(f"unknown sign mode {self.signs!r}")

    @property
    def n_traits(self):
        return self.corr.shape[0]


def simulate_multitrait(n, scenario, rng, maf=0.3, coding="biallelic", effects=None):
    """Correlated traits with a SNP on ``scenario.k_assoc`` of them.

    Residuals are ``z @ L.T`` with ``L`` a root of the target correlation;
    trait ``j`` is then ``sqrt(1 - v_j) * resid_j + sign_j * sqrt(v_j) * g``
    so each column keeps unit variance.  Pass ``effects`` to bypass the
    random trait/effect draw.
    """
    g = gen_genotype(n, rng, maf=maf, coding=coding)
    if effects is None:
        effects = draw_effects(
            scenario.n_traits, scenario.k_assoc, rng,
            effect_range=scenario.effect_range, selection=scenario.selection,
            signs=scenario.signs, corr=scenario.corr,
        )
    effects = np.asarray(effects, dtype=float)
    L = _matrix_root(scenario.corr)
    resid = rng.standard_normal((n, scenario.n_traits)) @ L.T
    v = np.abs(effects)
    y = np.sqrt(1.0 - v) * resid + (np.sign(effects) * np.sqrt(v)) * g.values[:, None]
    return Simulation(y, g, effects, {"generator": "multitrait"})


# ---------------------------------------------------------------------------
# latent-variable schemes


@dataclass(frozen=True)
class LatentSchemeParams:
    """Weights and variance shares for a latent-variable scheme.

    ``beta`` is ``n_latent x n_phe`` with unit column sums of squares; ``c``
    is the per-trait latent share.  SC1 puts the SNP directly on traits via
    ``gamma`` (signed variance fractions); SC2/SC3 route it through latents
    via ``delta``.
    """

    scheme: str
    beta: np.ndarray
    c: np.ndarray
    gamma: np.ndarray = None
    delta: np.ndarray = None
    primary: np.ndarray = None

    def __post_init__(self):
        if self.scheme not in SCHEMES:
            raise DomainError(f"unknown scheme {self.scheme!r}; expected one of {SCHEMES}")
        beta = np.asarray(self.beta, dtype=float)
        c = np.asarray(self.c, dtype=float)
        n_lat, n_phe = beta.shape
        if np.any(beta < 0):
            raise DomainError("latent weights must be nonnegative")
        colsum = (beta**2).sum(axis=0)
        if not np.allclose(colsum, 1.0, atol=1e-9):
            bad = int(np.argmax(np.abs(colsum - 1.0)))
            raise DomainError(
                f"latent weights for trait {bad} have squared sum {colsum[bad]:.6g}, expected 1"
            )
        if c.shape != (n_phe,) or np.any(c < 0) or np.any(c >= 1):
            raise DomainError("latent shares c must be one value in [0, 1) per trait")
        gamma = np.zeros(n_phe) if self.gamma is None else np.asarray(self.gamma, dtype=float)
        delta = np.zeros(n_lat) if self.delta is None else np.asarray(self.delta, dtype=float)
        if gamma.shape != (n_phe,) or delta.shape != (n_lat,):
            raise DomainError("gamma must have one entry per trait and delta one per latent")
        if self.scheme == "SC1" and np.any(delta != 0):
            raise DomainError("SC1 places genetic effects on traits; delta must be zero")
        if self.scheme != "SC1" and np.any(gamma != 0):
            raise DomainError(f"{self.scheme} routes genetic effects through latents; gamma must be zero")
        if np.any(np.abs(gamma) >= 1) or np.any(c + np.abs(gamma) >= 1):
            raise DomainError("c + |gamma| must stay below 1 for every trait")
        if np.any(delta < 0) or np.any(delta >= 1):
            raise DomainError("latent genetic shares delta must lie in [0, 1)")
        for name, val in (("beta", beta), ("c", c), ("gamma", gamma), ("delta", delta)):
            object.__setattr__(self, name, val)

    @property
    def n_phe(self):
        return self.beta.shape[1]

    @property
    def n_latent(self):
        return self.beta.shape[0]

    def with_effects(self, gamma=None, delta=None):
        return LatentSchemeParams(self.scheme, self.beta, self.c, gamma=gamma, delta=delta,
                                  primary=self.primary)


def latent_correlation(beta, c):
    """Population trait correlation implied by weights ``beta`` and shares ``c``
    when there is no genetic effect."""
    s = np.sqrt(np.asarray(c, dtype=float))
    corr = np.outer(s, s) * (beta.T @ beta)
    np.fill_diagonal(corr, 1.0)
    return corr


def simulate_latent_scheme(n, params, rng, maf=0.3, coding="biallelic"):
    """Draw phenotypes under SC1, SC2 or SC3.

    SC1: ``y = sqrt(c) * (beta' u) + sqrt(gamma) * g + sqrt(1 - gamma - c) * e``.
    SC2/SC3: ``y = sqrt(c) * (beta' u) + sqrt(1 - c) * e`` where
    ``u_i = sqrt(delta_i) * g + sqrt(1 - delta_i) * e_i``.
    """
    g = gen_genotype(n, rng, maf=maf, coding=coding)
    u = rng.standard_normal((n, params.n_latent))
    e = rng.standard_normal((n, params.n_phe))
    c = params.c
    if params.scheme == "SC1":
        gamma = params.gamma
        v = np.abs(gamma)
        y = (np.sqrt(c) * (u @ params.beta)
             + (np.sign(gamma) * np.sqrt(v)) * g.values[:, None]
             + np.sqrt(1.0 - v - c) * e)
        effects = gamma.copy()
    else:
        delta = params.delta
        u = np.sqrt(delta) * g.values[:, None] + np.sqrt(1.0 - delta) * u
        y = np.sqrt(c) * (u @ params.beta) + np.sqrt(1.0 - c) * e
        # genetic variance reaching trait j through the latents
        effects = c * (np.sqrt(delta) @ params.beta) ** 2
    corr = latent_correlation(params.beta, c)
    off = corr[np.triu_indices(params.n_phe, 1)]
    meta = {
        "generator": "latent",
        "scheme": params.scheme,
        "primary_latent": None if params.primary is None else np.asarray(params.primary),
        "corr_summary": {
            "min": float(off.min()), "median": float(np.median(off)),
            "max": float(off.max()), "mean": float(off.mean()),
        },
    }
    return Simulation(y, g, effects, meta)


# Default SC1 layout.  Traits are ordered along a gradient of latent share c.
# An anchor block of the ANCHOR_SIZE most strongly structured traits shares
# latent 0 as its dominant factor; every other trait draws its dominant latent
# from the remaining ones.  Secondary latents are sprinkled so that each latent
# touches TRAITS_PER_LATENT traits on average.  The constants were chosen so
# the pairwise correlations run from ~0 to ~0.9 with mean c near 0.3.
SC1_DEFAULTS = dict(
    n_phe=100, n_latent=30, traits_per_latent=40,
    anchor_size=13, anchor_share=0.90, anchor_c=(0.90, 0.80),
    other_share=0.87, other_cmax=0.90, other_cpow=4.6,
    structure_seed=367,
)


def sc1_structure(n_phe=100, n_latent=30, traits_per_latent=40, anchor_size=13,
                  anchor_share=0.90, anchor_c=(0.90, 0.80), other_share=0.87,
                  other_cmax=0.90, other_cpow=4.6, structure_seed=367):
    """Weights ``beta`` and latent shares ``c`` for the SC1/SC2 trait panel.

    Returns ``(beta, c, primary)`` where ``primary[j]`` is the dominant latent
    of trait ``j``.  The layout is fully determined by ``structure_seed``.
    """
    if not 1 <= anchor_size < n_phe:
        raise DomainError(f"anchor_size must lie in [1, n_phe), got {anchor_size}")
    if n_latent < 2:
        raise DomainError("need at least two latent variables")
    rng = np.random.default_rng(structure_seed)
    cols = np.arange(n_phe)
    primary = np.concatenate([
        np.zeros(anchor_size, dtype=int),
        rng.integers(1, n_latent, size=n_phe - anchor_size),
    ])
    share = np.where(cols < anchor_size, anchor_share, other_share)
    p_inc = (traits_per_latent * n_latent - n_phe) / (n_phe * (n_latent - 1))
    p_inc = float(np.clip(p_inc, 0.0, 1.0))
    incl = rng.random((n_latent, n_phe)) < p_inc
    incl[primary, cols] = False
    w = np.where(incl, rng.random((n_latent, n_phe)), 0.0)
    sec = w.sum(axis=0)
    has_sec = sec > 0
    w = w / np.where(has_sec, sec, 1.0) * (1.0 - share)
    w[primary, cols] = np.where(has_sec, share, 1.0)
    beta = np.sqrt(w / w.sum(axis=0))

    c = np.empty(n_phe)
    c[:anchor_size] = np.linspace(anchor_c[0], anchor_c[1], anchor_size)
    rest = n_phe - anchor_size
    x = 1.0 - np.arange(rest) / max(rest - 1, 1)
    c[anchor_size:] = other_cmax * x**other_cpow
    return beta, c, primary


def sc3_structure(n_phe=100, n_latent=2000, n_clusters=10, overlap=0.05,
                  latent_share=0.9, structure_seed=367):
    """Weights for SC3: many latents, each owned by one trait cluster.

    Traits are split into ``n_clusters`` contiguous clusters and latents are
    assigned round-robin to clusters.  A latent loads on every trait of its
    cluster and, with probability ``overlap``, on each trait elsewhere.
    ``latent_share`` is the latent share of every trait's variance.
    """
    if n_latent < n_clusters or n_phe < n_clusters:
        raise DomainError("SC3 needs at least one latent and one trait per cluster")
    rng = np.random.default_rng(structure_seed)
    trait_cluster = np.arange(n_phe) * n_clusters // n_phe
    latent_cluster = np.arange(n_latent) % n_clusters
    incl = latent_cluster[:, None] == trait_cluster[None, :]
    incl |= rng.random((n_latent, n_phe)) < overlap
    w = np.where(incl, rng.random((n_latent, n_phe)), 0.0)
    beta = np.sqrt(w / w.sum(axis=0))
    c = np.full(n_phe, latent_share)
    return beta, c, trait_cluster


def default_latent_params(scheme="SC1", n_genetic_latents=3, latent_effect=0.005, **kwargs):
    """Null parameters for a scheme, with SC2/SC3 genetic latents pre-wired.

    SC2/SC3 put ``latent_effect`` on ``n_genetic_latents`` latents (the
    leading ones for SC2, one per cluster for SC3).  SC1 starts with no
    genetic effect; per-replicate effects come from :func:`draw_effects`.
    """
    if scheme in ("SC1", "SC2"):
        beta, c, primary = sc1_structure(**kwargs)
    elif scheme == "SC3":
        beta, c, primary = sc3_structure(**kwargs)
    else:
        raise DomainError(f"unknown scheme {scheme!r}; expected one of {SCHEMES}")
    delta = None
    if scheme != "SC1":
        n_lat = beta.shape[0]
        if not 0 <= n_genetic_latents <= n_lat:
            raise DomainError(f"n_genetic_latents must lie in [0, {n_lat}]")
        delta = np.zeros(n_lat)
        delta[:n_genetic_latents] = latent_effect
    return LatentSchemeParams(scheme, beta, c, delta=delta, primary=primary)
