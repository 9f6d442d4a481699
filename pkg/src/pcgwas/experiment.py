"""Monte Carlo power studies and null calibration.

A :class:`Scenario` fully determines an experiment.  Replicate ``i`` draws
from ``SeedSequence([seed, i])`` so results do not depend on execution order
or on how replicates are split across worker processes.
"""

import functools
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, fields

import numpy as np
from scipy import special, stats

from . import assoc_tests, pca_core, pheno_sim, stats_dist
from .errors import DomainError, PcgwasError

GENERATORS = ("bivariate", "multitrait", "latent")

DEFAULT_TESTS = ("traits", "pcs", "best_pc", "combined")


@dataclass(frozen=True)
class Scenario:
    """Flat description of a simulation experiment.

    Only the fields relevant to ``generator`` are used.  ``tests`` is a tuple
    of test specs; see :func:`expand_tests` for the syntax.
    """

    generator: str = "multitrait"
    n: int = 2000
    replicates: int = 1000
    alpha: float = 5e-8
    seed: int = 0
    tests: tuple = DEFAULT_TESTS
    genotype: str = "biallelic"
    maf: float = 0.3
    # bivariate
    c: float = 0.5
    v1: float = 0.005
    v2: float = 0.0
    sign2: str = "concordant"
    # multitrait and latent
    model: str = "model2"
    k_assoc: int = 1
    effect_lo: float = 0.001
    effect_hi: float = 0.005
    selection: str = "uniform"
    signs: str = "positive"
    # latent
    scheme: str = "SC1"
    n_phe: int = 100
    n_latent: int = 30
    structure_seed: int = 367

    def __post_init__(self):
        if isinstance(self.tests, (list, str)):
            tests = (self.tests,) if isinstance(self.tests, str) else self.tests
            object.__setattr__(self, "tests", tuple(tests))
        problems = scenario_problems(self)
        if problems:
            raise DomainError("; ".join(problems))

    def replace(self, **kw):
        d = asdict(self)
        d.update(kw)
        return Scenario(**d)

    @property
    def n_traits(self):
        if self.generator == "bivariate":
            return 2
        if self.generator == "multitrait":
            return pheno_sim.MODELS[self.model].shape[0]
        return self.n_phe

    @property
    def is_null(self):
        if self.generator == "bivariate":
            return self.v1 == 0 and self.v2 == 0
        return self.k_assoc == 0


SCENARIO_FIELDS = {f.name: f for f in fields(Scenario)}


def scenario_problems(s):
    """All invariant violations of ``s`` as human-readable strings."""
    out = []
    if s.generator not in GENERATORS:
        out.append(f"generator must be one of {GENERATORS}, got {s.generator!r}")
        return out
    if s.n < 10:
        out.append(f"n must be >= 10, got {s.n}")
    if s.replicates < 1:
        out.append(f"replicates must be >= 1, got {s.replicates}")
    if not 0.0 < s.alpha < 1.0:
        out.append(f"alpha must lie in (0, 1), got {s.alpha}")
    if not 0 <= s.seed < 2**64:
        out.append(f"seed must be an unsigned 64-bit integer, got {s.seed}")
    if s.genotype not in pheno_sim.GENOTYPE_CODINGS:
        out.append(f"genotype must be one of {pheno_sim.GENOTYPE_CODINGS}, got {s.genotype!r}")
    if not 0.0 < s.maf <= 0.5:
        out.append(f"maf must lie in (0, 0.5], got {s.maf}")
    if s.generator == "bivariate":
        try:
            pheno_sim.BivariateParams(s.c, s.v1, s.v2, s.sign2)
        except DomainError as exc:
            out.append(str(exc))
    else:
        if not 0.0 < s.effect_lo <= s.effect_hi < 1.0:
            out.append(f"effect bounds must satisfy 0 < effect_lo <= effect_hi < 1, "
                       f"got ({s.effect_lo}, {s.effect_hi})")
        if s.selection not in pheno_sim.SELECTION_MODES:
            out.append(f"selection must be one of {pheno_sim.SELECTION_MODES}, got {s.selection!r}")
        if s.signs not in pheno_sim.SIGN_MODES:
            out.append(f"signs must be one of {pheno_sim.SIGN_MODES}, got {s.signs!r}")
    if s.generator == "multitrait":
        if s.model not in pheno_sim.MODELS:
            out.append(f"model must be one of {sorted(pheno_sim.MODELS)}, got {s.model!r}")
        elif not 0 <= s.k_assoc <= s.n_traits:
            out.append(f"k_assoc={s.k_assoc} exceeds n_traits={s.n_traits} for {s.model}")
    if s.generator == "latent":
        if s.scheme not in pheno_sim.SCHEMES:
            out.append(f"scheme must be one of {pheno_sim.SCHEMES}, got {s.scheme!r}")
        if s.n_phe < 2 or s.n_latent < 2:
            out.append(f"n_phe and n_latent must be >= 2, got {s.n_phe}, {s.n_latent}")
        elif s.scheme == "SC1" and not 0 <= s.k_assoc <= s.n_phe:
            out.append(f"k_assoc={s.k_assoc} exceeds n_traits={s.n_phe}")
        elif s.scheme != "SC1" and not 0 <= s.k_assoc <= s.n_latent:
            out.append(f"k_assoc={s.k_assoc} exceeds n_latent={s.n_latent}")
        if s.n >= 10 and s.n_phe >= s.n:
            out.append(f"n={s.n} must exceed n_phe={s.n_phe}")
    if not s.tests:
        out.append("tests must name at least one test")
    elif s.generator != "multitrait" or s.model in pheno_sim.MODELS:
        try:
            expand_tests(s.tests, s.n_traits)
        except DomainError as exc:
            out.append(str(exc))
    return out


# ---------------------------------------------------------------------------
# test battery

_SIMPLE_TESTS = ("traits", "pcs", "assoc_trait", "assoc_trait_bonf", "best_pc",
                 "combined", "partition", "manova")
_PARAM_TESTS = ("tk", "top", "bottom")


def expand_tests(specs, n_traits):
    """Validate test specs and return the output column names they produce.

    Simple specs: ``traits`` (one column per trait, ``Y1``..), ``pcs`` (``PC1``..),
    ``assoc_trait`` (smallest p over genetically affected traits, no
    correction), ``assoc_trait_bonf`` (same, Bonferroni over all traits),
    ``best_pc``, ``combined``, ``partition`` (every top-n and bottom-n group,
    ``top:n``/``bottom:n``) and ``manova``.  Parameterized specs: ``tk:K``,
    ``top:n`` (first n PCs), ``bottom:n`` (last n PCs).
    """
    names = []
    for spec in specs:
        head, _, arg = spec.partition(":")
        if head in _SIMPLE_TESTS and not arg:
            if head == "traits":
                names += [f"Y{j + 1}" for j in range(n_traits)]
            elif head == "pcs":
                names += [f"PC{j + 1}" for j in range(n_traits)]
            elif head == "partition":
                names += [f"top:{m}" for m in range(1, n_traits + 1)]
                names += [f"bottom:{m}" for m in range(1, n_traits + 1)]
            else:
                names.append(head)
        elif head in _PARAM_TESTS and arg:
            try:
                m = int(arg)
            except ValueError:
                raise DomainError(f"test {spec!r}: {arg!r} is not an integer") from None
            hi = n_traits - 1 if head == "tk" else n_traits
            if not 1 <= m <= hi:
                raise DomainError(f"test {spec!r}: parameter must lie in [1, {hi}]")
            names.append(f"{head}:{m}")
        else:
            raise DomainError(f"unknown test spec {spec!r}")
    seen = set()
    return [x for x in names if not (x in seen or seen.add(x))]


def _log_ps_for(specs, Y, g, effects):
    """Run the requested tests on one data set; returns name -> (log p, df)."""
    k = Y.shape[1]
    out = {}
    need_pca = any(s.split(":")[0] in ("pcs", "best_pc", "combined", "partition",
                                          "tk", "top", "bottom") for s in specs)
    need_traits = any(s in ("traits", "assoc_trait", "assoc_trait_bonf") for s in specs)
    if need_traits:
        _, trait_chi2 = assoc_tests.wald_columns(Y, g)
        trait_lp = np.atleast_1d(stats_dist.log_pvalue_from_chisq(trait_chi2, 1))
    if need_pca:
        model = pca_core.fit_pca(Y)
        scores = pca_core.project_scores(model, Y)
        _, pc_chi2 = assoc_tests.wald_columns(scores, g)
        pc_lp = np.atleast_1d(stats_dist.log_pvalue_from_chisq(pc_chi2, 1))
    for spec in specs:
        head, _, arg = spec.partition(":")
        if head == "traits":
            for j in range(k):
                out[f"Y{j + 1}"] = (float(trait_lp[j]), 1)
        elif head == "pcs":
            for j in range(k):
                out[f"PC{j + 1}"] = (float(pc_lp[j]), 1)
        elif head in ("assoc_trait", "assoc_trait_bonf"):
            hit = np.flatnonzero(np.asarray(effects) != 0)
            if hit.size == 0:
                # no affected trait: fall back to the first trait
                hit = np.array([0])
            lp = float(trait_lp[hit].min())
            if head == "assoc_trait_bonf":
                lp = assoc_tests.bonferroni_log(lp, k)
            out[head] = (lp, 1)
        elif head == "best_pc":
            i = int(np.argmin(pc_lp))
            out[head] = (assoc_tests.bonferroni_log(float(pc_lp[i]), k), 1)
        elif head == "combined":
            stat = float(pc_chi2.sum())
            out[head] = (stats_dist.log_pvalue_from_chisq(stat, k), k)
        elif head == "partition":
            for n, top, bottom in assoc_tests.eigen_partition_scan(pc_chi2):
                out[f"top:{n}"] = (top.log_p, top.df)
                out[f"bottom:{k - n + 1}"] = (bottom.log_p, bottom.df)
        elif head == "top":
            r = assoc_tests.top_group(pc_chi2, int(arg))
            out[spec] = (r.log_p, r.df)
        elif head == "bottom":
            r = assoc_tests.bottom_group(pc_chi2, int(arg))
            out[spec] = (r.log_p, r.df)
        elif head == "tk":
            r = assoc_tests.fisher_group_test(pc_chi2, int(arg))
            out[spec] = (r.log_p, r.df)
        elif head == "manova":
            _, _, lp = assoc_tests.manova_wilks(Y, g)
            out[head] = (lp, k)
    return out


# ---------------------------------------------------------------------------
# data generation


@functools.lru_cache(maxsize=8)
def _latent_base(scheme, n_phe, n_latent, structure_seed):
    return pheno_sim.default_latent_params(
        scheme, n_genetic_latents=0, n_phe=n_phe, n_latent=n_latent,
        structure_seed=structure_seed)


@functools.lru_cache(maxsize=8)
def _latent_corr(scheme, n_phe, n_latent, structure_seed):
    p = _latent_base(scheme, n_phe, n_latent, structure_seed)
    return pheno_sim.latent_correlation(p.beta, p.c)


def replicate_rng(seed, index):
    return np.random.default_rng(np.random.SeedSequence([seed, index]))


def simulate_replicate(s, index):
    """Data set number ``index`` of scenario ``s``."""
    rng = replicate_rng(s.seed, index)
    if s.generator == "bivariate":
        params = pheno_sim.BivariateParams(s.c, s.v1, s.v2, s.sign2)
        return pheno_sim.simulate_bivariate(s.n, params, rng, maf=s.maf, coding=s.genotype)
    if s.generator == "multitrait":
        scen = pheno_sim.MultiTraitScenario(
            corr=s.model, k_assoc=s.k_assoc, effect_range=(s.effect_lo, s.effect_hi),
            selection=s.selection, signs=s.signs)
        return pheno_sim.simulate_multitrait(s.n, scen, rng, maf=s.maf, coding=s.genotype)
    base = _latent_base(s.scheme, s.n_phe, s.n_latent, s.structure_seed)
    if s.scheme == "SC1":
        gamma = pheno_sim.draw_effects(
            s.n_phe, s.k_assoc, rng, effect_range=(s.effect_lo, s.effect_hi),
            selection=s.selection, signs=s.signs,
            corr=_latent_corr(s.scheme, s.n_phe, s.n_latent, s.structure_seed))
        params = base.with_effects(gamma=gamma)
    else:
        delta = np.zeros(base.n_latent)
        if s.k_assoc:
            hit = rng.choice(base.n_latent, size=s.k_assoc, replace=False)
            delta[hit] = rng.uniform(s.effect_lo, s.effect_hi, size=s.k_assoc)
        params = base.with_effects(delta=delta)
    return pheno_sim.simulate_latent_scheme(s.n, params, rng, maf=s.maf, coding=s.genotype)


def run_replicate(s, index):
    """Log p-values and df of every configured test on replicate ``index``."""
    try:
        sim = simulate_replicate(s, index)
        return _log_ps_for(s.tests, sim.phenotypes, sim.genotype, sim.effects)
    except PcgwasError as exc:
        raise type(exc)(f"replicate {index}: {exc}") from exc


def _run_chunk(args):
    s, lo, hi = args
    return [run_replicate(s, i) for i in range(lo, hi)]


def run_replicates(s, threads=1):
    """Results of every replicate in index order, optionally across processes."""
    R = s.replicates
    threads = max(1, int(threads or 1))
    if threads == 1 or R < 2:
        return _run_chunk((s, 0, R))
    n_chunks = min(R, threads * 4)
    bounds = np.linspace(0, R, n_chunks + 1).astype(int)
    jobs = [(s, int(bounds[i]), int(bounds[i + 1])) for i in range(n_chunks)]
    out = []
    with ProcessPoolExecutor(max_workers=threads) as pool:
        for chunk in pool.map(_run_chunk, jobs):
            out.extend(chunk)
    return out


# ---------------------------------------------------------------------------
# studies


@dataclass(frozen=True)
class PowerEstimate:
    test: str
    power: float
    se: float
    replicates: int
    alpha: float


@dataclass
class NullCalibration:
    lam: dict
    qq: dict = field(default_factory=dict)
    ks_p: dict = field(default_factory=dict)


def _stack(results):
    names = list(results[0])
    lp = np.array([[r[n][0] for n in names] for r in results])
    dfs = [results[0][n][1] for n in names]
    return names, lp, dfs


def run_power_study(s, threads=1):
    """Rejection rate at ``s.alpha`` and its binomial SE for every test."""
    results = run_replicates(s, threads)
    names, lp, _ = _stack(results)
    log_alpha = math.log(s.alpha)
    R = lp.shape[0]
    out = []
    for j, name in enumerate(names):
        p_hat = float(np.mean(lp[:, j] <= log_alpha))
        out.append(PowerEstimate(name, p_hat, math.sqrt(p_hat * (1 - p_hat) / R), R, s.alpha))
    return out


def chi2_1df_equivalent(log_p):
    """1-df chi-square with the same p-value, computed from a log p.

    p-values below the smallest normal double are clamped there; only the
    median matters for inflation, so the clamp never moves the result.
    """
    p = np.exp(np.minimum(np.asarray(log_p, dtype=float), 0.0))
    p = np.clip(p, np.finfo(float).tiny, 1.0)
    return 2.0 * special.gammainccinv(0.5, p)


def genomic_inflation(log_p):
    """Median 1-df-equivalent chi-square over the 1-df null median."""
    return float(np.median(chi2_1df_equivalent(log_p)) / stats_dist.CHI2_1DF_MEDIAN)


def qq_pairs(log_p):
    """Sorted (expected, observed) -log10 p pairs using ``i/(R+1)`` quantiles."""
    obs = np.sort(-np.asarray(log_p) / math.log(10))[::-1]
    R = obs.size
    exp = -np.log10(np.arange(1, R + 1) / (R + 1))
    return np.column_stack([exp, obs])


def calibrate_null(s, threads=1):
    """Genomic inflation and QQ data for every test on a null scenario."""
    if not s.is_null:
        raise DomainError("null calibration needs a scenario without genetic effects "
                          "(k_assoc = 0, or v1 = v2 = 0 for the bivariate generator)")
    results = run_replicates(s, threads)
    names, lp, _ = _stack(results)
    cal = NullCalibration(lam={})
    for j, name in enumerate(names):
        cal.lam[name] = genomic_inflation(lp[:, j])
        cal.qq[name] = qq_pairs(lp[:, j])
        cal.ks_p[name] = float(stats.kstest(np.exp(lp[:, j]), "uniform").pvalue)
    return cal
