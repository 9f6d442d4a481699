import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from pcgwas import pheno_sim as ps
from pcgwas.analytic_power import pc_variance_fractions
from pcgwas.errors import DegenerateInputError, DomainError
from pcgwas.pca_core import (
    correlation_matrix,
    fit_pca,
    model_from_table,
    model_table,
    project_scores,
    variance_explained,
)


def random_data(seed, n=300, k=5):
    r = np.random.default_rng(seed)
    A = r.standard_normal((k, k))
    return r.standard_normal((n, k)) @ A + r.normal(0, 3, k)


def test_two_traits_closed_form():
    r = np.random.default_rng(0)
    Y = r.standard_normal((1000, 2))
    Y[:, 1] += 0.8 * Y[:, 0]
    m = fit_pca(Y)
    c = np.corrcoef(Y.T)[0, 1]
    np.testing.assert_allclose(m.eigenvalues, [1 + c, 1 - c], atol=1e-12)
    np.testing.assert_allclose(np.abs(m.loadings), np.full((2, 2), 1 / np.sqrt(2)), atol=1e-12)
    Z = (Y - Y.mean(0)) / Y.std(0, ddof=1)
    S = project_scores(m, Y)
    np.testing.assert_allclose(np.abs(S[:, 0]), np.abs(Z.sum(1) / np.sqrt(2)), atol=1e-12)
    # global sign: both loadings of PC1 positive under the convention
    np.testing.assert_allclose(S[:, 0], Z.sum(1) / np.sqrt(2), atol=1e-12)


def test_isotropic_all_eigenvalues_one():
    r = np.random.default_rng(1)
    X = r.standard_normal((200, 4))
    X -= X.mean(0)
    q, _ = np.linalg.qr(X)
    m = fit_pca(q * np.sqrt(199))
    np.testing.assert_allclose(m.eigenvalues, 1.0, atol=1e-10)


@given(st.integers(0, 10_000), st.integers(2, 8))
@settings(max_examples=40, deadline=None)
def test_structural_invariants(seed, k):
    Y = random_data(seed, n=60, k=k)
    m = fit_pca(Y)
    L = m.loadings
    np.testing.assert_allclose(L.T @ L, np.eye(k), atol=1e-10)
    assert np.all(np.diff(m.eigenvalues) <= 1e-12)
    assert abs(m.eigenvalues.sum() - k) < 1e-8
    np.testing.assert_allclose(m.var_explained, m.eigenvalues / k, atol=1e-14)
    R = correlation_matrix(Y)
    assert np.linalg.norm(L @ np.diag(m.eigenvalues) @ L.T - R) < 1e-8
    # sign convention; among magnitudes tied to 1e-12 the first entry decides
    A = np.abs(L)
    idx = np.argmax(A >= A.max(axis=0) - 1e-12, axis=0)
    assert np.all(L[idx, np.arange(k)] > 0)
    S = project_scores(m, Y)
    C = np.cov(S.T)
    np.testing.assert_allclose(np.diag(C), m.eigenvalues, atol=1e-8)
    off = C - np.diag(np.diag(C))
    assert np.max(np.abs(off)) < 1e-8


def test_score_correlations_vanish():
    Y = random_data(2, n=500, k=6)
    S = project_scores(fit_pca(Y), Y)
    R = np.corrcoef(S.T)
    assert np.max(np.abs(R - np.eye(6))) <= 1e-8


def test_variance_explained():
    m = fit_pca(random_data(3))
    f = variance_explained(m)
    assert abs(f.sum() - 1) < 1e-12
    assert np.all(np.diff(f) <= 0)


def test_two_trait_null_fractions():
    for c in (0.0, 0.3, 0.8):
        sim = ps.simulate_bivariate(200_000, ps.BivariateParams(c, 0, 0), np.random.default_rng(4))
        f = variance_explained(fit_pca(sim.phenotypes))
        np.testing.assert_allclose(f, [(1 + c) / 2, (1 - c) / 2], atol=0.01)


def test_model4_population_fraction():
    # a data set whose sample correlation equals model4 exactly
    R = ps.MODELS["model4"]
    r = np.random.default_rng(5)
    X = r.standard_normal((400, 5))
    X -= X.mean(0)
    q, _ = np.linalg.qr(X)
    Y = q * np.sqrt(399) @ np.linalg.cholesky(R).T
    f = variance_explained(fit_pca(Y))
    assert abs(f[0] - 0.76) < 1e-10
    np.testing.assert_allclose(f[1:], 0.06, atol=1e-10)


@pytest.mark.parametrize("c,v1,v2", [(0.1, 0.01, 0.01), (0.5, 0.02, 0.005), (0.8, 0.05, 0.0),
                                     (0.3, 0.1, 0.05)])
def test_fitted_fraction_matches_closed_form(c, v1, v2):
    sim = ps.simulate_bivariate(100_000, ps.BivariateParams(c, v1, v2), np.random.default_rng(6))
    s1, _ = pc_variance_fractions(c, v1, v2)
    assert abs(variance_explained(fit_pca(sim.phenotypes))[0] - s1) < 0.01


def test_deterministic_and_tie_order():
    r = np.random.default_rng(7)
    X = r.standard_normal((100, 3))
    X -= X.mean(0)
    q, _ = np.linalg.qr(X)
    Y = q * np.sqrt(99)
    a, b = fit_pca(Y), fit_pca(Y.copy())
    np.testing.assert_array_equal(a.loadings, b.loadings)
    # tied eigenvalues: columns in descending lexicographic order
    cols = [tuple(np.round(a.loadings[:, i], 10)) for i in range(3)]
    assert cols == sorted(cols, reverse=True)


def test_projection_of_new_rows_uses_training_standardization():
    Y = random_data(8)
    m = fit_pca(Y)
    S = project_scores(m, Y[:10] + 0.0)
    np.testing.assert_allclose(S, project_scores(m, Y)[:10])


def test_errors():
    Y = random_data(9)
    Y[:, 2] = 3.0
    with pytest.raises(DegenerateInputError):
        fit_pca(Y)
    with pytest.raises(DomainError):
        fit_pca(random_data(9, n=5, k=5))
    with pytest.raises(DomainError):
        fit_pca(random_data(9, k=1))
    m = fit_pca(random_data(9))
    with pytest.raises(DomainError):
        project_scores(m, random_data(9, k=4))


def test_table_round_trip():
    m = fit_pca(random_data(10))
    header, rows = model_table(m)
    m2, names = model_from_table(header, [[r[0]] + [repr(float(x)) for x in r[1:]] for r in rows])
    np.testing.assert_array_equal(m2.loadings, m.loadings)
    np.testing.assert_array_equal(m2.eigenvalues, m.eigenvalues)
    assert names == [f"Y{i}" for i in range(1, 6)]
