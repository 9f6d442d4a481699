"""Correlation-matrix PCA with a deterministic sign and tie convention."""

from dataclasses import dataclass

import numpy as np

from .errors import DegenerateInputError, DomainError, NumericalError

# eigenvalues closer than this are treated as tied when ordering columns
_TIE_TOL = 1e-9


@dataclass(frozen=True)
class PcaModel:
    """Fitted PCA on standardized traits.

    ``loadings[:, i]`` is component ``i``; ``means``/``sds`` are the training
    standardization so new rows can be projected consistently.
    """

    loadings: np.ndarray
    eigenvalues: np.ndarray
    means: np.ndarray
    sds: np.ndarray

    @property
    def n_traits(self):
        return self.loadings.shape[0]

    @property
    def var_explained(self):
        return self.eigenvalues / self.eigenvalues.sum()


def _canonical_signs(vecs):
    # flip each column so its largest-magnitude entry is positive; among
    # magnitudes tied to 1e-12 the first entry decides
    mag = np.abs(vecs)
    idx = np.argmax(mag >= mag.max(axis=0) - 1e-12, axis=0)
    signs = np.sign(vecs[idx, np.arange(vecs.shape[1])])
    signs[signs == 0] = 1.0
    return vecs * signs


def _order_components(vals, vecs):
    order = np.argsort(-vals, kind="stable")
    vals, vecs = vals[order], vecs[:, order]
    # within runs of tied eigenvalues, order the canonical columns
    # lexicographically (descending) so the output does not depend on LAPACK
    out = vecs.copy()
    i = 0
    k = len(vals)
    while i < k:
        j = i + 1
        while j < k and abs(vals[j] - vals[i]) <= _TIE_TOL * max(1.0, abs(vals[i])):
            j += 1
        if j - i > 1:
            block = out[:, i:j]
            keys = np.round(block, 10)
            perm = sorted(range(j - i), key=lambda c: tuple(-keys[:, c]))
            out[:, i:j] = block[:, perm]
        i = j
    return vals, out


def correlation_matrix(Y):
    """Sample correlation of the columns of ``Y`` (ddof cancels)."""
    Z, _, _ = standardize(Y)
    return (Z.T @ Z) / (Z.shape[0] - 1)


def standardize(Y, means=None, sds=None):
    Y = np.asarray(Y, dtype=float)
    if means is None:
        means = Y.mean(axis=0)
        sds = Y.std(axis=0, ddof=1)
        const = np.flatnonzero(~(sds > 0))
        if const.size:
            raise DegenerateInputError(f"phenotype column {int(const[0])} is constant")
    return (Y - means) / sds, means, sds


def fit_pca(Y):
    """Eigendecompose the sample correlation matrix of ``Y`` (subjects x traits)."""
    Y = np.asarray(Y, dtype=float)
    if Y.ndim != 2:
        raise DomainError(f"phenotype matrix must be 2-D, got {Y.ndim}-D")
    n, k = Y.shape
    if k < 2:
        raise DomainError(f"need at least 2 traits, got {k}")
    if n <= k:
        raise DomainError(f"need more subjects than traits, got n={n}, traits={k}")
    if not np.all(np.isfinite(Y)):
        raise DomainError("phenotype matrix contains non-finite values")
    Z, means, sds = standardize(Y)
    corr = (Z.T @ Z) / (n - 1)
    corr = (corr + corr.T) / 2.0
    try:
        vals, vecs = np.linalg.eigh(corr)
    except np.linalg.LinAlgError as exc:
        raise NumericalError(f"eigendecomposition failed: {exc}") from exc
    vals = np.clip(vals, 0.0, None)
    vecs = _canonical_signs(vecs)
    vals, vecs = _order_components(vals, vecs)
    return PcaModel(loadings=vecs, eigenvalues=vals, means=means, sds=sds)


def project_scores(model, Y):
    """PC scores: training-standardized ``Y`` times the loadings."""
    Y = np.asarray(Y, dtype=float)
    if Y.ndim != 2 or Y.shape[1] != model.n_traits:
        raise DomainError(
            f"expected {model.n_traits} trait columns, got shape {Y.shape}"
        )
    Z, _, _ = standardize(Y, model.means, model.sds)
    return Z @ model.loadings


def variance_explained(model):
    return model.var_explained


def model_table(model, trait_names=None):
    """Rows for a loadings export: one row per trait, then eigenvalue and
    variance-fraction rows; the header names the components."""
    k = model.n_traits
    names = trait_names or [f"Y{i + 1}" for i in range(k)]
    header = ["row"] + [f"PC{i + 1}" for i in range(k)]
    rows = [[names[j]] + list(model.loadings[j]) for j in range(k)]
    rows.append(["eigenvalue"] + list(model.eigenvalues))
    rows.append(["var_explained"] + list(model.var_explained))
    rows.append(["mean"] + list(model.means))
    rows.append(["sd"] + list(model.sds))
    return header, rows


def model_from_table(header, rows):
    """Inverse of :func:`model_table`."""
    k = len(header) - 1
    by_name = {r[0]: np.asarray(r[1:], dtype=float) for r in rows}
    missing = {"eigenvalue", "mean", "sd"} - set(by_name)
    if missing:
        raise DomainError(f"PCA table lacks rows: {sorted(missing)}")
    trait_rows = [r for r in rows if r[0] not in ("eigenvalue", "var_explained", "mean", "sd")]
    if len(trait_rows) != k:
        raise DomainError(f"PCA table has {len(trait_rows)} trait rows for {k} components")
    loadings = np.array([np.asarray(r[1:], dtype=float) for r in trait_rows])
    return PcaModel(loadings, by_name["eigenvalue"], by_name["mean"], by_name["sd"]), [r[0] for r in trait_rows]
