"""PCA used as a data-reduction step ahead of the canonical analysis.

Components come from the SVD of the centered data; determinism up to sign is
resolved by forcing each component's largest-magnitude entry positive.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .data import Dataset
from .errors import DataError, DimensionError, SchemaError


@dataclass(frozen=True)
class PcaReduction:
    """Fitted reduction: column means, orthonormal components, variances."""

    names: tuple[str, ...]
    means: np.ndarray                 # (p,)
    components: np.ndarray            # (p, m), orthonormal columns
    explained_variance: np.ndarray    # (m,), nonincreasing
    total_variance: float

    @property
    def n_components(self) -> int:
        return self.components.shape[1]

    @property
    def explained_variance_ratio(self) -> np.ndarray:
        return self.explained_variance / self.total_variance

    def to_dict(self) -> dict:
        return {
            "names": list(self.names),
            "means": [float(v) for v in self.means],
            "components": [[float(v) for v in row] for row in self.components],
            "explained_variance": [float(v) for v in self.explained_variance],
            "total_variance": float(self.total_variance),
        }


def _fix_signs(components: np.ndarray) -> np.ndarray:
    out = components.copy()
    for j in range(out.shape[1]):
        k = int(np.argmax(np.abs(out[:, j])))  # ties resolve to the lowest index
        if out[k, j] < 0:
            out[:, j] = -out[:, j]
    return out


def pca_fit(ds: Dataset, n_components: int | None = None,
            variance_fraction: float | None = None) -> PcaReduction:
    """Fit PCA on centered data; target either a count or a variance fraction."""
    ds.require_complete("PCA")
    if (n_components is None) == (variance_fraction is None):
        raise DataError("specify exactly one of n_components / variance_fraction")
    X = ds.values
    n, p = X.shape
    if n < 2:
        raise DimensionError("PCA needs at least two rows")
    means = X.mean(axis=0)
    Xc = X - means
    _, s, vt = np.linalg.svd(Xc, full_matrices=False)
    var = s**2 / (n - 1)
    total = float(var.sum())
    if total == 0.0:
        raise DataError("all columns are constant; nothing to reduce")
    rank = int(np.sum(s > s[0] * max(n, p) * np.finfo(float).eps))
    cap = min(n - 1, p)
    if variance_fraction is not None:
        if not 0.0 < variance_fraction <= 1.0:
            raise DataError("variance_fraction must lie in (0, 1]")
        cum = np.cumsum(var[:rank]) / total
        m = int(np.searchsorted(cum, variance_fraction - 1e-12) + 1)
        m = min(m, rank)
    else:
        m = int(n_components)
        if not 1 <= m <= cap:
            raise DimensionError(f"n_components must lie in [1, min(n-1, p)] = [1, {cap}], got {m}")
    return PcaReduction(ds.names, means, _fix_signs(vt[:m].T), var[:m], total)


def pca_apply(ds: Dataset, red: PcaReduction) -> Dataset:
    """Project onto the fitted components; output columns are pc1..pcm."""
    ds.require_complete("PCA projection")
    if tuple(ds.names) != tuple(red.names):
        raise SchemaError(
            f"column mismatch: reduction fitted on {list(red.names)}, got {list(ds.names)}"
        )
    scores = (ds.values - red.means) @ red.components
    return Dataset(tuple(f"pc{i + 1}" for i in range(red.n_components)), scores)
