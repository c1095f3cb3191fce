"""Classical and ridge-regularized canonical correlation analysis.

The solver whitens both covariance blocks by symmetric inverse square roots
and reads the canonical system off the SVD of the whitened cross-covariance.
Canonical correlations are the singular values; weight pairs are sign-fixed
so each mode's x-vector has a positive largest-magnitude entry.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from .data import Dataset
from .errors import (
    ConditioningError,
    DataError,
    DegeneracyError,
    DimensionError,
    InternalConsistencyError,
    SchemaError,
)

FORMAT_VERSION = "1"
EIG_FLOOR = 1e-10            # relative eigenvalue floor for inverse square roots
SV_OVERSHOOT = 1e-8          # allowed floating-point overshoot above 1.0


def as_matrix(data, prefix: str = "x") -> tuple[np.ndarray, tuple[str, ...]]:
    """Accept a Dataset or a 2-d array; return (float64 matrix, names)."""
    if isinstance(data, Dataset):
        return data.matrix(), data.names
    X = np.asarray(data, dtype=np.float64)
    if X.ndim != 2:
        raise DataError("expected a 2-d design matrix")
    if not np.all(np.isfinite(X)):
        raise DataError("design matrix contains non-finite values")
    return X, tuple(f"{prefix}{j + 1}" for j in range(X.shape[1]))


def inv_sqrt_psd(C: np.ndarray, what: str) -> np.ndarray:
    """Symmetric inverse square root with a relative eigenvalue floor.

    Directions below the floor mean the covariance is numerically singular;
    failing loudly beats silently truncating them.
    """
    evals, evecs = np.linalg.eigh(C)
    top = float(evals[-1])
    if top <= 0.0:
        raise ConditioningError(f"{what} covariance has no positive spectrum")
    floor = EIG_FLOOR * top
    if evals[0] < floor:
        raise ConditioningError(
            f"{what} covariance is numerically singular (eigenvalue "
            f"{evals[0]:.3e} below the conditioning floor {floor:.3e}); "
            "consider --pca, --ridge, or the sparse variant"
        )
    return (evecs / np.sqrt(evals)) @ evecs.T


@dataclass(frozen=True)
class Variates:
    """Paired left/right canonical scores, one column per mode."""

    U: np.ndarray  # (n, k)
    V: np.ndarray  # (n, k)

    @property
    def n(self) -> int:
        return self.U.shape[0]

    @property
    def k(self) -> int:
        return self.U.shape[1]


@dataclass(frozen=True)
class CcaModel:
    """Fitted canonical system.

    `correlations` holds training-data (in-sample) canonical correlations;
    hold-out figures live in a separate result type on purpose, because
    in-sample values inflate with the variable count.
    """

    x_names: tuple[str, ...]
    y_names: tuple[str, ...]
    x_weights: np.ndarray        # (p, k)
    y_weights: np.ndarray        # (q, k)
    correlations: np.ndarray     # (k,), in-sample
    variant: str                 # "classical" | "ridge" | "sparse"
    variant_params: dict = field(default_factory=dict)
    preprocessing: dict | None = None
    details: dict = field(default_factory=dict)

    @property
    def k(self) -> int:
        return self.x_weights.shape[1]

    @property
    def p(self) -> int:
        return self.x_weights.shape[0]

    @property
    def q(self) -> int:
        return self.y_weights.shape[0]

    def to_dict(self) -> dict:
        return {
            "format_version": FORMAT_VERSION,
            "variant": self.variant,
            "variant_params": self.variant_params,
            "x_names": list(self.x_names),
            "y_names": list(self.y_names),
            "x_weights": [[float(v) for v in row] for row in self.x_weights],
            "y_weights": [[float(v) for v in row] for row in self.y_weights],
            "in_sample_correlations": [float(v) for v in self.correlations],
            "preprocessing": self.preprocessing,
            "details": self.details,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, indent=2)

    @classmethod
    def from_dict(cls, d: dict) -> "CcaModel":
        return cls(
            x_names=tuple(d["x_names"]),
            y_names=tuple(d["y_names"]),
            x_weights=np.asarray(d["x_weights"], float),
            y_weights=np.asarray(d["y_weights"], float),
            correlations=np.asarray(d["in_sample_correlations"], float),
            variant=d["variant"],
            variant_params=d.get("variant_params", {}),
            preprocessing=d.get("preprocessing"),
            details=d.get("details", {}),
        )

    @classmethod
    def from_json(cls, text: str) -> "CcaModel":
        return cls.from_dict(json.loads(text))


def apply_sign_convention(x_weights: np.ndarray, y_weights: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Flip each (x, y) weight pair so x's largest-|entry| is positive.

    Flipping the pair together preserves the variate correlation; the sign
    difference lands on the y side (ties resolve to the lowest index).
    """
    xw = x_weights.copy()
    yw = y_weights.copy()
    for m in range(xw.shape[1]):
        j = int(np.argmax(np.abs(xw[:, m])))
        if xw[j, m] < 0:
            xw[:, m] = -xw[:, m]
            yw[:, m] = -yw[:, m]
    return xw, yw


def _order_modes(corr: np.ndarray, xw: np.ndarray, yw: np.ndarray):
    """Descending by correlation; exact ties by x-weight lexicographic order."""
    order = sorted(range(corr.size), key=lambda m: (-corr[m], tuple(xw[:, m])))
    idx = np.asarray(order, dtype=int)
    return corr[idx], xw[:, idx], yw[:, idx]


def cca_fit(X, Y, k: int | None = None,
            ridge: tuple[float, float] | None = None,
            preprocessing: dict | None = None) -> CcaModel:
    """Fit classical (ridge=None) or ridge-regularized CCA.

    Expects complete, column-standardized design matrices.  The classical
    variant requires n > max(p, q); ridge lifts that requirement by adding
    (lambda_x, lambda_y) to the diagonals of the within-set covariances.
    """
    Xm, x_names = as_matrix(X, "x")
    Ym, y_names = as_matrix(Y, "y")
    n, p = Xm.shape
    n2, q = Ym.shape
    if n != n2:
        raise DataError(f"row counts differ: X has {n}, Y has {n2}")
    if n < 3:
        raise DegeneracyError("CCA needs at least 3 observations")
    if ridge is None:
        variant, lam_x, lam_y = "classical", 0.0, 0.0
        if n <= max(p, q):
            raise DegeneracyError(
                f"classical CCA requires n > max(p, q), got n={n}, p={p}, q={q}; "
                "the fitted canonical vectors would be meaningless in this regime. "
                "Reduce dimensionality first (--pca), regularize (--ridge), or "
                "use the sparse variant."
            )
    else:
        lam_x, lam_y = float(ridge[0]), float(ridge[1])
        if lam_x < 0 or lam_y < 0:
            raise DataError("ridge penalties must be non-negative")
        variant = "ridge"
    kmax = min(p, q)
    if k is None:
        k = kmax
    if not 1 <= k <= kmax:
        raise DimensionError(f"k must lie in [1, min(p, q)] = [1, {kmax}], got {k}")

    Cxx = Xm.T @ Xm / (n - 1) + lam_x * np.eye(p)
    Cyy = Ym.T @ Ym / (n - 1) + lam_y * np.eye(q)
    Cxy = Xm.T @ Ym / (n - 1)
    isx = inv_sqrt_psd(Cxx, "left-set")
    isy = inv_sqrt_psd(Cyy, "right-set")
    u, s, vt = np.linalg.svd(isx @ Cxy @ isy, full_matrices=False)
    if s[0] > 1.0 + SV_OVERSHOOT:
        raise InternalConsistencyError(
            f"canonical correlation overshoot: {s[0]!r} exceeds 1 + {SV_OVERSHOOT}"
        )
    corr = np.clip(s, 0.0, 1.0)
    xw = isx @ u
    yw = isy @ vt.T
    xw, yw = apply_sign_convention(xw, yw)
    corr, xw, yw = _order_modes(corr, xw, yw)
    return CcaModel(
        x_names=x_names,
        y_names=y_names,
        x_weights=xw[:, :k],
        y_weights=yw[:, :k],
        correlations=corr[:k],
        variant=variant,
        variant_params={} if ridge is None else {"lambda_x": lam_x, "lambda_y": lam_y},
        preprocessing=preprocessing,
    )


def _match_model(model: CcaModel, X, Y) -> tuple[np.ndarray, np.ndarray]:
    Xm, x_names = as_matrix(X, "x")
    Ym, y_names = as_matrix(Y, "y")
    if x_names != model.x_names or y_names != model.y_names:
        raise SchemaError("column names do not match the fitted model")
    if Xm.shape[0] != Ym.shape[0]:
        raise DataError("X and Y row counts differ")
    return Xm, Ym


def project(model: CcaModel, X, Y) -> Variates:
    """Compute canonical variates U = X W_x, V = Y W_y.

    Works for training rows or held-out rows, provided the data went
    through the same preprocessing parameters the model was fitted with.
    """
    Xm, Ym = _match_model(model, X, Y)
    return Variates(Xm @ model.x_weights, Ym @ model.y_weights)


def pearson_columns(A: np.ndarray, B: np.ndarray) -> np.ndarray:
    """Pearson correlation of every column of A with every column of B."""
    Ac = A - A.mean(axis=0)
    Bc = B - B.mean(axis=0)
    sa = np.sqrt((Ac**2).sum(axis=0))
    sb = np.sqrt((Bc**2).sum(axis=0))
    if np.any(sa == 0.0) or np.any(sb == 0.0):
        raise DataError("zero-variance column encountered in correlation")
    return (Ac.T @ Bc) / np.outer(sa, sb)


def paired_correlations(U: np.ndarray, V: np.ndarray) -> np.ndarray:
    """Pearson correlation of mode-paired variate columns (sign preserved)."""
    Uc = U - U.mean(axis=0)
    Vc = V - V.mean(axis=0)
    num = (Uc * Vc).sum(axis=0)
    den = np.sqrt((Uc**2).sum(axis=0) * (Vc**2).sum(axis=0))
    if np.any(den == 0.0):
        raise DataError("zero-variance variate encountered in correlation")
    return num / den


@dataclass(frozen=True)
class Loadings:
    """Structure correlations of original variables with the variates.

    `x_same[j, m]` correlates x-variable j with its own side's variate U_m;
    `x_cross[j, m]` with the opposite side's variate V_m (and vice versa for
    the y arrays).  Cross-loadings feed the redundancy metric.
    """

    x_names: tuple[str, ...]
    y_names: tuple[str, ...]
    x_same: np.ndarray
    x_cross: np.ndarray
    y_same: np.ndarray
    y_cross: np.ndarray


def structure_correlations(model: CcaModel, X, Y) -> Loadings:
    """Correlate each original variable with both sides' canonical variates."""
    Xm, Ym = _match_model(model, X, Y)
    var = Variates(Xm @ model.x_weights, Ym @ model.y_weights)
    for mat, names, side in ((Xm, model.x_names, "left"), (Ym, model.y_names, "right")):
        zero = np.flatnonzero(mat.std(axis=0) == 0.0)
        if zero.size:
            raise DataError(
                f"loading undefined: {side} variable {names[int(zero[0])]!r} has zero variance"
            )
    return Loadings(
        x_names=model.x_names,
        y_names=model.y_names,
        x_same=pearson_columns(Xm, var.U),
        x_cross=pearson_columns(Xm, var.V),
        y_same=pearson_columns(Ym, var.V),
        y_cross=pearson_columns(Ym, var.U),
    )


@dataclass(frozen=True)
class Redundancy:
    """Per-mode mean squared cross-loading, one curve per side."""

    x_explained: np.ndarray  # variance of X's variables carried by V modes
    y_explained: np.ndarray  # variance of Y's variables carried by U modes

    @property
    def mean(self) -> np.ndarray:
        return (self.x_explained + self.y_explained) / 2.0


def redundancy(model: CcaModel, X, Y, m: int | None = None) -> Redundancy:
    """Explained-variance metric per mode (both sides reported)."""
    load = structure_correlations(model, X, Y)
    m = model.k if m is None else int(m)
    if not 1 <= m <= model.k:
        raise DimensionError(f"mode count must lie in [1, {model.k}], got {m}")
    return Redundancy(
        x_explained=(load.x_cross[:, :m] ** 2).mean(axis=0),
        y_explained=(load.y_cross[:, :m] ** 2).mean(axis=0),
    )
