"""Sparse CCA by penalized rank-1 decomposition of the cross-product matrix.

Each mode alternates L1-budgeted unit-vector updates on Z = X'Y, then
deflates Z by the extracted rank-1 term.  The within-set covariances are
replaced by the identity (the usual penalized-decomposition simplification),
so with inactive budgets the solution is the SVD of X'Y, *not* classical
CCA — users comparing variants should expect that discrepancy.

Modes are reported in extraction order and never re-sorted: with sparsity
the explained variance need not decrease over modes, and variates of
distinct modes may correlate.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, replace

import numpy as np

from . import _backend
from ._rng import substream
from .core import CcaModel, apply_sign_convention, as_matrix, paired_correlations
from .errors import ConvergenceWarning, DataError, DimensionError, ParameterError

soft_threshold = _backend.soft_threshold
l1_project = _backend.l1_unit_project
kernel_backend = _backend.kernel_backend


@dataclass(frozen=True)
class SparseParams:
    """L1 budgets and solver controls for the sparse variant.

    Budgets are feasible for a unit-L2 vector only within [1, sqrt(dim)]:
    below 1 the constraints are contradictory, above sqrt(dim) inactive.
    """

    c1: float
    c2: float
    k: int = 1
    max_iter: int = 200
    tol: float = 1e-6
    init: str = "svd"          # "svd" | "random"
    seed: int = 0              # used by random init only

    def __post_init__(self):
        if self.k < 1:
            raise ParameterError("mode count k must be at least 1")
        if self.max_iter < 1:
            raise ParameterError("max_iter must be at least 1")
        if self.tol <= 0:
            raise ParameterError("tol must be positive")
        if self.init not in ("svd", "random"):
            raise ParameterError(f"unknown init scheme: {self.init!r}")


def _check_budget(c: float, dim: int, label: str) -> None:
    if not 1.0 <= c <= np.sqrt(dim) + 1e-9:
        raise ParameterError(
            f"{label}={c} outside the feasible range [1, sqrt({dim})] "
            f"= [1, {np.sqrt(dim):.6g}]"
        )


def scca_fit(X, Y, params: SparseParams,
             preprocessing: dict | None = None,
             kernel=None) -> CcaModel:
    """Fit sparse CCA; X and Y should be standardized but n may be < p, q.

    Per-mode convergence status, iteration counts, nonzero counts and the
    objective trajectory are recorded in the model's `details`.  A mode
    hitting the iteration cap raises a ConvergenceWarning, never an error.
    """
    kern = kernel or _backend.rank_one_pmd
    Xm, x_names = as_matrix(X, "x")
    Ym, y_names = as_matrix(Y, "y")
    if Xm.shape[0] != Ym.shape[0]:
        raise DataError("X and Y row counts differ")
    p, q = Xm.shape[1], Ym.shape[1]
    _check_budget(params.c1, p, "c1")
    _check_budget(params.c2, q, "c2")
    if params.k > min(p, q):
        raise DimensionError(f"k must not exceed min(p, q) = {min(p, q)}, got {params.k}")

    Z = Xm.T @ Ym
    us, vs, corrs = [], [], []
    details = {"n_iter": [], "converged": [], "objective": [], "d": [],
               "nnz_u": [], "nnz_v": [], "kernel_backend": _backend.BACKEND_NAME
               if kernel is None else getattr(kernel, "__module__", "custom")}
    for mode in range(params.k):
        if not np.any(Z):
            raise DimensionError(
                f"cross-product matrix exhausted after {mode} modes; lower k"
            )
        if params.init == "svd":
            v0 = np.linalg.svd(Z, full_matrices=False)[2][0]
        else:
            v0 = substream(params.seed, mode).standard_normal(q)
        u, v, n_iter, converged, objective = kern(
            Z, v0, params.c1, params.c2, params.max_iter, params.tol
        )
        if not converged:
            warnings.warn(
                f"sparse mode {mode + 1} did not converge within "
                f"{params.max_iter} iterations",
                ConvergenceWarning,
                stacklevel=2,
            )
        d = float(u @ Z @ v)
        Z = Z - d * np.outer(u, v)
        u, v = apply_sign_convention(u[:, None], v[:, None])
        us.append(u[:, 0])
        vs.append(v[:, 0])
        corrs.append(float(paired_correlations(Xm @ u, Ym @ v)[0]))
        details["n_iter"].append(int(n_iter))
        details["converged"].append(bool(converged))
        details["objective"].append([float(o) for o in objective])
        details["d"].append(d)
        details["nnz_u"].append(int(np.count_nonzero(u)))
        details["nnz_v"].append(int(np.count_nonzero(v)))

    return CcaModel(
        x_names=x_names,
        y_names=y_names,
        x_weights=np.column_stack(us),
        y_weights=np.column_stack(vs),
        correlations=np.asarray(corrs),  # extraction order, deliberately unsorted
        variant="sparse",
        variant_params={"c1": params.c1, "c2": params.c2, "max_iter": params.max_iter,
                        "tol": params.tol, "init": params.init, "seed": params.seed},
        preprocessing=preprocessing,
        details=details,
    )


def scca_permutation_objective(X, Y, params: SparseParams) -> float:
    """First-mode training correlation: the permutation-test statistic."""
    return float(scca_fit(X, Y, replace(params, k=1)).correlations[0])
