"""Resampling-based model selection and significance.

The permutation null shuffles whole rows of Y only (shuffling X too adds
nothing under exchangeability) and uses the FIRST-mode correlation of every
permuted refit as the null statistic for all observed modes: the first mode
captures the most variance a null sample can offer, so this is the strictest
comparison.  P-values use the add-one estimator and can never be zero.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ._rng import substream
from .core import CcaModel, as_matrix, cca_fit, paired_correlations, redundancy
from .errors import CcakitError, DataError
from .sparse import SparseParams, scca_fit


# --- fitters -----------------------------------------------------------------

class Fitter:
    """Callable (X, Y) -> CcaModel with a label for reports."""

    def __init__(self, fn, label: str, params: dict):
        self._fn = fn
        self.label = label
        self.params = params

    def __call__(self, X, Y) -> CcaModel:
        return self._fn(X, Y)


def classical_fitter(k: int | None = None) -> Fitter:
    return Fitter(lambda X, Y: cca_fit(X, Y, k=k), "classical", {"k": k})


def ridge_fitter(lambda_x: float, lambda_y: float, k: int | None = None) -> Fitter:
    return Fitter(
        lambda X, Y: cca_fit(X, Y, k=k, ridge=(lambda_x, lambda_y)),
        "ridge",
        {"k": k, "lambda_x": lambda_x, "lambda_y": lambda_y},
    )


def sparse_fitter(params: SparseParams) -> Fitter:
    return Fitter(lambda X, Y: scca_fit(X, Y, params), "sparse", {"params": params})


def _first_mode_statistic(model: CcaModel) -> tuple[float, bool]:
    """Null statistic of a permuted refit; flags unusable (non-converged) fits."""
    ok = bool(model.details.get("converged", [True])[0]) if model.details else True
    return float(model.correlations[0]), ok


# --- multiple-comparison correction -------------------------------------------

def correct_pvalues(p, method: str) -> np.ndarray:
    """Bonferroni or Benjamini-Hochberg step-up adjustment of p-values."""
    p = np.asarray(p, dtype=np.float64)
    if np.any(p <= 0.0) or np.any(p > 1.0):
        raise DataError("p-values must lie in (0, 1]")
    k = p.size
    if method == "none":
        return p.copy()
    if method == "bonferroni":
        return np.minimum(1.0, k * p)
    if method == "fdr_bh":
        order = np.argsort(p, kind="stable")
        adj = p[order] * k / np.arange(1, k + 1)
        adj = np.minimum.accumulate(adj[::-1])[::-1]
        out = np.empty(k)
        out[order] = np.minimum(adj, 1.0)
        return out
    raise DataError(f"unknown correction method: {method!r}")


# --- permutation test ----------------------------------------------------------

@dataclass(frozen=True)
class PermutationResult:
    """Observed correlations vs. the first-mode permutation null."""

    observed: np.ndarray       # (k,)
    null_samples: np.ndarray   # first-mode statistic per successful permutation
    p_raw: np.ndarray
    p_corrected: np.ndarray
    correction: str
    seed: int
    n_perm: int
    n_failed: int = 0

    def to_dict(self) -> dict:
        return {
            "observed": [float(v) for v in self.observed],
            "p_raw": [float(v) for v in self.p_raw],
            "p_corrected": [float(v) for v in self.p_corrected],
            "correction": self.correction,
            "seed": self.seed,
            "n_perm": self.n_perm,
            "n_failed": self.n_failed,
        }


def permutation_test(X, Y, fitter, n_perm: int = 999, seed: int = 0,
                     correction: str = "none", null_fitter=None) -> PermutationResult:
    """Empirical null by refitting on row-shuffled Y.

    Permutation i shuffles the rows of Y with the generator derived from
    (seed, i); X is untouched.  Replicates where the fitter fails (or where
    a sparse first mode does not converge) are excluded with an audit count;
    more than 10% failures abort the test.

    `null_fitter` may supply a cheaper first-mode-only refit for the
    permuted replicates (e.g. a k=1 sparse fit); it must produce the same
    first mode as `fitter`.
    """
    if n_perm < 99:
        raise DataError("n_perm must be at least 99 for a meaningful null")
    Xm, _ = as_matrix(X, "x")
    Ym, _ = as_matrix(Y, "y")
    observed = np.asarray(fitter(Xm, Ym).correlations, dtype=np.float64)
    refit = null_fitter if null_fitter is not None else fitter
    n = Xm.shape[0]
    null = []
    failed = 0
    for i in range(1, n_perm + 1):
        perm = substream(seed, i).permutation(n)
        try:
            stat, ok = _first_mode_statistic(refit(Xm, Ym[perm]))
        except CcakitError:
            ok = False
        if ok:
            null.append(stat)
        else:
            failed += 1
    if failed > 0.1 * n_perm:
        raise DataError(
            f"permutation test aborted: {failed}/{n_perm} permuted refits failed"
        )
    null = np.asarray(null)
    n_valid = null.size
    p_raw = np.array([(1 + np.sum(null >= obs)) / (1 + n_valid) for obs in observed])
    return PermutationResult(
        observed=observed,
        null_samples=null,
        p_raw=p_raw,
        p_corrected=correct_pvalues(p_raw, correction),
        correction=correction,
        seed=seed,
        n_perm=n_perm,
        n_failed=failed,
    )


# --- hold-out validation --------------------------------------------------------

@dataclass(frozen=True)
class HoldoutResult:
    """Out-of-sample mode correlations with their own permutation p-values.

    Hold-out correlations keep their sign: projections of unseen rows can
    anticorrelate, and that is evidence worth seeing.
    """

    split: float
    model: CcaModel
    correlations: np.ndarray   # (k,), hold-out
    p_values: np.ndarray       # (k,)
    n_perm: int
    seed: int
    train_rows: np.ndarray
    holdout_rows: np.ndarray

    def to_dict(self) -> dict:
        return {
            "split": self.split,
            "holdout_correlations": [float(v) for v in self.correlations],
            "holdout_p_values": [float(v) for v in self.p_values],
            "n_perm": self.n_perm,
            "seed": self.seed,
            "n_train": int(self.train_rows.size),
            "n_holdout": int(self.holdout_rows.size),
        }


def zscore_prepare(Xm: np.ndarray, Ym: np.ndarray):
    """Default hold-out preparation: z-score with training-row statistics."""

    def prepare(train_idx, hold_idx):
        out = []
        for M in (Xm, Ym):
            tr = M[train_idx]
            mu = tr.mean(axis=0)
            sd = tr.std(axis=0, ddof=1)
            if np.any(sd == 0.0):
                raise DataError("constant column in the training partition")
            out.append(((tr - mu) / sd, (M[hold_idx] - mu) / sd))
        (Xtr, Xho), (Ytr, Yho) = out
        return Xtr, Ytr, Xho, Yho

    return prepare


def holdout_validate(X, Y, fitter, split: float = 0.8, n_perm: int = 999,
                     seed: int = 0, prepare=None) -> HoldoutResult:
    """Fit on a random training partition, evaluate on the held-out rows.

    `prepare(train_idx, hold_idx)` must return the four design matrices with
    every preprocessing parameter fitted on the training rows only; the
    default z-scores with frozen training statistics.  Hold-out p-values
    come from permuting hold-out Y rows under the per-mode null.
    """
    if not 0.0 < split < 1.0:
        raise DataError("split fraction must lie in (0, 1)")
    Xm, _ = as_matrix(X, "x")
    Ym, _ = as_matrix(Y, "y")
    n = Xm.shape[0]
    perm = substream(seed, 0).permutation(n)
    n_train = int(round(split * n))
    n_train = min(max(n_train, 1), n - 1)
    train_idx, hold_idx = perm[:n_train], perm[n_train:]
    if prepare is None:
        prepare = zscore_prepare(Xm, Ym)
    Xtr, Ytr, Xho, Yho = prepare(train_idx, hold_idx)
    model = fitter(Xtr, Ytr)
    Uh = Xho @ model.x_weights
    Vh = Yho @ model.y_weights
    observed = paired_correlations(Uh, Vh)
    n_hold = Uh.shape[0]
    null = np.empty((n_perm, model.k))
    for i in range(1, n_perm + 1):
        shuffle = substream(seed, i).permutation(n_hold)
        null[i - 1] = paired_correlations(Uh, Vh[shuffle])
    p = np.array([
        (1 + np.sum(null[:, m] >= observed[m])) / (1 + n_perm)
        for m in range(model.k)
    ])
    return HoldoutResult(
        split=split,
        model=model,
        correlations=observed,
        p_values=p,
        n_perm=n_perm,
        seed=seed,
        train_rows=np.sort(train_idx),
        holdout_rows=np.sort(hold_idx),
    )


# --- mode selection --------------------------------------------------------------

@dataclass(frozen=True)
class ModeSelection:
    """Selected (or candidate) mode count plus the evidence behind it."""

    strategy: str
    selected: int
    diagnostics: dict

    def to_dict(self) -> dict:
        return {"strategy": self.strategy, "selected": self.selected,
                "diagnostics": self.diagnostics}


def select_modes(model: CcaModel, X, Y, strategy: str, alpha: float = 0.05,
                 permutation_result: PermutationResult | None = None,
                 fitter=None, n_perm: int = 999, seed: int = 0,
                 correction: str = "fdr_bh") -> ModeSelection:
    """Choose a mode count by permutation significance or redundancy drop.

    The redundancy strategy reports a *candidate* cut-off only (the mode
    just before the largest single-step relative drop); it is never applied
    automatically.
    """
    if strategy == "permutation":
        result = permutation_result
        if result is None:
            if fitter is None:
                raise DataError("permutation strategy needs a fitter or a precomputed result")
            result = permutation_test(X, Y, fitter, n_perm=n_perm, seed=seed,
                                      correction=correction)
        selected = int(np.sum(result.p_corrected < alpha))
        return ModeSelection("permutation", selected, {
            "alpha": alpha,
            "p_corrected": [float(v) for v in result.p_corrected],
            "correction": result.correction,
        })
    if strategy == "redundancy_drop":
        red = redundancy(model, X, Y)
        curve = red.mean
        if curve.size == 1:
            candidate = 1
            drops = []
        else:
            with np.errstate(divide="ignore", invalid="ignore"):
                rel = (curve[:-1] - curve[1:]) / np.where(curve[:-1] != 0, curve[:-1], np.nan)
            rel = np.nan_to_num(rel, nan=-np.inf)
            # ties resolve to the largest m before the drop
            candidate = int(curve.size - 1 - np.argmax(rel[::-1]))
            drops = [float(v) for v in rel]
        return ModeSelection("redundancy_drop", candidate, {
            "curve": [float(v) for v in curve],
            "x_explained": [float(v) for v in red.x_explained],
            "y_explained": [float(v) for v in red.y_explained],
            "relative_drops": drops,
        })
    raise DataError(f"unknown mode-selection strategy: {strategy!r}")
