"""Variable-deletion sensitivity with bootstrap uncertainty, and ICA
post-processing of the canonical variates.

A variable matters to a mode when refitting without it produces variates
that no longer track the originals.  Perturbed modes are aligned to the
original ones by greedy |correlation| matching before scoring, and both
sides' scores are reported (their mean is the headline) because deleting a
column perturbs its own side's variates more than the untouched side's.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ._rng import substream
from .core import Variates, as_matrix, project
from .data import Dataset
from .errors import CcakitError, DataError, DimensionError


# --- mode alignment -----------------------------------------------------------

@dataclass(frozen=True)
class ModeMatch:
    """One-to-one assignment original mode -> perturbed mode, with signs."""

    permutation: tuple[int, ...]  # perturbed index matched to original i
    signs: tuple[int, ...]


def _safe_corr(a: np.ndarray, b: np.ndarray) -> float:
    ac = a - a.mean()
    bc = b - b.mean()
    den = np.sqrt((ac @ ac) * (bc @ bc))
    if den == 0.0:
        return 0.0
    return float((ac @ bc) / den)


def match_modes(original: Variates, perturbed: Variates) -> ModeMatch:
    """Greedy |correlation| matching of perturbed modes onto original ones.

    The score of a pair averages the left- and right-side |correlations|;
    the sign makes the matched correlation positive.  Greedy is deterministic
    and adequate for small perturbations; the permutation is reported so
    pathological matchings can be audited.
    """
    if original.n != perturbed.n:
        raise DataError("variates must share the observation count")
    k = min(original.k, perturbed.k)
    score = np.zeros((k, perturbed.k))
    signed = np.zeros((k, perturbed.k))
    for i in range(k):
        for j in range(perturbed.k):
            cu = _safe_corr(original.U[:, i], perturbed.U[:, j])
            cv = _safe_corr(original.V[:, i], perturbed.V[:, j])
            score[i, j] = (abs(cu) + abs(cv)) / 2.0
            signed[i, j] = cu + cv
    perm = [-1] * k
    signs = [1] * k
    free_rows = set(range(k))
    free_cols = set(range(perturbed.k))
    for _ in range(k):
        best = None
        for i in sorted(free_rows):
            for j in sorted(free_cols):
                if best is None or score[i, j] > score[best]:
                    best = (i, j)
        i, j = best
        perm[i] = j
        signs[i] = 1 if signed[i, j] >= 0 else -1
        free_rows.remove(i)
        free_cols.remove(j)
    return ModeMatch(tuple(perm), tuple(signs))


# --- sensitivity ----------------------------------------------------------------

@dataclass(frozen=True)
class SensitivityReport:
    """Per-target, per-mode agreement between original and perturbed variates.

    `score` is the headline (mean of the untouched-side and perturbed-side
    correlations); low values flag variables the solution depends on.
    """

    side: str
    targets: tuple[str, ...]
    modes: int
    score: np.ndarray              # (targets, modes)
    score_untouched: np.ndarray
    score_perturbed: np.ndarray
    ci_lower: np.ndarray | None = None   # percentile bootstrap, headline score
    ci_upper: np.ndarray | None = None
    n_bootstrap: int = 0
    seed: int | None = None
    n_dropped_resamples: int = 0
    selection_frequency: dict | None = None  # sparse fitters only

    def to_rows(self) -> list[dict]:
        rows = []
        for t, target in enumerate(self.targets):
            for m in range(self.modes):
                row = {
                    "target": target,
                    "mode": m + 1,
                    "score": float(self.score[t, m]),
                    "score_untouched_side": float(self.score_untouched[t, m]),
                    "score_perturbed_side": float(self.score_perturbed[t, m]),
                }
                if self.ci_lower is not None:
                    row["ci_lower"] = float(self.ci_lower[t, m])
                    row["ci_upper"] = float(self.ci_upper[t, m])
                rows.append(row)
        return rows

    def to_dict(self) -> dict:
        return {
            "side": self.side,
            "modes": self.modes,
            "n_bootstrap": self.n_bootstrap,
            "seed": self.seed,
            "n_dropped_resamples": self.n_dropped_resamples,
            "rows": self.to_rows(),
            "selection_frequency": self.selection_frequency,
        }


def _as_dataset(data, prefix: str) -> Dataset:
    if isinstance(data, Dataset):
        return data
    mat, names = as_matrix(data, prefix)
    return Dataset(names, mat)


def _deletion_targets(ds: Dataset, groups: dict | None) -> list[tuple[str, tuple[str, ...]]]:
    if groups is None:
        return [(name, (name,)) for name in ds.names]
    targets = []
    for gname, cols in groups.items():
        cols = tuple(cols)
        for c in cols:
            ds.column_index(c)
        if len(cols) == ds.n_cols:
            raise DataError(f"group {gname!r} would delete every column on its side")
        targets.append((str(gname), cols))
    return targets


def _scan_scores(X: Dataset, Y: Dataset, fitter, side: str,
                 targets, modes: int | None):
    base_model = fitter(X, Y)
    base_var = project(base_model, X, Y)
    k = base_model.k if modes is None else min(int(modes), base_model.k)
    rows_untouched = []
    rows_perturbed = []
    for _, cols in targets:
        if side == "left":
            Xp, Yp = X.drop(cols), Y
        else:
            Xp, Yp = X, Y.drop(cols)
        pert_model = fitter(Xp, Yp)
        pert_var = project(pert_model, Xp, Yp)
        match = match_modes(base_var, pert_var)
        # a deletion can shrink the side below the base mode count
        k_t = min(k, len(match.permutation))
        row_u = np.empty(k_t)
        row_p = np.empty(k_t)
        for m in range(k_t):
            j, s = match.permutation[m], match.signs[m]
            if side == "left":
                row_u[m] = _safe_corr(base_var.V[:, m], s * pert_var.V[:, j])
                row_p[m] = _safe_corr(base_var.U[:, m], s * pert_var.U[:, j])
            else:
                row_u[m] = _safe_corr(base_var.U[:, m], s * pert_var.U[:, j])
                row_p[m] = _safe_corr(base_var.V[:, m], s * pert_var.V[:, j])
        rows_untouched.append(row_u)
        rows_perturbed.append(row_p)
    k = min(k, min(row.size for row in rows_untouched))
    untouched = np.vstack([row[:k] for row in rows_untouched])
    perturbed_side = np.vstack([row[:k] for row in rows_perturbed])
    return base_model, untouched, perturbed_side, k


def sensitivity_scan(X, Y, fitter, side: str = "left",
                     groups: dict | None = None,
                     modes: int | None = None) -> SensitivityReport:
    """Delete each variable (or named group) on one side, refit, and score
    how well the perturbed variates still track the originals."""
    if side not in ("left", "right"):
        raise DataError(f"side must be 'left' or 'right', got {side!r}")
    X = _as_dataset(X, "x")
    Y = _as_dataset(Y, "y")
    victim = X if side == "left" else Y
    if victim.n_cols < 2 and groups is None:
        raise DataError("cannot delete the only column on a side")
    targets = _deletion_targets(victim, groups)
    _, untouched, pert, k = _scan_scores(X, Y, fitter, side, targets, modes)
    return SensitivityReport(
        side=side,
        targets=tuple(name for name, _ in targets),
        modes=k,
        score=(untouched + pert) / 2.0,
        score_untouched=untouched,
        score_perturbed=pert,
    )


def _restandardized(values: np.ndarray) -> np.ndarray | None:
    mu = values.mean(axis=0)
    sd = values.std(axis=0, ddof=1)
    if np.any(sd == 0.0):
        return None
    return (values - mu) / sd


def bootstrap_sensitivity(X, Y, fitter, side: str = "left",
                          groups: dict | None = None, B: int = 100,
                          seed: int = 0, modes: int | None = None) -> SensitivityReport:
    """Sensitivity scan with percentile bootstrap intervals.

    Rows are resampled with replacement (paired across the two sets) and
    re-standardized; resamples with a degenerate column or a failing fit are
    dropped and counted.  For sparse fitters the per-variable selection
    frequency over resamples is reported as a stability measure.
    """
    if B < 100:
        raise DataError("bootstrap needs at least 100 resamples")
    point = sensitivity_scan(X, Y, fitter, side=side, groups=groups, modes=modes)
    X = _as_dataset(X, "x")
    Y = _as_dataset(Y, "y")
    victim = X if side == "left" else Y
    targets = _deletion_targets(victim, groups)
    n = X.n_rows
    samples = []
    dropped = 0
    sel_u = None
    sel_v = None
    n_sparse = 0
    for b in range(1, B + 1):
        idx = substream(seed, b).integers(0, n, size=n)
        xb = _restandardized(X.values[idx])
        yb = _restandardized(Y.values[idx])
        if xb is None or yb is None:
            dropped += 1
            continue
        Xb = Dataset(X.names, xb)
        Yb = Dataset(Y.names, yb)
        try:
            base_model, untouched, pert, _ = _scan_scores(
                Xb, Yb, fitter, side, targets, point.modes
            )
        except CcakitError:
            dropped += 1
            continue
        samples.append((untouched + pert) / 2.0)
        if base_model.variant == "sparse":
            if sel_u is None:
                sel_u = np.zeros(base_model.p)
                sel_v = np.zeros(base_model.q)
            sel_u += (np.abs(base_model.x_weights) > 0).any(axis=1)
            sel_v += (np.abs(base_model.y_weights) > 0).any(axis=1)
            n_sparse += 1
    if not samples:
        raise DataError("every bootstrap resample failed")
    stack = np.stack(samples)
    selection = None
    if sel_u is not None:
        selection = {
            "left": {name: float(f) for name, f in zip(X.names, sel_u / n_sparse)},
            "right": {name: float(f) for name, f in zip(Y.names, sel_v / n_sparse)},
        }
    return SensitivityReport(
        side=side,
        targets=point.targets,
        modes=point.modes,
        score=point.score,
        score_untouched=point.score_untouched,
        score_perturbed=point.score_perturbed,
        ci_lower=np.percentile(stack, 2.5, axis=0),
        ci_upper=np.percentile(stack, 97.5, axis=0),
        n_bootstrap=B,
        seed=seed,
        n_dropped_resamples=dropped,
        selection_frequency=selection,
    )


# --- ICA post-processing ---------------------------------------------------------

@dataclass(frozen=True)
class IcaComponents:
    """Independent sources extracted from the concatenated variates."""

    sources: np.ndarray   # (n, r), unit sample variance
    mixing: np.ndarray    # (2k, r)
    converged: bool
    iterations: int


def _sym_decorrelate(W: np.ndarray) -> np.ndarray:
    evals, evecs = np.linalg.eigh(W @ W.T)
    return (evecs / np.sqrt(evals)) @ evecs.T @ W


def ica_postprocess(U: np.ndarray, V: np.ndarray, r: int, seed: int = 0,
                    max_iter: int = 500, tol: float = 1e-6) -> IcaComponents:
    """Fixed-point ICA (tanh contrast, symmetric decorrelation) on [U | V].

    The canonical solution is only determined up to rotation; running ICA on
    the concatenated variates (n x 2k) disambiguates it into statistically
    independent directions.  On Gaussian variates the rotation is not
    identifiable: the convergence flag goes false but the decorrelation
    invariant still holds.
    """
    U = np.asarray(U, dtype=np.float64)
    V = np.asarray(V, dtype=np.float64)
    if U.ndim != 2 or V.ndim != 2 or U.shape[0] != V.shape[0]:
        raise DataError("U and V must be 2-d with equal row counts")
    C = np.hstack([U, V])
    n, width = C.shape
    if not 1 <= r <= width:
        raise DimensionError(f"component count must lie in [1, {width}], got {r}")
    if n <= width:
        raise DimensionError("need more observations than concatenated variates")
    Cc = C - C.mean(axis=0)
    cov = Cc.T @ Cc / (n - 1)
    evals, evecs = np.linalg.eigh(cov)
    order = np.argsort(evals)[::-1]
    evals, evecs = evals[order], evecs[:, order]
    if evals[r - 1] < 1e-10 * evals[0]:
        raise DataError("whitening failed: concatenated variates are rank-deficient")
    whiten = evecs[:, :r] / np.sqrt(evals[:r])   # (2k, r)
    Z = Cc @ whiten                              # (n, r), identity covariance

    W = _sym_decorrelate(substream(seed, 0).standard_normal((r, r)))
    converged = False
    iterations = 0
    for it in range(1, max_iter + 1):
        WZ = Z @ W.T                 # (n, r)
        G = np.tanh(WZ)
        G_prime = 1.0 - G**2
        W_new = _sym_decorrelate(G.T @ Z / n - (G_prime.mean(axis=0)[:, None] * W))
        iterations = it
        drift = float(np.max(np.abs(np.abs(np.sum(W_new * W, axis=1)) - 1.0)))
        W = W_new
        if drift < tol:
            converged = True
            break

    sources = Z @ W.T
    sources = sources / sources.std(axis=0, ddof=1)
    mixing, *_ = np.linalg.lstsq(sources, Cc, rcond=None)
    return IcaComponents(sources=sources, mixing=mixing.T, converged=converged,
                         iterations=iterations)
