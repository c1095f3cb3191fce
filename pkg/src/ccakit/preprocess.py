"""Preprocessing: missing-data handling, winsorizing, Box-Cox, deconfounding,
and z-scoring, with every fitted parameter captured so the identical
transformation can be replayed on held-out rows.

Fixed stage order (recorded in the fitted pipeline):
missing-handling -> winsorize -> Box-Cox -> deconfound -> z-score.
Winsorizing before deconfounding is a documented convention choice.
Imputation statistics, winsor bounds, Box-Cox lambdas, confound betas and
standardization constants are all frozen from the training data.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .data import Dataset
from .errors import (
    CollinearityError,
    DataError,
    DegenerateColumnError,
    DomainError,
    SchemaError,
    UnimputableColumnError,
)

BOXCOX_GRID = np.round(np.arange(-2.0, 2.0 + 1e-9, 0.1), 10)


def _check_columns(ds: Dataset, names) -> None:
    if tuple(ds.names) != tuple(names):
        raise SchemaError(
            f"column mismatch: expected {list(names)}, got {list(ds.names)}"
        )


# --- z-scoring ---------------------------------------------------------------

@dataclass(frozen=True)
class StandardizationParams:
    """Per-column centering/scaling constants (sample std, n-1 denominator)."""

    names: tuple[str, ...]
    means: np.ndarray
    stds: np.ndarray

    def to_dict(self) -> dict:
        return {
            "names": list(self.names),
            "means": [float(v) for v in self.means],
            "stds": [float(v) for v in self.stds],
        }

    @classmethod
    def from_dict(cls, d: dict) -> "StandardizationParams":
        return cls(tuple(d["names"]), np.asarray(d["means"], float), np.asarray(d["stds"], float))


def zscore_fit(ds: Dataset) -> StandardizationParams:
    """Fit per-column mean and sample std; constant columns are a hard error."""
    ds.require_complete("z-scoring")
    means = ds.values.mean(axis=0)
    stds = ds.values.std(axis=0, ddof=1) if ds.n_rows > 1 else np.zeros(ds.n_cols)
    for j, s in enumerate(stds):
        if s == 0.0:
            raise DegenerateColumnError(
                f"column {ds.names[j]!r} is constant and cannot be standardized"
            )
    return StandardizationParams(ds.names, means, stds)


def zscore_apply(ds: Dataset, params: StandardizationParams) -> Dataset:
    ds.require_complete("z-scoring")
    _check_columns(ds, params.names)
    return ds.with_values((ds.values - params.means) / params.stds)


# --- winsorizing -------------------------------------------------------------

@dataclass(frozen=True)
class WinsorSpec:
    """Percentile pair used for clamping (defaults 5/95)."""

    lower: float = 5.0
    upper: float = 95.0

    def __post_init__(self):
        if not (0.0 <= self.lower < self.upper <= 100.0):
            raise DataError(f"winsor percentiles must satisfy 0 <= lower < upper <= 100, got {self.lower}/{self.upper}")


@dataclass(frozen=True)
class WinsorBounds:
    """Fitted clamp values per column, frozen for held-out application."""

    names: tuple[str, ...]
    lower_values: np.ndarray
    upper_values: np.ndarray

    def to_dict(self) -> dict:
        return {
            "names": list(self.names),
            "lower_values": [float(v) for v in self.lower_values],
            "upper_values": [float(v) for v in self.upper_values],
        }

    @classmethod
    def from_dict(cls, d: dict) -> "WinsorBounds":
        return cls(
            tuple(d["names"]),
            np.asarray(d["lower_values"], float),
            np.asarray(d["upper_values"], float),
        )


def winsorize_fit(ds: Dataset, spec: WinsorSpec = WinsorSpec()) -> WinsorBounds:
    """Percentile values by linear interpolation at rank (n-1)*p/100."""
    ds.require_complete("winsorizing")
    lo = np.percentile(ds.values, spec.lower, axis=0, method="linear")
    hi = np.percentile(ds.values, spec.upper, axis=0, method="linear")
    return WinsorBounds(ds.names, lo, hi)


def winsorize_apply(ds: Dataset, bounds: WinsorBounds) -> Dataset:
    ds.require_complete("winsorizing")
    _check_columns(ds, bounds.names)
    return ds.with_values(np.clip(ds.values, bounds.lower_values, bounds.upper_values))


def winsorize(ds: Dataset, spec: WinsorSpec = WinsorSpec()) -> Dataset:
    """Clamp each column to its [lower, upper] percentile values."""
    return winsorize_apply(ds, winsorize_fit(ds, spec))


# --- missing-data handling ---------------------------------------------------

@dataclass(frozen=True)
class ImputationResult:
    """Complete data plus the retained-row indices and frozen fill values."""

    data: Dataset
    kept_rows: np.ndarray
    fill_values: np.ndarray


def handle_missing(ds: Dataset, row_drop_fraction: float = 0.5,
                   strategy: str = "mean") -> ImputationResult:
    """Drop rows with too many missing cells, impute the rest per column.

    Rows whose missing fraction strictly exceeds `row_drop_fraction` are
    dropped; remaining missing cells are filled with the column mean or
    median over the observed entries of the retained rows.
    """
    if not 0.0 <= row_drop_fraction <= 1.0:
        raise DataError("row_drop_fraction must lie in [0, 1]")
    if strategy not in ("mean", "median"):
        raise DataError(f"unknown imputation strategy: {strategy!r}")
    frac = ds.missing.mean(axis=1)
    kept = np.flatnonzero(frac <= row_drop_fraction)
    if kept.size == 0:
        raise DataError("every row exceeds the missing-fraction threshold")
    values = ds.values[kept].copy()
    mask = ds.missing[kept]
    fill = np.empty(ds.n_cols)
    for j in range(ds.n_cols):
        observed = values[~mask[:, j], j]
        if observed.size == 0:
            raise UnimputableColumnError(
                f"column {ds.names[j]!r} has no observed values after row dropping"
            )
        fill[j] = np.mean(observed) if strategy == "mean" else np.median(observed)
        values[mask[:, j], j] = fill[j]
    return ImputationResult(Dataset(ds.names, values), kept, fill)


def apply_missing(ds: Dataset, row_drop_fraction: float,
                  fill_values: np.ndarray) -> ImputationResult:
    """Held-out variant: same drop rule, fill values frozen from training."""
    if not 0.0 <= row_drop_fraction <= 1.0:
        raise DataError("row_drop_fraction must lie in [0, 1]")
    frac = ds.missing.mean(axis=1)
    kept = np.flatnonzero(frac <= row_drop_fraction)
    if kept.size == 0:
        raise DataError("every row exceeds the missing-fraction threshold")
    values = ds.values[kept].copy()
    mask = ds.missing[kept]
    for j in range(ds.n_cols):
        values[mask[:, j], j] = fill_values[j]
    return ImputationResult(Dataset(ds.names, values), kept, np.asarray(fill_values, float))


# --- Box-Cox -----------------------------------------------------------------

def _boxcox_transform(x: np.ndarray, lam: float) -> np.ndarray:
    if lam == 0.0:
        return np.log(x)
    return (np.power(x, lam) - 1.0) / lam


def _boxcox_llf(x: np.ndarray, lam: float) -> float:
    # profile log-likelihood of the Gaussian model for the transformed data
    y = _boxcox_transform(x, lam)
    n = x.size
    return float((lam - 1.0) * np.sum(np.log(x)) - 0.5 * n * np.log(np.var(y)))


def boxcox(values: np.ndarray, lam: float | None = None,
           column: str = "") -> tuple[np.ndarray, float]:
    """Power-transform a strictly positive column.

    y = (x^lam - 1)/lam for lam != 0, y = ln x for lam = 0.  When `lam` is
    None it is chosen by maximizing the profile log-likelihood over the grid
    -2.0, -1.9, ..., 2.0.
    """
    x = np.asarray(values, dtype=np.float64)
    bad = np.flatnonzero(~(x > 0.0))
    if bad.size:
        label = f" of column {column!r}" if column else ""
        raise DomainError(
            f"Box-Cox requires strictly positive values; row {int(bad[0]) + 1}{label} "
            f"has value {x[bad[0]]!r}"
        )
    if lam is None:
        llfs = [_boxcox_llf(x, g) for g in BOXCOX_GRID]
        lam = float(BOXCOX_GRID[int(np.argmax(llfs))])
    return _boxcox_transform(x, float(lam)), float(lam)


# --- deconfounding -----------------------------------------------------------

@dataclass(frozen=True)
class ConfoundModel:
    """OLS betas (intercept first) of each target column on the confounds."""

    confound_names: tuple[str, ...]
    target_names: tuple[str, ...]
    betas: np.ndarray  # (n_confounds + 1, n_targets)

    def to_dict(self) -> dict:
        return {
            "confound_names": list(self.confound_names),
            "target_names": list(self.target_names),
            "betas": [[float(v) for v in row] for row in self.betas],
        }

    @classmethod
    def from_dict(cls, d: dict) -> "ConfoundModel":
        return cls(
            tuple(d["confound_names"]),
            tuple(d["target_names"]),
            np.asarray(d["betas"], float),
        )


def _confound_design(confounds: Dataset) -> np.ndarray:
    confounds.require_complete("deconfounding")
    return np.column_stack([np.ones(confounds.n_rows), confounds.values])


def deconfound_fit(ds: Dataset, confounds: Dataset) -> ConfoundModel:
    """Per-column OLS of the data on [intercept | confounds]."""
    ds.require_complete("deconfounding")
    if ds.n_rows != confounds.n_rows:
        raise DataError("data and confounds must have the same number of rows")
    design = _confound_design(confounds)
    if np.linalg.matrix_rank(design) < design.shape[1]:
        raise CollinearityError("confound matrix (with intercept) is rank-deficient")
    betas, *_ = np.linalg.lstsq(design, ds.values, rcond=None)
    return ConfoundModel(confounds.names, ds.names, betas)


def deconfound_apply(ds: Dataset, confounds: Dataset, model: ConfoundModel) -> Dataset:
    """Residualize the data against the confounds with frozen training betas."""
    ds.require_complete("deconfounding")
    _check_columns(ds, model.target_names)
    _check_columns(confounds, model.confound_names)
    if ds.n_rows != confounds.n_rows:
        raise DataError("data and confounds must have the same number of rows")
    design = _confound_design(confounds)
    return ds.with_values(ds.values - design @ model.betas)


# --- recorded pipeline -------------------------------------------------------

@dataclass(frozen=True)
class PipelinePlan:
    """Which preprocessing stages to run and with what settings."""

    impute: str | None = None          # "mean" | "median" | None
    row_drop_fraction: float = 0.5
    winsor: WinsorSpec | None = None
    boxcox: bool = False
    deconfound: bool = False

    def to_dict(self) -> dict:
        return {
            "impute": self.impute,
            "row_drop_fraction": self.row_drop_fraction,
            "winsorize": None if self.winsor is None else [self.winsor.lower, self.winsor.upper],
            "boxcox": self.boxcox,
            "deconfound": self.deconfound,
        }


@dataclass(frozen=True)
class FittedPipeline:
    """All parameters needed to replay the training transformation."""

    plan: PipelinePlan
    names: tuple[str, ...]
    fill_values: np.ndarray | None
    winsor_bounds: WinsorBounds | None
    boxcox_lambdas: tuple[float, ...] | None
    confound_model: ConfoundModel | None
    standardization: StandardizationParams
    kept_rows: np.ndarray = field(default=None, compare=False)

    def transform(self, ds: Dataset, confounds: Dataset | None = None) -> tuple[Dataset, np.ndarray]:
        """Replay the fitted stages; returns (data, retained-row indices)."""
        _check_columns(ds, self.names)
        kept = np.arange(ds.n_rows)
        if self.plan.impute is not None:
            res = apply_missing(ds, self.plan.row_drop_fraction, self.fill_values)
            ds, kept = res.data, res.kept_rows
        else:
            ds.require_complete("the fitted pipeline")
        if self.winsor_bounds is not None:
            ds = winsorize_apply(ds, self.winsor_bounds)
        if self.boxcox_lambdas is not None:
            cols = [
                boxcox(ds.values[:, j], self.boxcox_lambdas[j], column=ds.names[j])[0]
                for j in range(ds.n_cols)
            ]
            ds = ds.with_values(np.column_stack(cols))
        if self.confound_model is not None:
            if confounds is None:
                raise DataError("this pipeline was fitted with confounds; none supplied")
            ds = deconfound_apply(ds, confounds.take_rows(kept), self.confound_model)
        return zscore_apply(ds, self.standardization), kept

    def to_dict(self) -> dict:
        return {
            "plan": self.plan.to_dict(),
            "names": list(self.names),
            "fill_values": None if self.fill_values is None else [float(v) for v in self.fill_values],
            "winsor_bounds": None if self.winsor_bounds is None else self.winsor_bounds.to_dict(),
            "boxcox_lambdas": None if self.boxcox_lambdas is None else list(self.boxcox_lambdas),
            "confound_model": None if self.confound_model is None else self.confound_model.to_dict(),
            "standardization": self.standardization.to_dict(),
        }


def fit_pipeline(ds: Dataset, plan: PipelinePlan,
                 confounds: Dataset | None = None) -> tuple[FittedPipeline, Dataset, np.ndarray]:
    """Fit the fixed-order pipeline on training data.

    Returns the fitted pipeline, the transformed training data, and the
    retained-row indices.  Replaying `transform` on the same data reproduces
    the returned design matrix exactly.
    """
    names = ds.names
    kept = np.arange(ds.n_rows)
    fill = None
    if plan.impute is not None:
        res = handle_missing(ds, plan.row_drop_fraction, plan.impute)
        ds, kept, fill = res.data, res.kept_rows, res.fill_values
    else:
        ds.require_complete("pipeline fitting (enable imputation to handle missing data)")
    bounds = None
    if plan.winsor is not None:
        bounds = winsorize_fit(ds, plan.winsor)
        ds = winsorize_apply(ds, bounds)
    lambdas = None
    if plan.boxcox:
        cols, lams = [], []
        for j in range(ds.n_cols):
            y, lam = boxcox(ds.values[:, j], None, column=ds.names[j])
            cols.append(y)
            lams.append(lam)
        ds = ds.with_values(np.column_stack(cols))
        lambdas = tuple(lams)
    cmodel = None
    if plan.deconfound:
        if confounds is None:
            raise DataError("deconfounding requested but no confound data supplied")
        cmodel = deconfound_fit(ds, confounds.take_rows(kept))
        ds = deconfound_apply(ds, confounds.take_rows(kept), cmodel)
    params = zscore_fit(ds)
    fitted = FittedPipeline(plan, names, fill, bounds, lambdas, cmodel, params, kept)
    return fitted, zscore_apply(ds, params), kept
