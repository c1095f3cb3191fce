"""ccakit: doubly-multivariate canonical correlation toolkit.

Fits classical, ridge-regularized and sparse CCA on paired tabular data,
with the surrounding machinery a defensible analysis needs: parameter-
frozen preprocessing, PCA reduction, permutation and hold-out inference,
mode selection, variable-deletion sensitivity with bootstrap intervals,
and ICA post-processing of the canonical variates.
"""

__version__ = "0.1.0"

from ._backend import kernel_backend
from .core import (
    CcaModel,
    Loadings,
    Redundancy,
    Variates,
    cca_fit,
    project,
    redundancy,
    structure_correlations,
)
from .data import Dataset, VariableSplit, load_csv, save_csv, split
from .diagnostics import (
    IcaComponents,
    SensitivityReport,
    bootstrap_sensitivity,
    ica_postprocess,
    match_modes,
    sensitivity_scan,
)
from .inference import (
    HoldoutResult,
    ModeSelection,
    PermutationResult,
    classical_fitter,
    correct_pvalues,
    holdout_validate,
    permutation_test,
    ridge_fitter,
    select_modes,
    sparse_fitter,
)
from .preprocess import (
    ConfoundModel,
    FittedPipeline,
    PipelinePlan,
    StandardizationParams,
    WinsorSpec,
    boxcox,
    deconfound_apply,
    deconfound_fit,
    fit_pipeline,
    handle_missing,
    winsorize,
    zscore_apply,
    zscore_fit,
)
from .reduction import PcaReduction, pca_apply, pca_fit
from .sparse import SparseParams, l1_project, scca_fit, scca_permutation_objective, soft_threshold
from .synth import PlantedTruth, SynthSpec, generate

__all__ = [
    "__version__",
    "CcaModel", "Loadings", "Redundancy", "Variates",
    "cca_fit", "project", "redundancy", "structure_correlations",
    "Dataset", "VariableSplit", "load_csv", "save_csv", "split",
    "IcaComponents", "SensitivityReport", "bootstrap_sensitivity",
    "ica_postprocess", "match_modes", "sensitivity_scan",
    "HoldoutResult", "ModeSelection", "PermutationResult",
    "classical_fitter", "correct_pvalues", "holdout_validate",
    "permutation_test", "ridge_fitter", "select_modes", "sparse_fitter",
    "ConfoundModel", "FittedPipeline", "PipelinePlan", "StandardizationParams",
    "WinsorSpec", "boxcox", "deconfound_apply", "deconfound_fit",
    "fit_pipeline", "handle_missing", "winsorize", "zscore_apply", "zscore_fit",
    "PcaReduction", "pca_apply", "pca_fit",
    "SparseParams", "l1_project", "scca_fit", "scca_permutation_objective",
    "soft_threshold",
    "PlantedTruth", "SynthSpec", "generate",
    "kernel_backend",
]
