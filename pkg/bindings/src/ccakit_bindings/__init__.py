"""Thin scripting wrapper around the ccakit core.

Everything here moves plain numpy arrays (row-major, copies allowed) in and
out of the core's public API; no numerics live in this layer.  Results come
back as native arrays/dicts, and fitted models travel as opaque handles
wrapping the core's JSON serialization, so accessor outputs are identical to
the last bit to what the core would serialize.

Options dictionaries mirror the CLI config's model/inference keys:
`variant`, `k`, `lambda_x`/`lambda_y`, `c1`/`c2`/`max_iter`/`tol`/`init`,
`n_perm`, `correction`, `split`, `side`, `seed`, plus `standardize`
(default True: z-score columns exactly like the CLI pipeline does).
"""

from __future__ import annotations

import json

import numpy as np

import ccakit
from ccakit import (
    CcaModel,
    Dataset,
    SparseParams,
    SynthSpec,
    classical_fitter,
    ridge_fitter,
    sparse_fitter,
)
from ccakit import core as _core
from ccakit import diagnostics as _diagnostics
from ccakit import inference as _inference
from ccakit import preprocess as _preprocess
from ccakit import synth as _synth

#: versioned in lockstep with the core package
__version__ = ccakit.__version__

_MODEL_KEYS = {"variant", "k", "lambda_x", "lambda_y", "c1", "c2",
               "max_iter", "tol", "init"}
_KNOWN_KEYS = _MODEL_KEYS | {"seed", "n_perm", "correction", "alpha", "split",
                             "side", "groups", "modes", "bootstrap",
                             "standardize", "n", "p", "q", "rho", "rotate",
                             "sparse_support"}


def _check_options(options: dict | None) -> dict:
    options = dict(options or {})
    unknown = sorted(set(options) - _KNOWN_KEYS)
    if unknown:
        raise ValueError(f"unknown option keys: {', '.join(unknown)}")
    return options


def _as_array(a, what: str) -> np.ndarray:
    try:
        arr = np.asarray(a, dtype=np.float64)
    except (TypeError, ValueError) as exc:
        raise ValueError(f"{what} is not a rectangular numeric array: {exc}") from None
    if arr.ndim != 2:
        raise ValueError(f"{what} must be 2-d, got {arr.ndim}-d")
    return arr


def _pair(x, y) -> tuple[np.ndarray, np.ndarray]:
    xm = _as_array(x, "x")
    ym = _as_array(y, "y")
    if xm.shape[0] != ym.shape[0]:
        raise ValueError(f"row counts differ: x has {xm.shape[0]}, y has {ym.shape[0]}")
    return xm, ym


def _datasets(xm: np.ndarray, ym: np.ndarray, standardize: bool):
    X = Dataset(tuple(f"x{j + 1}" for j in range(xm.shape[1])), xm)
    Y = Dataset(tuple(f"y{j + 1}" for j in range(ym.shape[1])), ym)
    if standardize:
        X = _preprocess.zscore_apply(X, _preprocess.zscore_fit(X))
        Y = _preprocess.zscore_apply(Y, _preprocess.zscore_fit(Y))
    return X, Y


def _make_fitter(options: dict, p: int, q: int):
    variant = options.get("variant", "classical")
    k = options.get("k")
    if variant == "classical":
        return classical_fitter(k=k)
    if variant == "ridge":
        return ridge_fitter(float(options.get("lambda_x", 0.0)),
                            float(options.get("lambda_y", 0.0)), k=k)
    if variant == "sparse":
        params = SparseParams(
            c1=float(options["c1"]), c2=float(options["c2"]),
            k=k if k is not None else min(p, q),
            max_iter=int(options.get("max_iter", 200)),
            tol=float(options.get("tol", 1e-6)),
            init=options.get("init", "svd"),
            seed=int(options.get("seed", 0)),
        )
        return sparse_fitter(params)
    raise ValueError(f"unknown model variant: {variant!r}")


class BoundModelHandle:
    """Opaque handle around the core's serialized model JSON."""

    def __init__(self, serialized: str):
        self._serialized = serialized
        self._payload = json.loads(serialized)

    @classmethod
    def _wrap(cls, model: CcaModel) -> "BoundModelHandle":
        return cls(model.to_json())

    # -- persistence ---------------------------------------------------------

    def serialized(self) -> str:
        """The core's JSON document for this model."""
        return self._serialized

    @classmethod
    def from_serialized(cls, text: str) -> "BoundModelHandle":
        return cls(text)

    def _model(self) -> CcaModel:
        return CcaModel.from_json(self._serialized)

    # -- accessors (values come from the JSON itself, bit-identical) ----------

    def x_weights(self) -> np.ndarray:
        return np.asarray(self._payload["x_weights"], dtype=np.float64)

    def y_weights(self) -> np.ndarray:
        return np.asarray(self._payload["y_weights"], dtype=np.float64)

    def correlations(self) -> np.ndarray:
        return np.asarray(self._payload["in_sample_correlations"], dtype=np.float64)

    def column_names(self) -> tuple[list[str], list[str]]:
        return list(self._payload["x_names"]), list(self._payload["y_names"])

    def variant(self) -> str:
        return self._payload["variant"]

    def details(self) -> dict:
        return self._payload.get("details", {})

    def preprocessing(self) -> dict | None:
        return self._payload.get("preprocessing")


def fit(x, y, options: dict | None = None) -> BoundModelHandle:
    """Fit the configured CCA variant on two arrays; returns a model handle."""
    options = _check_options(options)
    xm, ym = _pair(x, y)
    X, Y = _datasets(xm, ym, options.get("standardize", True))
    model = _make_fitter(options, X.n_cols, Y.n_cols)(X, Y)
    if options.get("standardize", True):
        import dataclasses

        block = {
            "standardization": {
                "left": _preprocess.zscore_fit(Dataset(X.names, xm)).to_dict(),
                "right": _preprocess.zscore_fit(Dataset(Y.names, ym)).to_dict(),
            }
        }
        model = dataclasses.replace(model, preprocessing=block)
    return BoundModelHandle._wrap(model)


def _apply_stored_standardization(handle: BoundModelHandle,
                                  xm: np.ndarray, ym: np.ndarray):
    pre = handle.preprocessing()
    if not pre or "standardization" not in pre:
        return xm, ym
    out = []
    for side, mat in (("left", xm), ("right", ym)):
        params = _preprocess.StandardizationParams.from_dict(
            pre["standardization"][side]
        )
        out.append((mat - params.means) / params.stds)
    return out[0], out[1]


def project(handle: BoundModelHandle, x, y) -> tuple[np.ndarray, np.ndarray]:
    """Canonical variates (U, V) for new rows, using the handle's stored
    standardization when present."""
    xm, ym = _pair(x, y)
    xm, ym = _apply_stored_standardization(handle, xm, ym)
    model = handle._model()
    var = _core.project(model, Dataset(model.x_names, xm), Dataset(model.y_names, ym))
    return var.U, var.V


def permutation_test(x, y, options: dict | None = None) -> dict:
    """Permutation inference; mirrors the CLI permute path seed-for-seed."""
    options = _check_options(options)
    xm, ym = _pair(x, y)
    X, Y = _datasets(xm, ym, options.get("standardize", True))
    fitter = _make_fitter(options, X.n_cols, Y.n_cols)
    null_fitter = None
    if options.get("variant") == "sparse":
        k_eff = options.get("k") or min(X.n_cols, Y.n_cols)
        if k_eff != 1:
            null_fitter = _make_fitter({**options, "k": 1}, X.n_cols, Y.n_cols)
    res = _inference.permutation_test(
        X, Y, fitter,
        n_perm=int(options.get("n_perm", 999)),
        seed=int(options.get("seed", 0)),
        correction=options.get("correction", "fdr_bh"),
        null_fitter=null_fitter,
    )
    out = res.to_dict()
    out["null_samples"] = np.asarray(res.null_samples)
    return out


def holdout_validate(x, y, options: dict | None = None) -> dict:
    """Hold-out validation with training-frozen z-scoring."""
    options = _check_options(options)
    xm, ym = _pair(x, y)
    fitter = _make_fitter(options, xm.shape[1], ym.shape[1])
    res = _inference.holdout_validate(
        xm, ym, fitter,
        split=float(options.get("split", 0.8)),
        n_perm=int(options.get("n_perm", 999)),
        seed=int(options.get("seed", 0)),
    )
    out = res.to_dict()
    out["model"] = BoundModelHandle._wrap(res.model)
    out["holdout_correlations"] = np.asarray(res.correlations)
    out["holdout_p_values"] = np.asarray(res.p_values)
    return out


def sensitivity_scan(x, y, options: dict | None = None) -> dict:
    """Variable-deletion sensitivity; set `bootstrap` for percentile CIs."""
    options = _check_options(options)
    xm, ym = _pair(x, y)
    X, Y = _datasets(xm, ym, options.get("standardize", True))
    fitter = _make_fitter(options, X.n_cols, Y.n_cols)
    kwargs = dict(side=options.get("side", "left"),
                  groups=options.get("groups"),
                  modes=options.get("modes"))
    B = int(options.get("bootstrap", 0))
    if B > 0:
        rep = _diagnostics.bootstrap_sensitivity(
            X, Y, fitter, B=B, seed=int(options.get("seed", 0)), **kwargs
        )
    else:
        rep = _diagnostics.sensitivity_scan(X, Y, fitter, **kwargs)
    out = rep.to_dict()
    out["score"] = np.asarray(rep.score)
    out["targets"] = list(rep.targets)
    return out


def generate_synthetic(options: dict) -> dict:
    """Planted-mode synthetic data as arrays plus the ground-truth dict."""
    options = _check_options(options)
    support = options.get("sparse_support")
    if support is not None:
        support = tuple((tuple(e[0]), tuple(e[1])) for e in support)
    spec = SynthSpec(
        n=int(options["n"]), p=int(options["p"]), q=int(options["q"]),
        rho=tuple(float(r) for r in options["rho"]),
        sparse_support=support,
        rotate=bool(options.get("rotate", False)),
        seed=int(options.get("seed", 0)),
    )
    X, Y, truth = _synth.generate(spec)
    return {
        "x": X.values.copy(),
        "y": Y.values.copy(),
        "x_names": list(X.names),
        "y_names": list(Y.names),
        "truth": truth.to_dict(),
    }


__all__ = [
    "BoundModelHandle",
    "__version__",
    "fit",
    "project",
    "permutation_test",
    "holdout_validate",
    "sensitivity_scan",
    "generate_synthetic",
]
