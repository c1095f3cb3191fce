"""Config-driven pipeline runner.

Fixed stage order: ingest -> preprocess -> filter -> reduce -> fit ->
inference -> diagnostics -> report.  Every run echoes its resolved config
and seed into report.json, and two runs with identical config and inputs
produce byte-identical reports (stage timings therefore go to stderr, not
into the report).

Exit codes: 0 success, 2 config error, 3 data error, 4 numerical error.
"""

from __future__ import annotations

import argparse
import csv as _csv
import dataclasses
import json
import os
import sys
import time
from dataclasses import dataclass, field

import numpy as np

from . import __version__
from ._backend import kernel_backend
from .core import pearson_columns, project
from .data import Dataset, VariableSplit, load_csv, save_csv, split
from .diagnostics import bootstrap_sensitivity, sensitivity_scan
from .errors import (
    CcakitError,
    ConfigError,
    DataError,
    NumericalError,
)
from .inference import (
    classical_fitter,
    holdout_validate,
    permutation_test,
    ridge_fitter,
    select_modes,
    sparse_fitter,
)
from .preprocess import PipelinePlan, WinsorSpec, fit_pipeline, handle_missing
from .reduction import pca_apply, pca_fit
from .sparse import SparseParams
from .synth import SynthSpec, generate

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_DATA = 3
EXIT_NUMERICAL = 4


def _log(stage: str, seconds: float | None = None) -> None:
    if seconds is None:
        print(f"[ccakit] stage={stage}", file=sys.stderr)
    else:
        print(f"[ccakit] stage={stage} seconds={seconds:.3f}", file=sys.stderr)


# --- configuration -------------------------------------------------------------

CONFIG_VERSION = "1"

#: Allowed keys and their defaults; None means "no default, may stay absent".
CONFIG_SCHEMA = {
    "config_version": CONFIG_VERSION,
    "input": {"csv": None, "x_csv": None, "y_csv": None, "missing_token": ""},
    "split": {"left": None, "right": None},
    "preprocess": {
        "impute": None,
        "row_drop_fraction": 0.5,
        "winsorize": None,
        "boxcox": False,
        "confounds_csv": None,
        "deconfound_sides": ["left", "right"],
    },
    "filter": {"top_n": None},
    "reduce": {"left": None, "right": None},
    "model": {
        "variant": "classical",
        "k": None,
        "lambda_x": 0.0,
        "lambda_y": 0.0,
        "c1": None,
        "c2": None,
        "max_iter": 200,
        "tol": 1e-6,
        "init": "svd",
    },
    "inference": {
        "n_perm": 999,
        "alpha": 0.05,
        "correction": "fdr_bh",
        "holdout_split": None,
        "dump_null": True,
    },
    "diagnostics": {
        "sensitivity": False,
        "side": "left",
        "groups_file": None,
        "bootstrap": 0,
    },
    "seed": None,
    "output_dir": "ccakit_out",
}

_REDUCE_KEYS = {"components", "variance_fraction"}


def _validate_section(given: dict, schema: dict, path: str) -> dict:
    out = {}
    for key in given:
        if key not in schema:
            raise ConfigError(f"unknown config key: {path}{key}")
    for key, default in schema.items():
        if isinstance(default, dict):
            sub = given.get(key, {})
            if not isinstance(sub, dict):
                raise ConfigError(f"config key {path}{key} must be an object")
            out[key] = _validate_section(sub, default, f"{path}{key}.")
        else:
            out[key] = given.get(key, default)
    return out


def resolve_config(raw: dict) -> dict:
    """Merge a raw config dict with defaults; reject unknown keys."""
    cfg = _validate_section(raw, CONFIG_SCHEMA, "")
    if str(cfg["config_version"]) != CONFIG_VERSION:
        raise ConfigError(
            f"unsupported config_version {cfg['config_version']!r}; "
            f"this build understands version {CONFIG_VERSION!r}"
        )
    for side in ("left", "right"):
        target = cfg["reduce"][side]
        if target is not None:
            if not isinstance(target, dict) or not set(target) <= _REDUCE_KEYS or len(target) != 1:
                raise ConfigError(
                    f"config key reduce.{side} must be "
                    '{"components": m} or {"variance_fraction": f}'
                )
    if cfg["seed"] is None:
        raise ConfigError("config key seed is required (runs must be reproducible)")
    if not isinstance(cfg["seed"], int) or cfg["seed"] < 0:
        raise ConfigError("config key seed must be a non-negative integer")
    if cfg["model"]["variant"] not in ("classical", "ridge", "sparse"):
        raise ConfigError(
            f"config key model.variant must be classical, ridge or sparse, "
            f"got {cfg['model']['variant']!r}"
        )
    if cfg["model"]["variant"] == "sparse":
        if cfg["model"]["c1"] is None or cfg["model"]["c2"] is None:
            raise ConfigError("sparse model requires model.c1 and model.c2")
    one_file = cfg["input"]["csv"] is not None
    two_file = cfg["input"]["x_csv"] is not None or cfg["input"]["y_csv"] is not None
    if one_file == two_file:
        raise ConfigError("provide either input.csv (with split) or input.x_csv + input.y_csv")
    if one_file and (cfg["split"]["left"] is None or cfg["split"]["right"] is None):
        raise ConfigError("single-file input requires split.left and split.right")
    if two_file and (cfg["input"]["x_csv"] is None or cfg["input"]["y_csv"] is None):
        raise ConfigError("two-file input requires both input.x_csv and input.y_csv")
    if cfg["preprocess"]["impute"] not in (None, "mean", "median"):
        raise ConfigError("preprocess.impute must be null, 'mean' or 'median'")
    wz = cfg["preprocess"]["winsorize"]
    if wz is not None and (not isinstance(wz, list) or len(wz) != 2):
        raise ConfigError("preprocess.winsorize must be null or [lower, upper]")
    for side in cfg["preprocess"]["deconfound_sides"]:
        if side not in ("left", "right"):
            raise ConfigError("preprocess.deconfound_sides entries must be 'left'/'right'")
    if cfg["diagnostics"]["side"] not in ("left", "right"):
        raise ConfigError("diagnostics.side must be 'left' or 'right'")
    return cfg


def load_config(path: str, overrides: dict | None = None) -> dict:
    try:
        with open(path, encoding="utf-8") as fh:
            raw = json.load(fh)
    except FileNotFoundError:
        raise ConfigError(f"config file not found: {path}") from None
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config file {path} is not valid JSON: {exc}") from None
    if not isinstance(raw, dict):
        raise ConfigError("config root must be a JSON object")
    for dotted, value in (overrides or {}).items():
        if value is None:
            continue
        node = raw
        parts = dotted.split(".")
        for part in parts[:-1]:
            node = node.setdefault(part, {})
        node[parts[-1]] = value
    return resolve_config(raw)


# --- design assembly -------------------------------------------------------------

@dataclass
class DesignArtifacts:
    """Everything fitted while assembling the design matrices."""

    kept_rows: np.ndarray
    imputation: dict | None
    fill_x: np.ndarray | None
    fill_y: np.ndarray | None
    selected_x: tuple[str, ...] | None
    selected_y: tuple[str, ...] | None
    pipe_x: object = None
    pipe_y: object = None
    pca_x: object = None
    pca_y: object = None
    pipe_pca_x: object = None   # z-scoring of the PCA scores
    pipe_pca_y: object = None
    pre_reduction_x: Dataset = None   # standardized, before PCA (for loadings)
    pre_reduction_y: Dataset = None

    def to_dict(self) -> dict:
        return {
            "rows_kept": [int(i) for i in self.kept_rows],
            "imputation": self.imputation,
            "filter": None if self.selected_x is None else {
                "left": list(self.selected_x),
                "right": list(self.selected_y),
            },
            "pipelines": {
                "left": self.pipe_x.to_dict(),
                "right": self.pipe_y.to_dict(),
            },
            "reduction": {
                "left": None if self.pca_x is None else self.pca_x.to_dict(),
                "right": None if self.pca_y is None else self.pca_y.to_dict(),
            },
        }


def _mad(values: np.ndarray) -> np.ndarray:
    med = np.median(values, axis=0)
    return np.median(np.abs(values - med), axis=0)


def _joint_complete(x_raw: Dataset, y_raw: Dataset, confounds: Dataset | None,
                    cfg: dict, rows: np.ndarray | None):
    """Resolve missingness jointly so both sides keep identical rows."""
    if rows is not None:
        x_raw = x_raw.take_rows(rows)
        y_raw = y_raw.take_rows(rows)
        confounds = confounds.take_rows(rows) if confounds is not None else None
        base_rows = np.asarray(rows)
    else:
        base_rows = np.arange(x_raw.n_rows)
    impute = cfg["preprocess"]["impute"]
    if impute is None:
        for side, ds in (("left", x_raw), ("right", y_raw)):
            if ds.has_missing():
                raise DataError(
                    f"{side} set contains missing values; enable preprocess.impute"
                )
        return x_raw, y_raw, confounds, base_rows, None, None
    frac_limit = cfg["preprocess"]["row_drop_fraction"]
    keep = (x_raw.missing.mean(axis=1) <= frac_limit) & (y_raw.missing.mean(axis=1) <= frac_limit)
    kept_local = np.flatnonzero(keep)
    if kept_local.size == 0:
        raise DataError("every row exceeds the missing-fraction threshold on some side")
    x_kept = x_raw.take_rows(kept_local)
    y_kept = y_raw.take_rows(kept_local)
    res_x = handle_missing(x_kept, 1.0, impute)
    res_y = handle_missing(y_kept, 1.0, impute)
    confounds = confounds.take_rows(kept_local) if confounds is not None else None
    return (res_x.data, res_y.data, confounds, base_rows[kept_local],
            res_x.fill_values, res_y.fill_values)


def build_design(x_raw: Dataset, y_raw: Dataset, confounds: Dataset | None,
                 cfg: dict, rows: np.ndarray | None = None):
    """Run preprocess + filter + reduce; returns (X, Y, artifacts)."""
    pp = cfg["preprocess"]
    x_c, y_c, conf_c, kept_rows, fill_x, fill_y = _joint_complete(
        x_raw, y_raw, confounds, cfg, rows
    )
    imputation = None
    if pp["impute"] is not None:
        imputation = {
            "strategy": pp["impute"],
            "row_drop_fraction": pp["row_drop_fraction"],
            "fill_left": {n: float(v) for n, v in zip(x_c.names, fill_x)},
            "fill_right": {n: float(v) for n, v in zip(y_c.names, fill_y)},
        }

    selected_x = selected_y = None
    top_n = cfg["filter"]["top_n"]
    if top_n is not None:
        sel = []
        for ds in (x_c, y_c):
            if top_n >= ds.n_cols:
                sel.append(ds.names)
                continue
            scores = _mad(ds.values)
            order = np.argsort(-scores, kind="stable")[:top_n]
            keep = tuple(ds.names[i] for i in sorted(order))  # keep original order
            sel.append(keep)
        selected_x, selected_y = sel
        x_c = x_c.select(selected_x)
        y_c = y_c.select(selected_y)

    wz = pp["winsorize"]
    deconf = pp["confounds_csv"] is not None
    plans = {
        side: PipelinePlan(
            impute=None,
            winsor=None if wz is None else WinsorSpec(float(wz[0]), float(wz[1])),
            boxcox=bool(pp["boxcox"]),
            deconfound=deconf and side in pp["deconfound_sides"],
        )
        for side in ("left", "right")
    }
    pipe_x, Xz, _ = fit_pipeline(x_c, plans["left"], conf_c)
    pipe_y, Yz, _ = fit_pipeline(y_c, plans["right"], conf_c)

    art = DesignArtifacts(
        kept_rows=kept_rows,
        imputation=imputation,
        fill_x=fill_x,
        fill_y=fill_y,
        selected_x=selected_x,
        selected_y=selected_y,
        pipe_x=pipe_x,
        pipe_y=pipe_y,
        pre_reduction_x=Xz,
        pre_reduction_y=Yz,
    )

    X, Y = Xz, Yz
    for side, ds in (("left", X), ("right", Y)):
        target = cfg["reduce"][side]
        if target is None:
            continue
        red = pca_fit(ds, n_components=target.get("components"),
                      variance_fraction=target.get("variance_fraction"))
        scores = pca_apply(ds, red)
        pipe, zs, _ = fit_pipeline(scores, PipelinePlan())
        if side == "left":
            art.pca_x, X = red, zs
            art.pipe_pca_x = pipe
        else:
            art.pca_y, Y = red, zs
            art.pipe_pca_y = pipe
    return X, Y, art


def apply_design(x_raw: Dataset, y_raw: Dataset, confounds: Dataset | None,
                 cfg: dict, art: DesignArtifacts, rows: np.ndarray):
    """Frozen-parameter replay of build_design on other rows (hold-out)."""
    x_sub = x_raw.take_rows(rows)
    y_sub = y_raw.take_rows(rows)
    conf_sub = confounds.take_rows(rows) if confounds is not None else None
    if art.imputation is not None:
        frac_limit = art.imputation["row_drop_fraction"]
        keep = ((x_sub.missing.mean(axis=1) <= frac_limit)
                & (y_sub.missing.mean(axis=1) <= frac_limit))
        kept_local = np.flatnonzero(keep)
        if kept_local.size == 0:
            raise DataError("every hold-out row exceeds the missing-fraction threshold")
        x_sub = x_sub.take_rows(kept_local)
        y_sub = y_sub.take_rows(kept_local)
        conf_sub = conf_sub.take_rows(kept_local) if conf_sub is not None else None
        xv = x_sub.values.copy()
        xv[x_sub.missing] = np.broadcast_to(art.fill_x, xv.shape)[x_sub.missing]
        yv = y_sub.values.copy()
        yv[y_sub.missing] = np.broadcast_to(art.fill_y, yv.shape)[y_sub.missing]
        x_sub = Dataset(x_sub.names, xv)
        y_sub = Dataset(y_sub.names, yv)
    else:
        x_sub.require_complete("hold-out application")
        y_sub.require_complete("hold-out application")
    if art.selected_x is not None:
        x_sub = x_sub.select(art.selected_x)
        y_sub = y_sub.select(art.selected_y)
    X, _ = art.pipe_x.transform(x_sub, conf_sub)
    Y, _ = art.pipe_y.transform(y_sub, conf_sub)
    if art.pca_x is not None:
        X, _ = art.pipe_pca_x.transform(pca_apply(X, art.pca_x))
    if art.pca_y is not None:
        Y, _ = art.pipe_pca_y.transform(pca_apply(Y, art.pca_y))
    return X, Y


# --- fitters from config -----------------------------------------------------------

def make_fitter(cfg: dict, k_override: int | None = None, p: int = None, q: int = None):
    mc = cfg["model"]
    k = k_override if k_override is not None else mc["k"]
    if mc["variant"] == "classical":
        return classical_fitter(k=k)
    if mc["variant"] == "ridge":
        return ridge_fitter(float(mc["lambda_x"]), float(mc["lambda_y"]), k=k)
    params = SparseParams(
        c1=float(mc["c1"]), c2=float(mc["c2"]),
        k=k if k is not None else min(p, q),
        max_iter=int(mc["max_iter"]), tol=float(mc["tol"]), init=mc["init"],
        seed=int(cfg["seed"]),
    )
    return sparse_fitter(params)


# --- output writers -----------------------------------------------------------------

def _write_csv(path, header, rows):
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = _csv.writer(fh)
        writer.writerow(header)
        for row in rows:
            writer.writerow([repr(float(v)) if isinstance(v, (float, np.floating)) else v
                             for v in row])


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [_jsonable(v) for v in obj.tolist()]
    if isinstance(obj, (np.floating, float)):
        return float(obj)
    if isinstance(obj, (np.integer, int)):
        return int(obj)
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    return obj


def write_report(outdir, report: dict) -> None:
    path = f"{outdir}/report.json"
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(_jsonable(report), fh, sort_keys=True, indent=2)
        fh.write("\n")


# --- pipeline execution ----------------------------------------------------------------

@dataclass
class RunState:
    cfg: dict
    outdir: str
    stages: list = field(default_factory=list)
    report: dict = field(default_factory=dict)

    def stage(self, name: str):
        return _StageTimer(self, name)


class _StageTimer:
    def __init__(self, state: RunState, name: str):
        self.state = state
        self.name = name

    def __enter__(self):
        self.t0 = time.perf_counter()
        return self

    def __exit__(self, exc_type, exc, tb):
        if exc_type is None:
            self.state.stages.append(self.name)
            _log(self.name, time.perf_counter() - self.t0)
        return False


def execute(cfg: dict, do_permute: bool, do_holdout: bool, do_sensitivity: bool) -> dict:
    """Run the configured pipeline; returns the report dict after writing files."""
    outdir = cfg["output_dir"]
    os.makedirs(outdir, exist_ok=True)
    state = RunState(cfg, outdir)
    seed = int(cfg["seed"])

    with state.stage("ingest"):
        token = cfg["input"]["missing_token"]
        if cfg["input"]["csv"] is not None:
            ds = load_csv(cfg["input"]["csv"], token)
            spec = VariableSplit(tuple(cfg["split"]["left"]), tuple(cfg["split"]["right"]))
            x_raw, y_raw = split(ds, spec)
        else:
            x_raw = load_csv(cfg["input"]["x_csv"], token)
            y_raw = load_csv(cfg["input"]["y_csv"], token)
            if x_raw.n_rows != y_raw.n_rows:
                raise DataError(
                    f"row counts differ: {cfg['input']['x_csv']} has {x_raw.n_rows}, "
                    f"{cfg['input']['y_csv']} has {y_raw.n_rows}"
                )
        confounds = None
        if cfg["preprocess"]["confounds_csv"] is not None:
            confounds = load_csv(cfg["preprocess"]["confounds_csv"], token)
            if confounds.n_rows != x_raw.n_rows:
                raise DataError("confound CSV row count does not match the data")

    with state.stage("preprocess"):
        X, Y, art = build_design(x_raw, y_raw, confounds, cfg)

    with state.stage("fit"):
        fitter = make_fitter(cfg, p=X.n_cols, q=Y.n_cols)
        model = fitter(X, Y)
        art_dict = art.to_dict()
        model = dataclasses.replace(
            model,
            preprocessing={k: art_dict[k] for k in ("imputation", "filter",
                                                    "pipelines", "reduction")},
        )
        variates = project(model, X, Y)

    inference_block = {"permutation": None, "holdout": None, "mode_selection": None}
    null_samples = None
    if do_permute:
        with state.stage("permute"):
            inf = cfg["inference"]
            null_fitter = fitter
            if cfg["model"]["variant"] == "sparse":
                null_fitter = make_fitter(cfg, k_override=1, p=X.n_cols, q=Y.n_cols)
            perm = permutation_test(
                X, Y, fitter, n_perm=int(inf["n_perm"]), seed=seed,
                correction=inf["correction"], null_fitter=null_fitter,
            )
            inference_block["permutation"] = perm.to_dict()
            null_samples = perm.null_samples
        with state.stage("select"):
            sel = select_modes(model, X, Y, "permutation",
                               alpha=float(cfg["inference"]["alpha"]),
                               permutation_result=perm)
            red = select_modes(model, X, Y, "redundancy_drop")
            inference_block["mode_selection"] = {
                "permutation": sel.to_dict(),
                "redundancy_drop": red.to_dict(),
            }

    if do_holdout:
        with state.stage("holdout"):
            split_frac = cfg["inference"]["holdout_split"] or 0.8

            def prepare(train_idx, hold_idx, _cfg=cfg):
                Xtr, Ytr, art_tr = build_design(
                    x_raw, y_raw, confounds, _cfg, rows=art.kept_rows[train_idx]
                )
                Xho, Yho = apply_design(
                    x_raw, y_raw, confounds, _cfg, art_tr, rows=art.kept_rows[hold_idx]
                )
                return Xtr.matrix(), Ytr.matrix(), Xho.matrix(), Yho.matrix()

            hold_fitter = make_fitter(cfg, p=X.n_cols, q=Y.n_cols)
            hold = holdout_validate(
                X, Y, hold_fitter, split=float(split_frac),
                n_perm=int(cfg["inference"]["n_perm"]), seed=seed, prepare=prepare,
            )
            inference_block["holdout"] = hold.to_dict()

    diagnostics_block = {"sensitivity": None}
    sens = None
    if do_sensitivity:
        with state.stage("sensitivity"):
            dg = cfg["diagnostics"]
            groups = None
            if dg["groups_file"] is not None:
                with open(dg["groups_file"], encoding="utf-8") as fh:
                    groups = json.load(fh)
            if int(dg["bootstrap"]) > 0:
                sens = bootstrap_sensitivity(
                    X, Y, fitter, side=dg["side"], groups=groups,
                    B=int(dg["bootstrap"]), seed=seed,
                )
            else:
                sens = sensitivity_scan(X, Y, fitter, side=dg["side"], groups=groups)
            diagnostics_block["sensitivity"] = sens.to_dict()

    with state.stage("report"):
        loadings_rows = []
        for side, pre, mat in (("left", art.pre_reduction_x, variates.V),
                               ("right", art.pre_reduction_y, variates.U)):
            same_var = variates.U if side == "left" else variates.V
            same = pearson_columns(pre.values, same_var)
            cross = pearson_columns(pre.values, mat)
            for j, name in enumerate(pre.names):
                for m in range(model.k):
                    loadings_rows.append(
                        (side, name, m + 1, same[j, m], cross[j, m])
                    )
        _write_csv(f"{outdir}/loadings.csv",
                   ["side", "variable", "mode", "same_set", "cross_set"],
                   loadings_rows)

        weight_rows = [("left", n, m + 1, model.x_weights[j, m])
                       for j, n in enumerate(model.x_names) for m in range(model.k)]
        weight_rows += [("right", n, m + 1, model.y_weights[j, m])
                        for j, n in enumerate(model.y_names) for m in range(model.k)]
        _write_csv(f"{outdir}/weights.csv", ["side", "variable", "mode", "weight"],
                   weight_rows)

        _write_csv(f"{outdir}/variates.csv", ["row", "mode", "u", "v"],
                   [(int(art.kept_rows[i]), m + 1, variates.U[i, m], variates.V[i, m])
                    for i in range(variates.n) for m in range(model.k)])

        if null_samples is not None and cfg["inference"]["dump_null"]:
            _write_csv(f"{outdir}/null_distribution.csv",
                       ["permutation", "first_mode_correlation"],
                       [(i + 1, v) for i, v in enumerate(null_samples)])

        if sens is not None:
            header = ["target", "mode", "score", "score_untouched_side",
                      "score_perturbed_side"]
            if sens.ci_lower is not None:
                header += ["ci_lower", "ci_upper"]
            _write_csv(f"{outdir}/sensitivity.csv", header,
                       [tuple(row[h] for h in header) for row in sens.to_rows()])

        report = {
            "format_version": "1",
            "software": {"name": "ccakit", "version": __version__,
                         "kernel_backend": kernel_backend()},
            "config": cfg,
            "seed": seed,
            "stages": state.stages + ["report"],
            "data": {
                "n_rows_input": x_raw.n_rows,
                "n_rows_used": int(art.kept_rows.size),
                "p": model.p,
                "q": model.q,
                "left_columns": list(model.x_names),
                "right_columns": list(model.y_names),
            },
            "design": art.to_dict(),
            "model": model.to_dict(),
            "in_sample_correlations": [float(v) for v in model.correlations],
            "inference": inference_block,
            "diagnostics": diagnostics_block,
        }
        write_report(outdir, report)
    return report


# --- subcommands -------------------------------------------------------------------

def _common_overrides(args) -> dict:
    return {
        "seed": getattr(args, "seed", None),
        "output_dir": getattr(args, "output_dir", None),
        "inference.n_perm": getattr(args, "n_perm", None),
        "inference.alpha": getattr(args, "alpha", None),
        "inference.correction": getattr(args, "correction", None),
        "inference.holdout_split": getattr(args, "split", None),
        "model.k": getattr(args, "k", None),
        "diagnostics.side": getattr(args, "side", None),
        "diagnostics.bootstrap": getattr(args, "bootstrap", None),
    }


def cmd_run(args) -> int:
    cfg = load_config(args.config, _common_overrides(args))
    execute(
        cfg,
        do_permute=True,
        do_holdout=cfg["inference"]["holdout_split"] is not None,
        do_sensitivity=bool(cfg["diagnostics"]["sensitivity"]),
    )
    return EXIT_OK


def cmd_fit(args) -> int:
    cfg = load_config(args.config, _common_overrides(args))
    execute(cfg, do_permute=False, do_holdout=False, do_sensitivity=False)
    return EXIT_OK


def cmd_permute(args) -> int:
    cfg = load_config(args.config, _common_overrides(args))
    execute(cfg, do_permute=True, do_holdout=False, do_sensitivity=False)
    return EXIT_OK


def cmd_holdout(args) -> int:
    cfg = load_config(args.config, _common_overrides(args))
    execute(cfg, do_permute=False, do_holdout=True, do_sensitivity=False)
    return EXIT_OK


def cmd_sensitivity(args) -> int:
    cfg = load_config(args.config, _common_overrides(args))
    execute(cfg, do_permute=False, do_holdout=False, do_sensitivity=True)
    return EXIT_OK


def _parse_rho(text: str) -> tuple[float, ...]:
    try:
        return tuple(float(v) for v in text.split(","))
    except ValueError:
        raise ConfigError(f"--rho expects comma-separated numbers, got {text!r}") from None


def cmd_synth(args) -> int:
    os.makedirs(args.output_dir, exist_ok=True)
    support = None
    if args.sparse_support is not None:
        parsed = json.loads(args.sparse_support)
        support = tuple((tuple(e[0]), tuple(e[1])) for e in parsed)
    spec = SynthSpec(n=args.n, p=args.p, q=args.q, rho=_parse_rho(args.rho),
                     sparse_support=support, rotate=args.rotate, seed=args.seed)
    X, Y, truth = generate(spec)
    save_csv(X, f"{args.output_dir}/x.csv")
    save_csv(Y, f"{args.output_dir}/y.csv")
    with open(f"{args.output_dir}/truth.json", "w", encoding="utf-8") as fh:
        json.dump(_jsonable({
            "spec": {"n": spec.n, "p": spec.p, "q": spec.q, "rho": list(spec.rho),
                     "rotate": spec.rotate, "seed": spec.seed},
            "truth": truth.to_dict(),
        }), fh, sort_keys=True, indent=2)
        fh.write("\n")
    _log("synth")
    return EXIT_OK


def cmd_scan_sparsity(args) -> int:
    overrides = _common_overrides(args)
    cfg = load_config(args.config, overrides)
    if cfg["model"]["variant"] != "sparse":
        raise ConfigError("scan-sparsity requires model.variant = sparse")
    outdir = cfg["output_dir"]
    os.makedirs(outdir, exist_ok=True)
    c1_grid = _parse_rho(args.c1_grid)
    c2_grid = _parse_rho(args.c2_grid)
    split_frac = float(args.split if args.split is not None else 0.8)
    seed = int(cfg["seed"])

    token = cfg["input"]["missing_token"]
    if cfg["input"]["csv"] is not None:
        ds = load_csv(cfg["input"]["csv"], token)
        spec = VariableSplit(tuple(cfg["split"]["left"]), tuple(cfg["split"]["right"]))
        x_raw, y_raw = split(ds, spec)
    else:
        x_raw = load_csv(cfg["input"]["x_csv"], token)
        y_raw = load_csv(cfg["input"]["y_csv"], token)
    confounds = None
    if cfg["preprocess"]["confounds_csv"] is not None:
        confounds = load_csv(cfg["preprocess"]["confounds_csv"], token)
    X, Y, art = build_design(x_raw, y_raw, confounds, cfg)

    rows = []
    for c1 in c1_grid:
        for c2 in c2_grid:
            params = SparseParams(c1=c1, c2=c2, k=1,
                                  max_iter=int(cfg["model"]["max_iter"]),
                                  tol=float(cfg["model"]["tol"]),
                                  init=cfg["model"]["init"], seed=seed)
            fitter = sparse_fitter(params)
            res = holdout_validate(X.matrix(), Y.matrix(), fitter, split=split_frac,
                                   n_perm=99, seed=seed)
            rows.append((c1, c2,
                         float(res.model.correlations[0]),
                         float(res.correlations[0])))
            _log(f"scan c1={c1} c2={c2}")
    _write_csv(f"{outdir}/scan.csv",
               ["c1", "c2", "train_r1", "holdout_r1"], rows)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="ccakit",
        description="Doubly-multivariate canonical correlation toolkit",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common(p, with_config=True):
        if with_config:
            p.add_argument("--config", required=True, help="JSON config file")
        p.add_argument("--seed", type=int, default=None)
        p.add_argument("--output-dir", default=None)

    p = sub.add_parser("run", help="full pipeline: fit, permutation, optional hold-out/sensitivity")
    add_common(p)
    p.add_argument("--n-perm", type=int, default=None)
    p.add_argument("--alpha", type=float, default=None)
    p.add_argument("--correction", choices=["bonferroni", "fdr_bh", "none"], default=None)
    p.add_argument("--k", type=int, default=None)
    p.set_defaults(fn=cmd_run)

    p = sub.add_parser("fit", help="ingest, preprocess, reduce and fit only")
    add_common(p)
    p.add_argument("--k", type=int, default=None)
    p.set_defaults(fn=cmd_fit)

    p = sub.add_parser("permute", help="fit plus permutation inference")
    add_common(p)
    p.add_argument("--n-perm", type=int, default=None)
    p.add_argument("--alpha", type=float, default=None)
    p.add_argument("--correction", choices=["bonferroni", "fdr_bh", "none"], default=None)
    p.add_argument("--k", type=int, default=None)
    p.set_defaults(fn=cmd_permute)

    p = sub.add_parser("holdout", help="fit on a training split, validate held-out rows")
    add_common(p)
    p.add_argument("--split", type=float, default=None)
    p.add_argument("--n-perm", type=int, default=None)
    p.add_argument("--k", type=int, default=None)
    p.set_defaults(fn=cmd_holdout)

    p = sub.add_parser("sensitivity", help="variable-deletion sensitivity analysis")
    add_common(p)
    p.add_argument("--side", choices=["left", "right"], default=None)
    p.add_argument("--bootstrap", type=int, default=None)
    p.add_argument("--k", type=int, default=None)
    p.set_defaults(fn=cmd_sensitivity)

    p = sub.add_parser("synth", help="generate planted-mode synthetic data")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--p", type=int, required=True)
    p.add_argument("--q", type=int, required=True)
    p.add_argument("--rho", required=True, help="comma-separated planted correlations")
    p.add_argument("--rotate", action="store_true")
    p.add_argument("--sparse-support", default=None,
                   help='JSON like [[[0,1,2],[0,1]]]: per-mode left/right columns')
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--output-dir", required=True)
    p.set_defaults(fn=cmd_synth)

    p = sub.add_parser("scan-sparsity",
                       help="grid of (c1, c2) scored by hold-out first-mode correlation")
    add_common(p)
    p.add_argument("--c1-grid", required=True, help="comma-separated c1 values")
    p.add_argument("--c2-grid", required=True, help="comma-separated c2 values")
    p.add_argument("--split", type=float, default=None)
    p.set_defaults(fn=cmd_scan_sparsity)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.fn(args)
    except ConfigError as exc:
        print(f"ccakit: config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except DataError as exc:
        print(f"ccakit: data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except NumericalError as exc:
        print(f"ccakit: numerical error: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except CcakitError as exc:
        print(f"ccakit: error: {exc}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
