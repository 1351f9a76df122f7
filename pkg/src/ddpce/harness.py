"""
Experiment orchestration: a Monte Carlo reference run compared against
surrogate fits over a sweep of weighting schemes.

Configuration files are flat ``key = value`` text.  Recognised keys::

    model               dispatch | ishigami | product_peak | poly_d3
    inputs              distribution descriptors separated by ';'
    m_train, m_ref      training and reference sample counts
    degree              total polynomial degree
    schemes             comma list of ols, cls, tempered (tempered expands over alphas)
    alphas              comma list of tempering exponents
    alpha_convention    direct   -> w ~ K**alpha    (alpha = -1 is CLS)
                        inverse  -> w ~ K**(-alpha) (alpha = +1 is CLS)
    sparse              off | auto | on   (auto: sparse only when m_train < N)
    target_sparsity     int, optional
    sparse_epsilon      float, optional
    seed_train, seed_ref
    out                 output directory
    stability_threshold float, optional; flags rows in curves.csv
    quantiles           extra quantile levels for the summaries
    dispatch.levels     fraction:penalty, ... (most critical first)
    dispatch.generation hourly values (or one value for all hours)
    dispatch.base_load  hourly values
    dispatch.storage    capacity power initial efficiency
    dispatch.horizon    hours
"""

from __future__ import annotations

import configparser
import csv
import io
import logging
import math
import re
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Optional

import numpy as np

from . import __version__
from .basis import build_basis
from .errors import ConfigurationError, DDPCEError
from .metrics import (
    QUANTILE_METHOD,
    STD_CONVENTION,
    DeviationRow,
    DistributionSummary,
    deviation_row,
    summarize,
)
from .models import (
    TEST_FUNCTIONS,
    DispatchConfig,
    PriorityLevel,
    Storage,
    default_dispatch_config,
    eval_dispatch_batch,
    eval_test_function,
)
from .regression import LOG_BASE, Scheme, assemble_design, fit, sparse_fit
from .sampling import InputSpec, draw_samples

__all__ = [
    "ExperimentConfig",
    "ExperimentReport",
    "Case",
    "parse_config",
    "load_config",
    "run_experiment",
    "emit_report",
    "evaluate_model",
]

log = logging.getLogger(__name__)

DEFAULT_INPUTS = "uniform(0.8, 1.2); discrete_range(0, 23); discrete_range(2, 8)"


@dataclass(frozen=True)
class Case:
    """One row of the sweep: the user-facing alpha next to the scheme actually fitted."""

    label: str
    alpha: float
    scheme: Scheme


@dataclass(frozen=True, eq=False)
class ExperimentConfig:
    inputs: InputSpec = field(default_factory=lambda: InputSpec(tuple(DEFAULT_INPUTS.split(";"))))
    model: str = "dispatch"
    dispatch: Optional[DispatchConfig] = None
    m_train: int = 200
    m_ref: int = 100_000
    degree: int = 3
    schemes: tuple = ("ols", "cls", "tempered")
    alphas: tuple = (0.1, 0.5, 0.8, 1.0, 1.2, 1.5, 2.0)
    alpha_convention: str = "direct"
    sparse: str = "auto"
    target_sparsity: Optional[int] = None
    sparse_epsilon: Optional[float] = None
    seed_train: int = 1
    seed_ref: int = 2
    out: str = "results"
    stability_threshold: Optional[float] = None
    quantiles: tuple = (0.05, 0.95)

    def __post_init__(self):
        if self.model != "dispatch" and self.model not in TEST_FUNCTIONS:
            raise ConfigurationError(f"unknown model {self.model!r}")
        if self.model == "dispatch" and self.dispatch is None:
            object.__setattr__(self, "dispatch", default_dispatch_config())
        if self.model == "dispatch" and self.inputs.d != 3:
            raise ConfigurationError("the dispatch model takes 3 inputs (load scale, start, duration)")
        if self.m_train < 1 or self.m_ref < 1 or self.degree < 0:
            raise ConfigurationError("m_train, m_ref must be >= 1 and degree >= 0")
        if self.alpha_convention not in ("direct", "inverse"):
            raise ConfigurationError(f"alpha_convention must be direct or inverse, got {self.alpha_convention!r}")
        if self.sparse not in ("off", "auto", "on"):
            raise ConfigurationError(f"sparse must be off, auto or on, got {self.sparse!r}")
        for s in self.schemes:
            if s not in ("ols", "cls", "tempered"):
                raise ConfigurationError(f"unknown scheme {s!r}")
        if self.seed_train == self.seed_ref:
            raise ConfigurationError("seed_train and seed_ref must differ")

    def cases(self) -> list:
        sign = -1.0 if self.alpha_convention == "inverse" else 1.0
        out = []
        for s in self.schemes:
            if s == "ols":
                out.append(Case("OLS", 0.0, Scheme("ols")))
            elif s == "cls":
                out.append(Case("CLS", sign * -1.0, Scheme("cls")))
            else:
                for a in self.alphas:
                    out.append(Case(f"alpha={a!r}", float(a), Scheme.tempered(sign * a)))
        return out


@dataclass(frozen=True, eq=False)
class ExperimentReport:
    reference: DistributionSummary
    rows: list
    provenance: dict
    stability_threshold: Optional[float] = None

    def row(self, label) -> DeviationRow:
        for r in self.rows:
            if r.case == label:
                return r
        raise KeyError(label)


def _floats(text):
    return [float(t) for t in re.split(r"[,\s]+", text.strip()) if t]


_KEYS = {
    "model", "inputs", "m_train", "m_ref", "degree", "schemes", "alphas",
    "alpha_convention", "sparse", "target_sparsity", "sparse_epsilon",
    "seed_train", "seed_ref", "out", "stability_threshold", "quantiles",
    "dispatch.levels", "dispatch.generation", "dispatch.base_load",
    "dispatch.storage", "dispatch.horizon",
}


def parse_config(text: str) -> ExperimentConfig:
    """Parse the flat ``key = value`` format (``#`` starts a comment)."""
    cp = configparser.ConfigParser(inline_comment_prefixes=("#",), interpolation=None)
    try:
        cp.read_string("[experiment]\n" + text)
    except configparser.Error as exc:
        raise ConfigurationError(f"malformed config: {exc}") from exc
    kv = dict(cp["experiment"])
    unknown = sorted(set(kv) - _KEYS)
    if unknown:
        raise ConfigurationError(f"unknown config keys: {', '.join(unknown)}")

    args = {}
    try:
        if "inputs" in kv:
            args["inputs"] = InputSpec(tuple(d for d in kv["inputs"].split(";") if d.strip()))
        for key in ("model", "alpha_convention", "sparse", "out"):
            if key in kv:
                args[key] = kv[key].strip()
        for key in ("m_train", "m_ref", "degree", "seed_train", "seed_ref", "target_sparsity"):
            if kv.get(key, "").strip():
                args[key] = int(kv[key])
        for key in ("sparse_epsilon", "stability_threshold"):
            if kv.get(key, "").strip():
                args[key] = float(kv[key])
        if "schemes" in kv:
            args["schemes"] = tuple(s.strip().lower() for s in kv["schemes"].split(",") if s.strip())
        if "alphas" in kv:
            args["alphas"] = tuple(_floats(kv["alphas"]))
        if "quantiles" in kv:
            args["quantiles"] = tuple(_floats(kv["quantiles"]))
        if any(k.startswith("dispatch.") for k in kv):
            args["dispatch"] = _parse_dispatch(kv)
    except ValueError as exc:
        if isinstance(exc, DDPCEError):
            raise
        raise ConfigurationError(f"bad config value: {exc}") from exc
    return ExperimentConfig(**args)


def _parse_dispatch(kv) -> DispatchConfig:
    base = default_dispatch_config()
    horizon = int(kv.get("dispatch.horizon", base.horizon))
    levels = base.levels
    if "dispatch.levels" in kv:
        levels = []
        for item in kv["dispatch.levels"].split(","):
            frac, _, pen = item.partition(":")
            levels.append(PriorityLevel(float(frac), float(pen)))
    storage = base.storage
    if "dispatch.storage" in kv:
        storage = Storage(*_floats(kv["dispatch.storage"]))
    gen = _floats(kv["dispatch.generation"]) if "dispatch.generation" in kv else base.generation
    load = _floats(kv["dispatch.base_load"]) if "dispatch.base_load" in kv else base.base_load
    return DispatchConfig(tuple(levels), gen, load, storage, horizon)


def load_config(path) -> ExperimentConfig:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigurationError(f"cannot read config {path}: {exc}") from exc
    return parse_config(text)


def evaluate_model(config: ExperimentConfig, x) -> np.ndarray:
    """Ground-truth responses for an ``(n, d)`` input batch."""
    if config.model == "dispatch":
        return eval_dispatch_batch(config.dispatch, x)
    return np.asarray(eval_test_function(config.model, np.atleast_2d(x)), dtype=float)


def _failed_row(case, exc):
    nan = math.nan
    return DeviationRow(case.label, case.alpha, nan, nan, nan, nan, nan, nan, nan, 0,
                        f"{type(exc).__name__}: {exc}")


def run_experiment(config: ExperimentConfig) -> ExperimentReport:
    """Reference MC run, surrogate fits for every case, deviation table.

    Training and reference inputs come from separate seeds.  Each surrogate
    is evaluated on the reference inputs.  A failing case yields a row with
    NaN statistics and an error message instead of aborting the sweep.
    """
    if config.m_ref < 10 * config.m_train:
        log.warning("m_ref=%d is below 10 * m_train=%d", config.m_ref, 10 * config.m_train)

    ref = draw_samples(config.inputs, config.m_ref, config.seed_ref)
    y_ref = evaluate_model(config, ref.x)
    levels = tuple(config.quantiles)
    ref_summary = summarize(y_ref, levels)

    train = draw_samples(config.inputs, config.m_train, config.seed_train)
    y_train = evaluate_model(config, train.x)
    basis = build_basis(train, config.degree)
    design = assemble_design(basis, train)
    n_terms = basis.n_terms
    use_sparse = config.sparse == "on" or (config.sparse == "auto" and config.m_train < n_terms)
    psi_ref = basis.evaluate(ref.x)
    n_outside = int(basis.outside_hull(ref.x).sum())

    rows = []
    for case in config.cases():
        try:
            if use_sparse:
                target = config.target_sparsity
                if target is None and config.sparse_epsilon is None:
                    target = min(n_terms, max(1, config.m_train // 2))
                result = sparse_fit(design, y_train, case.scheme, target, config.sparse_epsilon)
            else:
                result = fit(design, y_train, case.scheme)
            pred = psi_ref @ result.coefficients
            wd = result.weighted_diagnostics
            rows.append(
                deviation_row(
                    case.label,
                    case.alpha,
                    summarize(pred, levels),
                    ref_summary,
                    result.diagnostics.score_lr,
                    wd.score_lr if wd is not None else math.nan,
                    wd.gram_condition if wd is not None else math.nan,
                    n_outside,
                )
            )
        except DDPCEError as exc:
            log.error("case %s failed: %s", case.label, exc)
            rows.append(_failed_row(case, exc))

    provenance = {
        "package": f"ddpce {__version__}",
        "numpy": np.__version__,
        "model": config.model,
        "inputs": "; ".join(str(d) for d in config.inputs.dims),
        "m_train": config.m_train,
        "m_ref": config.m_ref,
        "degree": config.degree,
        "n_terms": n_terms,
        "seed_train": config.seed_train,
        "seed_ref": config.seed_ref,
        "rng": "PCG64, SeedSequence(seed, spawn_key=(dimension,))",
        "alpha_convention": config.alpha_convention,
        "fit_mode": "sparse" if use_sparse else "full",
        "score_log_base": LOG_BASE,
        "score_lr": "M/(kappa ln M) on the unweighted design",
        "score_lr_weighted": "M/(kappa_w ln M), kappa_w = max_i w_i psi_i^T G_w^-1 psi_i",
        "quantile_method": QUANTILE_METHOD,
        "std_convention": STD_CONVENTION,
        "reference_outside_training_box": n_outside,
    }
    return ExperimentReport(ref_summary, rows, provenance, config.stability_threshold)


def _num(v) -> str:
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    return repr(float(v))


def emit_report(report: ExperimentReport, directory) -> None:
    """Write ``table.csv``, ``curves.csv`` and ``meta.txt`` into ``directory``."""
    out = Path(directory)
    out.mkdir(parents=True, exist_ok=True)

    table = io.StringIO()
    w = csv.writer(table, lineterminator="\n")
    w.writerow(["case", "p5_dev", "p95_dev", "mean_dev", "std_dev", "score_lr",
                "score_lr_weighted", "gram_cond_weighted", "status"])
    for r in report.rows:
        w.writerow([r.case, _num(r.p5_dev), _num(r.p95_dev), _num(r.mean_dev), _num(r.std_dev),
                    _num(r.score_lr), _num(r.score_lr_weighted), _num(r.gram_condition_weighted),
                    "ok" if r.ok else r.error])
    (out / "table.csv").write_text(table.getvalue(), encoding="utf-8")

    curves = io.StringIO()
    w = csv.writer(curves, lineterminator="\n")
    w.writerow(["alpha", "case", "p5_dev", "p95_dev", "abs_p5_dev", "abs_p95_dev",
                "score_lr", "score_lr_weighted", "gram_cond_weighted", "above_threshold"])
    thr = report.stability_threshold
    for r in report.rows:
        above = "" if thr is None or not r.ok else str(int(r.score_lr_weighted >= thr))
        w.writerow([_num(r.alpha), r.case, _num(r.p5_dev), _num(r.p95_dev), _num(abs(r.p5_dev)),
                    _num(abs(r.p95_dev)), _num(r.score_lr), _num(r.score_lr_weighted),
                    _num(r.gram_condition_weighted), above])
    (out / "curves.csv").write_text(curves.getvalue(), encoding="utf-8")

    lines = [f"{k} = {v}" for k, v in report.provenance.items()]
    ref = report.reference
    lines.append(f"reference.mean = {_num(ref.mean)}")
    lines.append(f"reference.std = {_num(ref.std)}")
    for lv, q in ref.quantiles.items():
        lines.append(f"reference.q{lv!r} = {_num(q)}")
    if thr is not None:
        lines.append(f"stability_threshold = {_num(thr)}")
    failed = [r for r in report.rows if not r.ok]
    lines.append(f"failed_cases = {len(failed)}")
    (out / "meta.txt").write_text("\n".join(lines) + "\n", encoding="utf-8")


def with_seed_override(config: ExperimentConfig, seed: int) -> ExperimentConfig:
    """Reference stream gets ``seed``, training stream ``seed + 1``."""
    return replace(config, seed_ref=int(seed), seed_train=int(seed) + 1)
