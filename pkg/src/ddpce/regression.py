"""
Least-squares fitting of PCE coefficients with Christoffel-based weights.

Three weighting schemes share one code path.  With Christoffel values
``K_i = psi_i^T G^{-1} psi_i`` of the unweighted design, the tempered weights
are

    w_i(alpha) = M K_i**alpha / sum_j K_j**alpha

so ``alpha = 0`` gives ordinary least squares and ``alpha = -1`` the
inverse-Christoffel (CLS) weights.  The stability score is
``M / (kappa ln M)`` with ``kappa = max_i K_i``; the logarithm is natural.
"""

from __future__ import annotations

import configparser
import io
import math
import re
from dataclasses import dataclass
from pathlib import Path
from typing import Optional

import numpy as np
from scipy import linalg

from .basis import MultivariateBasis
from .errors import (
    ConfigurationError,
    IllConditionedDesignError,
    NumericRangeError,
    UnderdeterminedSystemError,
)

__all__ = [
    "Scheme",
    "OLS",
    "CLS",
    "ChristoffelDiagnostics",
    "WeightVector",
    "FitResult",
    "assemble_design",
    "gram",
    "christoffel",
    "weights",
    "fit",
    "sparse_fit",
    "normal_equations_solve",
    "stability_score",
    "save_fit",
    "load_fit",
    "fit_to_config",
    "fit_from_config",
]

LOG_BASE = "e"

# |R_ii| below this fraction of max |R_jj| counts as rank deficient
_QR_RANK_RTOL = 1e-12


@dataclass(frozen=True)
class Scheme:
    """Weighting scheme.  ``kind`` is ``'ols'``, ``'cls'`` or ``'tempered'``."""

    kind: str
    alpha: float = 0.0

    def __post_init__(self):
        if self.kind not in ("ols", "cls", "tempered"):
            raise ConfigurationError(f"unknown weighting scheme {self.kind!r}")
        alpha = {"ols": 0.0, "cls": -1.0}.get(self.kind, float(self.alpha))
        object.__setattr__(self, "alpha", alpha)

    @classmethod
    def tempered(cls, alpha):
        return cls("tempered", float(alpha))

    @classmethod
    def parse(cls, text) -> "Scheme":
        """Accept ``ols``, ``cls``, ``tempered(0.5)`` or ``tempered:0.5``."""
        if isinstance(text, Scheme):
            return text
        t = str(text).strip().lower()
        if t in ("ols", "cls"):
            return cls(t)
        m = re.fullmatch(r"tempered\s*[(:]\s*([-+0-9.eE]+)\s*\)?", t)
        if m is None:
            raise ConfigurationError(f"cannot parse weighting scheme {text!r}")
        return cls.tempered(float(m.group(1)))

    def __str__(self):
        if self.kind == "tempered":
            return f"tempered({self.alpha!r})"
        return self.kind


OLS = Scheme("ols")
CLS = Scheme("cls")


@dataclass(frozen=True, eq=False)
class ChristoffelDiagnostics:
    """Christoffel values of a (possibly weighted) design.

    ``K`` sums to ``M * N``.  ``gram_condition`` is the 2-norm condition
    number of the Gram matrix the values were computed from.
    """

    K: np.ndarray
    kappa: float
    gram_condition: float
    score_lr: float


@dataclass(frozen=True, eq=False)
class WeightVector:
    w: np.ndarray
    alpha: float
    scheme: Scheme


@dataclass(frozen=True, eq=False)
class FitResult:
    coefficients: np.ndarray
    diagnostics: ChristoffelDiagnostics
    weights: WeightVector
    residual_rms: float
    active_set: np.ndarray
    weighted_diagnostics: Optional[ChristoffelDiagnostics] = None
    n_samples: int = 0

    @property
    def scheme(self) -> Scheme:
        return self.weights.scheme


def stability_score(m: int, kappa: float) -> float:
    """``M / (kappa ln M)``; infinite for ``M == 1``."""
    if m <= 1:
        return math.inf
    return m / (kappa * math.log(m))


def assemble_design(basis: MultivariateBasis, samples) -> np.ndarray:
    """Design matrix ``Psi[i, j] = psi_j(x_i)`` for a SampleSet or an ``(M, d)`` array."""
    x = np.asarray(getattr(samples, "x", samples), dtype=float)
    if x.ndim == 1:
        x = x[:, None] if basis.d == 1 else x[None, :]
    if x.shape[1] != basis.d:
        raise ConfigurationError(
            f"samples have dimension {x.shape[1]} but the basis has dimension {basis.d}"
        )
    return basis.evaluate(x)


def gram(design, weights=None) -> np.ndarray:
    """Empirical Gram matrix ``(1/M) Psi^T W Psi``, symmetrised."""
    psi = np.asarray(design, dtype=float)
    m = psi.shape[0]
    if weights is None:
        g = psi.T @ psi / m
    else:
        w = np.asarray(getattr(weights, "w", weights), dtype=float)
        g = (psi.T * w) @ psi / m
    return (g + g.T) / 2


def _smallest_pivot(g):
    try:
        _, d, _ = linalg.ldl(g)
        return float(np.min(np.diag(d)))
    except (ValueError, linalg.LinAlgError):
        return float("nan")


def christoffel(design, weights=None) -> ChristoffelDiagnostics:
    """Christoffel values ``K_i = psi_i^T G^{-1} psi_i`` via a Cholesky factor of ``G``.

    With ``G = L L^T`` each value is ``||L^{-1} psi_i||^2``.  When ``weights``
    are given the values refer to the weighted rows ``sqrt(w_i) psi_i`` and
    ``G_w``; they still sum to ``M * N``.

    Raises
    ------
    IllConditionedDesignError
        If the Cholesky factorisation fails.
    """
    psi = np.asarray(design, dtype=float)
    m, n = psi.shape
    if weights is not None:
        w = np.asarray(getattr(weights, "w", weights), dtype=float)
        psi = psi * np.sqrt(w)[:, None]
    g = gram(psi)
    try:
        chol = linalg.cholesky(g, lower=True)
    except linalg.LinAlgError:
        pivot = _smallest_pivot(g)
        raise IllConditionedDesignError(
            f"Gram matrix ({n}x{n}, M={m}) is not positive definite "
            f"(smallest pivot {pivot:.3e}); lower the degree or add samples",
            smallest_pivot=pivot,
        ) from None
    v = linalg.solve_triangular(chol, psi.T, lower=True)
    K = np.einsum("ij,ij->j", v, v)
    kappa = float(K.max())
    cond = float(np.linalg.cond(g))
    return ChristoffelDiagnostics(K, kappa, cond, stability_score(m, kappa))


def weights(diag, scheme) -> WeightVector:
    """Normalised weights ``M K_i**alpha / sum_j K_j**alpha``, computed in log space.

    ``scheme`` is a :class:`Scheme` or its string form.  OLS and CLS are the
    exponents 0 and -1 of the same formula.
    """
    scheme = Scheme.parse(scheme)
    K = np.asarray(getattr(diag, "K", diag), dtype=float)
    m = K.shape[0]
    if np.any(~(K > 0)) or not np.all(np.isfinite(K)):
        raise NumericRangeError("Christoffel values must be finite and positive")
    with np.errstate(over="ignore", invalid="ignore"):
        logw = scheme.alpha * np.log(K) if scheme.alpha != 0.0 else np.zeros(m)
    if not np.all(np.isfinite(logw)):
        raise NumericRangeError(f"K**alpha is not representable for alpha={scheme.alpha}")
    e = np.exp(logw - logw.max())
    w = m * e / e.sum()
    if not np.all(np.isfinite(w)) or np.any(w <= 0):
        raise NumericRangeError(
            f"weights underflow for alpha={scheme.alpha}; reduce |alpha|"
        )
    return WeightVector(w, scheme.alpha, scheme)


def _weighted_lstsq(psi, y, w):
    """QR solve of ``min ||diag(sqrt w)(Psi c - y)||``; returns c."""
    s = np.sqrt(w)
    a = psi * s[:, None]
    q, r = linalg.qr(a, mode="economic")
    diag = np.abs(np.diag(r))
    if diag.size and not diag.min() > _QR_RANK_RTOL * diag.max():
        raise IllConditionedDesignError(
            f"weighted design is rank deficient (|R_ii| min/max = {diag.min() / diag.max():.2e})"
        )
    return linalg.solve_triangular(r, q.T @ (s * y), lower=False)


def normal_equations_solve(design, y, w) -> np.ndarray:
    """Solve ``G_w c = (1/M) Psi^T W y`` directly (reference for the QR route)."""
    psi = np.asarray(design, dtype=float)
    w = np.asarray(getattr(w, "w", w), dtype=float)
    g = gram(psi, w)
    rhs = (psi.T @ (w * np.asarray(y, dtype=float))) / psi.shape[0]
    return linalg.solve(g, rhs, assume_a="pos")


def _check_inputs(psi, y):
    m, n = psi.shape
    if y.shape != (m,):
        raise ConfigurationError(f"response has shape {y.shape}, expected ({m},)")
    if not np.all(np.isfinite(y)):
        raise ConfigurationError("response vector contains non-finite values")
    if m < n:
        raise UnderdeterminedSystemError(
            f"M={m} samples for N={n} basis terms; use sparse_fit or add samples"
        )


def fit(design, y, scheme="ols") -> FitResult:
    """Weighted least-squares PCE coefficients for one scheme.

    The weights are derived from the Christoffel values of the unweighted
    design.  The solve is a QR factorisation of ``diag(sqrt w) Psi``.
    """
    psi = np.asarray(design, dtype=float)
    y = np.asarray(y, dtype=float).reshape(-1)
    _check_inputs(psi, y)
    diag = christoffel(psi)
    wv = weights(diag, scheme)
    c = _weighted_lstsq(psi, y, wv.w)
    resid = psi @ c - y
    rms = float(np.sqrt(np.mean(wv.w * resid**2)))
    return FitResult(
        c,
        diag,
        wv,
        rms,
        np.arange(psi.shape[1]),
        christoffel(psi, wv.w),
        psi.shape[0],
    )


def sparse_fit(design, y, scheme="ols", target_sparsity=None, epsilon=None) -> FitResult:
    """Greedy forward selection (weighted orthogonal matching pursuit).

    At each step the column with the largest normalised weighted correlation
    with the current residual joins the active set, and the weighted least
    squares problem is re-solved on the active columns.  Stops when
    ``target_sparsity`` columns are active, when the relative weighted
    residual drops to ``epsilon``, when the residual stops decreasing, or
    when no admissible column is left.  Ties go to the lowest column index.
    """
    psi = np.asarray(design, dtype=float)
    y = np.asarray(y, dtype=float).reshape(-1)
    m, n = psi.shape
    if y.shape != (m,):
        raise ConfigurationError(f"response has shape {y.shape}, expected ({m},)")
    if target_sparsity is None and epsilon is None:
        raise ConfigurationError("sparse_fit needs target_sparsity or epsilon")
    limit = min(n, m) if target_sparsity is None else min(int(target_sparsity), n, m)
    if limit < 1:
        raise ConfigurationError(f"target_sparsity must be >= 1, got {target_sparsity}")

    if m >= n:
        diag = christoffel(psi)
    else:
        # Christoffel values of an underdetermined design are undefined; fall back to unit values
        K = np.full(m, float(n))
        diag = ChristoffelDiagnostics(K, float(n), math.inf, stability_score(m, float(n)))
    wv = weights(diag, scheme)
    s = np.sqrt(wv.w)
    a = psi * s[:, None]
    b = s * y
    col_norms = np.linalg.norm(a, axis=0)
    b_norm = np.linalg.norm(b)

    active = []
    coef = np.zeros(0)
    resid = b.copy()
    prev = math.inf
    while len(active) < limit:
        rel = np.linalg.norm(resid) / b_norm if b_norm > 0 else 0.0
        if epsilon is not None and rel <= epsilon:
            break
        if not np.linalg.norm(resid) < prev * (1 - 1e-12):
            break
        prev = np.linalg.norm(resid)
        with np.errstate(invalid="ignore", divide="ignore"):
            score = np.abs(a.T @ resid) / col_norms
        score[col_norms == 0] = -1.0
        score[active] = -1.0
        j = int(np.argmax(score))
        if score[j] <= 0:
            break
        trial = active + [j]
        sub = a[:, trial]
        q, r = linalg.qr(sub, mode="economic")
        rd = np.abs(np.diag(r))
        if not rd.min() > _QR_RANK_RTOL * rd.max():
            # column is numerically dependent on the active set
            col_norms = col_norms.copy()
            col_norms[j] = 0.0
            continue
        active = trial
        coef = linalg.solve_triangular(r, q.T @ b, lower=False)
        resid = b - sub @ coef

    c = np.zeros(n)
    c[active] = coef
    order = np.array(active, dtype=int)
    r_full = psi @ c - y
    rms = float(np.sqrt(np.mean(wv.w * r_full**2)))
    wdiag = None
    if len(active) and m >= len(active):
        try:
            wdiag = christoffel(psi[:, order], wv.w)
        except IllConditionedDesignError:
            wdiag = None
    return FitResult(c, diag, wv, rms, order, wdiag, m)


def _fmt(values):
    return " ".join(repr(float(v)) for v in np.asarray(values).reshape(-1))


def fit_to_config(result: FitResult, cfg: configparser.ConfigParser) -> None:
    sec = {
        "scheme": result.scheme.kind,
        "alpha": repr(result.weights.alpha),
        "n_samples": str(result.n_samples),
        "coefficients": _fmt(result.coefficients),
        "active_set": " ".join(str(int(i)) for i in result.active_set),
        "residual_rms": repr(result.residual_rms),
        "log_base": LOG_BASE,
        "kappa": repr(result.diagnostics.kappa),
        "score_lr": repr(result.diagnostics.score_lr),
        "gram_condition": repr(result.diagnostics.gram_condition),
    }
    if result.weighted_diagnostics is not None:
        sec["score_lr_weighted"] = repr(result.weighted_diagnostics.score_lr)
        sec["gram_condition_weighted"] = repr(result.weighted_diagnostics.gram_condition)
    cfg["fit"] = sec


def fit_from_config(cfg: configparser.ConfigParser) -> FitResult:
    """Rebuild the parts of a FitResult needed for evaluation.

    Per-sample arrays (Christoffel values, weights) are not stored; the
    restored diagnostics carry empty ``K`` and weight vectors.
    """
    try:
        s = cfg["fit"]
        scheme = Scheme(s["scheme"], float(s["alpha"]))
        coeffs = np.array([float(v) for v in s["coefficients"].split()])
        active = np.array([int(v) for v in s["active_set"].split()], dtype=int)
        diag = ChristoffelDiagnostics(
            np.zeros(0), float(s["kappa"]), float(s["gram_condition"]), float(s["score_lr"])
        )
        wdiag = None
        if "score_lr_weighted" in s:
            wdiag = ChristoffelDiagnostics(
                np.zeros(0), math.nan, float(s["gram_condition_weighted"]), float(s["score_lr_weighted"])
            )
        return FitResult(
            coeffs,
            diag,
            WeightVector(np.zeros(0), scheme.alpha, scheme),
            float(s["residual_rms"]),
            active,
            wdiag,
            int(s["n_samples"]),
        )
    except (KeyError, ValueError) as exc:
        raise ConfigurationError(f"malformed fit description: {exc}") from exc


def save_fit(result: FitResult, path) -> None:
    cfg = configparser.ConfigParser()
    fit_to_config(result, cfg)
    buf = io.StringIO()
    cfg.write(buf)
    Path(path).write_text(buf.getvalue(), encoding="utf-8")


def load_fit(path) -> FitResult:
    cfg = configparser.ConfigParser()
    if not cfg.read(path, encoding="utf-8"):
        raise ConfigurationError(f"cannot read fit file {path}")
    return fit_from_config(cfg)
