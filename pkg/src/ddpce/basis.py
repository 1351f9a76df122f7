"""
Orthonormal polynomial bases built from sample data.

Univariate polynomials are orthonormal with respect to the empirical
measure of the construction samples,

    (1/M) sum_i phi_k(x_i) phi_l(x_i) = delta_kl,

and multivariate terms are tensor products selected by a total-degree
truncation.

Samples are standardised to zero mean / unit variance before
orthogonalisation.  A :class:`UnivariateBasis` keeps its coefficients in the
standardised variable and exposes the composed monomial coefficients in the
original coordinates through :attr:`UnivariateBasis.coeffs`.
"""

from __future__ import annotations

import configparser
import io
import math
from dataclasses import dataclass
from itertools import combinations
from pathlib import Path

import numpy as np

from .errors import BasisTooLargeError, ConfigurationError, RankDeficiencyError

__all__ = [
    "UnivariateBasis",
    "MultiIndexSet",
    "MultivariateBasis",
    "DEFAULT_MAX_TERMS",
    "empirical_moments",
    "build_univariate",
    "build_univariate_stieltjes",
    "build_multi_index",
    "build_basis",
    "evaluate_basis",
    "save_basis",
    "load_basis",
    "basis_to_config",
    "basis_from_config",
]

DEFAULT_MAX_TERMS = 100_000

# relative norm below which a new orthogonal direction is treated as numerically zero
_RANK_TOL = 1e-10


def empirical_moments(samples, max_order: int) -> np.ndarray:
    """Raw empirical moments ``mu_r = mean(x**r)`` for ``r = 0..max_order``.

    Examples
    --------
    >>> empirical_moments([1.0, 2.0, 3.0], 2)
    array([1.        , 2.        , 4.66666667])
    """
    x = np.asarray(samples, dtype=float).reshape(-1)
    if x.size < 1:
        raise ConfigurationError("empirical_moments needs at least one sample")
    mu = np.empty(max_order + 1)
    mu[0] = 1.0
    power = np.ones_like(x)
    for r in range(1, max_order + 1):
        power = power * x
        mu[r] = power.mean()
    return mu


def _shift_up(c):
    """Coefficients of z * p(z) given those of p."""
    out = np.zeros_like(c)
    out[1:] = c[:-1]
    return out


def _standardize(x):
    shift = float(x.mean())
    scale = float(x.std())
    if not scale > 0.0:
        scale = 1.0
    return shift, scale


def _check_distinct(x, p):
    n_distinct = np.unique(x).size
    if n_distinct < p + 1:
        raise RankDeficiencyError(
            f"degree {p} needs at least {p + 1} distinct sample values, found "
            f"{n_distinct}; the achievable maximum degree is {n_distinct - 1}",
            max_degree=n_distinct - 1,
        )


@dataclass(frozen=True, eq=False)
class UnivariateBasis:
    """Orthonormal polynomials ``phi_0..phi_p`` of one input variable.

    Attributes
    ----------
    degree : int
        Highest polynomial degree ``p``.
    shift, scale : float
        Standardisation ``z = (x - shift) / scale`` used internally.
    std_coeffs : numpy.ndarray
        ``(p+1, p+1)`` lower-triangular array; row ``k`` holds the monomial
        coefficients of ``phi_k`` in the standardised variable ``z``.
    source_moments : numpy.ndarray
        Raw empirical moments ``mu_0..mu_2p`` of the construction samples.
    lo, hi : float
        Range of the construction samples (used to flag extrapolation).
    """

    degree: int
    shift: float
    scale: float
    std_coeffs: np.ndarray
    source_moments: np.ndarray
    lo: float
    hi: float

    @property
    def coeffs(self) -> np.ndarray:
        """Monomial coefficients in the original variable ``x`` (row ``k`` is ``phi_k``)."""
        p = self.degree
        # T[r, q]: coefficient of x**q in ((x - shift) / scale)**r
        T = np.zeros((p + 1, p + 1))
        for r in range(p + 1):
            for q in range(r + 1):
                T[r, q] = math.comb(r, q) * (-self.shift) ** (r - q) / self.scale**r
        return self.std_coeffs @ T

    def __call__(self, x) -> np.ndarray:
        """Evaluate all ``phi_k`` at ``x``; returns shape ``x.shape + (p+1,)``."""
        z = (np.asarray(x, dtype=float) - self.shift) / self.scale
        powers = z[..., None] ** np.arange(self.degree + 1)
        return powers @ self.std_coeffs.T

    def truncate(self, p: int) -> "UnivariateBasis":
        if not 0 <= p <= self.degree:
            raise ConfigurationError(f"cannot truncate degree {self.degree} basis to {p}")
        return UnivariateBasis(
            p,
            self.shift,
            self.scale,
            self.std_coeffs[: p + 1, : p + 1].copy(),
            self.source_moments[: 2 * p + 1].copy(),
            self.lo,
            self.hi,
        )


def build_univariate(samples, p: int) -> UnivariateBasis:
    """Orthonormal polynomials up to degree ``p`` for the empirical measure of ``samples``.

    Gram-Schmidt with one full reorthogonalisation pass.  The candidate for
    degree ``k`` is ``z * phi_{k-1}(z)`` rather than the bare monomial
    ``z**k``; both span the same space, the former is far better
    conditioned.  Each polynomial has a positive leading coefficient.

    Parameters
    ----------
    samples : array_like
        One-dimensional sample values; duplicates are allowed.
    p : int
        Maximum degree.

    Raises
    ------
    RankDeficiencyError
        If the samples hold fewer than ``p + 1`` distinct values.
    """
    x = np.asarray(samples, dtype=float).reshape(-1)
    if p < 0:
        raise ConfigurationError(f"degree must be >= 0, got {p}")
    if x.size < 1:
        raise ConfigurationError("need at least one sample")
    _check_distinct(x, p)
    shift, scale = _standardize(x)
    z = (x - shift) / scale

    Q = np.zeros((x.size, p + 1))
    C = np.zeros((p + 1, p + 1))
    Q[:, 0] = 1.0
    C[0, 0] = 1.0
    for k in range(1, p + 1):
        v = z * Q[:, k - 1]
        c = _shift_up(C[k - 1])
        start = np.sqrt(np.mean(v * v))
        for _ in range(2):
            for j in range(k):
                h = np.mean(v * Q[:, j])
                v = v - h * Q[:, j]
                c = c - h * C[j]
        norm = np.sqrt(np.mean(v * v))
        if not norm > _RANK_TOL * max(start, 1.0):
            raise RankDeficiencyError(
                f"samples are numerically degenerate at degree {k}; "
                f"the achievable maximum degree is {k - 1}",
                max_degree=k - 1,
            )
        Q[:, k] = v / norm
        C[k] = c / norm

    return UnivariateBasis(
        p, shift, scale, C, empirical_moments(x, 2 * p), float(x.min()), float(x.max())
    )


def build_univariate_stieltjes(samples, p: int) -> UnivariateBasis:
    """Same basis as :func:`build_univariate`, via the moment-based Stieltjes recurrence.

    Works purely from the empirical moments of the standardised samples:
    monic polynomials follow ``pi_{k+1} = (z - a_k) pi_k - b_k pi_{k-1}``
    with inner products evaluated through the Hankel moment matrix.
    Kept as an independent cross-check of the Gram-Schmidt route; it loses
    accuracy faster as ``p`` grows.
    """
    x = np.asarray(samples, dtype=float).reshape(-1)
    if p < 0:
        raise ConfigurationError(f"degree must be >= 0, got {p}")
    _check_distinct(x, p)
    shift, scale = _standardize(x)
    mu = empirical_moments((x - shift) / scale, 2 * p + 2)
    H = np.array([[mu[r + s] for s in range(p + 2)] for r in range(p + 2)])

    def inner(a, b):
        n = len(a)
        return float(a @ H[:n, :n] @ b)

    monic = [np.zeros(p + 2) for _ in range(p + 1)]
    monic[0][0] = 1.0
    norms = [inner(monic[0], monic[0])]
    for k in range(p):
        zk = _shift_up(monic[k])
        a_k = inner(zk, monic[k]) / norms[k]
        nxt = zk - a_k * monic[k]
        if k > 0:
            nxt -= (norms[k] / norms[k - 1]) * monic[k - 1]
        monic[k + 1] = nxt
        norms.append(inner(nxt, nxt))
        if not norms[-1] > _RANK_TOL:
            raise RankDeficiencyError(
                f"moment recurrence breaks down at degree {k + 1}", max_degree=k
            )
    C = np.array([monic[k][: p + 1] / math.sqrt(norms[k]) for k in range(p + 1)])
    return UnivariateBasis(
        p, shift, scale, C, empirical_moments(x, 2 * p), float(x.min()), float(x.max())
    )


@dataclass(frozen=True, eq=False)
class MultiIndexSet:
    """Total-degree multi-index set in canonical order.

    Indices are grouped by total degree; within a degree they are in
    descending lexicographic order, e.g. ``(0,0), (1,0), (0,1)``.
    """

    indices: np.ndarray
    degree: int

    @property
    def d(self) -> int:
        return self.indices.shape[1]

    def __len__(self):
        return self.indices.shape[0]

    def __iter__(self):
        return (tuple(int(v) for v in row) for row in self.indices)

    def position(self, nu) -> int:
        hits = np.flatnonzero(np.all(self.indices == np.asarray(nu), axis=1))
        if hits.size == 0:
            raise KeyError(tuple(nu))
        return int(hits[0])


def _compositions(total, d):
    """All ``d``-tuples of non-negative ints summing to ``total``, descending lex order."""
    # stars and bars; bar positions ascending yields descending-lex tuples
    out = []
    for bars in combinations(range(total + d - 1), d - 1):
        prev = -1
        parts = []
        for b in bars:
            parts.append(b - prev - 1)
            prev = b
        parts.append(total + d - 1 - prev - 1)
        out.append(tuple(parts))
    out.sort(reverse=True)
    return out


def build_multi_index(d: int, p: int, max_terms: int = DEFAULT_MAX_TERMS) -> MultiIndexSet:
    if d < 1 or p < 0:
        raise ConfigurationError(f"need d >= 1 and p >= 0, got d={d}, p={p}")
    n_terms = math.comb(d + p, p)
    if n_terms > max_terms:
        raise BasisTooLargeError(n_terms, max_terms)
    rows = [nu for t in range(p + 1) for nu in _compositions(t, d)]
    return MultiIndexSet(np.array(rows, dtype=int).reshape(n_terms, d), p)


@dataclass(frozen=True, eq=False)
class MultivariateBasis:
    univariate: tuple
    multi_index: MultiIndexSet

    def __post_init__(self):
        object.__setattr__(self, "univariate", tuple(self.univariate))
        if len(self.univariate) != self.multi_index.d:
            raise ConfigurationError(
                f"{len(self.univariate)} univariate bases for a {self.multi_index.d}-dimensional index set"
            )
        for j, ub in enumerate(self.univariate):
            if self.multi_index.indices[:, j].max(initial=0) > ub.degree:
                raise ConfigurationError(
                    f"multi-index exceeds degree {ub.degree} of dimension {j + 1}"
                )

    @property
    def d(self) -> int:
        return len(self.univariate)

    @property
    def n_terms(self) -> int:
        return len(self.multi_index)

    def evaluate(self, x) -> np.ndarray:
        """Evaluate all terms at a batch ``x`` of shape ``(n, d)``; returns ``(n, N)``."""
        x = np.asarray(x, dtype=float)
        if x.ndim == 1:
            x = x[None, :]
        if x.shape[1] != self.d:
            raise ConfigurationError(f"points have dimension {x.shape[1]}, basis has {self.d}")
        idx = self.multi_index.indices
        out = np.ones((x.shape[0], idx.shape[0]))
        for j, ub in enumerate(self.univariate):
            table = ub(x[:, j])
            active = idx[:, j] > 0
            out[:, active] *= table[:, idx[active, j]]
        return out

    def outside_hull(self, x) -> np.ndarray:
        """Boolean mask of points outside the bounding box of the construction samples."""
        x = np.atleast_2d(np.asarray(x, dtype=float))
        lo = np.array([ub.lo for ub in self.univariate])
        hi = np.array([ub.hi for ub in self.univariate])
        return np.any((x < lo) | (x > hi), axis=1)


def build_basis(samples, p: int, max_terms: int = DEFAULT_MAX_TERMS) -> MultivariateBasis:
    """Total-degree ``p`` tensor basis from an ``(M, d)`` sample matrix or a SampleSet."""
    x = getattr(samples, "x", samples)
    x = np.asarray(x, dtype=float)
    if x.ndim == 1:
        x = x[:, None]
    mi = build_multi_index(x.shape[1], p, max_terms)
    return MultivariateBasis(tuple(build_univariate(x[:, j], p) for j in range(x.shape[1])), mi)


def evaluate_basis(basis: MultivariateBasis, x) -> np.ndarray:
    """All ``N`` basis values at the single point ``x``."""
    x = np.asarray(x, dtype=float).reshape(-1)
    return basis.evaluate(x[None, :])[0]


def _fmt(values):
    return " ".join(repr(float(v)) for v in np.asarray(values).reshape(-1))


def _parse_floats(text):
    return np.array([float(t) for t in text.split()])


def basis_to_config(basis: MultivariateBasis, cfg: configparser.ConfigParser) -> None:
    cfg["basis"] = {
        "d": str(basis.d),
        "degree": str(basis.multi_index.degree),
        "indices": "; ".join(" ".join(str(int(v)) for v in row) for row in basis.multi_index.indices),
    }
    for j, ub in enumerate(basis.univariate):
        cfg[f"dim{j + 1}"] = {
            "degree": str(ub.degree),
            "shift": repr(ub.shift),
            "scale": repr(ub.scale),
            "lo": repr(ub.lo),
            "hi": repr(ub.hi),
            "std_coeffs": "; ".join(_fmt(row) for row in ub.std_coeffs),
            "coeffs": "; ".join(_fmt(row) for row in ub.coeffs),
            "moments": _fmt(ub.source_moments),
        }


def basis_from_config(cfg: configparser.ConfigParser) -> MultivariateBasis:
    try:
        sec = cfg["basis"]
        d = int(sec["d"])
        rows = [r.split() for r in sec["indices"].split(";")]
        indices = np.array([[int(v) for v in r] for r in rows], dtype=int).reshape(-1, d)
        mi = MultiIndexSet(indices, int(sec["degree"]))
        uni = []
        for j in range(d):
            s = cfg[f"dim{j + 1}"]
            p = int(s["degree"])
            coeffs = np.array([_parse_floats(r) for r in s["std_coeffs"].split(";")]).reshape(p + 1, p + 1)
            uni.append(
                UnivariateBasis(
                    p,
                    float(s["shift"]),
                    float(s["scale"]),
                    coeffs,
                    _parse_floats(s["moments"]),
                    float(s["lo"]),
                    float(s["hi"]),
                )
            )
    except (KeyError, ValueError) as exc:
        raise ConfigurationError(f"malformed basis description: {exc}") from exc
    return MultivariateBasis(tuple(uni), mi)


def save_basis(basis: MultivariateBasis, path) -> None:
    cfg = configparser.ConfigParser()
    basis_to_config(basis, cfg)
    buf = io.StringIO()
    cfg.write(buf)
    Path(path).write_text(buf.getvalue(), encoding="utf-8")


def load_basis(path) -> MultivariateBasis:
    cfg = configparser.ConfigParser()
    if not cfg.read(path, encoding="utf-8"):
        raise ConfigurationError(f"cannot read basis file {path}")
    return basis_from_config(cfg)
