"""Evaluation and output statistics of fitted PCE surrogates."""

from __future__ import annotations

import configparser
import io
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .basis import MultivariateBasis, basis_from_config, basis_to_config
from .errors import ConfigurationError
from .regression import FitResult, fit_from_config, fit_to_config
from .sampling import InputSpec, draw_samples

__all__ = [
    "SurrogateModel",
    "predict",
    "analytic_moments",
    "sample_output_distribution",
    "save_surrogate",
    "load_surrogate",
]


@dataclass(frozen=True, eq=False)
class SurrogateModel:
    """A coefficient vector bound to the basis it was fitted in."""

    basis: MultivariateBasis
    fit: FitResult

    def __post_init__(self):
        if self.fit.coefficients.shape != (self.basis.n_terms,):
            raise ConfigurationError(
                f"{self.fit.coefficients.shape[0]} coefficients for a basis of "
                f"{self.basis.n_terms} terms"
            )

    @property
    def coefficients(self) -> np.ndarray:
        return self.fit.coefficients

    def predict(self, x, return_extrapolated=False):
        """Surrogate value at one point (``d``-vector) or a batch (``(n, d)``).

        With ``return_extrapolated=True`` also returns the number of points
        lying outside the bounding box of the training samples.
        """
        x = np.asarray(x, dtype=float)
        single = x.ndim == 1 and x.shape[0] == self.basis.d
        if x.ndim == 1 and not single:
            if self.basis.d != 1:
                raise ConfigurationError(
                    f"point has dimension {x.shape[0]}, surrogate has {self.basis.d}"
                )
            x = x[:, None]
        batch = np.atleast_2d(x)
        if batch.shape[1] != self.basis.d:
            raise ConfigurationError(
                f"points have dimension {batch.shape[1]}, surrogate has {self.basis.d}"
            )
        if not np.all(np.isfinite(batch)):
            raise ConfigurationError("prediction points must be finite")
        values = self.basis.evaluate(batch) @ self.coefficients
        out = float(values[0]) if single else values
        if return_extrapolated:
            return out, int(self.basis.outside_hull(batch).sum())
        return out


def predict(model: SurrogateModel, x, return_extrapolated=False):
    return model.predict(x, return_extrapolated)


def analytic_moments(model: SurrogateModel):
    """Mean and variance of the surrogate under the empirical training measure.

    The constant term is the mean and the squared remaining coefficients
    sum to the variance, because the basis is orthonormal on the training
    samples.
    """
    idx = model.basis.multi_index.indices
    const = np.all(idx == 0, axis=1)
    c = model.coefficients
    return float(c[const].sum()), float(np.sum(c[~const] ** 2))


def sample_output_distribution(model: SurrogateModel, spec: InputSpec, m: int, seed: int,
                               return_extrapolated=False):
    """Surrogate predictions at ``draw_samples(spec, m, seed)``."""
    s = draw_samples(spec, m, seed)
    values, n_out = model.predict(s.x, return_extrapolated=True)
    if return_extrapolated:
        return values, n_out
    return values


def save_surrogate(model: SurrogateModel, path) -> None:
    cfg = configparser.ConfigParser()
    basis_to_config(model.basis, cfg)
    fit_to_config(model.fit, cfg)
    buf = io.StringIO()
    cfg.write(buf)
    Path(path).write_text(buf.getvalue(), encoding="utf-8")


def load_surrogate(path) -> SurrogateModel:
    cfg = configparser.ConfigParser()
    if not cfg.read(path, encoding="utf-8"):
        raise ConfigurationError(f"cannot read surrogate file {path}")
    return SurrogateModel(basis_from_config(cfg), fit_from_config(cfg))
