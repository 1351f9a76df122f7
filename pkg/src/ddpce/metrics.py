"""Distribution summaries and signed percent deviations against a reference."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .errors import ConfigurationError, UndefinedDeviationError

__all__ = [
    "QUANTILE_METHOD",
    "STD_CONVENTION",
    "DistributionSummary",
    "DeviationRow",
    "quantile",
    "percent_deviation",
    "summarize",
    "deviation_row",
]

# order-statistic interpolation at h = (n - 1) * level (0-based), numpy's "linear"
QUANTILE_METHOD = "linear"
STD_CONVENTION = "population"


def quantile(samples, level: float) -> float:
    x = np.asarray(samples, dtype=float).reshape(-1)
    if x.size == 0:
        raise ConfigurationError("quantile of an empty sample")
    if not 0 < level < 1:
        raise ConfigurationError(f"quantile level must lie in (0, 1), got {level}")
    return float(np.quantile(x, level, method=QUANTILE_METHOD))


def percent_deviation(surrogate_stat: float, reference_stat: float) -> float:
    """``100 (s - r) / |r|``, sign kept."""
    if reference_stat == 0:
        raise UndefinedDeviationError("percent deviation against a zero reference is undefined")
    return 100.0 * (surrogate_stat - reference_stat) / abs(reference_stat)


@dataclass(frozen=True)
class DistributionSummary:
    mean: float
    std: float
    quantiles: dict = field(default_factory=dict)

    def q(self, level: float) -> float:
        return self.quantiles[level]


def summarize(samples, levels=(0.05, 0.95)) -> DistributionSummary:
    """Mean and population standard deviation plus the requested quantiles."""
    x = np.asarray(samples, dtype=float).reshape(-1)
    if x.size == 0:
        raise ConfigurationError("cannot summarize an empty sample")
    levels = sorted(set(float(v) for v in levels) | {0.05, 0.95})
    qs = np.quantile(x, levels, method=QUANTILE_METHOD)
    return DistributionSummary(
        float(x.mean()), float(x.std()), {lv: float(q) for lv, q in zip(levels, qs)}
    )


@dataclass(frozen=True)
class DeviationRow:
    """One line of the comparison table; deviations are signed percentages."""

    case: str
    alpha: float
    p5_dev: float
    p95_dev: float
    mean_dev: float
    std_dev: float
    score_lr: float
    score_lr_weighted: float = float("nan")
    gram_condition_weighted: float = float("nan")
    n_extrapolated: int = 0
    error: Optional[str] = None

    @property
    def ok(self) -> bool:
        return self.error is None


def deviation_row(case, alpha, surrogate: DistributionSummary, reference: DistributionSummary,
                  score_lr, score_lr_weighted=float("nan"), gram_condition_weighted=float("nan"),
                  n_extrapolated=0) -> DeviationRow:
    return DeviationRow(
        case,
        alpha,
        percent_deviation(surrogate.q(0.05), reference.q(0.05)),
        percent_deviation(surrogate.q(0.95), reference.q(0.95)),
        percent_deviation(surrogate.mean, reference.mean),
        percent_deviation(surrogate.std, reference.std),
        score_lr,
        score_lr_weighted,
        gram_condition_weighted,
        n_extrapolated,
    )
