"""Data-driven polynomial chaos expansion with tempered Christoffel-weighted least squares."""

__version__ = "0.1.0"

from .errors import (
    BasisTooLargeError,
    ConfigurationError,
    DDPCEError,
    IllConditionedDesignError,
    NumericRangeError,
    RankDeficiencyError,
    SampleParseError,
    UndefinedDeviationError,
    UnderdeterminedSystemError,
)
from .sampling import InputSpec, SampleSet, draw_samples, load_samples, save_samples
from .basis import (
    MultiIndexSet,
    MultivariateBasis,
    UnivariateBasis,
    build_basis,
    build_multi_index,
    build_univariate,
    empirical_moments,
    evaluate_basis,
    load_basis,
    save_basis,
)
from .regression import (
    CLS,
    OLS,
    Scheme,
    assemble_design,
    christoffel,
    fit,
    gram,
    sparse_fit,
    weights,
)
from .surrogate import (
    SurrogateModel,
    analytic_moments,
    load_surrogate,
    predict,
    sample_output_distribution,
    save_surrogate,
)
from .metrics import percent_deviation, quantile, summarize
from .harness import ExperimentConfig, emit_report, load_config, parse_config, run_experiment
