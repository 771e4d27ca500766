"""Population size estimation from zero-truncated count data.

Homogeneous estimators (Zelterman, Chao, truncated Poisson MLE) work on a
:class:`FrequencyTable`; the covariate-adjusted versions work on a
:class:`Dataset` with a :class:`ModelSpec`. :mod:`popsize.estimators` wraps
both in scikit-learn style classes.
"""

from .counts import FrequencyTable, poisson_pmf, table_from_counts, zt_poisson_pmf
from .covariate import (
    UnitWeights,
    unit_weights,
    zelterman_reg_variance,
    zelterman_regression,
    zt_poisson_regression_estimate,
)
from .data import (
    Covariate,
    Dataset,
    DesignMatrix,
    ModelSpec,
    ObservedUnit,
    build_design,
    load_heroin,
    load_methamphetamine,
    load_bangkok_frequencies,
    read_frequency_csv,
    read_individual_csv,
)
from .estimators import (
    ChaoEstimator,
    TruncatedPoissonEstimator,
    TruncatedPoissonRegression,
    ZeltermanEstimator,
    ZeltermanRegression,
)
from .exceptions import (
    ConvergenceError,
    DataValidationError,
    DegenerateDataError,
    DomainError,
    NumericalError,
    PopsizeError,
    SchemaError,
    SeparationError,
    SingularDesignError,
    UsageError,
)
from .glm import FitResult, LrtResult, fit_logistic, fit_zt_poisson_reg, likelihood_ratio_test
from .homogeneous import (
    Method,
    PopulationEstimate,
    RateEstimate,
    chao_estimate,
    horvitz_thompson,
    zelterman_estimate,
    zelterman_lambda,
    zt_poisson_mle,
)

__version__ = "0.1.0"
