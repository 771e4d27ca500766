"""scikit-learn compatible estimator classes.

The functional API (:mod:`popsize.homogeneous`, :mod:`popsize.covariate`) is
the reference implementation; these classes wrap it so that estimators can
be cloned, have their parameters inspected with ``get_params`` and slot into
tooling built around ``fit``/``predict``.

Homogeneous estimators take only the observed counts::

    ZeltermanEstimator().fit(counts).population_size_

Regression estimators take a numeric covariate matrix (already encoded; no
intercept column) and the counts::

    ZeltermanRegression().fit(X, counts).population_size_ci_
"""

import numpy as np
from scipy.special import expit
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_is_fitted

from ._validation import check_counts, check_covariates, feature_names
from .counts import table_from_counts
from .covariate import (
    unit_weights,
    zelterman_regression_design,
    zt_poisson_regression_design,
)
from .data import DesignMatrix
from .homogeneous import chao_estimate, zelterman_estimate, zelterman_lambda, zt_poisson_mle

__all__ = [
    "ZeltermanEstimator",
    "ChaoEstimator",
    "TruncatedPoissonEstimator",
    "ZeltermanRegression",
    "TruncatedPoissonRegression",
]


class _PopulationSizeMixin:
    def _store_estimate(self, est):
        self.estimate_ = est
        self.population_size_ = est.n_hat
        self.population_size_se_ = est.se
        self.population_size_ci_ = (est.ci_low, est.ci_high)
        self.n_observed_ = est.n_observed


class _HomogeneousEstimator(_PopulationSizeMixin, BaseEstimator):
    def fit(self, y, X=None):
        """Fit from observed counts (array of ints >= 1 or a FrequencyTable).

        ``X`` is accepted for API symmetry and ignored.
        """
        self.table_ = table_from_counts(check_counts(y))
        self._fit_table(self.table_)
        return self


class ZeltermanEstimator(_HomogeneousEstimator):
    """Zelterman estimator ``n / (1 - exp(-2 f2 / f1))``.

    Attributes
    ----------
    rate_ : RateEstimate
    estimate_ : PopulationEstimate
    population_size_ : float
    population_size_se_ : float
    population_size_ci_ : tuple of float
    """

    def _fit_table(self, table):
        self.rate_ = zelterman_lambda(table, 1)
        self._store_estimate(zelterman_estimate(table))


class ChaoEstimator(_HomogeneousEstimator):
    """Chao lower-bound estimator ``n + f1**2 / (2 f2)``."""

    def _fit_table(self, table):
        self._store_estimate(chao_estimate(table))


class TruncatedPoissonEstimator(_HomogeneousEstimator):
    """Homogeneous zero-truncated Poisson maximum likelihood."""

    def _fit_table(self, table):
        self.rate_, est = zt_poisson_mle(table)
        self._store_estimate(est)


class _RegressionEstimator(_PopulationSizeMixin, BaseEstimator):
    _rate_factor = 1.0

    def __init__(self, fit_intercept=True):
        self.fit_intercept = fit_intercept

    def _design(self, X):
        return np.column_stack([np.ones(len(X)), X]) if self.fit_intercept else X

    def fit(self, X, y):
        """Fit on covariates ``X`` (n, p) and truncated counts ``y`` (n,).

        ``X=None`` fits an intercept-only model.
        """
        y = check_counts(y)
        Xa = check_covariates(X, len(y))
        names = feature_names(X, Xa.shape[1])
        cols = (("intercept",) if self.fit_intercept else ()) + names
        design = DesignMatrix(self._design(Xa), cols)
        fit, est, weights = self._fit_design(design, y)
        self.n_features_in_ = Xa.shape[1]
        if hasattr(X, "columns"):
            self.feature_names_in_ = np.asarray(names, dtype=object)
        self.fit_ = fit
        self.weights_ = weights
        self.cov_ = fit.cov_beta
        if self.fit_intercept:
            self.intercept_, self.coef_ = float(fit.beta[0]), fit.beta[1:]
        else:
            self.intercept_, self.coef_ = 0.0, fit.beta
        self._store_estimate(est)
        return self

    def _weights(self, X):
        check_is_fitted(self, "fit_")
        Xa = check_covariates(X, None if X is not None else 1)
        if Xa.shape[1] != self.n_features_in_:
            raise ValueError(
                f"X has {Xa.shape[1]} features, model was fitted with {self.n_features_in_}"
            )
        return unit_weights(self._design(Xa), self.fit_.beta, self._rate_factor)

    def decision_function(self, X):
        """Linear predictor ``x'beta``."""
        return self._weights(X).eta

    def predict(self, X):
        """Unit-level Poisson rate ``lambda_i``."""
        return self._weights(X).lam

    def inclusion_probability(self, X):
        """Probability ``1 - exp(-lambda_i)`` that a unit appears in the list."""
        return self._weights(X).w

    def estimate_population(self, X):
        """Horvitz-Thompson total ``sum 1 / w_i`` over the rows of ``X``."""
        return float(np.sum(1.0 / self._weights(X).w))


class ZeltermanRegression(_RegressionEstimator):
    """Covariate-adjusted Zelterman estimator.

    A logistic regression of ``[y == 2]`` on ``X`` is fitted to the units
    seen once or twice; ``lambda_i = 2 exp(x_i'beta)`` then feeds the
    Horvitz-Thompson sum over all observed units.

    Parameters
    ----------
    fit_intercept : bool, default=True

    Attributes
    ----------
    coef_, intercept_ : logistic coefficients
    cov_ : ndarray
        Coefficient covariance (intercept first when fitted).
    fit_ : FitResult
        Logistic fit; ``fit_.log_lik`` is the logistic log-likelihood.
    weights_ : UnitWeights
    estimate_ : PopulationEstimate
    population_size_, population_size_se_, population_size_ci_
    """

    _rate_factor = 2.0

    def _fit_design(self, design, y):
        return zelterman_regression_design(design, y)

    def predict_proba(self, X):
        """Columns: P(count = 1), P(count = 2) given the count is 1 or 2."""
        p = expit(self.decision_function(X))
        return np.column_stack([1.0 - p, p])


class TruncatedPoissonRegression(_RegressionEstimator):
    """Zero-truncated Poisson regression, ``lambda_i = exp(x_i'beta)``."""

    def _fit_design(self, design, y):
        return zt_poisson_regression_design(design, y)
