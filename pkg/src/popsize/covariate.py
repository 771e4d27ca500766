"""Covariate-adjusted Horvitz-Thompson population size estimators.

Zelterman regression
    Only units seen once or twice enter the likelihood: a logistic
    regression of ``z = [y == 2]`` on the covariates. The fitted linear
    predictor gives a unit-specific Poisson rate ``lambda_i = 2 exp(eta_i)``
    and the population size is ``sum_i 1 / (1 - exp(-lambda_i))`` over *all*
    observed units, including those seen three or more times.

Truncated Poisson regression
    All units enter a zero-truncated Poisson regression with
    ``lambda_i = exp(eta_i)``; the same Horvitz-Thompson sum follows.

The variance has two parts: the conditional Horvitz-Thompson term
``sum (1 - w_i) / w_i**2`` and a delta-method term ``g' Cov(beta) g`` where
``g`` is the gradient of the whole sum with respect to ``beta``.
"""

from dataclasses import dataclass

import numpy as np

from .data import Dataset, DesignMatrix, ModelSpec, build_design
from .exceptions import DegenerateDataError, UsageError
from .glm import fit_logistic, fit_zt_poisson_reg
from .homogeneous import Method, PopulationEstimate

__all__ = [
    "UnitWeights",
    "W_FLOOR",
    "unit_weights",
    "zelterman_reg_variance",
    "zelterman_regression",
    "zelterman_regression_design",
    "zt_poisson_regression_estimate",
    "zt_poisson_regression_design",
]

#: inclusion probabilities are clamped from below at this value
W_FLOOR = 1e-12


@dataclass(frozen=True)
class UnitWeights:
    """Per-unit inclusion probabilities and their gradients.

    Attributes
    ----------
    eta : ndarray, shape (n,)
        Linear predictor.
    v : ndarray, shape (n,)
        ``-lambda_i``, i.e. ``-2 exp(eta)`` (Zelterman) or ``-exp(eta)``.
    w : ndarray, shape (n,)
        Inclusion probability ``1 - exp(v)``, clamped at :data:`W_FLOOR`.
    grad : ndarray, shape (n, p)
        Gradient of ``1 / w_i`` with respect to ``beta``:
        ``(1 - w_i) v_i / w_i**2 * x_i``.
    n_clamped : int
        Number of units whose ``w`` hit the floor.
    """

    eta: np.ndarray
    v: np.ndarray
    w: np.ndarray
    grad: np.ndarray
    n_clamped: int = 0

    @property
    def lam(self):
        return -self.v

    @property
    def inverse(self):
        return 1.0 / self.w


def unit_weights(X, beta, rate_factor=2.0) -> UnitWeights:
    """Inclusion probabilities ``w_i = 1 - exp(-rate_factor * exp(x_i'beta))``."""
    X = np.asarray(X, dtype=float)
    eta = X @ np.asarray(beta, dtype=float)
    v = -rate_factor * np.exp(eta)
    w = -np.expm1(v)
    low = w < W_FLOOR
    w = np.where(low, W_FLOOR, w)
    one_minus_w = np.exp(v)
    grad = ((one_minus_w * v) / w**2)[:, None] * X
    return UnitWeights(eta, v, w, grad, int(low.sum()))


def zelterman_reg_variance(weights: UnitWeights, cov_beta):
    """Variance components of ``sum_i 1 / w_i``.

    Returns
    -------
    var_sampling : float
        ``sum (1 - w_i) / w_i**2``.
    var_parameter : float
        ``G' Cov(beta) G`` with ``G = sum_i grad_i``. Gradients are summed
        before the quadratic form because every ``w_i`` depends on the same
        ``beta``.
    """
    cov = np.atleast_2d(np.asarray(cov_beta, dtype=float))
    grad = np.asarray(weights.grad)
    if grad.ndim != 2 or cov.shape != (grad.shape[1], grad.shape[1]):
        raise UsageError(
            f"gradient has {grad.shape[-1]} columns but covariance is {cov.shape}",
            reason="dimension-mismatch",
        )
    w = weights.w
    var_sampling = float(np.sum((1.0 - w) / w**2))
    g = grad.sum(axis=0)
    var_parameter = float(max(g @ cov @ g, 0.0))
    return var_sampling, var_parameter


def _estimate(weights, fit, n, method):
    var_s, var_p = zelterman_reg_variance(weights, fit.cov_beta)
    warnings = []
    if weights.n_clamped:
        warnings.append(
            f"{weights.n_clamped} inclusion probabilities clamped at {W_FLOOR:g}; "
            "population size is dominated by those units"
        )
    return PopulationEstimate.from_variance(
        float(np.sum(1.0 / weights.w)), var_s, var_p, n, method, warnings
    )


def zelterman_regression_design(design: DesignMatrix, y):
    """Zelterman regression on a prebuilt design (rows aligned with ``y``)."""
    y = np.asarray(y)
    ones, twos = y == 1, y == 2
    if not ones.any():
        raise DegenerateDataError("no units with count 1 (f1=0)", reason="f1=0")
    if not twos.any():
        raise DegenerateDataError("no units with count 2 (f2=0)", reason="f2=0")
    sub = ones | twos
    fit = fit_logistic(design.take(sub), twos[sub].astype(float))
    weights = unit_weights(design.values, fit.beta, 2.0)
    est = _estimate(weights, fit, len(y), Method.ZELTERMAN_REGRESSION)
    return fit, est, weights


def zelterman_regression(dataset: Dataset, spec: ModelSpec):
    """Covariate-adjusted Zelterman estimator.

    Parameters
    ----------
    dataset : Dataset
    spec : ModelSpec

    Returns
    -------
    fit : FitResult
        The logistic fit on units with count 1 or 2 (its ``log_lik`` and
        ``aic`` are the logistic ones).
    estimate : PopulationEstimate
    weights : UnitWeights
        For every observed unit, in dataset order.
    """
    design = build_design(dataset, spec)
    return zelterman_regression_design(design, dataset.counts)


def zt_poisson_regression_design(design: DesignMatrix, y):
    y = np.asarray(y)
    fit = fit_zt_poisson_reg(design, y)
    weights = unit_weights(design.values, fit.beta, 1.0)
    est = _estimate(weights, fit, len(y), Method.ZTPOISSON_REGRESSION)
    return fit, est, weights


def zt_poisson_regression_estimate(dataset: Dataset, spec: ModelSpec):
    """Population size under zero-truncated Poisson regression.

    Same return layout as :func:`zelterman_regression`; the fit uses all
    observed units.
    """
    design = build_design(dataset, spec)
    return zt_poisson_regression_design(design, dataset.counts)
