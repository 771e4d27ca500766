"""Population size estimators that use only the frequency table.

All three estimators plug an estimate of the Poisson rate (or a lower bound
for the number of zeros) into the Horvitz-Thompson formula
``N = n / (1 - exp(-lambda))``. Confidence intervals for ``N`` are normal
intervals on the natural scale; those for ``lambda`` are built on the log
scale and exponentiated.
"""

import enum
import math
from dataclasses import dataclass
from statistics import NormalDist
from typing import Optional

import numpy as np

from .counts import FrequencyTable, mean_count, one_minus_exp_1p
from .exceptions import ConvergenceError, DegenerateDataError, DomainError

__all__ = [
    "Method",
    "PopulationEstimate",
    "RateEstimate",
    "Z95",
    "zelterman_lambda",
    "var_lambda1",
    "horvitz_thompson",
    "zelterman_estimate",
    "chao_estimate",
    "zt_poisson_mle",
]

#: two-sided 95% standard normal quantile
Z95 = NormalDist().inv_cdf(0.975)


class Method(str, enum.Enum):
    ZELTERMAN = "zelterman"
    CHAO = "chao"
    ZTPOISSON_MLE = "ztpoisson"
    ZELTERMAN_REGRESSION = "zelterman-reg"
    ZTPOISSON_REGRESSION = "ztpoisson-reg"

    def __str__(self):
        return self.value


@dataclass(frozen=True)
class PopulationEstimate:
    """Estimated population size with its variance decomposition.

    ``se**2 == var_sampling + var_parameter``. The first term is the
    Horvitz-Thompson variance with the inclusion probabilities held fixed,
    the second propagates the uncertainty of the estimated rate(s).
    """

    n_hat: float
    se: float
    ci_low: float
    ci_high: float
    n_observed: float
    method: Method
    var_sampling: float
    var_parameter: float
    warnings: tuple = ()

    @classmethod
    def from_variance(cls, n_hat, var_sampling, var_parameter, n_observed,
                      method, warnings=()):
        se = math.sqrt(var_sampling + var_parameter)
        return cls(
            n_hat=float(n_hat),
            se=se,
            ci_low=float(n_hat) - Z95 * se,
            ci_high=float(n_hat) + Z95 * se,
            n_observed=n_observed,
            method=Method(method),
            var_sampling=float(var_sampling),
            var_parameter=float(var_parameter),
            warnings=tuple(warnings),
        )

    @property
    def f0_hat(self):
        """Estimated number of unobserved units."""
        return self.n_hat - self.n_observed

    @property
    def completeness(self):
        return self.n_observed / self.n_hat


@dataclass(frozen=True)
class RateEstimate:
    """Poisson rate estimate with a log-scale confidence interval.

    ``var_log_lambda`` is ``None`` when no variance formula is available
    (the Zelterman ratio for ``j != 1``); the interval is then ``None`` too.
    """

    lambda_hat: float
    var_log_lambda: Optional[float]
    ci_low: Optional[float]
    ci_high: Optional[float]

    @classmethod
    def from_log_variance(cls, lambda_hat, var_log_lambda):
        if var_log_lambda is None:
            return cls(float(lambda_hat), None, None, None)
        half = Z95 * math.sqrt(var_log_lambda)
        return cls(
            float(lambda_hat),
            float(var_log_lambda),
            lambda_hat * math.exp(-half),
            lambda_hat * math.exp(half),
        )

    @property
    def p_hat(self):
        """Binomial probability of a two among ones and twos, ``lambda/(2+lambda)``."""
        return self.lambda_hat / (2.0 + self.lambda_hat)


def zelterman_lambda(table: FrequencyTable, j: int = 1) -> RateEstimate:
    """Local Poisson rate from two neighbouring frequencies.

    ``lambda_j = (j + 1) f_{j+1} / f_j``. For ``j = 1`` this is also the
    maximum likelihood estimate of the binomial likelihood restricted to ones
    and twos, and ``Var(log lambda_1) = 1/f_1 + 1/f_2``.
    """
    if j < 1:
        raise DomainError("j must be >= 1", reason="j<1")
    fj, fj1 = table[j], table[j + 1]
    if fj <= 0:
        raise DegenerateDataError(
            f"denominator frequency zero (f{j}=0)", reason=f"f{j}=0"
        )
    if fj1 <= 0:
        raise DegenerateDataError(
            f"estimator collapses to lambda=0 (f{j + 1}=0)", reason=f"f{j + 1}=0"
        )
    lam = (j + 1) * fj1 / fj
    var_log = 1.0 / fj + 1.0 / fj1 if j == 1 else None
    return RateEstimate.from_log_variance(lam, var_log)


def var_lambda1(table: FrequencyTable) -> float:
    """Delta-method variance of ``lambda_1``: ``4 f2 (f1 + f2) / f1**3``."""
    f1, f2 = table[1], table[2]
    if f1 <= 0:
        raise DegenerateDataError("f1=0: variance undefined", reason="f1=0")
    return 4.0 * f2 * (f1 + f2) / f1**3


def horvitz_thompson(n, lam) -> float:
    """Horvitz-Thompson population size ``n / (1 - exp(-lam))``."""
    if not np.isfinite(lam) or lam <= 0:
        raise DomainError("lambda must be finite and > 0", reason="lambda<=0")
    return n / -math.expm1(-lam)


def _ht_variance(n, lam, var_log_lambda):
    """Variance terms of ``n / w`` with ``w = 1 - exp(-lam)`` and a log link."""
    w = -math.expm1(-lam)
    one_minus_w = math.exp(-lam)
    var_sampling = n * one_minus_w / w**2
    grad = n * one_minus_w * lam / w**2
    return var_sampling, grad**2 * var_log_lambda


def zelterman_estimate(table: FrequencyTable) -> PopulationEstimate:
    """Zelterman population size ``n / (1 - exp(-2 f2 / f1))``.

    The variance is the intercept-only case of the covariate-adjusted
    formula: the fixed-weight Horvitz-Thompson term plus a delta-method term
    for ``log lambda_1`` whose variance is ``1/f1 + 1/f2``.
    """
    rate = zelterman_lambda(table, 1)
    var_s, var_p = _ht_variance(table.n, rate.lambda_hat, rate.var_log_lambda)
    return PopulationEstimate.from_variance(
        horvitz_thompson(table.n, rate.lambda_hat),
        var_s,
        var_p,
        table.n,
        Method.ZELTERMAN,
    )


def chao_estimate(table: FrequencyTable) -> PopulationEstimate:
    """Chao lower-bound estimator ``n + f1**2 / (2 f2)``.

    Uses the asymptotic variance
    ``f2 * (r**4 / 4 + r**3 + r**2 / 2)`` with ``r = f1 / f2``
    (Chao, 1987). The variance is not decomposed; it is stored entirely in
    ``var_sampling``.
    """
    f1, f2 = table[1], table[2]
    if f2 <= 0:
        raise DegenerateDataError(
            "Chao estimator undefined: no doubletons (f2=0)", reason="f2=0"
        )
    if table.n <= 0:
        raise DegenerateDataError("empty frequency table", reason="n=0")
    r = f1 / f2
    var = f2 * (0.25 * r**4 + r**3 + 0.5 * r**2)
    return PopulationEstimate.from_variance(
        table.n + f1**2 / (2.0 * f2), var, 0.0, table.n, Method.CHAO
    )


def _zt_mean(lam):
    """Mean of the zero-truncated Poisson, ``lam / (1 - exp(-lam))``."""
    return lam / -math.expm1(-lam)


def _zt_mean_derivative(lam):
    return one_minus_exp_1p(lam) / math.expm1(-lam) ** 2


def _solve_zt_score(ybar, tol=1e-10, max_iter=100):
    """Root of ``lam / (1 - exp(-lam)) = ybar`` by bracketed Newton."""
    lo, hi = 0.0, 2.0 * ybar
    lam = ybar
    for it in range(1, max_iter + 1):
        g = _zt_mean(lam) - ybar
        if g > 0:
            hi = lam
        else:
            lo = lam
        step = g / _zt_mean_derivative(lam)
        new = lam - step
        if not (lo < new < hi):
            new = 0.5 * (lo + hi)
        if abs(new - lam) < tol:
            return new, it
        lam = new
    raise ConvergenceError(
        f"truncated Poisson score equation did not converge in {max_iter} "
        f"iterations (last lambda={lam!r})",
        reason="no-convergence",
        last_iterate=lam,
    )


def zt_poisson_mle(table: FrequencyTable):
    """Homogeneous zero-truncated Poisson maximum likelihood estimate.

    Returns
    -------
    rate : RateEstimate
        ``lambda_hat`` and the log-scale variance from the observed
        information.
    estimate : PopulationEstimate
        Horvitz-Thompson population size with the log-link delta-method
        variance term.
    """
    ybar = mean_count(table)
    if ybar <= 1.0:
        raise DegenerateDataError(
            "mean count <= 1: truncated Poisson MLE is at the boundary lambda=0",
            reason="mean<=1",
        )
    lam, _ = _solve_zt_score(ybar)
    n = table.n
    w = -math.expm1(-lam)
    info = table.total / lam**2 - n * math.exp(-lam) / w**2
    var_log = 1.0 / (info * lam**2)
    rate = RateEstimate.from_log_variance(lam, var_log)
    var_s, var_p = _ht_variance(n, lam, var_log)
    est = PopulationEstimate.from_variance(
        horvitz_thompson(n, lam), var_s, var_p, n, Method.ZTPOISSON_MLE
    )
    return rate, est
