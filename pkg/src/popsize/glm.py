"""Maximum likelihood fitting for logistic and zero-truncated Poisson regression.

Both models use canonical links, so the observed and expected information
coincide at the optimum. Fitting is plain Newton-Raphson on the exact score
and Hessian with step-halving whenever a full step lowers the likelihood.
"""

from dataclasses import dataclass

import numpy as np
from scipy import linalg
from scipy.special import expit, gammaincc, gammaln

from .counts import log1mexp, one_minus_exp_1p
from .exceptions import (
    ConvergenceError,
    DataValidationError,
    DomainError,
    SeparationError,
    SingularDesignError,
    UsageError,
)

__all__ = [
    "FitResult",
    "LrtResult",
    "check_full_rank",
    "logistic_loglik",
    "logistic_score",
    "logistic_hessian",
    "ztp_loglik",
    "ztp_score",
    "ztp_hessian",
    "fit_logistic",
    "fit_zt_poisson_reg",
    "likelihood_ratio_test",
    "chi_square_upper_tail",
]

MAX_ITER = 100
STEP_TOL = 1e-8
LL_RTOL = 1e-12
RANK_RTOL = 1e-10
SEPARATION_BOUND = 30.0
MAX_HALVINGS = 40


@dataclass(frozen=True)
class FitResult:
    """Fitted regression coefficients and likelihood summaries.

    ``cov_beta`` is the inverse of the negative Hessian at ``beta``.
    """

    beta: np.ndarray
    cov_beta: np.ndarray
    log_lik: float
    aic: float
    n_fit: int
    converged: bool
    iterations: int
    columns: tuple = ()
    family: str = ""

    @property
    def se(self):
        return np.sqrt(np.diag(self.cov_beta))

    @property
    def n_params(self):
        return len(self.beta)


@dataclass(frozen=True)
class LrtResult:
    statistic: float
    df: int
    p_value: float


def _as_array(design):
    values = getattr(design, "values", design)
    X = np.asarray(values, dtype=float)
    if X.ndim != 2:
        raise UsageError("design matrix must be two-dimensional", reason="design-ndim")
    return X


def _columns_of(design, p):
    cols = getattr(design, "columns", None)
    if cols is None:
        return tuple(f"x{k}" for k in range(p))
    return tuple(cols)


def check_full_rank(X, rtol=RANK_RTOL):
    """Raise :class:`SingularDesignError` unless ``X`` has full column rank.

    Rank is read off the diagonal of a column-pivoted QR decomposition.
    """
    X = np.asarray(X, dtype=float)
    n, p = X.shape
    if p == 0:
        raise SingularDesignError("design matrix has no columns", reason="rank-deficient")
    if n < p:
        raise SingularDesignError(
            f"design has {n} rows but {p} columns", reason="rank-deficient"
        )
    _, r, piv = linalg.qr(X, mode="economic", pivoting=True)
    d = np.abs(np.diag(r))
    rank = int(np.sum(d > rtol * d[0])) if d[0] > 0 else 0
    if rank < p:
        raise SingularDesignError(
            f"design matrix is rank deficient (rank {rank} < {p} columns); "
            f"dependent column index {int(piv[rank])}",
            reason="rank-deficient",
        )


# --- logistic --------------------------------------------------------------

def logistic_loglik(beta, X, z):
    eta = X @ beta
    return float(np.sum(z * eta - np.logaddexp(0.0, eta)))


def logistic_score(beta, X, z):
    return X.T @ (z - expit(X @ beta))


def logistic_hessian(beta, X, z=None):
    p = expit(X @ beta)
    return -(X.T * (p * (1.0 - p))) @ X


# --- zero-truncated Poisson ------------------------------------------------

def _ztp_parts(beta, X):
    eta = X @ beta
    lam = np.exp(eta)
    w = -np.expm1(-lam)
    mu = lam / w
    return eta, lam, w, mu


def ztp_loglik(beta, X, y):
    eta, lam, _, _ = _ztp_parts(beta, X)
    return float(np.sum(y * eta - lam - log1mexp(lam) - gammaln(y + 1.0)))


def ztp_score(beta, X, y):
    _, _, _, mu = _ztp_parts(beta, X)
    return X.T @ (y - mu)


def ztp_hessian(beta, X, y=None):
    _, lam, w, _ = _ztp_parts(beta, X)
    # d mu / d eta = lam * (1 - e^-lam (1 + lam)) / w^2
    weight = lam * one_minus_exp_1p(lam) / w**2
    return -(X.T * weight) @ X


# --- Newton driver ---------------------------------------------------------

def _newton(loglik, score, hessian, beta0, check_separation):
    beta = beta0.copy()
    ll = loglik(beta)
    for it in range(1, MAX_ITER + 1):
        g = score(beta)
        H = hessian(beta)
        try:
            step = linalg.solve(-H, g, assume_a="pos")
        except (linalg.LinAlgError, ValueError):
            step = linalg.lstsq(-H, g)[0]
        t = 1.0
        for _ in range(MAX_HALVINGS):
            cand = beta + t * step
            ll_cand = loglik(cand)
            if np.isfinite(ll_cand) and ll_cand >= ll - 1e-12 * abs(ll):
                break
            t *= 0.5
        else:
            raise ConvergenceError(
                "step-halving failed to increase the log-likelihood",
                reason="step-halving",
                last_iterate=beta,
            )
        delta = cand - beta
        improved = ll_cand - ll
        beta, ll_prev, ll = cand, ll, ll_cand
        if check_separation and np.max(np.abs(beta)) > SEPARATION_BOUND and improved > 0:
            raise SeparationError(
                "logistic MLE diverges (|beta| > 30 while the likelihood still "
                "improves): complete or quasi-complete separation",
                reason="separation",
            )
        if np.max(np.abs(delta)) < STEP_TOL or abs(ll - ll_prev) < LL_RTOL * abs(ll_prev):
            return beta, ll, it
    raise ConvergenceError(
        f"Newton-Raphson did not converge in {MAX_ITER} iterations",
        reason="no-convergence",
        last_iterate=beta,
    )


def _finish(beta, ll, it, X, hessian, columns, family):
    H = hessian(beta)
    try:
        cov = linalg.inv(-H)
    except linalg.LinAlgError as exc:
        raise SingularDesignError(
            "information matrix is singular at the optimum", reason="singular-information"
        ) from exc
    cov = 0.5 * (cov + cov.T)
    k = len(beta)
    return FitResult(
        beta=beta,
        cov_beta=cov,
        log_lik=ll,
        aic=-2.0 * ll + 2.0 * k,
        n_fit=X.shape[0],
        converged=True,
        iterations=it,
        columns=columns,
        family=family,
    )


def _intercept_index(X):
    for k in range(X.shape[1]):
        if np.all(X[:, k] == 1.0):
            return k
    return None


def fit_logistic(design, z) -> FitResult:
    """Binary logistic regression by Newton-Raphson (IRLS).

    Parameters
    ----------
    design : DesignMatrix or array_like, shape (n, p)
        Full-rank design, normally with a leading intercept column.
    z : array_like of {0, 1}, shape (n,)

    Returns
    -------
    FitResult

    Raises
    ------
    SingularDesignError, SeparationError, ConvergenceError
    """
    X = _as_array(design)
    z = np.asarray(z, dtype=float)
    if z.shape != (X.shape[0],):
        raise UsageError("design rows and outcome length differ", reason="shape")
    if not np.all((z == 0) | (z == 1)):
        raise DataValidationError("logistic outcome must be 0/1", reason="non-binary")
    check_full_rank(X)
    zbar = z.mean()
    if zbar in (0.0, 1.0):
        raise SeparationError(
            "outcome is constant: logistic MLE diverges", reason="separation"
        )
    beta0 = np.zeros(X.shape[1])
    k = _intercept_index(X)
    if k is not None:
        beta0[k] = np.log(zbar / (1.0 - zbar))
    beta, ll, it = _newton(
        lambda b: logistic_loglik(b, X, z),
        lambda b: logistic_score(b, X, z),
        lambda b: logistic_hessian(b, X),
        beta0,
        check_separation=True,
    )
    return _finish(beta, ll, it, X, lambda b: logistic_hessian(b, X),
                   _columns_of(design, X.shape[1]), "logistic")


def fit_zt_poisson_reg(design, y) -> FitResult:
    """Zero-truncated Poisson regression with log link ``lambda = exp(x'beta)``.

    The log-likelihood is
    ``sum(y*eta - lambda - log(1 - exp(-lambda)) - log(y!))``.
    """
    X = _as_array(design)
    y = np.asarray(y, dtype=float)
    if y.shape != (X.shape[0],):
        raise UsageError("design rows and count length differ", reason="shape")
    if np.any(y < 1) or np.any(y != np.round(y)):
        raise DataValidationError("counts must be integers >= 1", reason="count<1")
    check_full_rank(X)
    if np.all(y == 1):
        raise ConvergenceError(
            "all counts equal 1: truncated Poisson MLE lies at lambda -> 0",
            reason="mean<=1",
        )
    beta, ll, it = _newton(
        lambda b: ztp_loglik(b, X, y),
        lambda b: ztp_score(b, X, y),
        lambda b: ztp_hessian(b, X),
        np.zeros(X.shape[1]),
        check_separation=False,
    )
    return _finish(beta, ll, it, X, lambda b: ztp_hessian(b, X),
                   _columns_of(design, X.shape[1]), "ztpoisson")


def chi_square_upper_tail(x, df) -> float:
    """Upper tail ``P(X > x)`` of a chi-square with ``df`` degrees of freedom."""
    if x < 0:
        raise DomainError("chi-square statistic must be >= 0", reason="x<0")
    if df < 1:
        raise DomainError("degrees of freedom must be >= 1", reason="df<1")
    return float(gammaincc(df / 2.0, x / 2.0))


def likelihood_ratio_test(full: FitResult, reduced: FitResult) -> LrtResult:
    """Likelihood ratio test of a reduced model nested in ``full``.

    Nesting is checked on column names when both fits carry them. Identical
    models give ``statistic = 0``, ``df = 0`` and ``p_value = 1``.
    """
    if full.family and reduced.family and full.family != reduced.family:
        raise UsageError("models belong to different families", reason="non-nested")
    if full.n_fit != reduced.n_fit:
        raise UsageError("models were fitted to different rows", reason="non-nested")
    if full.columns and reduced.columns:
        if not set(reduced.columns) <= set(full.columns):
            raise UsageError(
                f"reduced model columns {reduced.columns} are not a subset of "
                f"{full.columns}",
                reason="non-nested",
            )
    df = full.n_params - reduced.n_params
    if df < 0:
        raise UsageError("full model has fewer parameters than reduced", reason="non-nested")
    stat = 2.0 * (full.log_lik - reduced.log_lik)
    if stat < -1e-8:
        raise UsageError(
            f"negative likelihood ratio statistic {stat:.3g}: models not nested",
            reason="non-nested",
        )
    stat = max(stat, 0.0)
    if df == 0:
        return LrtResult(stat, 0, 1.0)
    return LrtResult(stat, df, chi_square_upper_tail(stat, df))
