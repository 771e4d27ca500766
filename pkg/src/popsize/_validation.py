"""Input checks shared by the estimator classes."""

import numpy as np
from sklearn.utils.validation import check_array, column_or_1d

from .counts import FrequencyTable
from .exceptions import DataValidationError


def check_counts(y):
    """Return ``y`` as a 1-D int64 array of truncated counts (all ``>= 1``)."""
    if isinstance(y, FrequencyTable):
        return y.to_counts()
    y = column_or_1d(np.asarray(y), warn=True)
    if y.size == 0:
        raise DataValidationError("no observed units", reason="n=0")
    if y.dtype.kind == "f":
        if not np.all(np.isfinite(y)) or np.any(y != np.round(y)):
            raise DataValidationError("counts must be integers", reason="count-non-integer")
    elif y.dtype.kind not in "iu":
        raise DataValidationError("counts must be integers", reason="count-non-integer")
    y = y.astype(np.int64)
    bad = np.flatnonzero(y < 1)
    if bad.size:
        raise DataValidationError(
            f"count at index {bad[0]} is {y[bad[0]]}; zero-truncated counts are >= 1",
            reason="count<1",
        )
    return y


def check_covariates(X, n_rows=None):
    """Return a finite float design (n, p); ``None`` means no covariates."""
    if X is None:
        if n_rows is None:
            raise DataValidationError("covariates required", reason="no-covariates")
        return np.empty((n_rows, 0))
    X = check_array(X, dtype=float, ensure_min_features=0, ensure_all_finite=True)
    if n_rows is not None and X.shape[0] != n_rows:
        raise DataValidationError(
            f"X has {X.shape[0]} rows but y has {n_rows}", reason="shape"
        )
    return X


def feature_names(X, p):
    cols = getattr(X, "columns", None)
    if cols is not None:
        return tuple(str(c) for c in cols)
    return tuple(f"x{k}" for k in range(p))
