"""Poisson and zero-truncated Poisson probabilities, frequency tables."""

from dataclasses import dataclass, field
from types import MappingProxyType
from typing import Iterable, Mapping

import numpy as np
from scipy.special import gammaln

from .exceptions import DataValidationError, DegenerateDataError, DomainError

__all__ = [
    "FrequencyTable",
    "poisson_pmf",
    "zt_poisson_pmf",
    "log1mexp",
    "one_minus_exp_1p",
    "table_from_counts",
    "mean_count",
]


def _check_rate(lam):
    lam = np.asarray(lam, dtype=float)
    if not np.all(np.isfinite(lam)) or np.any(lam <= 0):
        raise DomainError(
            "Poisson rate must be finite and positive", reason="lambda<=0"
        )
    return lam


def _scalar_or_array(x):
    return float(x) if np.ndim(x) == 0 else x


def log1mexp(lam):
    """Return ``log(1 - exp(-lam))`` for ``lam > 0`` without cancellation."""
    lam = np.asarray(lam, dtype=float)
    # switch point log(2) per Maechler (2012)
    return np.where(
        lam < np.log(2.0),
        np.log(-np.expm1(-np.minimum(lam, np.log(2.0)))),
        np.log1p(-np.exp(-np.maximum(lam, np.log(2.0)))),
    )


def one_minus_exp_1p(lam):
    """Return ``1 - exp(-lam) * (1 + lam)``; series-evaluated below 0.01."""
    lam = np.asarray(lam, dtype=float)
    small = lam < 1e-2
    ls = np.where(small, lam, 0.0)
    series = ls**2 * (0.5 - ls / 3.0 + ls**2 / 8.0 - ls**3 / 30.0 + ls**4 / 144.0)
    direct = -np.expm1(-lam) - lam * np.exp(-lam)
    return _scalar_or_array(np.where(small, series, direct))


def poisson_pmf(j, lam):
    """Poisson probability ``P(Y = j)`` evaluated in log space.

    Parameters
    ----------
    j : int or array_like of int
        Count value(s), ``j >= 0``.
    lam : float or array_like
        Poisson rate, finite and positive.

    Returns
    -------
    float or ndarray
    """
    lam = _check_rate(lam)
    j = np.asarray(j)
    if np.any(j < 0):
        raise DomainError("count must be non-negative", reason="j<0")
    logp = j * np.log(lam) - lam - gammaln(j + 1.0)
    return _scalar_or_array(np.exp(logp))


def zt_poisson_pmf(j, lam):
    """Zero-truncated Poisson probability ``P(Y = j | Y > 0)`` for ``j >= 1``.

    The normaliser ``1 - exp(-lam)`` is evaluated through ``expm1`` so that
    the result stays accurate for rates close to zero.
    """
    lam = _check_rate(lam)
    j = np.asarray(j)
    if np.any(j < 1):
        raise DomainError(
            "zero-truncated support starts at 1", reason="j<1"
        )
    logp = j * np.log(lam) - lam - gammaln(j + 1.0) - log1mexp(lam)
    return _scalar_or_array(np.exp(logp))


@dataclass(frozen=True)
class FrequencyTable:
    """Observed frequencies ``f_j`` of a zero-truncated count variable.

    Missing keys mean ``f_j = 0``. Frequencies are normally integers; real
    valued (expected) frequencies are accepted so that model-implied tables
    can be fed through the same estimators.

    Attributes
    ----------
    freq : mapping of int to number
        Count value ``j >= 1`` to frequency ``f_j >= 0``.
    n : number
        Number of observed units, ``sum_j f_j``.
    total : number
        Sum of all counts, ``sum_j j * f_j``.
    """

    freq: Mapping[int, float]
    n: float = field(init=False)
    total: float = field(init=False)

    def __post_init__(self):
        clean = {}
        for j, f in self.freq.items():
            if isinstance(j, bool) or int(j) != j:
                raise DataValidationError(
                    f"count value {j!r} is not an integer", reason="count-non-integer"
                )
            j = int(j)
            if j < 1:
                raise DataValidationError(
                    f"count value {j} < 1 in a zero-truncated table",
                    reason="count<1",
                )
            if not np.isfinite(f) or f < 0:
                raise DataValidationError(
                    f"frequency of count {j} must be finite and >= 0, got {f!r}",
                    reason="freq<0",
                )
            clean[j] = f
        clean = dict(sorted(clean.items()))
        object.__setattr__(self, "freq", MappingProxyType(clean))
        object.__setattr__(self, "n", sum(clean.values()))
        object.__setattr__(self, "total", sum(j * f for j, f in clean.items()))

    def __getitem__(self, j):
        return self.freq.get(j, 0)

    def __eq__(self, other):
        if not isinstance(other, FrequencyTable):
            return NotImplemented
        return dict(self.freq) == dict(other.freq)

    def __hash__(self):
        return hash(tuple(self.freq.items()))

    @property
    def max_count(self):
        return max((j for j, f in self.freq.items() if f > 0), default=0)

    def to_counts(self):
        """Expand back to one count per unit, in ascending order."""
        return np.repeat(
            np.fromiter(self.freq.keys(), dtype=np.int64, count=len(self.freq)),
            np.fromiter(
                (int(f) for f in self.freq.values()),
                dtype=np.int64,
                count=len(self.freq),
            ),
        )


def table_from_counts(counts: Iterable[int]) -> FrequencyTable:
    """Tabulate individual truncated counts into a :class:`FrequencyTable`.

    Raises
    ------
    DataValidationError
        If any count is not an integer or is smaller than one. The message
        names the offending index.
    """
    arr = np.asarray(list(counts) if not isinstance(counts, np.ndarray) else counts)
    if arr.size == 0:
        return FrequencyTable({})
    if arr.dtype.kind == "f":
        bad = np.flatnonzero(arr != np.round(arr))
        if bad.size:
            raise DataValidationError(
                f"count at index {bad[0]} is not an integer: {arr[bad[0]]!r}",
                reason="count-non-integer",
            )
        arr = arr.astype(np.int64)
    elif arr.dtype.kind not in "iu":
        raise DataValidationError("counts must be integers", reason="count-non-integer")
    bad = np.flatnonzero(arr < 1)
    if bad.size:
        raise DataValidationError(
            f"count at index {bad[0]} is {arr[bad[0]]}; counts must be >= 1",
            reason="count<1",
        )
    values, freqs = np.unique(arr, return_counts=True)
    return FrequencyTable({int(v): int(f) for v, f in zip(values, freqs)})


def mean_count(table: FrequencyTable) -> float:
    """Mean of the truncated counts, ``total / n``."""
    if table.n <= 0:
        raise DegenerateDataError("empty frequency table", reason="n=0")
    return table.total / table.n
