"""Seeded synthetic populations for checking estimator behaviour.

Random numbers come from numpy's PCG64 bit generator seeded through
``SeedSequence(seed)``, which is specified independently of platform. Each
seed spawns two child streams: stream 0 assigns mixture components, stream 1
drives the counts. Unit ``i`` always consumes the ``i``-th uniform of each
stream, and counts are drawn by inverting the Poisson CDF, so a population
is a pure function of ``(n_pop, components, seed)``.
"""

import csv
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .counts import poisson_pmf, table_from_counts
from .exceptions import DegenerateDataError, DomainError, UsageError
from .homogeneous import (
    Method,
    PopulationEstimate,
    chao_estimate,
    zelterman_estimate,
    zt_poisson_mle,
)

__all__ = [
    "PRNG_ALGORITHM",
    "STREAM_LAYOUT_VERSION",
    "SimulatedUnit",
    "SimulatedPopulation",
    "SimulationOutcome",
    "simulate_poisson",
    "simulate_mixture",
    "truncate_and_estimate",
    "replicate",
    "summarize",
    "write_observed_csv",
]

PRNG_ALGORITHM = "numpy.random.PCG64 via SeedSequence"
#: bump whenever the mapping from seed to draws changes
STREAM_LAYOUT_VERSION = 1

_ASSIGN, _COUNTS = 0, 1


@dataclass(frozen=True)
class SimulatedUnit:
    true_lambda: float
    count: int
    covariates: Optional[dict] = None

    @property
    def observed(self):
        return self.count >= 1


@dataclass(frozen=True)
class SimulatedPopulation:
    """Full population (observed and unobserved) drawn from a known model.

    Stored column-wise; :attr:`units` materialises per-unit records.
    """

    true_n: int
    counts: np.ndarray
    true_lambda: np.ndarray
    seed: int

    @property
    def observed(self):
        return self.counts >= 1

    @property
    def n_observed(self):
        return int(self.observed.sum())

    @property
    def units(self):
        return tuple(
            SimulatedUnit(float(l), int(c)) for l, c in zip(self.true_lambda, self.counts)
        )

    def observed_counts(self):
        return self.counts[self.observed]


def _streams(seed):
    children = np.random.SeedSequence(seed).spawn(2)
    return [np.random.Generator(np.random.PCG64(c)) for c in children]


def _poisson_inverse(u, lam):
    """Smallest ``k`` with ``P(Y <= k) >= u`` for ``Y ~ Poisson(lam)``."""
    kmax = int(lam + 12.0 * np.sqrt(lam) + 30)
    cdf = np.cumsum(poisson_pmf(np.arange(kmax + 1), lam))
    return np.minimum(np.searchsorted(cdf, u, side="left"), kmax)


def _check_n_pop(n_pop):
    if int(n_pop) != n_pop or n_pop < 1:
        raise DomainError("n_pop must be a positive integer", reason="n_pop<1")


def simulate_poisson(n_pop, lam, seed) -> SimulatedPopulation:
    """Population of ``n_pop`` units with i.i.d. Poisson(``lam``) counts."""
    _check_n_pop(n_pop)
    if not np.isfinite(lam) or lam <= 0:
        raise DomainError("lambda must be finite and > 0", reason="lambda<=0")
    u = _streams(seed)[_COUNTS].random(int(n_pop))
    counts = _poisson_inverse(u, lam)
    return SimulatedPopulation(int(n_pop), counts, np.full(int(n_pop), float(lam)), seed)


def _check_components(components):
    comps = [(float(w), float(l)) for w, l in components]
    if not comps:
        raise DomainError("mixture needs at least one component", reason="bad-mixture")
    weights = np.array([w for w, _ in comps])
    rates = np.array([l for _, l in comps])
    if np.any(weights <= 0) or abs(weights.sum() - 1.0) > 1e-9:
        raise DomainError(
            f"mixture weights must be > 0 and sum to 1 (got {weights.sum():.12g})",
            reason="bad-mixture",
        )
    if np.any(~np.isfinite(rates)) or np.any(rates <= 0):
        raise DomainError("mixture rates must be finite and > 0", reason="bad-mixture")
    return weights, rates


def simulate_mixture(n_pop, components: Sequence, seed) -> SimulatedPopulation:
    """Population from a finite Poisson mixture.

    Parameters
    ----------
    n_pop : int
    components : sequence of (weight, lambda)
        Weights must be positive and sum to one.
    seed : int
    """
    _check_n_pop(n_pop)
    weights, rates = _check_components(components)
    n_pop = int(n_pop)
    streams = _streams(seed)
    edges = np.cumsum(weights)
    edges[-1] = 1.0
    comp = np.minimum(
        np.searchsorted(edges, streams[_ASSIGN].random(n_pop), side="right"),
        len(weights) - 1,
    )
    u = streams[_COUNTS].random(n_pop)
    counts = np.empty(n_pop, dtype=np.int64)
    for k, lam in enumerate(rates):
        idx = comp == k
        counts[idx] = _poisson_inverse(u[idx], lam)
    return SimulatedPopulation(n_pop, counts, rates[comp], seed)


@dataclass(frozen=True)
class SimulationOutcome:
    estimate: PopulationEstimate
    true_n: int

    @property
    def relative_error(self):
        return (self.estimate.n_hat - self.true_n) / self.true_n

    @property
    def covered(self):
        return self.estimate.ci_low <= self.true_n <= self.estimate.ci_high


_HOMOGENEOUS = {
    Method.ZELTERMAN: zelterman_estimate,
    Method.CHAO: chao_estimate,
    Method.ZTPOISSON_MLE: lambda t: zt_poisson_mle(t)[1],
}


def truncate_and_estimate(pop: SimulatedPopulation, method) -> SimulationOutcome:
    """Drop the zeros, tabulate what is left and run a homogeneous estimator."""
    method = Method(method)
    if method not in _HOMOGENEOUS:
        raise UsageError(
            f"simulation supports {', '.join(m.value for m in _HOMOGENEOUS)}; got {method.value}",
            reason="bad-method",
        )
    table = table_from_counts(pop.observed_counts())
    return SimulationOutcome(_HOMOGENEOUS[method](table), pop.true_n)


def replicate(n_pop, components, methods, n_seeds, seed_base=0):
    """Run ``n_seeds`` independent populations and estimate each.

    Returns
    -------
    dict
        ``method -> list`` with one :class:`SimulationOutcome` per seed, or
        ``None`` where the estimator was undefined for that replicate
        (e.g. no doubletons).
    """
    methods = [Method(m) for m in methods]
    out = {m: [] for m in methods}
    for k in range(n_seeds):
        pop = simulate_mixture(n_pop, components, seed_base + k)
        for m in methods:
            try:
                out[m].append(truncate_and_estimate(pop, m))
            except DegenerateDataError:
                out[m].append(None)
    return out


def summarize(outcomes):
    """Aggregate bias and coverage over replicates (``None`` entries skipped)."""
    ok = [o for o in outcomes if o is not None]
    if not ok:
        return {"replicates": len(outcomes), "failures": len(outcomes)}
    n_hat = np.array([o.estimate.n_hat for o in ok])
    rel = np.array([o.relative_error for o in ok])
    return {
        "replicates": len(outcomes),
        "failures": len(outcomes) - len(ok),
        "mean_n_hat": float(n_hat.mean()),
        "mean_relative_bias": float(rel.mean()),
        "rmse_relative": float(np.sqrt(np.mean(rel**2))),
        "coverage": float(np.mean([o.covered for o in ok])),
    }


def write_observed_csv(pop: SimulatedPopulation, path, count_column="count"):
    """Write the observed units in the individual-record CSV layout."""
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow([count_column])
        for c in pop.observed_counts():
            writer.writerow([int(c)])
