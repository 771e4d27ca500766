import numpy as np
import pytest
from sklearn.base import clone
from sklearn.exceptions import NotFittedError

from popsize import (
    ChaoEstimator,
    DataValidationError,
    DegenerateDataError,
    ModelSpec,
    TruncatedPoissonEstimator,
    TruncatedPoissonRegression,
    ZeltermanEstimator,
    ZeltermanRegression,
    chao_estimate,
    zelterman_estimate,
    zelterman_regression,
    zt_poisson_mle,
    zt_poisson_regression_estimate,
)


class TestHomogeneous:
    @pytest.mark.parametrize(
        "cls,func",
        [
            (ZeltermanEstimator, zelterman_estimate),
            (ChaoEstimator, chao_estimate),
            (TruncatedPoissonEstimator, lambda t: zt_poisson_mle(t)[1]),
        ],
    )
    def test_matches_functions(self, bangkok, cls, func):
        est = cls().fit(bangkok.to_counts())
        ref = func(bangkok)
        assert est.population_size_ == ref.n_hat
        assert est.population_size_ci_ == (ref.ci_low, ref.ci_high)
        assert est.n_observed_ == 3346

    def test_accepts_table(self, bangkok):
        assert ZeltermanEstimator().fit(bangkok).population_size_ == pytest.approx(33663.67, abs=0.01)

    def test_rate(self, bangkok):
        assert TruncatedPoissonEstimator().fit(bangkok).rate_.lambda_hat == pytest.approx(0.246323, abs=1e-6)

    @pytest.mark.parametrize("y", [[1, 0, 2], [1.5, 2], ["a", "b"], []])
    def test_validation(self, y):
        with pytest.raises(DataValidationError):
            ZeltermanEstimator().fit(y)

    def test_degenerate(self):
        with pytest.raises(DegenerateDataError):
            ChaoEstimator().fit([1, 1, 3])


class TestRegression:
    def test_zelterman_matches_functional(self, heroin):
        X = heroin.column("age")[:, None]
        m = ZeltermanRegression().fit(X, heroin.counts)
        fit, est, _ = zelterman_regression(heroin, ModelSpec(("age",)))
        np.testing.assert_allclose(np.r_[m.intercept_, m.coef_], fit.beta)
        assert m.population_size_ == pytest.approx(est.n_hat, rel=1e-12)
        assert m.population_size_se_ == pytest.approx(est.se, rel=1e-12)
        assert m.n_features_in_ == 1

    def test_truncated_poisson_matches_functional(self, meth):
        X = meth.column("age")[:, None]
        m = TruncatedPoissonRegression().fit(X, meth.counts)
        _, est, _ = zt_poisson_regression_estimate(meth, ModelSpec(("age",)))
        assert m.population_size_ == pytest.approx(est.n_hat, rel=1e-12)

    def test_predictions(self, heroin):
        X = heroin.column("age")[:, None]
        m = ZeltermanRegression().fit(X, heroin.counts)
        lam = m.predict(X)
        np.testing.assert_allclose(lam, 2 * np.exp(m.intercept_ + X[:, 0] * m.coef_[0]))
        np.testing.assert_allclose(m.inclusion_probability(X), -np.expm1(-lam))
        p = m.predict_proba(X)
        np.testing.assert_allclose(p.sum(axis=1), 1.0)
        np.testing.assert_allclose(p[:, 1], lam / (2 + lam))
        assert m.estimate_population(X) == pytest.approx(m.population_size_)

    def test_intercept_only(self, heroin):
        m = ZeltermanRegression().fit(None, heroin.counts)
        assert m.coef_.shape == (0,)
        assert m.population_size_ == pytest.approx(zelterman_estimate(heroin.frequency_table()).n_hat)

    def test_no_intercept(self, heroin):
        X = np.column_stack([np.ones(len(heroin)), heroin.column("age")])
        a = ZeltermanRegression(fit_intercept=False).fit(X, heroin.counts)
        b = ZeltermanRegression().fit(X[:, 1:], heroin.counts)
        assert a.intercept_ == 0.0
        np.testing.assert_allclose(a.coef_, np.r_[b.intercept_, b.coef_], rtol=1e-10)

    def test_clone_and_params(self):
        m = ZeltermanRegression(fit_intercept=False)
        c = clone(m)
        assert c.get_params() == {"fit_intercept": False}
        assert c.set_params(fit_intercept=True).fit_intercept is True

    def test_not_fitted(self):
        with pytest.raises(NotFittedError):
            TruncatedPoissonRegression().predict(np.zeros((2, 1)))

    def test_feature_count_checked(self, heroin):
        m = ZeltermanRegression().fit(heroin.column("age")[:, None], heroin.counts)
        with pytest.raises(ValueError):
            m.predict(np.zeros((3, 2)))

    def test_row_mismatch(self, heroin):
        with pytest.raises(DataValidationError):
            ZeltermanRegression().fit(np.zeros((5, 1)), heroin.counts)

    def test_non_finite(self, heroin):
        X = heroin.column("age")[:, None].copy()
        X[0, 0] = np.nan
        with pytest.raises(ValueError):
            ZeltermanRegression().fit(X, heroin.counts)
