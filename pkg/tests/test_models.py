import math

import numpy as np
import pytest
from scipy.stats import norm

from gfidist.models import DataSubset, build_model, gpd_tail_quantile, load_csv, save_csv
from gfidist.models.gpd import GpdTailModel

from oracles import cauchy_row_fd, mixture_pdf, mixture_row_fd


class TestMixtureJacRow:
    def test_reference_point(self):
        model = build_model("mixture")
        subset = DataSubset(y=np.array([0.0]))
        row = model.jac_rows(subset, np.array([-1.0, 1.0, 0.6]))[0]
        # third entry = (Phi(1)-Phi(-1)) / phi(1) = 0.6826895/0.2419707
        np.testing.assert_allclose(row, [-0.6, -0.4, 2.8213736], atol=5e-6)
        np.testing.assert_allclose(
            row, mixture_row_fd(0.0, np.array([-1.0, 1.0, 0.6])), rtol=1e-5
        )

    def test_far_tail_row_limit(self):
        # Deep in the right tail only the nearer component carries weight:
        # the row tends to (0, -1, 0+); oracle via extended precision.
        import mpmath

        model = build_model("mixture")
        subset = DataSubset(y=np.array([20.0]))
        row = model.jac_rows(subset, np.array([-1.0, 1.0, 0.6]))[0]
        f = 0.6 * mpmath.npdf(21) + 0.4 * mpmath.npdf(19)
        expected = [
            float(-0.6 * mpmath.npdf(21) / f),
            float(-0.4 * mpmath.npdf(19) / f),
            float((mpmath.ncdf(21) - mpmath.ncdf(19)) / f),
        ]
        np.testing.assert_allclose(row, expected, rtol=1e-6, atol=1e-12)
        assert abs(row[0]) < 1e-15
        assert abs(row[2]) < 0.2

    def test_symmetric_components(self):
        model = build_model("mixture")
        subset = DataSubset(y=np.array([0.0]))
        theta = np.array([-1.5, 1.5, 0.5])
        row = model.jac_rows(subset, theta)[0]
        expected = -0.5 * norm.pdf(1.5) / mixture_pdf(0.0, theta)
        assert row[0] == pytest.approx(row[1], rel=1e-12)
        assert row[0] == pytest.approx(expected, rel=1e-10)


class TestCauchyJacRow:
    def test_reference_point(self):
        model = build_model("cauchy_regression", n_covariates=1)
        subset = DataSubset(y=np.array([2.0]), x=np.array([[1.0]]))
        row = model.jac_rows(subset, np.array([0.0, 1.0, 1.0]))[0]
        np.testing.assert_allclose(row, [1.0, 1.0, 1.0], rtol=1e-12)

    def test_zero_residual(self):
        model = build_model("cauchy_regression", n_covariates=1)
        subset = DataSubset(y=np.array([3.0]), x=np.array([[1.5]]))
        row = model.jac_rows(subset, np.array([0.0, 2.0, 1.0]))[0]
        assert row[-1] == pytest.approx(0.0, abs=1e-12)

    def test_scaled_residual(self):
        model = build_model("cauchy_regression", n_covariates=1)
        subset = DataSubset(y=np.array([4.0]), x=np.array([[0.0]]))
        row = model.jac_rows(subset, np.array([0.0, 0.0, 2.0]))[0]
        assert row[-1] == pytest.approx(2.0, rel=1e-12)


def test_mixture_rows_match_finite_differences(rng):
    model = build_model("mixture")
    for _ in range(100):
        y = float(rng.normal(scale=2.0))
        mu1 = float(rng.normal(-1, 0.5))
        mu2 = mu1 + float(rng.uniform(0.5, 2.0))
        gamma = float(rng.uniform(0.2, 0.8))
        theta = np.array([mu1, mu2, gamma])
        row = model.jac_rows(DataSubset(y=np.array([y])), theta)[0]
        np.testing.assert_allclose(row, mixture_row_fd(y, theta), rtol=1e-5, atol=1e-6)


def test_cauchy_rows_match_finite_differences(rng):
    model = build_model("cauchy_regression", n_covariates=3)
    for _ in range(100):
        x = rng.normal(size=3)
        theta = np.concatenate([rng.normal(size=4), [float(rng.uniform(0.5, 2.0))]])
        y = float(rng.normal(scale=3.0))
        row = model.jac_rows(DataSubset(y=np.array([y]), x=x[None, :]), theta)[0]
        np.testing.assert_allclose(
            row, cauchy_row_fd(y, x, theta), rtol=1e-5, atol=1e-7
        )


def test_gpd_exceedance_rows_match_finite_differences(rng):
    # Rows for exceedances are the parameter gradient of the mixed CDF
    # over the density; check by central differences of that CDF.
    u = 5.0
    model = GpdTailModel(threshold=u)

    def mixed_cdf(y, theta):
        sigma, xi, zeta = theta
        z = y - u
        if abs(xi) < 1e-12:
            surv = math.exp(-z / sigma)
        else:
            surv = (1 + xi * z / sigma) ** (-1 / xi)
        return 1 - zeta * surv

    def density(y, theta):
        sigma, xi, zeta = theta
        z = y - u
        if abs(xi) < 1e-12:
            return zeta * math.exp(-z / sigma) / sigma
        return zeta * (1 + xi * z / sigma) ** (-1 / xi - 1) / sigma

    for _ in range(100):
        theta = np.array(
            [rng.uniform(0.5, 2.0), rng.uniform(-0.2, 0.8), rng.uniform(0.02, 0.2)]
        )
        y = u + float(rng.uniform(0.1, 3.0))
        row = model.jac_rows(DataSubset(y=np.array([y, u - 1.0])), theta)[0]
        h = 1e-6
        fd = np.zeros(3)
        for j in range(3):
            tp, tm = theta.copy(), theta.copy()
            tp[j] += h
            tm[j] -= h
            fd[j] = (mixed_cdf(y, tp) - mixed_cdf(y, tm)) / (2 * h)
        fd /= density(y, theta)
        np.testing.assert_allclose(row, fd, rtol=1e-5, atol=1e-6)


def test_mixture_density_integrates_to_one():
    model = build_model("mixture")
    theta = np.array([-1.0, 1.0, 0.6])
    grid = np.linspace(-10, 10, 20001)
    dens = np.exp(model._log_density_terms(grid, theta))
    assert np.trapezoid(dens, grid) == pytest.approx(1.0, abs=1e-6)


class TestGpdTailQuantile:
    def test_exponential_limit(self):
        theta = np.array([1.0, 0.0, 0.01])
        val = gpd_tail_quantile(theta, 0.999, threshold=0.0)
        assert val == pytest.approx(math.log(10), rel=1e-9)

    def test_threshold_boundary(self):
        theta = np.array([1.0, 0.3, 0.01])
        assert gpd_tail_quantile(theta, 0.99, threshold=7.5) == pytest.approx(7.5)

    def test_unit_shape(self):
        theta = np.array([1.0, 1.0, 0.01])
        assert gpd_tail_quantile(theta, 0.9999, threshold=0.0) == pytest.approx(99.0)

    def test_below_threshold_regime_rejected(self):
        theta = np.array([1.0, 0.2, 0.01])
        with pytest.raises(ValueError, match="threshold regime"):
            gpd_tail_quantile(theta, 0.98, threshold=0.0)

    def test_strictly_increasing_in_prob(self):
        theta = np.array([1.3, 0.25, 0.05])
        probs = np.linspace(0.96, 0.999999, 50)
        vals = [gpd_tail_quantile(theta, p, threshold=2.0) for p in probs]
        assert np.all(np.diff(vals) > 0)


class TestSimulate:
    def test_mixture_mean(self):
        model = build_model("mixture")
        theta = np.array([-1.0, 1.0, 0.6])
        data = model.simulate(theta, 100_000, seed=7)
        # mean = gamma*mu1 + (1-gamma)*mu2 = -0.2; var = 1 + E[mu^2]-mean^2
        var = 1.0 + 0.6 * 1 + 0.4 * 1 - 0.04
        assert data.y.mean() == pytest.approx(-0.2, abs=3 * math.sqrt(var / 1e5))

    def test_empty(self):
        model = build_model("mixture")
        assert model.simulate(np.array([-1.0, 1.0, 0.6]), 0, seed=1).n == 0

    def test_deterministic(self):
        for name, theta, kwargs in [
            ("mixture", np.array([-1.0, 1.0, 0.6]), {}),
            ("normal_location", np.array([2.0]), {}),
            ("cauchy_regression", np.array([0, 1, 1, 1.0]), {"n_covariates": 2}),
            ("gpd_tail", np.array([1.0, 0.2, 0.05]), {"threshold": 10.0}),
        ]:
            model = build_model(name, **kwargs)
            a = model.simulate(theta, 50, seed=42)
            b = model.simulate(theta, 50, seed=42)
            np.testing.assert_array_equal(a.y, b.y)
            if a.x is not None:
                np.testing.assert_array_equal(a.x, b.x)

    def test_cauchy_design_correlation(self):
        model = build_model("cauchy_regression", n_covariates=5)
        theta = np.array([0, 1, 1, 1, 0, 0, 1.0])
        data = model.simulate(theta, 50_000, seed=3)
        corr = np.corrcoef(data.x, rowvar=False)
        off = corr[~np.eye(5, dtype=bool)]
        assert np.all(np.abs(off - 0.1) < 0.03)


def test_transform_round_trips(rng):
    cases = [
        (build_model("mixture"), lambda: np.array(
            [rng.normal(), 0.0, rng.uniform(0.05, 0.95)])),
        (build_model("normal_location"), lambda: rng.normal(size=1)),
        (build_model("cauchy_regression", n_covariates=2), lambda: np.concatenate(
            [rng.normal(size=3), [rng.uniform(0.1, 5.0)]])),
        (build_model("gpd_tail", threshold=5.0), lambda: np.array(
            [rng.uniform(0.1, 4.0), rng.normal(scale=0.5), rng.uniform(0.01, 0.99)])),
    ]
    for model, draw in cases:
        for _ in range(1000):
            theta = draw()
            if model.name == "mixture":
                theta[1] = theta[0] + rng.uniform(0.1, 3.0)
            z = model.unconstrain(theta)
            back = model.constrain(z)
            np.testing.assert_allclose(back, theta, rtol=1e-12, atol=1e-12)


def test_csv_round_trip(tmp_path):
    model = build_model("cauchy_regression", n_covariates=2)
    data = model.simulate(np.array([0.5, 1.0, -1.0, 2.0]), 25, seed=9)
    path = tmp_path / "data.csv"
    save_csv(path, data)
    loaded = load_csv(path)
    np.testing.assert_array_equal(loaded.y, data.y)
    np.testing.assert_array_equal(loaded.x, data.x)

    uni = build_model("normal_location").simulate(np.array([1.0]), 10, seed=2)
    save_csv(path, uni)
    loaded = load_csv(path)
    assert loaded.x is None
    np.testing.assert_array_equal(loaded.y, uni.y)


def test_loglik_batch_matches_scalar(rng):
    models = [
        (build_model("mixture"), np.array([[-1, 1, 0.6], [-0.5, 0.5, 0.3]])),
        (build_model("normal_location"), np.array([[0.2], [1.5]])),
        (
            build_model("cauchy_regression", n_covariates=2),
            np.array([[0, 1, -1, 1.0], [0.5, 0.2, 0.3, 2.0]]),
        ),
        (
            build_model("gpd_tail", threshold=2.0),
            np.array([[1.0, 0.2, 0.1], [0.5, 0.0, 0.05], [0.7, -0.1, 0.2]]),
        ),
    ]
    for model, thetas in models:
        if model.name == "cauchy_regression":
            data = model.simulate(thetas[0], 40, seed=1)
        elif model.name == "gpd_tail":
            data = model.simulate(thetas[0], 200, seed=1)
        else:
            data = model.simulate(thetas[0], 40, seed=1)
        batch = model.loglik_batch(data, thetas)
        scalar = np.array([model.loglik(data, t) for t in thetas])
        np.testing.assert_allclose(batch, scalar, rtol=1e-10)
