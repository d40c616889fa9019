import math

import numpy as np
import pytest
from scipy.stats import chisquare

from gfidist.models import DataSubset, build_model
from gfidist.sampler import (
    ChainConfig,
    ChainError,
    dump_chain_csv,
    effective_sample_size,
    run_chain,
)


class TestEffectiveSampleSize:
    def test_iid_normal(self):
        rng = np.random.default_rng(1)
        x = rng.standard_normal(10_000)
        ess = effective_sample_size(x)
        assert abs(ess - 10_000) < 0.15 * 10_000

    def test_alternating_clamped_to_t(self):
        x = np.tile([1.0, -1.0], 500)
        assert effective_sample_size(x) == 1000

    def test_ar1(self):
        rng = np.random.default_rng(2)
        t = 100_000
        x = np.empty(t)
        x[0] = 0.0
        eps = rng.standard_normal(t)
        for i in range(1, t):
            x[i] = 0.9 * x[i - 1] + eps[i]
        expected = t * (1 - 0.9) / (1 + 0.9)
        assert abs(effective_sample_size(x) - expected) < 0.2 * expected

    def test_constant_series(self):
        assert effective_sample_size(np.ones(50)) == 1.0

    def test_too_short(self):
        with pytest.raises(ValueError):
            effective_sample_size(np.arange(5))


class TestRunChain:
    def test_thinning_bookkeeping(self):
        model = build_model("normal_location")
        data = model.simulate(np.array([0.5]), 50, seed=3)
        out = run_chain(model, data, ChainConfig(t=100, thin=2, burn_in=50, seed=9))
        assert out.particles.shape == (100, 1)
        assert out.log_density.shape == (100,)

    def test_deterministic_replay(self):
        model = build_model("mixture")
        data = model.simulate(np.array([-1.0, 1.0, 0.6]), 400, seed=5)
        cfg = dict(t=200, burn_in=100, seed=11)
        a = run_chain(model, data, ChainConfig(**cfg))
        b = run_chain(model, data, ChainConfig(**cfg))
        np.testing.assert_array_equal(a.particles, b.particles)
        np.testing.assert_array_equal(a.log_density, b.log_density)
        assert a.accept_rate == b.accept_rate

    def test_init_outside_support_rejected(self):
        model = build_model("mixture")
        data = model.simulate(np.array([-1.0, 1.0, 0.6]), 100, seed=5)
        cfg = ChainConfig(t=100, init=np.array([1.0, -1.0, 0.5]), seed=1)
        with pytest.raises(ChainError, match="support"):
            run_chain(model, data, cfg)

    def test_empty_and_underdetermined_subsets(self):
        model = build_model("mixture")
        with pytest.raises(ChainError):
            run_chain(model, DataSubset(y=np.empty(0)), ChainConfig(t=100, seed=1))
        with pytest.raises(ChainError):
            run_chain(model, DataSubset(y=np.zeros(2)), ChainConfig(t=100, seed=1))

    def test_mixture_recovers_truth(self):
        model = build_model("mixture")
        truth = np.array([-1.0, 1.0, 0.6])
        data = model.simulate(truth, 10_000, seed=17)
        out = run_chain(model, data, ChainConfig(t=2000, burn_in=1000, seed=23))
        means = out.particles.mean(axis=0)
        sds = out.particles.std(axis=0)
        # posterior spread covers both MC error and distance to truth
        assert np.all(np.abs(means - truth) < 5 * sds)

    def test_acceptance_rate_in_range(self):
        cases = [
            ("normal_location", np.array([0.0]), {}, 500),
            ("mixture", np.array([-1.0, 1.0, 0.6]), {}, 1000),
            ("cauchy_regression", np.array([0.0, 1.0, 1.0]), {"n_covariates": 1}, 500),
        ]
        for name, theta, kwargs, n in cases:
            model = build_model(name, **kwargs)
            data = model.simulate(theta, n, seed=2)
            out = run_chain(model, data, ChainConfig(t=1000, burn_in=1000, seed=4))
            assert 0.1 <= out.accept_rate <= 0.5, (name, out.accept_rate)

    def test_no_adaptation_after_burn_in(self):
        # Runs sharing seed and burn-in but with different lengths must
        # freeze the identical kernel at the end of burn-in.
        model = build_model("normal_location")
        data = model.simulate(np.array([0.0]), 100, seed=8)
        a = run_chain(model, data, ChainConfig(t=200, burn_in=300, seed=5))
        b = run_chain(model, data, ChainConfig(t=600, burn_in=300, seed=5))
        np.testing.assert_array_equal(a.proposal_cov, b.proposal_cov)
        np.testing.assert_array_equal(a.particles, b.particles[:200])

    def test_detailed_balance_against_grid_density(self):
        # 1-parameter target: empirical bin frequencies of a long chain vs
        # the grid-normalized fiducial density.
        from oracles import normal_location_grid_cdf

        model = build_model("normal_location")
        data = model.simulate(np.array([0.0]), 25, seed=12)
        out = run_chain(model, data, ChainConfig(t=100_000, burn_in=2000, seed=33))
        mu = data.y.mean()
        sd = 1 / math.sqrt(25)
        edges = np.linspace(mu - 4 * sd, mu + 4 * sd, 21)
        counts, _ = np.histogram(out.particles[:, 0], bins=edges)
        fine = np.linspace(mu - 10 * sd, mu + 10 * sd, 8001)
        cdf = normal_location_grid_cdf(data.y, fine)
        probs = np.diff(np.interp(edges, fine, cdf))
        inside = out.particles[
            (out.particles[:, 0] >= edges[0]) & (out.particles[:, 0] <= edges[-1])
        ]
        expected = probs / probs.sum() * counts.sum()
        # thin to roughly independent draws before the chi-square test
        step = max(1, int(100_000 / effective_sample_size(out.particles[:, 0])))
        thinned = out.particles[::step, 0]
        counts_t, _ = np.histogram(thinned, bins=edges)
        expected_t = probs / probs.sum() * counts_t.sum()
        keep = expected_t > 5
        stat, p = chisquare(
            counts_t[keep], expected_t[keep] * counts_t[keep].sum() / expected_t[keep].sum()
        )
        assert p > 0.001


def test_dump_chain_csv(tmp_path):
    model = build_model("normal_location")
    data = model.simulate(np.array([0.0]), 30, seed=3)
    out = run_chain(model, data, ChainConfig(t=120, burn_in=50, seed=6))
    path = tmp_path / "chain.csv"
    dump_chain_csv(path, out)
    lines = path.read_text().strip().splitlines()
    assert lines[0] == "t,theta_1,log_density"
    assert len(lines) == 121
