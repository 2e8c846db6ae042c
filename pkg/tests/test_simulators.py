import numpy as np
import pandas as pd
import pytest
from scipy import stats

from simulators import (
    THETA_STAR,
    BrockHommesConfig,
    BrockHommesSimulator,
    DivergenceError,
    GaussianConjugateConfig,
    GaussianConjugateSimulator,
    GaussianMeanConfig,
    GaussianMeanSimulator,
    export_batch_csv,
    gaussian_posterior_oracle,
    make_simulator,
    run_recursion,
    sample_brock_hommes_prior,
    sample_source,
    simulate_brock_hommes,
    simulate_gaussian_batch,
    strategy_fractions,
)


def test_source_points_lie_in_the_capped_ball(rng):
    sample = sample_source(3, 500, 0.7, rng)
    norms = np.linalg.norm(sample.u, axis=1)
    assert np.all(norms <= 0.7 + 1e-12)
    np.testing.assert_allclose(norms, sample.radius)
    np.testing.assert_allclose(np.linalg.norm(sample.direction, axis=1), 1.0)


def test_source_radius_is_uniform(rng):
    sample = sample_source(2, 4000, 1.0, rng)
    assert stats.kstest(sample.radius, "uniform").pvalue > 1e-3


def test_source_is_deterministic_per_seed():
    a = sample_source(2, 10, 1.0, np.random.default_rng(3))
    b = sample_source(2, 10, 1.0, np.random.default_rng(3))
    np.testing.assert_array_equal(a.u, b.u)


def test_scaled_source_keeps_directions_and_radius_fractions(rng):
    sample = sample_source(2, 50, 1.0, rng)
    half = sample.scaled(0.5)
    np.testing.assert_allclose(half.radius, 0.5 * sample.radius)
    np.testing.assert_array_equal(half.direction, sample.direction)
    np.testing.assert_allclose(np.linalg.norm(sample.on_sphere(0.3), axis=1), 0.3)


@pytest.mark.parametrize("tau", [0.0, -0.1, 1.5])
def test_source_cap_must_lie_in_unit_interval(tau, rng):
    with pytest.raises(ValueError):
        sample_source(2, 5, tau, rng)


def test_gaussian_batch_shapes(rng):
    batch = simulate_gaussian_batch(GaussianConjugateConfig(n_obs=4), 32, rng)
    assert batch.theta.shape == (32, 2)
    assert batch.x.shape == (32, 1, 4)
    assert batch.u.shape == (32, 2)
    assert np.all(batch.theta[:, 1] > 0)


def test_gaussian_oracle_closed_form():
    oracle = gaussian_posterior_oracle(GaussianConjugateConfig(n_obs=2), [0.5, 0.5])
    assert oracle.kappa_n == 4.0
    assert oracle.nu_n == 27.0
    assert oracle.mu_n == pytest.approx(0.25)
    assert oracle.sigma2_n == pytest.approx((25.0 + 0.25) / 27.0)


def test_gaussian_oracle_samples_match_marginals(rng):
    oracle = gaussian_posterior_oracle(GaussianConjugateConfig(), [0.5, 0.5])
    draws = oracle.sample(4000, rng)
    assert stats.kstest(draws[:, 0], oracle.mu_marginal().cdf).pvalue > 1e-3
    assert stats.kstest(draws[:, 1], oracle.sigma2_marginal().cdf).pvalue > 1e-3


def test_gaussian_observed_scalar_is_replicated():
    sim = GaussianConjugateSimulator(GaussianConjugateConfig(n_obs=3))
    np.testing.assert_array_equal(sim.observed_data(0.5), [[0.5, 0.5, 0.5]])
    with pytest.raises(ValueError):
        sim.observed_data(np.ones((2, 3)))


def test_gaussian_config_validation():
    with pytest.raises(ValueError):
        GaussianConjugateConfig(nu0=1.0)
    with pytest.raises(ValueError):
        GaussianConjugateConfig(extra=1)


def test_strategy_fractions_are_a_stable_softmax():
    cfg = BrockHommesConfig()
    g = np.array([[0.0, 0.9, 0.9, 1.01]])
    b = np.array([[0.0, 0.2, -0.2, 0.0]])
    w = strategy_fractions(cfg, g, b, np.array([50.0]), np.array([-40.0]), np.array([30.0]))
    assert np.all(np.isfinite(w))
    assert w.sum() == pytest.approx(1.0)


def test_recursion_first_step_with_equal_weights():
    cfg = BrockHommesConfig(beta=0.0, burn_in=0, T=3)
    theta = np.array([[0.5, 0.3, 0.4, -0.6]])
    series, diverged_at, _ = run_recursion(cfg, theta, np.zeros((1, 3)))
    # all fitness terms vanish from rest, so each strategy gets weight 1/4
    assert series[0, 0] == pytest.approx((0.3 - 0.6) / (4 * cfg.R))
    assert diverged_at[0] == -1


def test_brock_hommes_series_at_true_parameters(rng):
    cfg = BrockHommesConfig()
    series, fractions = simulate_brock_hommes(cfg, THETA_STAR, rng, return_fractions=True)
    assert series.shape == (cfg.T,)
    assert np.all(np.isfinite(series))
    np.testing.assert_allclose(fractions.sum(axis=1), 1.0)
    again = simulate_brock_hommes(cfg, THETA_STAR, np.random.default_rng(1234))
    np.testing.assert_array_equal(series, again)


def test_brock_hommes_prior_support(rng):
    theta = sample_brock_hommes_prior(rng, 1000)
    assert np.all((theta[:, :3] >= 0) & (theta[:, :3] <= 1))
    assert np.all((theta[:, 3] >= -1) & (theta[:, 3] <= 0))
    assert sample_brock_hommes_prior(rng).shape == (4,)


def test_brock_hommes_rejects_theta_outside_prior(rng):
    with pytest.raises(ValueError, match="prior support"):
        simulate_brock_hommes(BrockHommesConfig(), np.array([0.9, 0.2, 0.9, 0.5]), rng)


def test_brock_hommes_divergence(rng):
    cfg = BrockHommesConfig(divergence_cap=1e-6, max_redraws=2)
    with pytest.raises(DivergenceError) as info:
        simulate_brock_hommes(cfg, THETA_STAR, rng)
    assert info.value.theta.shape == (4,)
    with pytest.raises(DivergenceError):
        BrockHommesSimulator(cfg).simulate(4, rng)


def test_brock_hommes_batch(rng):
    sim = BrockHommesSimulator(BrockHommesConfig(T=20, burn_in=10))
    batch = sim.simulate(6, rng)
    assert batch.theta.shape == (6, 4)
    assert batch.x.shape == (6, 1, 20)


def test_brock_hommes_config_validation():
    with pytest.raises(ValueError):
        BrockHommesConfig(H=3)
    with pytest.raises(ValueError):
        BrockHommesConfig(R=0.0)


def test_mean_only_model_and_its_normal_posterior(rng):
    simulator = make_simulator("gaussian_mean", {"n_obs": 4})
    assert isinstance(simulator, GaussianMeanSimulator)
    assert (simulator.param_dim, simulator.data_dim) == (1, 1)
    batch = simulator.simulate(16, rng)
    assert batch.theta.shape == (16, 1)
    assert batch.x.shape == (16, 1, 4)
    assert batch.u.shape == (16, 1)
    assert np.all(np.abs(batch.u) <= 1.0)
    oracle = simulator.posterior_oracle(simulator.observed_data(0.5))
    # precision 1 + 4 = 5, mean (0 + 4 * 0.5) / 5
    assert oracle.mean == pytest.approx(0.4)
    assert oracle.sd == pytest.approx(np.sqrt(0.2))
    assert oracle.sample(50, rng).shape == (50, 1)
    assert oracle.mu_marginal().ppf(0.5) == pytest.approx(0.4)
    with pytest.raises(ValueError):
        GaussianMeanConfig(sigma=0.0)


def test_make_simulator():
    assert make_simulator("gaussian", {"n_obs": 5}).n_obs == 5
    assert make_simulator("brock_hommes", {"T": 30}).n_obs == 30
    with pytest.raises(ValueError, match="unknown simulator"):
        make_simulator("lotka_volterra", {})
    with pytest.raises(NotImplementedError):
        make_simulator("brock_hommes", {}).posterior_oracle(np.zeros((1, 100)))


def test_export_batch_csv(tmp_path, rng):
    batch = simulate_gaussian_batch(GaussianConjugateConfig(n_obs=2), 5, rng)
    frame = pd.read_csv(export_batch_csv(batch, tmp_path / "batch.csv"))
    assert list(frame.columns) == ["theta_1", "theta_2", "x_1_1", "x_1_2", "u_1", "u_2"]
    np.testing.assert_array_equal(frame[["theta_1", "theta_2"]].to_numpy(), batch.theta)
