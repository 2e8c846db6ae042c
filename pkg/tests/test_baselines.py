import numpy as np
import pytest
from scipy.integrate import trapezoid

from autodiff import Graph
from baselines import (
    AutoRegConfig,
    PinballNet,
    chain_monotonicity,
    crps_mc_loss,
    pinball_loss,
    pinball_node,
    quantile_monotonicity,
    repeat_rows,
    sample_autoregressive,
    train_autoregressive,
)
from simulators import GaussianConjugateConfig, GaussianConjugateSimulator
from training import TrainConfig

X = np.array([[0.2, -0.1, 0.4]])


def constant_net(value: float, cond_dim: int = 0) -> PinballNet:
    net = PinballNet("const", cond_dim, np.random.default_rng(0), width=4, hidden_layers=2)
    for p in net.parameters():
        p.value = np.zeros_like(p.value)
    net.mlp.layers[-1].bias.value = np.full((1, 1), value)
    return net


def test_pinball_loss_values():
    assert pinball_loss(0.3, 0.0, 1.0) == pytest.approx(0.3)
    assert pinball_loss(0.3, 0.0, -1.0) == pytest.approx(0.7)
    assert pinball_loss(0.3, 2.0, 2.0) == 0.0
    grid = pinball_loss(0.8, np.zeros(5), np.linspace(-2, 2, 5))
    assert grid.shape == (5,)
    assert np.all(grid >= 0)


@pytest.mark.parametrize("tau", [0.0, 1.0, -0.5])
def test_pinball_loss_rejects_tau_outside_open_interval(tau):
    with pytest.raises(ValueError):
        pinball_loss(tau, 0.0, 1.0)


def test_pinball_minimizer_is_the_empirical_quantile(rng):
    z = np.sort(rng.standard_normal(101))
    totals = [pinball_loss(0.3, q, z).sum() for q in z]
    assert int(np.argmin(totals)) == 30


def test_pinball_node_matches_the_closed_form(rng):
    q = rng.standard_normal((6, 1))
    z = rng.standard_normal((6, 1))
    graph = Graph("pinball")
    node = pinball_node(graph, graph.constant(np.full((6, 1), 0.25)), graph.constant(q), graph.constant(z))
    np.testing.assert_allclose(graph.forward({}, node), pinball_loss(0.25, q, z), atol=1e-15)


def test_repeat_rows():
    graph = Graph("repeat")
    out = repeat_rows(graph, graph.constant([[1.0, 2.0], [3.0, 4.0]]), 2, 3)
    np.testing.assert_array_equal(graph.forward({}, out), [[1, 2]] * 3 + [[3, 4]] * 3)


def test_constant_quantile_at_the_outcome_has_zero_crps(rng):
    assert crps_mc_loss(constant_net(1.5), None, [1.5, 1.5], rng, K=16) == pytest.approx(0.0, abs=1e-15)


def test_single_median_draw_gives_absolute_error(rng):
    net = PinballNet("net", 0, np.random.default_rng(5), width=8)
    q = net.quantile(np.array([0.5]))[0]
    loss = crps_mc_loss(net, None, [0.3], rng, K=1, taus=np.array([[0.5]]))
    assert loss == pytest.approx(abs(0.3 - q), abs=1e-12)


def test_monte_carlo_crps_matches_quadrature(rng):
    net = PinballNet("net", 0, np.random.default_rng(6), width=8)
    z = 0.3
    grid = np.linspace(1e-6, 1 - 1e-6, 20001)
    reference = trapezoid(2.0 * np.array([pinball_loss(t, q, z) for t, q in zip(grid, net.quantile(grid))]), grid)
    taus = rng.uniform(size=(1, 20000))
    draws = 2.0 * np.array([pinball_loss(t, q, z) for t, q in zip(taus[0], net.quantile(taus[0]))])
    estimate = crps_mc_loss(net, None, [z], rng, K=20000, taus=taus)
    assert estimate == pytest.approx(draws.mean(), abs=1e-10)
    assert abs(estimate - reference) < 4.0 * draws.std() / np.sqrt(draws.size)


def test_crps_requires_a_draw(rng):
    with pytest.raises(ValueError):
        crps_mc_loss(constant_net(0.0), None, [0.0], rng, K=0)


def test_quantile_monotonicity_is_a_fraction(rng):
    assert quantile_monotonicity(constant_net(0.4, cond_dim=2), rng.standard_normal((10, 2)), rng, pairs=50) == 1.0
    rate = quantile_monotonicity(PinballNet("net", 1, rng, width=4), rng.standard_normal((10, 1)), rng, pairs=200)
    assert 0.0 <= rate <= 1.0


@pytest.fixture
def chain_setup():
    cfg = TrainConfig(seed=3, epochs=1, iterations_per_epoch=2, batch_size=8)
    simulator = GaussianConjugateSimulator(GaussianConjugateConfig(n_obs=3))
    ar = AutoRegConfig(width=4, hidden_layers=1, mc_draws=2)
    return cfg, simulator, ar


def test_autoregressive_chain_shapes_and_determinism(chain_setup):
    cfg, simulator, ar = chain_setup
    chain = train_autoregressive(cfg, simulator, ar=ar)
    assert chain.ordering == [0, 1]
    assert [len(h) for h in chain.history] == [1, 1]
    assert not chain.features.training
    draws = sample_autoregressive(chain, X, 10, np.random.default_rng(0))
    assert draws.shape == (10, 2)
    again = sample_autoregressive(train_autoregressive(cfg, simulator, ar=ar), X, 10, np.random.default_rng(0))
    np.testing.assert_array_equal(draws, again)


def test_first_coordinate_in_chain_ignores_later_levels(chain_setup):
    cfg, simulator, ar = chain_setup
    chain = train_autoregressive(cfg, simulator, ordering=[1, 0], ar=ar)
    taus = np.random.default_rng(1).uniform(size=(5, 2))
    shifted = taus.copy()
    shifted[:, 1] = np.random.default_rng(2).uniform(size=5)
    a = sample_autoregressive(chain, X, 5, None, taus=taus)
    b = sample_autoregressive(chain, X, 5, None, taus=shifted)
    np.testing.assert_array_equal(a[:, 1], b[:, 1])
    assert not np.array_equal(a[:, 0], b[:, 0])


def test_simulated_conditioning_trains(chain_setup):
    cfg, simulator, ar = chain_setup
    chain = train_autoregressive(cfg, simulator, ar=ar.model_copy(update={"conditioning": "simulated"}))
    assert chain.conditioning == "simulated"
    rates = chain_monotonicity(chain, X, np.random.default_rng(0), pairs=50)
    assert len(rates) == 2
    assert all(0.0 <= r <= 1.0 for r in rates)


def test_ordering_must_be_a_permutation(chain_setup):
    cfg, simulator, ar = chain_setup
    with pytest.raises(ValueError, match="permutation"):
        train_autoregressive(cfg, simulator, ordering=[0, 0], ar=ar)


def test_sample_count_must_be_positive(chain_setup):
    cfg, simulator, ar = chain_setup
    chain = train_autoregressive(cfg, simulator, ar=ar)
    with pytest.raises(ValueError):
        sample_autoregressive(chain, X, 0, np.random.default_rng(0))
