import math

import numpy as np
import pytest

from autodiff import (
    AdamState,
    Graph,
    GraphError,
    NonFiniteError,
    NonFiniteGradientError,
    Parameter,
    ShapeError,
    adam_step,
    backward,
    forward,
    lr_schedule,
)


def numeric_grad(f, x, eps=1e-6):
    grad = np.zeros_like(x)
    for idx in np.ndindex(x.shape):
        orig = x[idx]
        x[idx] = orig + eps
        plus = f()
        x[idx] = orig - eps
        minus = f()
        x[idx] = orig
        grad[idx] = (plus - minus) / (2 * eps)
    return grad


# (label, builder, shape of a, shape of b or None)
OPS = [
    ("matmul", lambda g, a, b: g.matmul(a, b), (3, 4), (4, 2)),
    ("add_broadcast", lambda g, a, b: g.add(a, b), (3, 4), (1, 4)),
    ("sub", lambda g, a, b: g.sub(a, b), (3, 4), (3, 4)),
    ("mul_broadcast", lambda g, a, b: g.mul(a, b), (3, 4), (1, 4)),
    ("scale", lambda g, a, b: g.scale(a, -2.5), (3, 4), None),
    ("celu", lambda g, a, b: g.celu(a), (3, 4), None),
    ("nonneg", lambda g, a, b: g.nonneg(a), (3, 4), None),
    ("sigmoid", lambda g, a, b: g.sigmoid(a), (3, 4), None),
    ("tanh", lambda g, a, b: g.tanh(a), (3, 4), None),
    ("row_max", lambda g, a, b: g.row_max(a), (3, 5), None),
    ("mean_axis0", lambda g, a, b: g.mean(a, axis=0, keepdims=True), (3, 4), None),
    ("sum_axis1", lambda g, a, b: g.sum(a, axis=1), (3, 4), None),
    ("mean_all", lambda g, a, b: g.mean(a), (3, 4), None),
    ("transpose", lambda g, a, b: g.transpose(a), (3, 4), None),
    ("reshape", lambda g, a, b: g.reshape(a, (2, 6)), (3, 4), None),
    ("slice", lambda g, a, b: g.slice(a, 1, 4, axis=1), (3, 5), None),
    ("concat", lambda g, a, b: g.concat([a, b], axis=1), (3, 2), (3, 4)),
]


@pytest.mark.parametrize("seed", range(7))
@pytest.mark.parametrize("label,build,shape_a,shape_b", OPS, ids=[op[0] for op in OPS])
def test_primitive_gradients_match_finite_differences(label, build, shape_a, shape_b, seed):
    rng = np.random.default_rng(seed)
    inputs = {"a": rng.standard_normal(shape_a)}
    graph = Graph(label)
    a = graph.placeholder("a")
    b = None
    if shape_b is not None:
        inputs["b"] = rng.standard_normal(shape_b)
        b = graph.placeholder("b")
    out = build(graph, a, b)
    graph.forward(inputs, out)
    weights = graph.constant(rng.standard_normal(out.value.shape))
    loss = graph.sum(graph.mul(out, weights))

    graph.forward(inputs, loss)
    grads = graph.backward(loss, wrt=list(inputs))
    for name, value in inputs.items():
        numeric = numeric_grad(lambda: float(graph.forward(inputs, loss)), value)
        np.testing.assert_allclose(grads[name], numeric, rtol=1e-5, atol=1e-8)


def test_parameter_gradients_through_composite_expression(rng):
    w = Parameter("w", rng.standard_normal((3, 2)))
    c = Parameter("c", rng.standard_normal((1, 2)))
    graph = Graph("composite")
    x = graph.placeholder("x", (None, 3))
    h = graph.celu(graph.add(graph.matmul(x, graph.parameter(w)), graph.parameter(c)))
    loss = graph.mean(graph.row_max(graph.mul(h, h)))
    inputs = {"x": rng.standard_normal((5, 3))}
    graph.forward(inputs, loss)
    grads = graph.backward(loss)
    for p in (w, c):
        numeric = numeric_grad(lambda: float(graph.forward(inputs, loss)), p.value)
        np.testing.assert_allclose(grads[p.name], numeric, rtol=1e-5, atol=1e-8)


def test_three_layer_mlp_matches_straight_line_loops():
    rng = np.random.default_rng(2024)
    sizes = [3, 5, 4, 2]
    weights = [Parameter(f"w{k}", rng.standard_normal((sizes[k], sizes[k + 1]))) for k in range(3)]
    biases = [Parameter(f"b{k}", rng.standard_normal((1, sizes[k + 1]))) for k in range(3)]
    graph = Graph("mlp")
    h = graph.placeholder("x", (None, 3))
    for k in range(3):
        h = graph.add(graph.matmul(h, graph.parameter(weights[k])), graph.parameter(biases[k]))
        if k < 2:
            h = graph.celu(h)
    x = rng.standard_normal((6, 3))
    out = graph.forward({"x": x}, h)

    for row in range(x.shape[0]):
        act = [float(v) for v in x[row]]
        for k in range(3):
            nxt = []
            for j in range(sizes[k + 1]):
                z = float(biases[k].value[0, j])
                for i in range(sizes[k]):
                    z += act[i] * float(weights[k].value[i, j])
                if k < 2:
                    z = z if z > 0 else math.expm1(z)
                nxt.append(z)
            act = nxt
        np.testing.assert_allclose(out[row], act, rtol=0, atol=1e-12)


def test_row_max_ties_route_to_lowest_index():
    graph = Graph()
    a = graph.placeholder("a")
    loss = graph.sum(graph.row_max(a))
    graph.forward({"a": np.array([[1.0, 3.0, 3.0], [2.0, 2.0, 2.0]])}, loss)
    grad = graph.backward(loss, wrt=["a"])["a"]
    np.testing.assert_array_equal(grad, [[0.0, 1.0, 0.0], [1.0, 0.0, 0.0]])


def test_nonneg_subgradient_at_zero_is_one():
    graph = Graph()
    a = graph.placeholder("a")
    loss = graph.sum(graph.nonneg(a))
    graph.forward({"a": np.array([[-1.0, 0.0, 2.0]])}, loss)
    np.testing.assert_array_equal(graph.backward(loss, wrt=["a"])["a"], [[0.0, 1.0, 1.0]])


def test_backward_before_forward_raises():
    graph = Graph()
    a = graph.placeholder("a")
    loss = graph.sum(a)
    with pytest.raises(GraphError, match="before forward"):
        graph.backward(loss, wrt=["a"])


def test_backward_needs_scalar_output():
    graph = Graph()
    a = graph.placeholder("a")
    out = graph.scale(a, 2.0)
    graph.forward({"a": np.ones((2, 2))}, out)
    with pytest.raises(GraphError, match="scalar"):
        graph.backward(out, wrt=["a"])


def test_non_finite_input_is_rejected():
    graph = Graph("inputs")
    a = graph.placeholder("a")
    graph.sum(a)
    with pytest.raises(NonFiniteError, match="'a'"):
        graph.forward({"a": np.array([[1.0, np.nan]])})


def test_shape_mismatch_names_the_node():
    graph = Graph()
    a = graph.placeholder("a")
    b = graph.placeholder("b")
    graph.matmul(a, b)
    with pytest.raises(ShapeError, match="matmul"):
        graph.forward({"a": np.ones((2, 3)), "b": np.ones((2, 3))})


def test_failed_forward_invalidates_cached_values():
    graph = Graph()
    a = graph.placeholder("a")
    loss = graph.sum(a)
    graph.forward({"a": np.ones((1, 2))}, loss)
    with pytest.raises(NonFiniteError):
        graph.forward({"a": np.array([[1.0, np.inf]])}, loss)
    with pytest.raises(GraphError, match="before forward"):
        graph.backward(loss, wrt=["a"])


def test_declared_placeholder_shape_is_checked():
    graph = Graph()
    a = graph.placeholder("a", (None, 2))
    graph.sum(a)
    with pytest.raises(ShapeError):
        graph.forward({"a": np.ones((4, 3))})


def test_unused_parameter_gets_zero_gradient(rng):
    used = Parameter("used", rng.standard_normal((1, 2)))
    unused = Parameter("unused", rng.standard_normal((2, 2)))
    graph = Graph()
    graph.parameter(unused)
    loss = graph.sum(graph.parameter(used))
    forward(graph, {}, loss)
    grads = backward(graph, output=loss)
    np.testing.assert_array_equal(grads["unused"], np.zeros((2, 2)))
    np.testing.assert_array_equal(grads["used"], np.ones((1, 2)))


def test_nonneg_parameter_is_clamped_on_creation_and_projection():
    p = Parameter("v", np.array([[-1.0, 2.0]]), nonneg=True)
    np.testing.assert_array_equal(p.value, [[0.0, 2.0]])
    p.value = np.array([[3.0, -0.5]])
    p.project()
    np.testing.assert_array_equal(p.value, [[3.0, 0.0]])


def test_adam_first_step_matches_hand_computation():
    state = AdamState(lr=0.1)
    updated, state = adam_step(state, {"w": np.array([1.0])}, {"w": np.array([0.5])})
    # m_hat = g and v_hat = g^2 after one step, so the update is lr * g / (|g| + eps)
    assert updated["w"][0] == pytest.approx(1.0 - 0.1 * 0.5 / (0.5 + 1e-8), abs=1e-15)
    assert state.t == 1


def test_adam_two_steps_against_reference_recursion():
    grads = [np.array([0.3, -1.2]), np.array([-0.7, 0.4])]
    value = np.array([0.5, -0.25])
    state = AdamState(lr=0.05)
    m = np.zeros(2)
    v = np.zeros(2)
    expected = value.copy()
    for t, g in enumerate(grads, start=1):
        value, state = adam_step(state, {"w": value}, {"w": g})
        value = value["w"]
        m = 0.9 * m + (1.0 - 0.9) * g
        v = 0.999 * v + (1.0 - 0.999) * g * g
        expected = expected - 0.05 * (m / (1.0 - 0.9 ** t)) / (np.sqrt(v / (1.0 - 0.999 ** t)) + 1e-8)
    np.testing.assert_allclose(value, expected, rtol=0, atol=1e-15)


def test_adam_twenty_steps_on_a_shifted_quadratic():
    # f(w) = (w - 5)^2 from w = 0 against a scalar loop
    state = AdamState(lr=0.01)
    params = {"w": np.array([0.0])}
    w, m, v = 0.0, 0.0, 0.0
    for t in range(1, 21):
        params, state = adam_step(state, params, {"w": 2.0 * (params["w"] - 5.0)})
        g = 2.0 * (w - 5.0)
        m = 0.9 * m + 0.1 * g
        v = 0.999 * v + 0.001 * g * g
        w -= 0.01 * (m / (1.0 - 0.9 ** t)) / (math.sqrt(v / (1.0 - 0.999 ** t)) + 1e-8)
        assert params["w"][0] == pytest.approx(w, abs=1e-12)
    assert state.t == 20


def test_adam_minimizes_a_quadratic():
    state = AdamState(lr=0.05)
    params = {"w": np.array([3.0, -2.0])}
    for _ in range(2000):
        params, state = adam_step(state, params, {"w": 2.0 * params["w"]})
    np.testing.assert_allclose(params["w"], 0.0, atol=1e-3)


def test_adam_rejects_bad_gradients_without_advancing():
    state = AdamState()
    with pytest.raises(KeyError):
        adam_step(state, {"w": np.ones(2)}, {})
    with pytest.raises(NonFiniteGradientError) as info:
        adam_step(state, {"w": np.ones(2)}, {"w": np.array([1.0, np.inf])})
    assert info.value.parameter == "w"
    with pytest.raises(ValueError):
        adam_step(state, {"w": np.ones(2)}, {"w": np.ones(3)})
    assert state.t == 0


def test_adam_rejects_non_positive_learning_rate():
    with pytest.raises(ValueError):
        AdamState(lr=0.0)


def test_lr_schedule_decays_per_epoch():
    assert lr_schedule(0) == pytest.approx(0.01)
    assert lr_schedule(2) == pytest.approx(0.01 * 0.99 ** 2)
    assert lr_schedule(3, base_lr=0.1, decay=0.5) == pytest.approx(0.0125)
    with pytest.raises(ValueError):
        lr_schedule(-1)


def test_lr_schedule_after_full_schedule():
    expected = 0.01
    for _ in range(150):
        expected *= 0.99
    assert lr_schedule(150) == pytest.approx(0.01 * 0.99 ** 150, rel=1e-12)
    assert lr_schedule(150) == pytest.approx(expected, rel=1e-12)
