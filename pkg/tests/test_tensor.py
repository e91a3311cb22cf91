import numpy as np
import pytest

from wmpo.nn import (
    MLP,
    Embedding,
    LayerNorm,
    Linear,
    ParamStore,
    ShapeError,
    Tensor,
    concat,
    gather_last,
    log_softmax,
    minimum,
    no_grad,
    softmax,
)

from oracles import check_grads


def test_quadratic_gradient():
    w = Tensor([1.0, 2.0, 3.0], requires_grad=True)
    loss = (w * w).sum()
    loss.backward()
    np.testing.assert_allclose(w.grad, [2.0, 4.0, 6.0])


def test_layernorm_constant_input_zero_grad():
    store = ParamStore()
    rng = np.random.default_rng(0)
    ln = LayerNorm(store, "ln", 8)
    x = Tensor(np.full((3, 8), 0.7), requires_grad=True)
    # Perturbing all entries equally never changes LN output (shift invariance),
    # so the constant direction carries no gradient.
    ln(x).sum().backward()
    np.testing.assert_allclose(x.grad.sum(axis=-1), 0.0, atol=1e-9)
    del rng


def test_grad_accumulates_when_reused():
    w = Tensor([2.0], requires_grad=True)
    y = w * 3.0 + w * w
    y.sum().backward()
    np.testing.assert_allclose(w.grad, [3.0 + 4.0])


def test_shape_mismatch_names_op_and_shapes():
    a = Tensor(np.zeros((2, 3)))
    b = Tensor(np.zeros((4, 5)))
    with pytest.raises(ShapeError) as exc:
        _ = a @ b
    assert "matmul" in str(exc.value)
    assert "(2, 3)" in str(exc.value) and "(4, 5)" in str(exc.value)
    with pytest.raises(ShapeError):
        _ = a + Tensor(np.zeros(7))


def test_softmax_normalization():
    rng = np.random.default_rng(1)
    x = Tensor(rng.normal(size=(5, 31)) * 10)
    s = softmax(x, axis=-1)
    np.testing.assert_allclose(s.data.sum(axis=-1), 1.0, atol=1e-12)
    ls = log_softmax(x, axis=-1)
    np.testing.assert_allclose(np.exp(ls.data), s.data, atol=1e-10)


def test_no_grad_blocks_graph():
    w = Tensor([1.0], requires_grad=True)
    with no_grad():
        y = w * 2.0
    assert not y.requires_grad
    assert y._parents == ()


def test_gather_last_values_and_bounds():
    x = Tensor(np.arange(12.0).reshape(3, 4), requires_grad=True)
    idx = np.array([0, 3, 2])
    out = gather_last(x, idx)
    np.testing.assert_allclose(out.data, [0.0, 7.0, 10.0])
    out.sum().backward()
    expected = np.zeros((3, 4))
    expected[[0, 1, 2], idx] = 1.0
    np.testing.assert_allclose(x.grad, expected)
    with pytest.raises(IndexError):
        gather_last(x, np.array([0, 4, 0]))


def test_clamp_gradient_is_bit_zero_outside_band():
    x = Tensor(np.array([-0.5, 0.3, 0.9, 1.7]), requires_grad=True)
    y = x.clamp(0.0, 1.0)
    (y * np.array([1.0, 1.0, 1.0, 1.0])).sum().backward()
    assert x.grad[0] == 0.0 and x.grad[3] == 0.0
    assert x.grad[1] == 1.0 and x.grad[2] == 1.0


def test_minimum_tie_routes_to_first_argument():
    a = Tensor([1.0, 2.0], requires_grad=True)
    b = Tensor([1.0, 1.0], requires_grad=True)
    minimum(a, b).sum().backward()
    np.testing.assert_allclose(a.grad, [1.0, 0.0])
    np.testing.assert_allclose(b.grad, [0.0, 1.0])


# ---- finite-difference exactness, per layer kind and for composite graphs ----


@pytest.mark.parametrize("seed", range(20))
def test_linear_gradients_match_finite_differences(seed):
    rng = np.random.default_rng(seed)
    d_in, d_out = int(rng.integers(2, 7)), int(rng.integers(2, 7))
    store = ParamStore()
    layer = Linear(store, "lin", d_in, d_out, rng)
    x = rng.normal(size=(3, d_in))
    check_grads(store, lambda: (layer(Tensor(x)) ** 2).sum())


@pytest.mark.parametrize("seed", range(20))
def test_layernorm_gradients_match_finite_differences(seed):
    rng = np.random.default_rng(100 + seed)
    dim = int(rng.integers(3, 9))
    store = ParamStore()
    ln = LayerNorm(store, "ln", dim)
    w = store.add("mix", rng.normal(size=(dim, dim)))
    x = rng.normal(size=(2, dim))
    check_grads(store, lambda: (ln(Tensor(x) @ w) ** 2).sum())


@pytest.mark.parametrize("seed", range(20))
def test_embedding_gradients_match_finite_differences(seed):
    rng = np.random.default_rng(200 + seed)
    store = ParamStore()
    emb = Embedding(store, "emb", 6, int(rng.integers(2, 5)), rng)
    idx = rng.integers(0, 6, size=7)
    check_grads(store, lambda: (emb(idx) ** 2).sum())


@pytest.mark.parametrize("seed", range(20))
def test_random_mlp_gradients_match_finite_differences(seed):
    rng = np.random.default_rng(300 + seed)
    dims = tuple(int(rng.integers(2, 6)) for _ in range(int(rng.integers(3, 5))))
    act = ["relu", "tanh", "sigmoid"][seed % 3]
    store = ParamStore()
    mlp = MLP(store, "mlp", dims, rng, activation=act)
    x = rng.normal(size=(4, dims[0])) + 0.05  # keep relu kinks off the fd grid
    check_grads(store, lambda: (mlp(Tensor(x)) ** 2).mean())


def test_composite_graph_gradients():
    rng = np.random.default_rng(42)
    store = ParamStore()
    a = store.add("a", rng.normal(size=(3, 4)))
    b = store.add("b", rng.normal(size=(4, 2)))

    def loss():
        h = softmax(a @ b, axis=-1)
        mixed = concat([h, h * h], axis=-1)
        return (log_softmax(mixed, axis=-1).exp() * mixed).sum() / 7.0

    check_grads(store, loss)
