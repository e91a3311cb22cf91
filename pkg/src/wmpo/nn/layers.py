"""Dense building blocks: linear, layernorm, embedding, mlp.

Every layer registers its parameters in a ParamStore under a dotted name
prefix and validates its output for non-finite values, naming itself in the
error so a diverging forward pass points at the offending layer.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .optim import ParamStore
from .tensor import NonFiniteError, ShapeError, Tensor, concat

ACTIVATIONS = {
    "relu": Tensor.relu,
    "tanh": Tensor.tanh,
    "sigmoid": Tensor.sigmoid,
    "none": lambda x: x,
}


@dataclass
class LayerSpec:
    """Declarative layer description; dims = (d_in, ..., d_out)."""

    kind: str  # linear | layernorm | embedding | mlp
    dims: tuple[int, ...] = ()
    activation: str = "none"
    zero_init: bool = False

    def __post_init__(self):
        if self.kind not in ("linear", "layernorm", "embedding", "mlp"):
            raise ValueError(f"unknown layer kind {self.kind!r}")
        if self.activation not in ACTIVATIONS:
            raise ValueError(f"unknown activation {self.activation!r}")

    @property
    def d_in(self) -> int:
        return self.dims[0]

    @property
    def d_out(self) -> int:
        return self.dims[-1]


def _check_finite(name: str, out: Tensor) -> Tensor:
    if not np.isfinite(out.data).all():
        raise NonFiniteError(name)
    return out


class Linear:
    def __init__(self, store: ParamStore, name: str, d_in: int, d_out: int,
                 rng: np.random.Generator, zero_init: bool = False):
        self.name = name
        if zero_init:
            w = np.zeros((d_in, d_out))
        else:
            w = rng.normal(0.0, 1.0 / np.sqrt(d_in), size=(d_in, d_out))
        self.w = store.add(f"{name}.w", w)
        self.b = store.add(f"{name}.b", np.zeros(d_out))

    def __call__(self, x: Tensor) -> Tensor:
        return _check_finite(self.name, x @ self.w + self.b)


class LayerNorm:
    """Normalize the last axis to zero mean / unit variance, then affine."""

    def __init__(self, store: ParamStore, name: str, dim: int, eps: float = 1e-5):
        self.name = name
        self.eps = eps
        self.gamma = store.add(f"{name}.gamma", np.ones(dim))
        self.beta = store.add(f"{name}.beta", np.zeros(dim))

    def __call__(self, x: Tensor) -> Tensor:
        mu = x.mean(axis=-1, keepdims=True)
        centered = x - mu
        var = (centered * centered).mean(axis=-1, keepdims=True)
        y = centered / (var + self.eps).sqrt()
        return _check_finite(self.name, y * self.gamma + self.beta)


class Embedding:
    def __init__(self, store: ParamStore, name: str, n_embeddings: int, dim: int,
                 rng: np.random.Generator):
        self.name = name
        self.n = n_embeddings
        self.table = store.add(f"{name}.table", rng.normal(0.0, 1.0, size=(n_embeddings, dim)))

    def __call__(self, idx: np.ndarray) -> Tensor:
        idx = np.asarray(idx)
        if idx.min(initial=0) < 0 or idx.max(initial=0) >= self.n:
            raise IndexError(f"{self.name}: index outside [0, {self.n})")
        return _check_finite(self.name, self.table[idx])


class MLP:
    """Stack of linears with a shared hidden activation; last layer is linear."""

    def __init__(self, store: ParamStore, name: str, dims: tuple[int, ...],
                 rng: np.random.Generator, activation: str = "relu",
                 zero_init_last: bool = False):
        self.name = name
        self.act = ACTIVATIONS[activation]
        self.layers = []
        for i, (d_in, d_out) in enumerate(zip(dims[:-1], dims[1:])):
            last = i == len(dims) - 2
            self.layers.append(Linear(store, f"{name}.{i}", d_in, d_out, rng,
                                      zero_init=zero_init_last and last))

    def __call__(self, x: Tensor) -> Tensor:
        for i, layer in enumerate(self.layers):
            x = layer(x)
            if i < len(self.layers) - 1:
                x = self.act(x)
        return x


def build_layer(spec: LayerSpec, store: ParamStore, name: str, rng: np.random.Generator):
    if spec.kind == "linear":
        return Linear(store, name, spec.d_in, spec.d_out, rng, zero_init=spec.zero_init)
    if spec.kind == "layernorm":
        return LayerNorm(store, name, spec.dims[0])
    if spec.kind == "embedding":
        return Embedding(store, name, spec.dims[0], spec.dims[1], rng)
    return MLP(store, name, spec.dims, rng, activation=spec.activation,
               zero_init_last=spec.zero_init)


@dataclass
class Sequential:
    """Composition of layer specs; rejects dimension mismatches up front."""

    specs: list[LayerSpec]
    layers: list = field(default_factory=list)

    @staticmethod
    def build(specs: list[LayerSpec], store: ParamStore, name: str,
              rng: np.random.Generator) -> "Sequential":
        for prev, nxt in zip(specs[:-1], specs[1:]):
            if prev.kind != "layernorm" and nxt.kind != "layernorm" and prev.d_out != nxt.d_in:
                raise ShapeError("sequential", (prev.d_out,), (nxt.d_in,))
        seq = Sequential(specs)
        for i, spec in enumerate(specs):
            seq.layers.append(build_layer(spec, store, f"{name}.{i}", rng))
        return seq

    def __call__(self, x):
        for layer, spec in zip(self.layers, self.specs):
            x = layer(x)
            if spec.kind != "mlp" and spec.activation != "none":
                x = ACTIVATIONS[spec.activation](x)
        return x
