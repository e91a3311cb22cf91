"""Define-by-run reverse-mode automatic differentiation over numpy arrays.

The graph is rebuilt on every forward pass; ``backward`` walks it once in
reverse topological order. 64-bit floats are the default so analytic
gradients can be checked against central finite differences at 1e-6
relative tolerance; ``set_default_dtype(np.float32)`` trades that fidelity
for speed.
"""

from __future__ import annotations

from contextlib import contextmanager

import numpy as np

_DEFAULT_DTYPE = np.float64
_GRAD_ENABLED = True


def set_default_dtype(dtype) -> None:
    global _DEFAULT_DTYPE
    if dtype not in (np.float32, np.float64):
        raise ValueError(f"unsupported dtype {dtype!r}")
    _DEFAULT_DTYPE = dtype


def default_dtype():
    return _DEFAULT_DTYPE


@contextmanager
def no_grad():
    """Disable graph construction (frozen-parameter forward passes)."""
    global _GRAD_ENABLED
    prev = _GRAD_ENABLED
    _GRAD_ENABLED = False
    try:
        yield
    finally:
        _GRAD_ENABLED = prev


class ShapeError(ValueError):
    """An op was applied to incompatibly shaped operands."""

    def __init__(self, op: str, *shapes):
        super().__init__(f"{op}: incompatible shapes {' vs '.join(str(tuple(s)) for s in shapes)}")
        self.op = op
        self.shapes = shapes


class NonFiniteError(FloatingPointError):
    """A forward activation or gradient contained NaN/inf."""

    def __init__(self, where: str):
        super().__init__(f"non-finite values in {where}")
        self.where = where


def _unbroadcast(grad: np.ndarray, shape: tuple) -> np.ndarray:
    """Sum a broadcast gradient back down to the operand's shape."""
    if grad.shape == shape:
        return grad
    extra = grad.ndim - len(shape)
    if extra > 0:
        grad = grad.sum(axis=tuple(range(extra)))
    axes = tuple(i for i, s in enumerate(shape) if s == 1 and grad.shape[i] != 1)
    if axes:
        grad = grad.sum(axis=axes, keepdims=True)
    return grad.reshape(shape)


class Tensor:
    """N-d array with an optional gradient and backward closure."""

    __slots__ = ("data", "grad", "requires_grad", "_parents", "_backward")

    def __init__(self, data, requires_grad: bool = False):
        self.data = np.asarray(data, dtype=_DEFAULT_DTYPE)
        self.grad: np.ndarray | None = None
        self.requires_grad = bool(requires_grad)
        self._parents: tuple[Tensor, ...] = ()
        self._backward = None

    # ---- construction ----

    @staticmethod
    def _from_op(data: np.ndarray, parents, backward) -> "Tensor":
        out = Tensor.__new__(Tensor)
        out.data = data
        out.grad = None
        tracked = _GRAD_ENABLED and any(p.requires_grad for p in parents)
        out.requires_grad = tracked
        out._parents = tuple(parents) if tracked else ()
        out._backward = backward if tracked else None
        return out

    @property
    def shape(self) -> tuple:
        return self.data.shape

    @property
    def ndim(self) -> int:
        return self.data.ndim

    @property
    def size(self) -> int:
        return self.data.size

    def item(self) -> float:
        if self.data.size != 1:
            raise ValueError("item() on non-scalar tensor")
        return float(self.data.reshape(()))

    def detach(self) -> "Tensor":
        return Tensor(self.data, requires_grad=False)

    def copy(self, requires_grad: bool | None = None) -> "Tensor":
        rg = self.requires_grad if requires_grad is None else requires_grad
        return Tensor(self.data.copy(), requires_grad=rg)

    def __repr__(self) -> str:
        flag = ", grad" if self.requires_grad else ""
        return f"Tensor(shape={self.data.shape}{flag})"

    # ---- arithmetic ----

    @staticmethod
    def _coerce(other) -> "Tensor":
        return other if isinstance(other, Tensor) else Tensor(other)

    def _broadcast_check(self, op: str, other: "Tensor") -> None:
        try:
            np.broadcast_shapes(self.data.shape, other.data.shape)
        except ValueError:
            raise ShapeError(op, self.data.shape, other.data.shape) from None

    def __add__(self, other):
        other = Tensor._coerce(other)
        self._broadcast_check("add", other)
        a, b = self, other

        def backward(g):
            return _unbroadcast(g, a.data.shape), _unbroadcast(g, b.data.shape)

        return Tensor._from_op(a.data + b.data, (a, b), backward)

    __radd__ = __add__

    def __sub__(self, other):
        other = Tensor._coerce(other)
        self._broadcast_check("sub", other)
        a, b = self, other

        def backward(g):
            return _unbroadcast(g, a.data.shape), _unbroadcast(-g, b.data.shape)

        return Tensor._from_op(a.data - b.data, (a, b), backward)

    def __rsub__(self, other):
        return Tensor._coerce(other).__sub__(self)

    def __mul__(self, other):
        other = Tensor._coerce(other)
        self._broadcast_check("mul", other)
        a, b = self, other

        def backward(g):
            return (_unbroadcast(g * b.data, a.data.shape),
                    _unbroadcast(g * a.data, b.data.shape))

        return Tensor._from_op(a.data * b.data, (a, b), backward)

    __rmul__ = __mul__

    def __truediv__(self, other):
        other = Tensor._coerce(other)
        self._broadcast_check("div", other)
        a, b = self, other

        def backward(g):
            return (_unbroadcast(g / b.data, a.data.shape),
                    _unbroadcast(-g * a.data / (b.data * b.data), b.data.shape))

        return Tensor._from_op(a.data / b.data, (a, b), backward)

    def __rtruediv__(self, other):
        return Tensor._coerce(other).__truediv__(self)

    def __neg__(self):
        a = self
        return Tensor._from_op(-a.data, (a,), lambda g: (-g,))

    def __pow__(self, exponent):
        if not isinstance(exponent, (int, float)):
            raise TypeError("only scalar exponents are supported")
        a, p = self, float(exponent)

        def backward(g):
            return (g * p * np.power(a.data, p - 1.0),)

        return Tensor._from_op(np.power(a.data, p), (a,), backward)

    def __matmul__(self, other):
        other = Tensor._coerce(other)
        a, b = self, other
        if a.data.ndim < 1 or b.data.ndim < 2 or a.data.shape[-1] != b.data.shape[-2]:
            raise ShapeError("matmul", a.data.shape, b.data.shape)

        def backward(g):
            ga = _unbroadcast(np.matmul(g, np.swapaxes(b.data, -1, -2)), a.data.shape)
            gb = _unbroadcast(np.matmul(np.swapaxes(a.data, -1, -2), g), b.data.shape)
            return ga, gb

        return Tensor._from_op(np.matmul(a.data, b.data), (a, b), backward)

    # ---- shape ops ----

    def reshape(self, *shape):
        if len(shape) == 1 and isinstance(shape[0], (tuple, list)):
            shape = tuple(shape[0])
        a = self
        old = a.data.shape
        try:
            out = a.data.reshape(shape)
        except ValueError:
            raise ShapeError("reshape", a.data.shape, shape) from None
        return Tensor._from_op(out, (a,), lambda g: (g.reshape(old),))

    def swapaxes(self, ax1: int, ax2: int):
        a = self
        return Tensor._from_op(np.swapaxes(a.data, ax1, ax2), (a,),
                               lambda g: (np.swapaxes(g, ax1, ax2),))

    def __getitem__(self, idx):
        a = self
        out = a.data[idx]
        advanced = isinstance(idx, (np.ndarray, list)) or (
            isinstance(idx, tuple) and any(isinstance(i, (np.ndarray, list)) for i in idx))

        def backward(g):
            gx = np.zeros_like(a.data)
            if advanced:
                np.add.at(gx, idx, g)
            else:
                gx[idx] += g
            return (gx,)

        return Tensor._from_op(out, (a,), backward)

    # ---- reductions ----

    def sum(self, axis=None, keepdims: bool = False):
        a = self

        def backward(g):
            if axis is None:
                return (np.broadcast_to(g, a.data.shape).copy(),)
            gk = g if keepdims else np.expand_dims(g, axis)
            return (np.broadcast_to(gk, a.data.shape).copy(),)

        return Tensor._from_op(a.data.sum(axis=axis, keepdims=keepdims), (a,), backward)

    def mean(self, axis=None, keepdims: bool = False):
        n = self.data.size if axis is None else np.prod(
            [self.data.shape[ax] for ax in (axis if isinstance(axis, tuple) else (axis,))])
        return self.sum(axis=axis, keepdims=keepdims) * (1.0 / float(n))

    # ---- pointwise nonlinearities ----

    def exp(self):
        a = self
        out = np.exp(a.data)
        return Tensor._from_op(out, (a,), lambda g: (g * out,))

    def log(self):
        a = self
        return Tensor._from_op(np.log(a.data), (a,), lambda g: (g / a.data,))

    def sqrt(self):
        a = self
        out = np.sqrt(a.data)
        return Tensor._from_op(out, (a,), lambda g: (g * (0.5 / out),))

    def tanh(self):
        a = self
        out = np.tanh(a.data)
        return Tensor._from_op(out, (a,), lambda g: (g * (1.0 - out * out),))

    def sigmoid(self):
        a = self
        out = 1.0 / (1.0 + np.exp(-a.data))
        return Tensor._from_op(out, (a,), lambda g: (g * out * (1.0 - out),))

    def relu(self):
        a = self
        mask = a.data > 0
        return Tensor._from_op(np.where(mask, a.data, 0.0), (a,), lambda g: (g * mask,))

    def clamp(self, lo: float, hi: float):
        """Clip values; gradient passes only where lo <= x <= hi (bit-zero outside)."""
        a = self
        inside = (a.data >= lo) & (a.data <= hi)
        return Tensor._from_op(np.clip(a.data, lo, hi), (a,), lambda g: (g * inside,))

    # ---- backward ----

    def backward(self) -> None:
        """Reverse-mode gradients of this scalar w.r.t. every requires_grad tensor."""
        if self.data.size != 1:
            raise ValueError("backward() requires a scalar loss")
        if not np.isfinite(self.data).all():
            raise NonFiniteError("loss")

        order: list[Tensor] = []
        seen: set[int] = set()
        stack: list[tuple[Tensor, bool]] = [(self, False)]
        while stack:
            node, processed = stack.pop()
            if processed:
                order.append(node)
                continue
            if id(node) in seen:
                continue
            seen.add(id(node))
            stack.append((node, True))
            for p in node._parents:
                if p.requires_grad and id(p) not in seen:
                    stack.append((p, False))

        grads: dict[int, np.ndarray] = {id(self): np.ones_like(self.data)}
        for node in reversed(order):
            g = grads.pop(id(node), None)
            if g is None:
                continue
            if node._backward is not None:
                for parent, pg in zip(node._parents, node._backward(g)):
                    if pg is None or not parent.requires_grad:
                        continue
                    key = id(parent)
                    if key in grads:
                        grads[key] += pg
                    else:
                        grads[key] = pg
            else:
                node.grad = g if node.grad is None else node.grad + g

    def zero_grad(self) -> None:
        self.grad = None


# ---- module-level ops ----


def minimum(a: Tensor, b: Tensor) -> Tensor:
    """Elementwise min; on ties the gradient routes to the first argument."""
    a, b = Tensor._coerce(a), Tensor._coerce(b)
    a._broadcast_check("minimum", b)
    take_a = a.data <= b.data

    def backward(g):
        return (_unbroadcast(g * take_a, a.data.shape),
                _unbroadcast(g * ~take_a, b.data.shape))

    return Tensor._from_op(np.where(take_a, a.data, b.data), (a, b), backward)


def maximum(a: Tensor, b: Tensor) -> Tensor:
    a, b = Tensor._coerce(a), Tensor._coerce(b)
    a._broadcast_check("maximum", b)
    take_a = a.data >= b.data

    def backward(g):
        return (_unbroadcast(g * take_a, a.data.shape),
                _unbroadcast(g * ~take_a, b.data.shape))

    return Tensor._from_op(np.where(take_a, a.data, b.data), (a, b), backward)


def concat(tensors, axis: int = -1) -> Tensor:
    tensors = [Tensor._coerce(t) for t in tensors]
    sizes = [t.data.shape[axis] for t in tensors]
    out = np.concatenate([t.data for t in tensors], axis=axis)
    offsets = np.cumsum([0] + sizes)

    def backward(g):
        pieces = []
        for lo, hi in zip(offsets[:-1], offsets[1:]):
            sl = [slice(None)] * g.ndim
            sl[axis] = slice(lo, hi)
            pieces.append(g[tuple(sl)])
        return tuple(pieces)

    return Tensor._from_op(out, tuple(tensors), backward)


def stack(tensors, axis: int = 0) -> Tensor:
    tensors = [Tensor._coerce(t) for t in tensors]
    out = np.stack([t.data for t in tensors], axis=axis)

    def backward(g):
        return tuple(np.take(g, i, axis=axis) for i in range(len(tensors)))

    return Tensor._from_op(out, tuple(tensors), backward)


def log_softmax(x: Tensor, axis: int = -1) -> Tensor:
    """Numerically stable log-softmax with analytic backward."""
    m = x.data.max(axis=axis, keepdims=True)
    z = x.data - m
    lse = np.log(np.exp(z).sum(axis=axis, keepdims=True))
    out = z - lse
    sm = np.exp(out)

    def backward(g):
        return (g - sm * g.sum(axis=axis, keepdims=True),)

    return Tensor._from_op(out, (x,), backward)


def softmax(x: Tensor, axis: int = -1) -> Tensor:
    m = x.data.max(axis=axis, keepdims=True)
    e = np.exp(x.data - m)
    out = e / e.sum(axis=axis, keepdims=True)

    def backward(g):
        return (out * (g - (g * out).sum(axis=axis, keepdims=True)),)

    return Tensor._from_op(out, (x,), backward)


def gather_last(x: Tensor, idx: np.ndarray) -> Tensor:
    """Pick one entry along the last axis per leading position: out[...] = x[..., idx[...]]."""
    idx = np.asarray(idx)
    if idx.shape != x.data.shape[:-1]:
        raise ShapeError("gather_last", x.data.shape, idx.shape)
    if idx.min(initial=0) < 0 or idx.max(initial=0) >= x.data.shape[-1]:
        raise IndexError(f"gather_last: index outside [0, {x.data.shape[-1]})")
    out = np.take_along_axis(x.data, idx[..., None], axis=-1)[..., 0]

    def backward(g):
        gx = np.zeros_like(x.data)
        np.put_along_axis(gx, idx[..., None], g[..., None], axis=-1)
        return (gx,)

    return Tensor._from_op(out, (x,), backward)


def forward_backward(loss: Tensor, params) -> dict[str, np.ndarray]:
    """Run backward from ``loss`` and return fresh gradients for named params.

    ``params`` is any mapping name -> Tensor; existing .grad values are
    cleared first so the result reflects exactly this graph.
    """
    for p in params.values():
        p.zero_grad()
    loss.backward()
    return {name: (p.grad if p.grad is not None else np.zeros_like(p.data))
            for name, p in params.items()}
