"""Named parameter collections and the AdamW update with EMA shadow weights."""

from __future__ import annotations

import logging

import numpy as np

from .tensor import Tensor, default_dtype

log = logging.getLogger(__name__)


class ParamStore:
    """Named parameters plus per-parameter optimizer state and optional EMA.

    Single-writer: only the training loop mutates a store. Frozen copies for
    rollout workers come from :meth:`snapshot`.
    """

    def __init__(self, ema_decay: float | None = None):
        if ema_decay is not None and not (0.0 <= ema_decay < 1.0):
            raise ValueError(f"EMA decay must be in [0, 1), got {ema_decay}")
        self.params: dict[str, Tensor] = {}
        self.m: dict[str, np.ndarray] = {}
        self.v: dict[str, np.ndarray] = {}
        self.step_count = 0
        self.ema_decay = ema_decay
        self.ema: dict[str, np.ndarray] | None = {} if ema_decay is not None else None
        self.rejected_updates = 0

    def add(self, name: str, data: np.ndarray, requires_grad: bool = True) -> Tensor:
        if name in self.params:
            raise KeyError(f"parameter {name!r} already registered")
        t = Tensor(np.asarray(data, dtype=default_dtype()), requires_grad=requires_grad)
        self.params[name] = t
        self.m[name] = np.zeros_like(t.data)
        self.v[name] = np.zeros_like(t.data)
        if self.ema is not None:
            self.ema[name] = t.data.copy()
        return t

    def __getitem__(self, name: str) -> Tensor:
        return self.params[name]

    def __contains__(self, name: str) -> bool:
        return name in self.params

    def names(self) -> list[str]:
        return list(self.params)

    def n_values(self) -> int:
        return sum(p.data.size for p in self.params.values())

    def zero_grad(self) -> None:
        for p in self.params.values():
            p.grad = None

    def snapshot(self, tag: str = "") -> "FrozenParams":
        return FrozenParams({k: p.data.copy() for k, p in self.params.items()}, tag)

    def load_arrays(self, arrays: dict[str, np.ndarray]) -> None:
        for name, arr in arrays.items():
            p = self.params[name]
            if p.data.shape != arr.shape:
                raise ValueError(f"{name}: shape {arr.shape} != {p.data.shape}")
            p.data = arr.astype(default_dtype())

    def ema_arrays(self) -> dict[str, np.ndarray]:
        if self.ema is None:
            raise ValueError("EMA not enabled for this store")
        return {k: v.copy() for k, v in self.ema.items()}


class FrozenParams:
    """Immutable view of a ParamStore's values (the rollout-time policy copy)."""

    def __init__(self, arrays: dict[str, np.ndarray], tag: str = ""):
        self._tensors = {k: Tensor(v, requires_grad=False) for k, v in arrays.items()}
        for t in self._tensors.values():
            t.data.flags.writeable = False
        self.tag = tag

    def __getitem__(self, name: str) -> Tensor:
        return self._tensors[name]

    def __contains__(self, name: str) -> bool:
        return name in self._tensors

    def names(self) -> list[str]:
        return list(self._tensors)

    def arrays(self) -> dict[str, np.ndarray]:
        return {k: t.data for k, t in self._tensors.items()}


def global_grad_norm(store: ParamStore) -> float:
    total = 0.0
    for p in store.params.values():
        if p.grad is not None:
            total += float(np.sum(p.grad * p.grad))
    return float(np.sqrt(total))


def adamw_step(store: ParamStore, lr: float, betas: tuple[float, float] = (0.9, 0.999),
               eps: float = 1e-8, weight_decay: float = 0.0,
               grad_clip: float | None = None) -> float:
    """One decoupled-weight-decay Adam update over every parameter in the store.

    The global gradient norm is clipped to ``grad_clip`` before the moment
    update. A non-finite gradient anywhere rejects the whole update: no state
    changes, the step counter stays put, and the event is logged. Returns the
    pre-clip gradient norm.
    """
    if lr <= 0:
        raise ValueError(f"lr must be positive, got {lr}")
    b1, b2 = betas

    grads = {}
    for name, p in store.params.items():
        g = p.grad if p.grad is not None else np.zeros_like(p.data)
        if not np.isfinite(g).all():
            store.rejected_updates += 1
            log.warning("adamw_step rejected: non-finite gradient in %r "
                        "(%d rejections so far)", name, store.rejected_updates)
            return float("nan")
        grads[name] = g

    norm = float(np.sqrt(sum(float(np.sum(g * g)) for g in grads.values())))
    if grad_clip is not None and norm > grad_clip and norm > 0.0:
        scale = grad_clip / norm
        grads = {k: g * scale for k, g in grads.items()}

    store.step_count += 1
    t = store.step_count
    bc1 = 1.0 - b1 ** t
    bc2 = 1.0 - b2 ** t
    for name, p in store.params.items():
        g = grads[name]
        m = store.m[name]
        v = store.v[name]
        m *= b1
        m += (1.0 - b1) * g
        v *= b2
        v += (1.0 - b2) * (g * g)
        update = (m / bc1) / (np.sqrt(v / bc2) + eps)
        if weight_decay != 0.0:
            update = update + weight_decay * p.data
        p.data = p.data - lr * update
        if store.ema is not None:
            d = store.ema_decay
            store.ema[name] = d * store.ema[name] + (1.0 - d) * p.data
    return norm
