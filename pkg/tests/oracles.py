"""Independent reference implementations used to validate the real code paths.

Nothing in here imports the autodiff engine's backward machinery: finite
differences perturb raw arrays, and the reference optimizer is a direct
transcription of the update equations for a single scalar.
"""

from __future__ import annotations

import numpy as np

from wmpo.nn import ParamStore, Tensor


def finite_difference_grads(params: dict[str, Tensor], loss_fn, h: float = 1e-5):
    """Central finite differences of loss_fn() w.r.t. each parameter entry."""
    grads = {}
    for name, p in params.items():
        g = np.zeros_like(p.data)
        flat = p.data.reshape(-1)
        gflat = g.reshape(-1)
        for i in range(flat.size):
            orig = flat[i]
            flat[i] = orig + h
            f_plus = float(loss_fn().data)
            flat[i] = orig - h
            f_minus = float(loss_fn().data)
            flat[i] = orig
            gflat[i] = (f_plus - f_minus) / (2.0 * h)
        grads[name] = g
    return grads


def check_grads(store: ParamStore, loss_fn, h: float = 1e-5, rtol: float = 1e-6,
                subsample: int | None = None, rng: np.random.Generator | None = None):
    """Compare backward() gradients with finite differences.

    Set ``subsample`` to check only that many randomly chosen scalar entries
    per parameter (keeps large-layer checks inside the runtime budget).
    Returns the worst relative error observed.
    """
    store.zero_grad()
    loss = loss_fn()
    loss.backward()
    analytic = {name: (p.grad if p.grad is not None else np.zeros_like(p.data))
                for name, p in store.params.items()}

    worst = 0.0
    for name, p in store.params.items():
        flat = p.data.reshape(-1)
        aflat = analytic[name].reshape(-1)
        # entries far below the parameter's gradient scale sit under the fd
        # noise floor; measure those relative to the scale, not themselves
        gscale = float(np.abs(analytic[name]).max())
        if subsample is not None and flat.size > subsample:
            assert rng is not None
            idxs = rng.choice(flat.size, size=subsample, replace=False)
        else:
            idxs = range(flat.size)
        for i in idxs:
            orig = flat[i]
            flat[i] = orig + h
            f_plus = float(loss_fn().data)
            flat[i] = orig - h
            f_minus = float(loss_fn().data)
            flat[i] = orig
            fd = (f_plus - f_minus) / (2.0 * h)
            denom = max(abs(fd), abs(aflat[i]), 1e-3 * gscale, 1e-10)
            rel = abs(aflat[i] - fd) / denom
            worst = max(worst, rel)
            assert rel < rtol, (f"{name}[{i}]: analytic {aflat[i]:.12g} vs fd {fd:.12g} "
                                f"(rel err {rel:.3g})")
    return worst


def reference_adamw_scalar(grads: list[float], lr: float, b1: float, b2: float,
                           eps: float, weight_decay: float, x0: float) -> list[float]:
    """Scalar AdamW trajectory, written independently of the package optimizer."""
    x, m, v = x0, 0.0, 0.0
    out = []
    for t, g in enumerate(grads, start=1):
        m = b1 * m + (1 - b1) * g
        v = b2 * v + (1 - b2) * g * g
        mhat = m / (1 - b1 ** t)
        vhat = v / (1 - b2 ** t)
        x = x - lr * (mhat / (np.sqrt(vhat) + eps) + weight_decay * x)
        out.append(x)
    return out
