"""Temperature-controlled categorical sampling over logits."""

from __future__ import annotations

import numpy as np


def _log_probs(logits: np.ndarray, temperature: float) -> np.ndarray:
    z = logits / temperature
    z = z - z.max(axis=-1, keepdims=True)
    return z - np.log(np.exp(z).sum(axis=-1, keepdims=True))


def sample_categorical(logits: np.ndarray, temperature: float,
                       rng: np.random.Generator, greedy: bool = False) -> tuple[int, float]:
    """Draw an index with probability softmax(logits/temperature).

    Returns (index, log-probability of that index under the sampling
    distribution). ``greedy`` takes the temperature -> 0+ limit: the argmax
    index, with its log-probability still reported at the given temperature.
    """
    logits = np.asarray(logits, dtype=np.float64)
    if logits.ndim != 1:
        raise ValueError(f"expected a logit vector, got shape {logits.shape}")
    if not np.isfinite(logits).any():
        raise ValueError("all logits are non-finite")
    if not np.isfinite(logits).all():
        raise ValueError("logits contain non-finite entries")
    if temperature <= 0:
        raise ValueError(f"temperature must be positive, got {temperature}")

    logp = _log_probs(logits, temperature)
    if greedy:
        idx = int(np.argmax(logits))
    else:
        cdf = np.cumsum(np.exp(logp))
        cdf[-1] = 1.0
        idx = int(np.searchsorted(cdf, rng.random(), side="right"))
        idx = min(idx, logits.shape[0] - 1)
    return idx, float(logp[idx])


def sample_categorical_grid(logits: np.ndarray, temperature: float,
                            rng: np.random.Generator,
                            greedy: bool = False) -> tuple[np.ndarray, np.ndarray]:
    """Vectorized sampling over the last axis for a (..., V) logit grid.

    One uniform draw per leading position, consumed from ``rng`` in C order,
    so a fixed rng stream gives a reproducible token grid.
    """
    logits = np.asarray(logits, dtype=np.float64)
    if not np.isfinite(logits).all():
        raise ValueError("logits contain non-finite entries")
    if temperature <= 0:
        raise ValueError(f"temperature must be positive, got {temperature}")

    logp = _log_probs(logits, temperature)
    if greedy:
        idx = np.argmax(logits, axis=-1)
    else:
        cdf = np.cumsum(np.exp(logp), axis=-1)
        cdf[..., -1] = 1.0
        u = rng.random(size=logits.shape[:-1])[..., None]
        idx = (cdf < u).sum(axis=-1)
        idx = np.minimum(idx, logits.shape[-1] - 1)
    sel = np.take_along_axis(logp, idx[..., None], axis=-1)[..., 0]
    return idx.astype(np.int64), sel
