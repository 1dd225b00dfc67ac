"""Hardness-weighted sampling of training indices.

The sampler keeps a stale copy of every sample's last observed loss and draws
mini-batch indices i.i.d. (with replacement) from ``softmax(beta * stale)``,
which is exactly the adversarial weighting of
:func:`drotrain.objectives.optimal_weights`.  Each drawn index comes with an
importance weight ``clip(n * q_i, w_min, w_max)``; with ``beta -> 0`` the
distribution is uniform and every weight is 1, recovering plain SGD.

A sampler is a single-writer object: one training loop owns it and serializes
``update_loss``/``draw`` calls.  ``distribution()`` is a read-only snapshot.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .objectives import optimal_weights

__all__ = ["SamplerConfig", "HardnessWeightedSampler", "UniformReplacementSampler"]


def _inverse_cdf_draw(rng: np.random.Generator, q: np.ndarray, batch_size: int) -> np.ndarray:
    """Map ``batch_size`` uniforms through the cumulative sum of ``q``.

    Shared by every sampler so that two samplers holding bit-identical
    distributions and RNG states emit bit-identical index streams.
    """
    cdf = np.cumsum(q)
    u = rng.random(batch_size)
    indices = np.searchsorted(cdf, u, side="right")
    np.clip(indices, 0, q.size - 1, out=indices)
    return indices


@dataclass(frozen=True)
class SamplerConfig:
    """Temperature, importance-weight clipping bounds, and stale-loss init.

    ``init_loss`` should exceed any achievable per-sample loss so that every
    sample stays competitive until it has been visited once (for losses
    bounded in [0, 1] the default 1.0 does this).
    """

    beta: float = 100.0
    w_min: float = 0.1
    w_max: float = 10.0
    init_loss: float = 1.0

    def __post_init__(self) -> None:
        if not (math.isfinite(self.beta) and self.beta > 0):
            raise ValueError(f"beta must be finite and > 0, got {self.beta}")
        if not (0.0 < self.w_min <= self.w_max):
            raise ValueError(
                f"clipping bounds must satisfy 0 < w_min <= w_max, got [{self.w_min}, {self.w_max}]"
            )
        if not math.isfinite(self.init_loss):
            raise ValueError("init_loss must be finite")


class HardnessWeightedSampler:
    """Stale per-sample losses plus a deterministic draw stream.

    Draws use inverse-CDF sampling: ``u ~ U[0,1)`` mapped through the
    cumulative sum of the sampling distribution.  Identical (seed, config,
    update sequence) therefore reproduce identical draw sequences.
    """

    def __init__(self, n: int, config: SamplerConfig | None = None, seed: int = 0):
        if n < 1:
            raise ValueError(f"dataset size must be >= 1, got {n}")
        self.config = config if config is not None else SamplerConfig()
        self._stale = np.full(n, float(self.config.init_loss))
        self._counts = np.zeros(n, dtype=np.int64)
        self._rng = np.random.default_rng(seed)

    @property
    def n(self) -> int:
        return self._stale.size

    @property
    def stale_losses(self) -> np.ndarray:
        return self._stale.copy()

    @property
    def draw_counts(self) -> np.ndarray:
        return self._counts.copy()

    def update_loss(self, index: int, loss: float) -> None:
        """Record the freshly observed loss of one sample (overwrite)."""
        if not 0 <= index < self.n:
            raise ValueError(f"index {index} out of range for {self.n} samples")
        if not math.isfinite(loss):
            raise ValueError(f"loss must be finite, got {loss}")
        self._stale[index] = loss

    def update_losses(self, indices, losses) -> None:
        """Vectorized overwrite; duplicate indices keep the last value."""
        idx = np.asarray(indices, dtype=np.int64)
        vals = np.asarray(losses, dtype=float)
        if idx.shape != vals.shape:
            raise ValueError("indices and losses must have the same shape")
        if idx.size and (idx.min() < 0 or idx.max() >= self.n):
            raise ValueError("index out of range")
        if not np.all(np.isfinite(vals)):
            raise ValueError("losses must be finite")
        self._stale[idx] = vals

    def distribution(self) -> np.ndarray:
        """Current sampling probabilities: ``softmax(beta * stale_losses)``."""
        return optimal_weights(self._stale, self.config.beta)

    def draw(self, batch_size: int) -> tuple[np.ndarray, np.ndarray]:
        """Draw ``batch_size`` indices i.i.d. with replacement.

        Returns ``(indices, importance_weights)`` where each weight is
        ``clip(n * q_index, w_min, w_max)``.  Advances the RNG and the
        per-sample draw counts.
        """
        if batch_size < 1:
            raise ValueError(f"batch_size must be >= 1, got {batch_size}")
        q = self.distribution()
        indices = _inverse_cdf_draw(self._rng, q, batch_size)
        weights = np.clip(self.n * q[indices], self.config.w_min, self.config.w_max)
        np.add.at(self._counts, indices, 1)
        return indices, weights

    def state_dict(self) -> dict:
        """JSON-serializable snapshot, inverse of :meth:`from_state_dict`."""
        return {
            "config": {
                "beta": self.config.beta,
                "w_min": self.config.w_min,
                "w_max": self.config.w_max,
                "init_loss": self.config.init_loss,
            },
            "stale_losses": self._stale.tolist(),
            "draw_counts": self._counts.tolist(),
            "rng_state": self._rng.bit_generator.state,
        }

    @classmethod
    def from_state_dict(cls, state: dict) -> "HardnessWeightedSampler":
        cfg = SamplerConfig(**state["config"])
        sampler = cls(len(state["stale_losses"]), cfg, seed=0)
        sampler._stale = np.asarray(state["stale_losses"], dtype=float)
        sampler._counts = np.asarray(state["draw_counts"], dtype=np.int64)
        sampler._rng.bit_generator.state = state["rng_state"]
        return sampler


class UniformReplacementSampler:
    """Uniform-with-replacement reference sharing the draw contract above.

    Holds the exact distribution 1/n and emits unit importance weights.  In
    the constant-stale state a :class:`HardnessWeightedSampler` seeded the
    same way produces a bit-identical index stream, which is the degenerate
    plain-SGD limit of hardness weighting.
    """

    def __init__(self, n: int, seed: int = 0):
        if n < 1:
            raise ValueError(f"dataset size must be >= 1, got {n}")
        self._q = np.full(n, 1.0) / n
        self._rng = np.random.default_rng(seed)

    @property
    def n(self) -> int:
        return self._q.size

    def draw(self, batch_size: int) -> tuple[np.ndarray, np.ndarray]:
        if batch_size < 1:
            raise ValueError(f"batch_size must be >= 1, got {batch_size}")
        indices = _inverse_cdf_draw(self._rng, self._q, batch_size)
        return indices, np.ones(batch_size)
