"""Training loop: Adam with global-norm gradient clipping.

Batches are seeded shuffles of story indices; per-batch gradients are the
mean of per-story gradients accumulated in a fixed order, so a given
(seed, data, config) triple always produces bit-identical parameters.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .errors import NonFiniteError
from .model import ImageSequence, Story, StoryModel, forward_loss


@dataclass
class TrainConfig:
    lr: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    clip_norm: float = 5.0
    batch_size: int = 16
    epochs: int = 10
    seed: int = 0


@dataclass
class OptimState:
    """Adam first/second moments per parameter, plus the shared step count."""

    step: int = 0
    m: dict[str, np.ndarray] = field(default_factory=dict)
    v: dict[str, np.ndarray] = field(default_factory=dict)

    @classmethod
    def for_model(cls, model: StoryModel) -> "OptimState":
        params = model.parameters()
        return cls(
            step=0,
            m={k: np.zeros_like(p) for k, p in params.items()},
            v={k: np.zeros_like(p) for k, p in params.items()},
        )


def global_norm(grads: dict[str, np.ndarray]) -> float:
    total = 0.0
    for g in grads.values():
        total += float(np.sum(np.square(g, dtype=np.float64)))
    return float(np.sqrt(total))


def clip_global_norm(grads: dict[str, np.ndarray], clip_norm: float) -> float:
    """Scale all gradients in place so their joint L2 norm is <= clip_norm.

    Returns the pre-clip norm. Norms at or under the threshold (and a
    non-positive threshold, meaning clipping is disabled) leave the
    gradients untouched.
    """
    norm = global_norm(grads)
    if clip_norm > 0 and norm > clip_norm:
        scale = clip_norm / norm
        for g in grads.values():
            g *= scale
    return norm


def adam_update(
    model: StoryModel, grads: dict[str, np.ndarray], state: OptimState, cfg: TrainConfig
) -> None:
    """One in-place Adam step. Clipping happens before the moment updates.

    Non-finite gradients abort the step before any state is touched.
    """
    for name, g in grads.items():
        if not np.all(np.isfinite(g)):
            raise NonFiniteError(f"non-finite gradient for {name}")
    clip_global_norm(grads, cfg.clip_norm)
    state.step += 1
    t = state.step
    bias1 = 1.0 - cfg.beta1**t
    bias2 = 1.0 - cfg.beta2**t
    params = model.parameters()
    for name, p in params.items():
        g = grads[name]
        m = state.m[name]
        v = state.v[name]
        m *= cfg.beta1
        m += (1.0 - cfg.beta1) * g
        v *= cfg.beta2
        v += (1.0 - cfg.beta2) * np.square(g)
        m_hat = m / bias1
        v_hat = v / bias2
        p -= cfg.lr * m_hat / (np.sqrt(v_hat) + cfg.eps)


@dataclass
class TrainExample:
    story_id: str
    seq: ImageSequence
    reference: Story


def train(
    model: StoryModel,
    examples: list[TrainExample],
    cfg: TrainConfig,
    optim: OptimState | None = None,
    on_epoch: Callable[[int, float], None] | None = None,
) -> tuple[OptimState, list[float]]:
    """Run cfg.epochs passes over the examples.

    Returns the optimizer state and the per-epoch mean losses. on_epoch,
    when given, is called as on_epoch(epoch_index, mean_loss) after each
    epoch. Zero epochs is a no-op that leaves the model untouched.
    """
    if not examples:
        raise ValueError("no training examples")
    if cfg.batch_size < 1:
        raise ValueError("batch_size must be >= 1")
    if optim is None:
        optim = OptimState.for_model(model)
    rng = np.random.default_rng(cfg.seed)
    epoch_losses: list[float] = []
    for epoch in range(cfg.epochs):
        order = rng.permutation(len(examples))
        loss_total = 0.0
        for start in range(0, len(order), cfg.batch_size):
            batch = order[start : start + cfg.batch_size]
            batch_grads: dict[str, np.ndarray] | None = None
            batch_loss = 0.0
            for i in batch:
                ex = examples[int(i)]
                loss, grads = forward_loss(model, ex.seq, ex.reference)
                batch_loss += loss
                if batch_grads is None:
                    batch_grads = grads
                else:
                    for name in batch_grads:
                        batch_grads[name] += grads[name]
            assert batch_grads is not None
            inv = 1.0 / len(batch)
            for name in batch_grads:
                batch_grads[name] *= inv
            adam_update(model, batch_grads, optim, cfg)
            loss_total += batch_loss
        mean_loss = loss_total / len(examples)
        epoch_losses.append(mean_loss)
        if on_epoch is not None:
            on_epoch(epoch, mean_loss)
    return optim, epoch_losses


def evaluate_loss(model: StoryModel, examples: list[TrainExample]) -> float:
    """Mean teacher-forced loss over the examples, no parameter updates."""
    if not examples:
        raise ValueError("no examples")
    return sum(forward_loss(model, ex.seq, ex.reference)[0] for ex in examples) / len(examples)
