"""Mini-batch training loop: seeded shuffling, Adam, plateau learning-rate decay.

Training is single threaded and fully deterministic: (seed, data, hyper)
pin the shuffle order, the initialization, and therefore every parameter
bit. The returned model is the best-validation-loss snapshot when a
validation set is given, otherwise the final model.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from ..dataset import Vocabularies
from .adam import AdamState, adam_step
from .net import FeatureBatch, backward, featurize_claims, forward_batch, loss, targets_dense
from .params import Dims, ModelParams, init_model


@dataclass(frozen=True)
class TrainHyper:
    learning_rate: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    epsilon: float = 1e-8
    batch_size: int = 256
    epochs: int = 10
    seed: int = 0
    lr_decay: float = 0.5  # applied after lr_patience epochs without val improvement
    lr_patience: int = 2

    def validate(self) -> None:
        if self.learning_rate <= 0:
            raise ValueError("learning_rate must be positive")
        if not (0 <= self.beta1 < 1 and 0 <= self.beta2 < 1):
            raise ValueError("betas must be in [0, 1)")
        if self.batch_size < 1:
            raise ValueError("batch_size must be >= 1")
        if self.epochs < 0:
            raise ValueError("epochs must be >= 0")


class EpochStats(NamedTuple):
    epoch: int
    train_loss: float
    val_loss: float  # NaN when no validation set
    lr: float


def _dataset_loss(model: ModelParams, batch: FeatureBatch, eval_batch_size: int = 2048) -> float:
    total = 0.0
    n = len(batch)
    y_count = model.label_count
    for start in range(0, n, eval_batch_size):
        part = batch.take(np.arange(start, min(start + eval_batch_size, n)))
        logits = forward_batch(model, part)
        y = targets_dense(part.label_rows, y_count, dtype=model.dtype)
        total += loss(logits, y) * len(part)
    return total / n


def train(
    train_claims,
    val_claims,
    vocabs: Vocabularies,
    dims: Dims | None = None,
    hyper: TrainHyper | None = None,
) -> tuple[ModelParams, list[EpochStats]]:
    hyper = hyper or TrainHyper()
    hyper.validate()
    train_claims = list(train_claims)
    if not train_claims:
        raise ValueError("no training claims")

    model = init_model(vocabs, dims, seed=hyper.seed)
    history: list[EpochStats] = []
    if hyper.epochs == 0:
        return model, history

    data = featurize_claims(train_claims, vocabs, with_labels=True)
    val = featurize_claims(val_claims, vocabs, with_labels=True) if val_claims else None

    state = AdamState.for_model(model)
    rng = np.random.default_rng(hyper.seed)
    lr = hyper.learning_rate
    n = len(data)
    label_count = vocabs.label_count

    best_val = math.inf
    best_model: ModelParams | None = None
    stall = 0

    for epoch in range(hyper.epochs):
        order = rng.permutation(n)
        running = 0.0
        for start in range(0, n, hyper.batch_size):
            part = data.take(order[start : start + hyper.batch_size])
            y = targets_dense(part.label_rows, label_count, dtype=model.dtype)
            batch_loss, grads = backward(model, part, y)
            adam_step(
                model,
                grads,
                state,
                lr=lr,
                beta1=hyper.beta1,
                beta2=hyper.beta2,
                epsilon=hyper.epsilon,
            )
            running += batch_loss * len(part)
        train_loss = running / n
        # NaN/inf from a bad step is sticky under Adam, so a per-epoch scan
        # catches any diverged update
        model.assert_finite()

        val_loss = math.nan
        if val is not None:
            val_loss = _dataset_loss(model, val)
            if val_loss < best_val:
                best_val = val_loss
                best_model = model.copy()
                stall = 0
            else:
                stall += 1
                if stall >= hyper.lr_patience:
                    lr *= hyper.lr_decay
                    stall = 0
        history.append(EpochStats(epoch, train_loss, val_loss, lr))

    final = best_model if best_model is not None else model
    final.assert_finite()
    return final, history
