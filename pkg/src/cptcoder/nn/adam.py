"""Adam update with bias correction, implemented directly on the parameter tensors."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .params import ModelParams


class ShapeMismatchError(ValueError):
    pass


@dataclass
class AdamState:
    """First/second-moment accumulators shaped like every parameter tensor."""

    m: dict[str, np.ndarray]
    v: dict[str, np.ndarray]
    t: int = 0

    @classmethod
    def for_model(cls, model: ModelParams) -> "AdamState":
        tensors = model.tensors()
        return cls(
            m={name: np.zeros_like(t) for name, t in tensors.items()},
            v={name: np.zeros_like(t) for name, t in tensors.items()},
        )


def adam_step(
    model: ModelParams,
    grads: dict[str, np.ndarray],
    state: AdamState,
    lr: float,
    beta1: float = 0.9,
    beta2: float = 0.999,
    epsilon: float = 1e-8,
) -> tuple[ModelParams, AdamState]:
    """One in-place Adam update; returns the mutated model and state."""
    tensors = model.tensors()
    if set(grads) != set(tensors):
        raise ShapeMismatchError(f"gradient keys {sorted(grads)} != {sorted(tensors)}")
    for name, p in tensors.items():
        if grads[name].shape != p.shape:
            raise ShapeMismatchError(f"{name}: grad {grads[name].shape} vs param {p.shape}")

    state.t += 1
    bc1 = 1.0 - beta1 ** state.t
    bc2 = 1.0 - beta2 ** state.t
    for name, p in tensors.items():
        g = grads[name]
        m = state.m[name]
        v = state.v[name]
        m *= beta1
        m += (1.0 - beta1) * g
        v *= beta2
        v += (1.0 - beta2) * (g * g)
        m_hat = m / bc1
        v_hat = v / bc2
        p -= lr * m_hat / (np.sqrt(v_hat) + epsilon)
    return model, state
