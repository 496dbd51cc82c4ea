"""Bias-corrected Adam over named parameter dicts."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .autodiff import Tensor
from .errors import ShapeMismatch


@dataclass(frozen=True)
class AdamConfig:
    learning_rate: float = 0.001
    beta1: float = 0.9
    beta2: float = 0.999
    epsilon: float = 1e-8

    def __post_init__(self):
        if not self.learning_rate > 0:
            raise ValueError("learning_rate must be > 0")
        if not (0 <= self.beta1 < 1 and 0 <= self.beta2 < 1):
            raise ValueError("betas must lie in [0, 1)")


@dataclass
class AdamState:
    step: int = 0
    m: dict[str, np.ndarray] = field(default_factory=dict)
    v: dict[str, np.ndarray] = field(default_factory=dict)

    @classmethod
    def initial(cls, params: dict[str, Tensor]) -> "AdamState":
        return cls(
            step=0,
            m={name: np.zeros_like(p.data) for name, p in params.items()},
            v={name: np.zeros_like(p.data) for name, p in params.items()},
        )


def adam_step(
    params: dict[str, Tensor],
    grads: dict[str, np.ndarray],
    state: AdamState,
    config: AdamConfig,
) -> tuple[dict[str, Tensor], AdamState]:
    """One in-place update; a missing gradient means that parameter holds."""
    state.step += 1
    t = state.step
    lr = config.learning_rate
    b1, b2 = config.beta1, config.beta2
    for name, param in params.items():
        g = grads.get(name)
        if g is None:
            continue
        if g.shape != param.data.shape or state.m[name].shape != param.data.shape:
            raise ShapeMismatch(f"gradient/moment shape mismatch for {name!r}")
        m = state.m[name]
        v = state.v[name]
        m *= b1
        m += (1 - b1) * g
        v *= b2
        v += (1 - b2) * (g * g)
        m_hat = m / (1 - b1**t)
        v_hat = v / (1 - b2**t)
        param.data -= lr * m_hat / (np.sqrt(v_hat) + config.epsilon)
    return params, state


def collect_grads(params: dict[str, Tensor]) -> dict[str, np.ndarray]:
    return {
        name: p.grad for name, p in params.items() if p.grad is not None
    }
