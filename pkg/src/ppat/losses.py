"""Classification losses over logits.

Both losses share one numerically stable path: log p_label is computed as
logit[label] - logsumexp(logits), so the gamma=0 focal loss is bitwise
identical to cross-entropy (the modulating factor is exactly 1 and the
gradient takes the cross-entropy branch).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .autodiff import Tensor, _make, tensor_mean
from .errors import LabelOutOfRange


@dataclass(frozen=True)
class FocalLossConfig:
    """gamma >= 0 controls how strongly easy examples are down-weighted;
    alpha, when given, is a per-class weight vector (off by default)."""

    gamma: float = 2.0
    alpha: tuple[float, ...] | None = None

    def __post_init__(self):
        if self.gamma < 0:
            raise ValueError("gamma must be >= 0")
        if self.alpha is not None:
            try:
                normalized = tuple(float(a) for a in self.alpha)
            except TypeError as exc:
                raise ValueError("alpha must be a per-class sequence of weights") from exc
            if any(a < 0 for a in normalized):
                raise ValueError("alpha weights must be >= 0")
            object.__setattr__(self, "alpha", normalized)


def _prep(logits: Tensor, label) -> tuple[np.ndarray, np.ndarray, bool]:
    """Normalize to a (B, K) view plus an int label array of shape (B,)."""
    if logits.data.ndim == 1:
        batched = False
        data = logits.data[None, :]
        labels = np.asarray([label], dtype=np.int64)
    elif logits.data.ndim == 2:
        batched = True
        data = logits.data
        labels = np.asarray(label, dtype=np.int64)
        if labels.shape != (data.shape[0],):
            raise LabelOutOfRange(
                f"labels shape {labels.shape} does not match batch {data.shape[0]}"
            )
    else:
        raise LabelOutOfRange(f"logits must be (K,) or (B,K), got {logits.shape}")
    k = data.shape[1]
    if k < 2:
        raise LabelOutOfRange("need at least 2 classes")
    if np.any(labels < 0) or np.any(labels >= k):
        raise LabelOutOfRange(f"label outside 0..{k - 1}")
    return data, labels, batched


def _log_softmax_pick(data: np.ndarray, labels: np.ndarray):
    m = data.max(axis=1, keepdims=True)
    shifted = data - m
    exp = np.exp(shifted)
    sum_exp = exp.sum(axis=1, keepdims=True)
    log_pt = shifted[np.arange(data.shape[0]), labels] - np.log(sum_exp[:, 0])
    probs = exp / sum_exp
    return log_pt, probs


def softmax_cross_entropy(logits: Tensor, label) -> Tensor:
    """-log softmax(logits)[label]; scalar for (K,) input, (B,) for (B,K)."""
    data, labels, batched = _prep(logits, label)
    log_pt, probs = _log_softmax_pick(data, labels)
    loss = -log_pt

    def backward_fn(g):
        onehot = np.zeros_like(probs)
        onehot[np.arange(len(labels)), labels] = 1.0
        grad = (probs - onehot) * g.reshape(-1, 1)
        logits.accumulate_grad(grad if batched else grad[0])

    out = loss if batched else loss[0].reshape(())
    return _make(np.asarray(out, dtype=logits.dtype), (logits,), backward_fn)


def focal_loss(logits: Tensor, label, config: FocalLossConfig | None = None) -> Tensor:
    """-(1 - p_label)^gamma * log(p_label); equals cross-entropy at gamma=0."""
    config = config or FocalLossConfig()
    if config.gamma == 0 and config.alpha is None:
        return softmax_cross_entropy(logits, label)

    data, labels, batched = _prep(logits, label)
    gamma = config.gamma
    log_pt, probs = _log_softmax_pick(data, labels)
    pt = np.exp(log_pt)
    one_minus_pt = 1.0 - pt
    modulator = one_minus_pt**gamma
    loss = -modulator * log_pt
    if config.alpha is not None:
        if len(config.alpha) != data.shape[1]:
            raise LabelOutOfRange("alpha length must equal the class count")
        alpha_t = np.asarray(config.alpha, dtype=data.dtype)[labels]
        loss = alpha_t * loss

    def backward_fn(g):
        onehot = np.zeros_like(probs)
        rows = np.arange(len(labels))
        onehot[rows, labels] = 1.0
        if gamma == 0:
            dloss_dlogit = probs - onehot
        else:
            # d/dp[-(1-p)^g log p] = g (1-p)^(g-1) log p - (1-p)^g / p,
            # with the p -> 1 limit taken as 0 for any g > 0.
            with np.errstate(divide="ignore", invalid="ignore"):
                dloss_dpt = np.where(
                    one_minus_pt > 0,
                    gamma * one_minus_pt ** (gamma - 1) * log_pt
                    - modulator / pt,
                    0.0,
                )
            # dp/dlogit_k = p (onehot_k - prob_k)
            dloss_dlogit = (dloss_dpt * pt).reshape(-1, 1) * (onehot - probs)
        if config.alpha is not None:
            dloss_dlogit = alpha_t.reshape(-1, 1) * dloss_dlogit
        grad = dloss_dlogit * g.reshape(-1, 1)
        logits.accumulate_grad(grad if batched else grad[0])

    out = loss if batched else loss[0].reshape(())
    return _make(np.asarray(out, dtype=logits.dtype), (logits,), backward_fn)


def batch_mean_loss(
    logits: Tensor, labels, loss_kind: str, config: FocalLossConfig | None = None
) -> Tensor:
    """Mean per-sample loss over a (B, K) logits batch."""
    if loss_kind == "ce":
        per_sample = softmax_cross_entropy(logits, labels)
    elif loss_kind == "focal":
        per_sample = focal_loss(logits, labels, config)
    else:
        raise ValueError(f"unknown loss kind {loss_kind!r}")
    return tensor_mean(per_sample)
