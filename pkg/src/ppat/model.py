"""Full assessment model: 12-frame decomposition, shared visual encoder,
temporal extractor, caption fusion, and a three-layer decoder, plus the
seeded mini-batch training loop.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field, replace
from typing import Sequence

import numpy as np

from .autodiff import Tensor, as_tensor, backward, concat, relu, reshape, slice_axis, tensor_mean, zero_grads
from .captions import CaptionRecord
from .encoders import (
    EncoderConfig,
    ExternalVisualEncoder,
    ReferenceVisualEncoder,
    TemporalEncoder,
    TextEncoder,
)
from .errors import (
    EmptyDataset,
    InvalidSwitchCombination,
    NonFiniteLoss,
    SchemaError,
    ShapeMismatch,
)
from .layers import linear, uniform_init, zeros_param
from .losses import FocalLossConfig, batch_mean_loss
from .optim import AdamConfig, AdamState, adam_step, collect_grads
from .raster import rasterize_sequence
from .sketch import NUM_SUB_SKETCHES, Sketch, decompose

LABELS = ("not_depressed", "depressed")
NUM_CLASSES = 2


@dataclass(frozen=True)
class ModelConfig:
    encoder: EncoderConfig = field(default_factory=EncoderConfig)
    loss: str = "focal"
    gamma: float = 2.0
    adam: AdamConfig = field(default_factory=AdamConfig)
    batch_size: int = 8
    epochs: int = 100
    patience: int = 20
    seed: int = 7
    use_caption: bool = True
    use_temporal: bool = True
    freeze_text: bool = False
    target_accuracy: float | None = None
    decoder_hidden: tuple[int, ...] = (128, 64)
    dtype: str = "float32"

    def __post_init__(self):
        if self.loss not in ("focal", "ce"):
            raise SchemaError("loss", f"must be 'focal' or 'ce', got {self.loss!r}")
        if self.gamma < 0:
            raise SchemaError("gamma", f"must be >= 0, got {self.gamma}")
        if self.batch_size < 1:
            raise SchemaError("batch_size", f"must be >= 1, got {self.batch_size}")
        if self.epochs < 1:
            raise SchemaError("epochs", f"must be >= 1, got {self.epochs}")
        if self.patience < 1:
            raise SchemaError("patience", f"must be >= 1, got {self.patience}")
        if self.dtype not in ("float32", "float64"):
            raise SchemaError("dtype", f"must be float32 or float64, got {self.dtype!r}")
        if self.target_accuracy is not None and not 0.0 < self.target_accuracy <= 1.0:
            raise SchemaError("target_accuracy", f"must be in (0, 1], got {self.target_accuracy}")

    @property
    def decoder_dims(self) -> tuple[int, ...]:
        fused = self.encoder.temporal_dim + self.encoder.text_dim
        return (fused, *self.decoder_hidden, NUM_CLASSES)

    @property
    def np_dtype(self):
        return np.float32 if self.dtype == "float32" else np.float64

    @property
    def focal_config(self) -> FocalLossConfig:
        return FocalLossConfig(gamma=self.gamma)


def config_to_dict(config: ModelConfig) -> dict:
    enc = config.encoder
    return {
        "encoder": {
            "image_size": enc.image_size,
            "channels": list(enc.channels),
            "flatten_dim": enc.flatten_dim,
            "lstm_hidden": enc.lstm_hidden,
            "temporal_dim": enc.temporal_dim,
            "text_dim": enc.text_dim,
            "text_buckets": enc.text_buckets,
            "fusion": enc.fusion,
        },
        "loss": config.loss,
        "gamma": config.gamma,
        "adam": {
            "learning_rate": config.adam.learning_rate,
            "beta1": config.adam.beta1,
            "beta2": config.adam.beta2,
            "epsilon": config.adam.epsilon,
        },
        "batch_size": config.batch_size,
        "epochs": config.epochs,
        "patience": config.patience,
        "seed": config.seed,
        "use_caption": config.use_caption,
        "use_temporal": config.use_temporal,
        "freeze_text": config.freeze_text,
        "target_accuracy": config.target_accuracy,
        "decoder_hidden": list(config.decoder_hidden),
        "dtype": config.dtype,
    }


def config_from_dict(raw: dict) -> ModelConfig:
    if not isinstance(raw, dict):
        raise SchemaError("config", "must be an object")
    kwargs = dict(raw)
    enc_raw = kwargs.pop("encoder", {})
    if not isinstance(enc_raw, dict):
        raise SchemaError("encoder", "must be an object")
    enc_kwargs = dict(enc_raw)
    if "channels" in enc_kwargs:
        enc_kwargs["channels"] = tuple(enc_kwargs["channels"])
    adam_raw = kwargs.pop("adam", {})
    if not isinstance(adam_raw, dict):
        raise SchemaError("adam", "must be an object")
    if "decoder_hidden" in kwargs:
        kwargs["decoder_hidden"] = tuple(kwargs["decoder_hidden"])
    try:
        return ModelConfig(encoder=EncoderConfig(**enc_kwargs), adam=AdamConfig(**adam_raw), **kwargs)
    except TypeError as exc:
        raise SchemaError("config", f"unknown or missing field: {exc}") from exc


def config_hash(config: ModelConfig) -> str:
    canonical = json.dumps(config_to_dict(config), sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canonical.encode("utf-8")).hexdigest()[:16]


@dataclass(frozen=True)
class Assessment:
    """Classifier verdict for one sketch."""

    sketch_id: str
    logits: tuple[float, float]
    probability_depressed: float
    predicted_label: str
    caption_used: CaptionRecord | None = None

    def to_dict(self) -> dict:
        return {
            "sketch_id": self.sketch_id,
            "logits": [self.logits[0], self.logits[1]],
            "probability_depressed": self.probability_depressed,
            "predicted_label": self.predicted_label,
            "caption_used": self.caption_used.to_dict() if self.caption_used else None,
        }


def softmax_probabilities(logits: np.ndarray) -> np.ndarray:
    shifted = logits - logits.max(axis=-1, keepdims=True)
    expd = np.exp(shifted)
    return expd / expd.sum(axis=-1, keepdims=True)


def assessment_from_logits(
    sketch_id: str, logits: np.ndarray, caption_used: CaptionRecord | None = None
) -> Assessment:
    probs = softmax_probabilities(logits.astype(np.float64))
    return Assessment(
        sketch_id=sketch_id,
        logits=(float(logits[0]), float(logits[1])),
        probability_depressed=float(probs[1]),
        predicted_label=LABELS[int(np.argmax(logits))],
        caption_used=caption_used,
    )


def prepare_frames(sketch: Sketch, image_size: int) -> np.ndarray:
    """Decompose and render the 12 cumulative frames as uint8 (12, 3, H, W);
    kept in bytes so large corpora fit in memory."""
    frames = rasterize_sequence(decompose(sketch), image_size, image_size)
    stacked = np.stack([f.to_array() for f in frames])  # (12, H, W, 3)
    return np.transpose(stacked, (0, 3, 1, 2))


class VsllmModel:
    """Wires the encoders and decoder together for one ModelConfig."""

    def __init__(self, config: ModelConfig, external_visual: ExternalVisualEncoder | None = None):
        self.config = config
        self.external_visual = external_visual
        self.visual = ReferenceVisualEncoder(config.encoder) if external_visual is None else None
        self.temporal = TemporalEncoder(config.encoder)
        self.text = TextEncoder(config.encoder)

    # -- parameters -----------------------------------------------------
    def init_params(self, rng: np.random.Generator | None = None) -> dict[str, Tensor]:
        if rng is None:
            rng = np.random.default_rng(self.config.seed)
        dtype = self.config.np_dtype
        params: dict[str, Tensor] = {}
        if self.visual is not None:
            params.update(self.visual.init_params(rng, dtype))
        flatten = self.config.encoder.resolved_flatten_dim
        if self.config.use_temporal:
            params.update(self.temporal.init_params(rng, dtype))
        else:
            # mean of flattened frame features mapped straight to the
            # temporal width, no recurrence
            params["temporal.mean.weight"] = uniform_init(
                rng, (self.config.encoder.temporal_dim, flatten), flatten, dtype
            )
            params["temporal.mean.bias"] = zeros_param(
                (self.config.encoder.temporal_dim,), dtype
            )
        if self.config.use_caption:
            params.update(self.text.init_params(rng, dtype))
        dims = self.config.decoder_dims
        for i in range(len(dims) - 1):
            params[f"decoder.l{i}.weight"] = uniform_init(
                rng, (dims[i + 1], dims[i]), dims[i], dtype
            )
            params[f"decoder.l{i}.bias"] = zeros_param((dims[i + 1],), dtype)
        return params

    # -- forward --------------------------------------------------------
    def decode(self, fused: Tensor, params: dict[str, Tensor]) -> Tensor:
        out = fused
        n_layers = len(self.config.decoder_dims) - 1
        for i in range(n_layers):
            out = linear(out, params[f"decoder.l{i}.weight"], params[f"decoder.l{i}.bias"])
            if i < n_layers - 1:
                out = relu(out)
        return out

    def forward_frames(
        self, frames: Tensor, bags: Tensor | None, params: dict[str, Tensor]
    ) -> Tensor:
        """frames (B, 12, 3, H, W) and bags (B, buckets) -> logits (B, 2)."""
        b, t = frames.shape[0], frames.shape[1]
        if t != NUM_SUB_SKETCHES:
            raise ShapeMismatch(f"expected {NUM_SUB_SKETCHES} frames per record, got {t}")
        enc = self.config.encoder
        flatten = enc.resolved_flatten_dim

        if self.visual is not None:
            flat_in = reshape(frames, (b * t, *frames.shape[2:]))
            feats = self.visual.encode(flat_in, params)  # (B*12, C, 3, 3)
            seq = reshape(feats, (b, t, flatten))
        else:
            # frames already hold externally encoded, pooled features
            if frames.shape[2:] != (flatten,):
                raise ShapeMismatch(
                    f"external features must be (B, 12, {flatten}), got {frames.shape}"
                )
            seq = frames

        if self.config.use_temporal:
            temporal_seq = self.temporal.encode(seq, params)  # (B, 12, 100)
            if enc.fusion == "last":
                fused_temporal = reshape(
                    slice_axis(temporal_seq, 1, NUM_SUB_SKETCHES - 1, 1),
                    (b, enc.temporal_dim),
                )
            else:
                fused_temporal = tensor_mean(temporal_seq, axis=1)
        else:
            mean_feat = tensor_mean(seq, axis=1)  # (B, flatten)
            fused_temporal = linear(
                mean_feat, params["temporal.mean.weight"], params["temporal.mean.bias"]
            )

        if self.config.use_caption:
            if bags is None:
                raise ShapeMismatch("caption bags required when the text branch is enabled")
            text_feat = self.text.encode_bags(bags, params)  # (B, 128)
        else:
            text_feat = as_tensor(np.zeros((b, enc.text_dim), dtype=self.config.np_dtype))

        fused = concat([fused_temporal, text_feat], axis=1)
        return self.decode(fused, params)

    def forward(
        self,
        sketch: Sketch,
        caption: str,
        params: dict[str, Tensor],
        caption_used: CaptionRecord | None = None,
    ) -> Assessment:
        frames = prepare_frames(sketch, self.config.encoder.image_size)
        frames_t = as_tensor(frames[None].astype(self.config.np_dtype) / 255.0)
        bags = None
        if self.config.use_caption:
            bags = as_tensor(self.text.bag_vector(caption, self.config.np_dtype)[None])
        logits = self.forward_frames(frames_t, bags, params)
        return assessment_from_logits(sketch.sketch_id, logits.data[0], caption_used)


# -- training ------------------------------------------------------------


@dataclass(frozen=True)
class EpochStats:
    epoch: int
    mean_loss: float
    train_accuracy: float

    def to_dict(self) -> dict:
        return {
            "epoch": self.epoch,
            "mean_loss": self.mean_loss,
            "train_accuracy": self.train_accuracy,
        }


@dataclass(frozen=True)
class TrainResult:
    params: dict[str, Tensor]
    log: tuple[EpochStats, ...]
    stopped: str  # "epochs" | "patience" | "target_accuracy"


def _collect_inputs(
    dataset: Sequence[tuple[Sketch, str, int]], config: ModelConfig
) -> tuple[np.ndarray, np.ndarray | None, np.ndarray]:
    model = VsllmModel(config)
    frames = np.stack(
        [prepare_frames(sketch, config.encoder.image_size) for sketch, _, _ in dataset]
    )
    bags = None
    if config.use_caption:
        bags = np.stack(
            [model.text.bag_vector(caption, config.np_dtype) for _, caption, _ in dataset]
        )
    labels = np.array([label for _, _, label in dataset], dtype=np.int64)
    if labels.min() < 0 or labels.max() >= NUM_CLASSES:
        raise SchemaError("label", "labels must be 0 or 1")
    return frames, bags, labels


def train(
    dataset: Sequence[tuple[Sketch, str, int]],
    config: ModelConfig,
) -> TrainResult:
    """Seeded mini-batch Adam over the full pipeline.

    The raster frames are computed once up front (uint8) and normalized per
    batch, trading a one-time rasterization pass for a small steady-state
    memory footprint.
    """
    if not dataset:
        raise EmptyDataset("training requires at least one record")
    model = VsllmModel(config)
    rng = np.random.default_rng(config.seed)
    params = model.init_params(rng)
    trainable = {
        name: tensor
        for name, tensor in params.items()
        if not (config.freeze_text and name.startswith("text."))
    }
    state = AdamState.initial(trainable)
    frames, bags, labels = _collect_inputs(dataset, config)
    n = len(dataset)
    dtype = config.np_dtype
    focal_cfg = config.focal_config

    log: list[EpochStats] = []
    best_loss = float("inf")
    stale = 0
    stopped = "epochs"
    for epoch in range(config.epochs):
        perm = rng.permutation(n)
        loss_sum = 0.0
        correct = 0
        for start in range(0, n, config.batch_size):
            idx = perm[start : start + config.batch_size]
            batch_frames = as_tensor(frames[idx].astype(dtype) / 255.0)
            batch_bags = as_tensor(bags[idx]) if bags is not None else None
            logits = model.forward_frames(batch_frames, batch_bags, params)
            loss = batch_mean_loss(logits, labels[idx], config.loss, focal_cfg)
            loss_value = float(loss.data)
            if not np.isfinite(loss_value):
                raise NonFiniteLoss(
                    f"epoch {epoch}, batch at {start}: loss={loss_value} "
                    f"(loss={config.loss}, gamma={config.gamma})"
                )
            backward(loss)
            grads = collect_grads(trainable)
            _, state = adam_step(trainable, grads, state, config.adam)
            zero_grads(params.values())
            loss_sum += loss_value * len(idx)
            correct += int((logits.data.argmax(axis=1) == labels[idx]).sum())
        mean_loss = loss_sum / n
        accuracy = correct / n
        log.append(EpochStats(epoch=epoch, mean_loss=mean_loss, train_accuracy=accuracy))
        if config.target_accuracy is not None and accuracy >= config.target_accuracy:
            stopped = "target_accuracy"
            break
        if mean_loss < best_loss - 1e-9:
            best_loss = mean_loss
            stale = 0
        else:
            stale += 1
            if stale >= config.patience:
                stopped = "patience"
                break
    return TrainResult(params=params, log=tuple(log), stopped=stopped)


def predict(
    dataset: Sequence[tuple[Sketch, str, int]],
    params: dict[str, Tensor],
    config: ModelConfig,
    batch_size: int = 16,
) -> np.ndarray:
    """Predicted labels (0/1) for each record, batched inference."""
    if not dataset:
        raise EmptyDataset("prediction requires at least one record")
    model = VsllmModel(config)
    frames, bags, _ = _collect_inputs(dataset, config)
    out = np.empty(len(dataset), dtype=np.int64)
    dtype = config.np_dtype
    for start in range(0, len(dataset), batch_size):
        stop = min(start + batch_size, len(dataset))
        batch_frames = as_tensor(frames[start:stop].astype(dtype) / 255.0)
        batch_bags = as_tensor(bags[start:stop]) if bags is not None else None
        logits = model.forward_frames(batch_frames, batch_bags, params)
        out[start:stop] = logits.data.argmax(axis=1)
    return out


# -- ablation switches -----------------------------------------------------


@dataclass(frozen=True)
class AblationSwitches:
    no_caption: bool = False
    no_temporal: bool = False
    loss_variant: str = "focal"
    encoder_variant: str = "reference"


ABLATION_ROWS: tuple[tuple[str, AblationSwitches], ...] = (
    ("no_caption", AblationSwitches(no_caption=True)),
    ("no_temporal", AblationSwitches(no_temporal=True)),
    ("ce", AblationSwitches(loss_variant="ce")),
    ("full", AblationSwitches()),
)


def apply_switches(config: ModelConfig, switches: AblationSwitches) -> ModelConfig:
    """Derive the ablated configuration; removing both perception branches
    at once is rejected as outside the comparison table."""
    if switches.no_caption and switches.no_temporal:
        raise InvalidSwitchCombination(
            "no_caption and no_temporal together leave no sequence pathway to compare"
        )
    if switches.loss_variant not in ("focal", "ce"):
        raise InvalidSwitchCombination(f"unknown loss variant {switches.loss_variant!r}")
    if switches.encoder_variant != "reference":
        raise InvalidSwitchCombination(
            f"unknown encoder variant {switches.encoder_variant!r}; plug external "
            "encoders in through EncoderConfig.flatten_dim"
        )
    return replace(
        config,
        use_caption=not switches.no_caption,
        use_temporal=not switches.no_temporal,
        loss=switches.loss_variant,
    )
