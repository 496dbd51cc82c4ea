"""Feature extractors: visual CNN, temporal LSTM, and hashing text encoder.

All three expose pure functions of (input, params) where params is a flat
name -> Tensor dict, so checkpoints can serialize any encoder the same way.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .autodiff import Tensor, as_tensor, relu, reshape, stack, tanh
from .errors import SchemaError, ShapeMismatch
from .layers import (
    conv2d,
    linear,
    lstm_forward,
    lstm_layer_init,
    max_pool2d,
    uniform_init,
    zeros_param,
)
from .raster import RasterImage
from .sketch import NUM_SUB_SKETCHES

FEATURE_SPATIAL = 3  # visual features are always C x 3 x 3


@dataclass(frozen=True)
class EncoderConfig:
    """Sizes for the three encoders; flatten_dim is derived unless an
    external visual encoder with a different channel count is plugged in."""

    image_size: int = 96
    channels: tuple[int, ...] = (16, 32, 64, 128)
    flatten_dim: int | None = None
    lstm_hidden: int = 128
    temporal_dim: int = 100
    text_dim: int = 128
    text_buckets: int = 4096
    fusion: str = "last"

    def __post_init__(self):
        if self.fusion not in ("last", "mean"):
            raise SchemaError("fusion", f"must be 'last' or 'mean', got {self.fusion!r}")
        if not self.channels:
            raise SchemaError("channels", "needs at least one block")
        # reference path only: each block halves the spatial size and the
        # final 2x2 pool must land exactly on 3
        if self.flatten_dim is None:
            size = self.image_size
            for _ in self.channels:
                size = (size + 2 - 3) // 2 + 1
            if size != 2 * FEATURE_SPATIAL:
                raise SchemaError(
                    "image_size",
                    f"{self.image_size} with {len(self.channels)} blocks gives "
                    f"pre-pool size {size}, need {2 * FEATURE_SPATIAL}",
                )
        for name, value in (
            ("lstm_hidden", self.lstm_hidden),
            ("temporal_dim", self.temporal_dim),
            ("text_dim", self.text_dim),
            ("text_buckets", self.text_buckets),
        ):
            if not isinstance(value, int) or value < 1:
                raise SchemaError(name, f"must be a positive integer, got {value!r}")

    @property
    def reference_flatten_dim(self) -> int:
        return self.channels[-1] * FEATURE_SPATIAL * FEATURE_SPATIAL

    @property
    def resolved_flatten_dim(self) -> int:
        return self.flatten_dim if self.flatten_dim is not None else self.reference_flatten_dim


@dataclass(frozen=True)
class VisualFeature:
    """Per-frame CNN output, always 3x3 spatial."""

    tensor: Tensor

    def __post_init__(self):
        shape = self.tensor.shape
        if len(shape) != 3 or shape[1:] != (FEATURE_SPATIAL, FEATURE_SPATIAL):
            raise ShapeMismatch(f"visual feature must be (C, 3, 3), got {shape}")

    @property
    def flattened(self) -> Tensor:
        return reshape(self.tensor, (self.tensor.data.size,))


@dataclass(frozen=True)
class TemporalFeature:
    """One 100-dim row per sub-sketch step; row 12 feeds the fusion stage."""

    tensor: Tensor

    def __post_init__(self):
        shape = self.tensor.shape
        if len(shape) != 2 or shape[0] != NUM_SUB_SKETCHES:
            raise ShapeMismatch(f"temporal feature must be (12, D), got {shape}")

    @property
    def fusion_vector(self) -> np.ndarray:
        return np.array(self.tensor.data[NUM_SUB_SKETCHES - 1])


@dataclass(frozen=True)
class TextFeature:
    """Fixed-width caption embedding."""

    tensor: Tensor

    def __post_init__(self):
        if len(self.tensor.shape) != 1:
            raise ShapeMismatch(f"text feature must be a vector, got {self.tensor.shape}")
        if not np.all(np.isfinite(self.tensor.data)):
            raise ShapeMismatch("text feature has non-finite entries")


def preprocess_image(image: RasterImage, dtype=np.float32) -> np.ndarray:
    """uint8 HWC bytes -> float CHW in [0, 1]."""
    arr = image.to_array().astype(dtype) / 255.0
    return np.transpose(arr, (2, 0, 1))


class ReferenceVisualEncoder:
    """Stack of stride-2 conv blocks ending in a 2x2 max pool; weights are
    shared across all 12 frames of a sequence."""

    def __init__(self, config: EncoderConfig):
        self.config = config

    def init_params(self, rng: np.random.Generator, dtype=np.float32) -> dict[str, Tensor]:
        params: dict[str, Tensor] = {}
        in_c = 3
        for i, out_c in enumerate(self.config.channels):
            fan_in = in_c * 9
            params[f"visual.block{i}.weight"] = uniform_init(
                rng, (out_c, in_c, 3, 3), fan_in, dtype
            )
            params[f"visual.block{i}.bias"] = zeros_param((out_c,), dtype)
            in_c = out_c
        return params

    def encode(self, x: Tensor, params: dict[str, Tensor]) -> Tensor:
        """x is (N, 3, H, W) or (3, H, W); returns features with 3x3 spatial."""
        h, w = x.shape[-2], x.shape[-1]
        if x.shape[-3] != 3 or h != self.config.image_size or w != self.config.image_size:
            raise ShapeMismatch(
                f"expected 3x{self.config.image_size}x{self.config.image_size} input, "
                f"got {x.shape}"
            )
        out = x
        for i in range(len(self.config.channels)):
            out = conv2d(
                out,
                params[f"visual.block{i}.weight"],
                params[f"visual.block{i}.bias"],
                stride=2,
                padding=1,
            )
            out = relu(out)
        return max_pool2d(out, kernel=2, stride=2)

    def encode_image(self, image: RasterImage, params: dict[str, Tensor]) -> VisualFeature:
        x = as_tensor(preprocess_image(image, params[next(iter(params))].data.dtype))
        return VisualFeature(self.encode(x, params))


class ExternalVisualEncoder:
    """Adapter for a plugged-in backbone that emits (C, 7, 7) maps; a 3x2
    max pool brings them to the (C, 3, 3) contract."""

    def __init__(self, backbone: Callable[[np.ndarray], np.ndarray], channels: int):
        self.backbone = backbone
        self.channels = channels

    @property
    def flatten_dim(self) -> int:
        return self.channels * FEATURE_SPATIAL * FEATURE_SPATIAL

    def encode_image(self, image: RasterImage, params: dict[str, Tensor]) -> VisualFeature:
        raw = np.asarray(self.backbone(preprocess_image(image)))
        if raw.shape != (self.channels, 7, 7):
            raise ShapeMismatch(f"backbone must emit ({self.channels}, 7, 7), got {raw.shape}")
        pooled = max_pool2d(as_tensor(raw), kernel=3, stride=2)
        return VisualFeature(pooled)


class TemporalEncoder:
    """Two stacked LSTM layers over the 12-step sequence, then a shared
    linear map applied to every timestep."""

    def __init__(self, config: EncoderConfig):
        self.config = config

    def init_params(self, rng: np.random.Generator, dtype=np.float32) -> dict[str, Tensor]:
        hidden = self.config.lstm_hidden
        params: dict[str, Tensor] = {}
        input_size = self.config.resolved_flatten_dim
        for i in range(2):
            layer = lstm_layer_init(rng, input_size, hidden, dtype)
            for key, tensor in layer.items():
                params[f"temporal.lstm{i}.{key}"] = tensor
            input_size = hidden
        params["temporal.proj.weight"] = uniform_init(
            rng, (self.config.temporal_dim, hidden), hidden, dtype
        )
        params["temporal.proj.bias"] = zeros_param((self.config.temporal_dim,), dtype)
        return params

    def encode(self, x: Tensor, params: dict[str, Tensor]) -> Tensor:
        """x is (B, 12, F) or (12, F); returns (B, 12, temporal_dim) or (12, temporal_dim)."""
        steps = x.shape[-2]
        if steps != NUM_SUB_SKETCHES or x.shape[-1] != self.config.resolved_flatten_dim:
            raise ShapeMismatch(
                f"expected ({NUM_SUB_SKETCHES}, {self.config.resolved_flatten_dim}) "
                f"timesteps, got {x.shape}"
            )
        layers = [
            {
                "w_ih": params[f"temporal.lstm{i}.w_ih"],
                "w_hh": params[f"temporal.lstm{i}.w_hh"],
                "bias": params[f"temporal.lstm{i}.bias"],
            }
            for i in range(2)
        ]
        hidden_seq = lstm_forward(x, layers, self.config.lstm_hidden)
        return linear(hidden_seq, params["temporal.proj.weight"], params["temporal.proj.bias"])

    def encode_sequence(
        self, features: list[VisualFeature] | Tensor, params: dict[str, Tensor]
    ) -> TemporalFeature:
        if isinstance(features, Tensor):
            seq = features
        else:
            if len(features) != NUM_SUB_SKETCHES:
                raise ShapeMismatch(f"need {NUM_SUB_SKETCHES} frames, got {len(features)}")
            seq = stack([f.flattened for f in features], axis=0)
        return TemporalFeature(self.encode(seq, params))


_FNV_OFFSET = 0xCBF29CE484222325
_FNV_PRIME = 0x100000001B3
_TOKEN_RE = re.compile(r"[a-z0-9]+")


def fnv1a64(token: str) -> int:
    """64-bit FNV-1a over the UTF-8 bytes of the token."""
    value = _FNV_OFFSET
    for byte in token.encode("utf-8"):
        value = ((value ^ byte) * _FNV_PRIME) & 0xFFFFFFFFFFFFFFFF
    return value


def tokenize(text: str) -> list[str]:
    return _TOKEN_RE.findall(text.lower())


class TextEncoder:
    """Hashed bag-of-words into a trainable projection; deterministic and
    dependency-free so tests never need a pretrained model."""

    def __init__(self, config: EncoderConfig):
        self.config = config

    def init_params(self, rng: np.random.Generator, dtype=np.float32) -> dict[str, Tensor]:
        return {
            "text.proj.weight": uniform_init(
                rng,
                (self.config.text_dim, self.config.text_buckets),
                self.config.text_buckets,
                dtype,
            ),
            "text.proj.bias": zeros_param((self.config.text_dim,), dtype),
        }

    def bag_vector(self, text: str, dtype=np.float32) -> np.ndarray:
        """L2-normalized token-count vector over hash buckets; empty text
        stays the zero vector."""
        bag = np.zeros(self.config.text_buckets, dtype=dtype)
        for token in tokenize(text):
            bag[fnv1a64(token) % self.config.text_buckets] += 1.0
        norm = np.linalg.norm(bag)
        if norm > 0:
            bag /= norm
        return bag

    def encode_bags(self, bags: Tensor, params: dict[str, Tensor]) -> Tensor:
        """bags is (B, buckets) or (buckets,)."""
        if bags.shape[-1] != self.config.text_buckets:
            raise ShapeMismatch(
                f"expected {self.config.text_buckets} buckets, got {bags.shape}"
            )
        return tanh(linear(bags, params["text.proj.weight"], params["text.proj.bias"]))

    def encode_text(self, caption: str, params: dict[str, Tensor]) -> TextFeature:
        dtype = params["text.proj.weight"].data.dtype
        bag = as_tensor(self.bag_vector(caption, dtype))
        return TextFeature(self.encode_bags(bag, params))
