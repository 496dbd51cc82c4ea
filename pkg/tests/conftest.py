"""Shared fixtures: tiny deterministic sketches and model configs."""

from __future__ import annotations

import numpy as np
import pytest

from ppat.encoders import EncoderConfig
from ppat.model import ModelConfig
from ppat.optim import AdamConfig
from ppat.sketch import Sketch, Stroke


def make_stroke(points, color=(0, 0, 0), width=3.0, t_start=0, t_end=100):
    return Stroke(
        points=tuple((float(x), float(y)) for x, y in points),
        color=color,
        width=width,
        t_start=t_start,
        t_end=t_end,
    )


def make_sketch(n_strokes, sketch_id="s", seed=0):
    """n_strokes deterministic pseudo-random polyline strokes."""
    rng = np.random.default_rng(seed)
    strokes = []
    for i in range(n_strokes):
        pts = rng.uniform(10, 500, size=(3, 2))
        strokes.append(
            make_stroke(
                [(round(float(x), 1), round(float(y), 1)) for x, y in pts],
                color=(int(rng.integers(0, 256)), 0, 0),
                width=float(rng.uniform(1, 6)),
                t_start=i * 100,
                t_end=i * 100 + 50,
            )
        )
    return Sketch(sketch_id=sketch_id, strokes=tuple(strokes))


def tiny_encoder_config(**overrides) -> EncoderConfig:
    """Smallest config the conv chain supports: 24 -> 12 -> 6 -> pool -> 3."""
    base = dict(
        image_size=24,
        channels=(2, 4),
        lstm_hidden=8,
        temporal_dim=6,
        text_dim=4,
        text_buckets=32,
    )
    base.update(overrides)
    return EncoderConfig(**base)


def tiny_model_config(**overrides) -> ModelConfig:
    enc_overrides = overrides.pop("encoder_overrides", {})
    base = dict(
        encoder=tiny_encoder_config(**enc_overrides),
        seed=11,
        epochs=5,
        batch_size=4,
        adam=AdamConfig(learning_rate=0.01),
    )
    base.update(overrides)
    return ModelConfig(**base)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)
