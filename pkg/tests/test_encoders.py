"""Visual, temporal, and text encoders: shape contracts, zero-weight
baselines, pooling adapters, and the hashing text pipeline (checked against
published FNV-1a test vectors plus a reduce-based reimplementation)."""

from __future__ import annotations

from functools import reduce

import numpy as np
import pytest

from conftest import make_sketch, tiny_encoder_config
from ppat.autodiff import Tensor, as_tensor
from ppat.encoders import (
    EncoderConfig,
    ExternalVisualEncoder,
    ReferenceVisualEncoder,
    TemporalEncoder,
    TextEncoder,
    TextFeature,
    TemporalFeature,
    VisualFeature,
    fnv1a64,
    preprocess_image,
    tokenize,
)
from ppat.errors import SchemaError, ShapeMismatch
from ppat.raster import RasterImage, rasterize
from test_layers import pool_oracle


class TestEncoderConfig:
    def test_default_flatten_dim_is_1152(self):
        cfg = EncoderConfig()
        assert cfg.reference_flatten_dim == 128 * 3 * 3 == 1152
        assert cfg.resolved_flatten_dim == 1152

    def test_tiny_chain_valid(self):
        cfg = tiny_encoder_config()
        assert cfg.reference_flatten_dim == 4 * 9

    def test_chain_that_misses_3x3_rejected(self):
        with pytest.raises(SchemaError) as exc:
            EncoderConfig(image_size=50)
        assert exc.value.field == "image_size"

    def test_explicit_flatten_dim_skips_chain_check(self):
        cfg = EncoderConfig(image_size=50, flatten_dim=4608)
        assert cfg.resolved_flatten_dim == 4608

    def test_bad_fusion(self):
        with pytest.raises(SchemaError):
            EncoderConfig(fusion="first")

    def test_empty_channels(self):
        with pytest.raises(SchemaError):
            EncoderConfig(channels=())

    def test_non_positive_dims(self):
        with pytest.raises(SchemaError):
            tiny_encoder_config(text_dim=0)
        with pytest.raises(SchemaError):
            tiny_encoder_config(lstm_hidden=-1)


class TestPreprocess:
    def test_chw_layout_and_scaling(self):
        # 2x2 image: distinct channel values at each pixel
        pixels = bytes([255, 0, 0, 0, 255, 0, 0, 0, 255, 51, 102, 153])
        img = RasterImage(width=2, height=2, pixels=pixels)
        arr = preprocess_image(img)
        assert arr.shape == (3, 2, 2)
        assert arr.dtype == np.float32
        assert arr[0, 0, 0] == pytest.approx(1.0)  # R of pixel (0,0)
        assert arr[1, 0, 1] == pytest.approx(1.0)  # G of pixel (0,1)
        assert arr[2, 1, 0] == pytest.approx(1.0)  # B of pixel (1,0)
        assert arr[0, 1, 1] == pytest.approx(51 / 255)
        assert arr[1, 1, 1] == pytest.approx(102 / 255)
        assert arr[2, 1, 1] == pytest.approx(153 / 255)


class TestReferenceVisualEncoder:
    def test_tiny_shapes_single_and_batch(self):
        cfg = tiny_encoder_config()
        enc = ReferenceVisualEncoder(cfg)
        params = enc.init_params(np.random.default_rng(0))
        single = enc.encode(Tensor(np.zeros((3, 24, 24), dtype=np.float32)), params)
        assert single.shape == (4, 3, 3)
        batch = enc.encode(Tensor(np.zeros((5, 3, 24, 24), dtype=np.float32)), params)
        assert batch.shape == (5, 4, 3, 3)

    def test_default_config_lands_on_128_3_3(self):
        cfg = EncoderConfig()
        enc = ReferenceVisualEncoder(cfg)
        params = enc.init_params(np.random.default_rng(1))
        feat = enc.encode_image(rasterize(make_sketch(5), 96, 96), params)
        assert feat.tensor.shape == (128, 3, 3)
        assert feat.flattened.shape == (1152,)

    def test_zero_weights_give_zero_features(self):
        cfg = tiny_encoder_config()
        enc = ReferenceVisualEncoder(cfg)
        params = enc.init_params(np.random.default_rng(2))
        for p in params.values():
            p.data[...] = 0.0
        out = enc.encode(Tensor(np.ones((3, 24, 24), dtype=np.float32)), params)
        np.testing.assert_array_equal(out.data, np.zeros((4, 3, 3)))

    def test_param_names_and_shapes(self):
        enc = ReferenceVisualEncoder(tiny_encoder_config())
        params = enc.init_params(np.random.default_rng(3))
        assert set(params) == {
            "visual.block0.weight", "visual.block0.bias",
            "visual.block1.weight", "visual.block1.bias",
        }
        assert params["visual.block0.weight"].shape == (2, 3, 3, 3)
        assert params["visual.block1.weight"].shape == (4, 2, 3, 3)
        np.testing.assert_array_equal(params["visual.block0.bias"].data, np.zeros(2))

    def test_wrong_input_size_rejected(self):
        enc = ReferenceVisualEncoder(tiny_encoder_config())
        params = enc.init_params(np.random.default_rng(4))
        with pytest.raises(ShapeMismatch):
            enc.encode(Tensor(np.zeros((3, 32, 32), dtype=np.float32)), params)
        with pytest.raises(ShapeMismatch):
            enc.encode(Tensor(np.zeros((1, 24, 24), dtype=np.float32)), params)


class TestExternalVisualEncoder:
    def test_pools_7x7_to_3x3(self):
        rng = np.random.default_rng(5)
        maps = rng.normal(size=(8, 7, 7))
        enc = ExternalVisualEncoder(lambda x: maps, channels=8)
        feat = enc.encode_image(rasterize(make_sketch(2), 32, 32), {})
        assert feat.tensor.shape == (8, 3, 3)
        np.testing.assert_allclose(
            feat.tensor.data, pool_oracle(maps[None], 3, 2)[0], rtol=1e-12
        )

    def test_flatten_dim_for_512_channels(self):
        enc = ExternalVisualEncoder(lambda x: x, channels=512)
        assert enc.flatten_dim == 4608

    def test_wrong_backbone_shape_rejected(self):
        enc = ExternalVisualEncoder(lambda x: np.zeros((8, 6, 6)), channels=8)
        with pytest.raises(ShapeMismatch):
            enc.encode_image(rasterize(make_sketch(1), 32, 32), {})


class TestTemporalEncoder:
    def test_output_shape_12_by_dim(self):
        cfg = tiny_encoder_config()
        enc = TemporalEncoder(cfg)
        params = enc.init_params(np.random.default_rng(6))
        out = enc.encode(Tensor(np.random.default_rng(7).normal(size=(12, 36)).astype(np.float32)), params)
        assert out.shape == (12, cfg.temporal_dim)

    def test_default_dim_is_100(self):
        assert EncoderConfig().temporal_dim == 100

    def test_batched_shape(self):
        cfg = tiny_encoder_config()
        enc = TemporalEncoder(cfg)
        params = enc.init_params(np.random.default_rng(8))
        out = enc.encode(Tensor(np.zeros((3, 12, 36), dtype=np.float32)), params)
        assert out.shape == (3, 12, cfg.temporal_dim)

    def test_zero_weights_give_zero_sequence(self):
        cfg = tiny_encoder_config()
        enc = TemporalEncoder(cfg)
        params = enc.init_params(np.random.default_rng(9))
        for p in params.values():
            p.data[...] = 0.0
        out = enc.encode(Tensor(np.ones((12, 36), dtype=np.float32)), params)
        np.testing.assert_array_equal(out.data, np.zeros((12, cfg.temporal_dim)))

    def test_param_names(self):
        enc = TemporalEncoder(tiny_encoder_config())
        params = enc.init_params(np.random.default_rng(10))
        assert set(params) == {
            "temporal.lstm0.w_ih", "temporal.lstm0.w_hh", "temporal.lstm0.bias",
            "temporal.lstm1.w_ih", "temporal.lstm1.w_hh", "temporal.lstm1.bias",
            "temporal.proj.weight", "temporal.proj.bias",
        }
        assert params["temporal.lstm0.w_ih"].shape == (32, 36)
        assert params["temporal.lstm1.w_ih"].shape == (32, 8)

    def test_wrong_step_count_rejected(self):
        enc = TemporalEncoder(tiny_encoder_config())
        params = enc.init_params(np.random.default_rng(11))
        with pytest.raises(ShapeMismatch):
            enc.encode(Tensor(np.zeros((11, 36), dtype=np.float32)), params)

    def test_encode_sequence_from_visual_features(self):
        cfg = tiny_encoder_config()
        enc = TemporalEncoder(cfg)
        params = enc.init_params(np.random.default_rng(12))
        rng = np.random.default_rng(13)
        feats = [
            VisualFeature(as_tensor(rng.normal(size=(4, 3, 3)).astype(np.float32)))
            for _ in range(12)
        ]
        tf = enc.encode_sequence(feats, params)
        assert isinstance(tf, TemporalFeature)
        assert tf.tensor.shape == (12, cfg.temporal_dim)
        assert tf.fusion_vector.shape == (cfg.temporal_dim,)
        np.testing.assert_array_equal(tf.fusion_vector, tf.tensor.data[11])

    def test_encode_sequence_wrong_count(self):
        enc = TemporalEncoder(tiny_encoder_config())
        params = enc.init_params(np.random.default_rng(14))
        feats = [VisualFeature(as_tensor(np.zeros((4, 3, 3), dtype=np.float32)))] * 7
        with pytest.raises(ShapeMismatch):
            enc.encode_sequence(feats, params)


def fnv1a64_reduce(token: str) -> int:
    """Same hash via functools.reduce, as an independent formulation."""
    return reduce(
        lambda acc, b: ((acc ^ b) * 0x100000001B3) % 2**64,
        token.encode("utf-8"),
        0xCBF29CE484222325,
    )


class TestHashing:
    def test_empty_string_is_offset_basis(self):
        assert fnv1a64("") == 0xCBF29CE484222325

    def test_published_vector_for_a(self):
        assert fnv1a64("a") == 0xAF63DC4C8601EC8C

    def test_matches_reduce_formulation(self):
        for token in ("drawing", "strokes", "0", "zz9", "a" * 50, "éclair"):
            assert fnv1a64(token) == fnv1a64_reduce(token)

    def test_tokenize_lowercases_and_splits(self):
        assert tokenize("Dark, RED-ish sky 2x!") == ["dark", "red", "ish", "sky", "2x"]

    def test_tokenize_empty(self):
        assert tokenize("...!?") == []


class TestTextEncoder:
    def setup_method(self):
        self.cfg = tiny_encoder_config()
        self.enc = TextEncoder(self.cfg)
        self.params = self.enc.init_params(np.random.default_rng(15))

    def test_bag_repetition_invariant(self):
        a = self.enc.bag_vector("dark dark dark")
        b = self.enc.bag_vector("dark")
        np.testing.assert_allclose(a, b, rtol=1e-6)

    def test_bag_order_invariant(self):
        a = self.enc.bag_vector("red house tall")
        b = self.enc.bag_vector("tall red house")
        np.testing.assert_array_equal(a, b)

    def test_bag_unit_norm(self):
        bag = self.enc.bag_vector("a drawing of three strokes")
        assert np.linalg.norm(bag) == pytest.approx(1.0, rel=1e-6)

    def test_empty_text_zero_bag(self):
        np.testing.assert_array_equal(self.enc.bag_vector(""), np.zeros(32))

    def test_empty_caption_encodes_to_tanh_bias(self):
        self.params["text.proj.bias"].data[...] = 0.7
        feat = self.enc.encode_text("", self.params)
        np.testing.assert_allclose(feat.tensor.data, np.tanh(0.7) * np.ones(4), rtol=1e-6)

    def test_different_captions_differ(self):
        a = self.enc.encode_text("a calm blue lake", self.params)
        b = self.enc.encode_text("chaotic heavy scribbles", self.params)
        assert not np.allclose(a.tensor.data, b.tensor.data)

    def test_feature_width(self):
        feat = self.enc.encode_text("some words", self.params)
        assert feat.tensor.shape == (self.cfg.text_dim,)

    def test_batch_encode_bags(self):
        bags = np.stack([self.enc.bag_vector("one"), self.enc.bag_vector("two words")])
        out = self.enc.encode_bags(as_tensor(bags), self.params)
        assert out.shape == (2, self.cfg.text_dim)

    def test_wrong_bucket_count_rejected(self):
        with pytest.raises(ShapeMismatch):
            self.enc.encode_bags(as_tensor(np.zeros(33, dtype=np.float32)), self.params)

    def test_output_bounded_by_tanh(self):
        feat = self.enc.encode_text("lots of words " * 20, self.params)
        assert np.all(np.abs(feat.tensor.data) <= 1.0)


class TestFeatureValidation:
    def test_visual_feature_shape(self):
        with pytest.raises(ShapeMismatch):
            VisualFeature(as_tensor(np.zeros((4, 4, 4))))
        with pytest.raises(ShapeMismatch):
            VisualFeature(as_tensor(np.zeros((3, 3))))

    def test_temporal_feature_rows(self):
        with pytest.raises(ShapeMismatch):
            TemporalFeature(as_tensor(np.zeros((11, 100))))

    def test_text_feature_finite_vector(self):
        with pytest.raises(ShapeMismatch):
            TextFeature(as_tensor(np.zeros((2, 2))))
        with pytest.raises(ShapeMismatch):
            TextFeature(as_tensor(np.array([1.0, np.nan])))
