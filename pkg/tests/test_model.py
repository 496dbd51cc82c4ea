"""End-to-end model wiring: config round trips, fused-vector layout, zero
baselines, deterministic seeded training, branch ablations, and the
assessment record."""

from __future__ import annotations

import math
from dataclasses import replace

import numpy as np
import pytest

from conftest import make_sketch, tiny_model_config
from ppat.autodiff import Tensor, as_tensor
from ppat.errors import (
    EmptyDataset,
    InvalidSwitchCombination,
    SchemaError,
    ShapeMismatch,
)
from ppat.losses import batch_mean_loss
from ppat.model import (
    ABLATION_ROWS,
    AblationSwitches,
    Assessment,
    LABELS,
    ModelConfig,
    VsllmModel,
    apply_switches,
    assessment_from_logits,
    config_from_dict,
    config_hash,
    config_to_dict,
    predict,
    prepare_frames,
    softmax_probabilities,
    train,
)
from ppat.raster import rasterize
from ppat.sketch import decompose


def tiny_dataset(n=6, seed=0):
    """Alternating-label records with class-correlated captions."""
    out = []
    for i in range(n):
        label = i % 2
        caption = "small dark sketch" if label else "bright full drawing"
        out.append((make_sketch(5 + 3 * label, sketch_id=f"d{i}", seed=seed + i), caption, label))
    return out


class TestConfig:
    def test_round_trip(self):
        cfg = tiny_model_config(gamma=1.5, loss="ce", freeze_text=True)
        again = config_from_dict(config_to_dict(cfg))
        assert again == cfg

    def test_default_decoder_dims(self):
        assert ModelConfig().decoder_dims == (228, 128, 64, 2)

    def test_tiny_decoder_dims(self):
        assert tiny_model_config().decoder_dims == (10, 128, 64, 2)

    def test_hash_stable_and_sensitive(self):
        a = tiny_model_config()
        assert config_hash(a) == config_hash(tiny_model_config())
        assert config_hash(a) != config_hash(tiny_model_config(gamma=1.0))
        assert len(config_hash(a)) == 16

    def test_unknown_field_rejected(self):
        raw = config_to_dict(tiny_model_config())
        raw["bogus"] = 1
        with pytest.raises(SchemaError):
            config_from_dict(raw)

    def test_validation(self):
        with pytest.raises(SchemaError):
            tiny_model_config(loss="mse")
        with pytest.raises(SchemaError):
            tiny_model_config(gamma=-1)
        with pytest.raises(SchemaError):
            tiny_model_config(target_accuracy=1.5)


class TestPrepareFrames:
    def test_shape_and_dtype(self):
        frames = prepare_frames(make_sketch(9), 24)
        assert frames.shape == (12, 3, 24, 24)
        assert frames.dtype == np.uint8

    def test_frames_match_prefix_renders(self):
        sketch = make_sketch(23, seed=4)
        frames = prepare_frames(sketch, 24)
        seq = decompose(sketch)
        for j in (0, 5, 11):
            expected = rasterize(seq.sub_sketches[j], 24, 24).to_array()
            np.testing.assert_array_equal(frames[j], np.transpose(expected, (2, 0, 1)))


class TestForward:
    def test_zero_params_give_even_odds(self):
        cfg = tiny_model_config()
        model = VsllmModel(cfg)
        params = model.init_params()
        for p in params.values():
            p.data[...] = 0.0
        out = model.forward(make_sketch(6), "any caption", params)
        assert out.logits == (0.0, 0.0)
        assert out.probability_depressed == pytest.approx(0.5)
        assert out.predicted_label == "not_depressed"  # argmax tie -> class 0

    def test_deterministic_bits(self):
        cfg = tiny_model_config()
        model = VsllmModel(cfg)
        params = model.init_params()
        sketch = make_sketch(14, seed=3)
        a = model.forward(sketch, "a drawing", params)
        b = model.forward(sketch, "a drawing", params)
        assert a.logits == b.logits
        assert a.probability_depressed == b.probability_depressed

    def test_batch_logit_shape(self):
        cfg = tiny_model_config()
        model = VsllmModel(cfg)
        params = model.init_params()
        frames = np.random.default_rng(5).uniform(size=(3, 12, 3, 24, 24)).astype(np.float32)
        bags = np.zeros((3, cfg.encoder.text_buckets), dtype=np.float32)
        logits = model.forward_frames(as_tensor(frames), as_tensor(bags), params)
        assert logits.shape == (3, 2)

    def test_wrong_frame_count_rejected(self):
        cfg = tiny_model_config()
        model = VsllmModel(cfg)
        params = model.init_params()
        frames = np.zeros((1, 11, 3, 24, 24), dtype=np.float32)
        with pytest.raises(ShapeMismatch):
            model.forward_frames(as_tensor(frames), None, params)

    def test_missing_bags_rejected_when_caption_enabled(self):
        cfg = tiny_model_config()
        model = VsllmModel(cfg)
        params = model.init_params()
        frames = np.zeros((1, 12, 3, 24, 24), dtype=np.float32)
        with pytest.raises(ShapeMismatch):
            model.forward_frames(as_tensor(frames), None, params)

    def test_fused_vector_order_temporal_then_text(self):
        # zero every branch, inject a known value through the text bias and
        # read it back per-slot through a handcrafted decoder
        cfg = tiny_model_config(decoder_hidden=())  # decoder is one linear: 10 -> 2
        model = VsllmModel(cfg)
        params = model.init_params()
        for p in params.values():
            p.data[...] = 0.0
        params["text.proj.bias"].data[...] = 10.0  # tanh(10) ~ 1
        d = cfg.encoder.temporal_dim  # 6: text occupies slots 6..9

        w = params["decoder.l0.weight"]  # (2, 10)
        w.data[0, 0] = 1.0  # logit0 reads the first temporal slot (zero)
        w.data[1, d] = 1.0  # logit1 reads the first text slot (tanh(10))
        out = model.forward(make_sketch(3), "word", params)
        assert out.logits[0] == pytest.approx(0.0, abs=1e-6)
        assert out.logits[1] == pytest.approx(math.tanh(10.0), rel=1e-5)

    def test_no_caption_equals_zeroed_text_branch(self):
        cfg_full = tiny_model_config()
        model_full = VsllmModel(cfg_full)
        params = model_full.init_params()
        sketch = make_sketch(7, seed=8)
        # empty caption -> zero bag -> text feature tanh(bias) = 0
        full = model_full.forward(sketch, "", params)

        cfg_nc = replace(cfg_full, use_caption=False)
        params_nc = {k: v for k, v in params.items() if not k.startswith("text.")}
        nc = VsllmModel(cfg_nc).forward(sketch, "ignored", params_nc)
        assert full.logits == pytest.approx(nc.logits, rel=1e-6)

    def test_fusion_mean_differs_from_last(self):
        cfg_last = tiny_model_config()
        cfg_mean = tiny_model_config(encoder_overrides={"fusion": "mean"})
        params = VsllmModel(cfg_last).init_params()
        sketch = make_sketch(20, seed=9)
        a = VsllmModel(cfg_last).forward(sketch, "w", params)
        b = VsllmModel(cfg_mean).forward(sketch, "w", params)
        assert a.logits != b.logits


class TestAssessment:
    def test_probability_matches_independent_softmax(self):
        logits = np.array([0.3, 1.1])
        a = assessment_from_logits("s", logits)
        expected = math.exp(1.1) / (math.exp(0.3) + math.exp(1.1))
        assert a.probability_depressed == pytest.approx(expected, rel=1e-12)
        assert a.predicted_label == "depressed"

    def test_label_names(self):
        assert LABELS == ("not_depressed", "depressed")
        assert assessment_from_logits("s", np.array([2.0, -1.0])).predicted_label == "not_depressed"

    def test_to_dict_fields(self):
        d = assessment_from_logits("sk-1", np.array([0.5, -0.5])).to_dict()
        assert set(d) == {
            "sketch_id", "logits", "probability_depressed", "predicted_label", "caption_used",
        }
        assert d["sketch_id"] == "sk-1"
        assert d["caption_used"] is None

    def test_softmax_stability(self):
        probs = softmax_probabilities(np.array([1000.0, 0.0]))
        assert np.all(np.isfinite(probs))
        assert probs.sum() == pytest.approx(1.0)

    def test_softmax_batch(self):
        p = softmax_probabilities(np.random.default_rng(1).normal(size=(5, 2)))
        np.testing.assert_allclose(p.sum(axis=1), np.ones(5), rtol=1e-12)


class TestTraining:
    def test_initial_loss_is_ln2_with_zero_head(self):
        cfg = tiny_model_config()
        model = VsllmModel(cfg)
        params = model.init_params()
        last = len(cfg.decoder_dims) - 2
        params[f"decoder.l{last}.weight"].data[...] = 0.0
        params[f"decoder.l{last}.bias"].data[...] = 0.0
        data = tiny_dataset(4)
        frames = np.stack([prepare_frames(s, 24) for s, _, _ in data]).astype(np.float32) / 255.0
        bags = np.stack([model.text.bag_vector(c) for _, c, _ in data])
        logits = model.forward_frames(as_tensor(frames), as_tensor(bags), params)
        loss = batch_mean_loss(logits, np.array([l for _, _, l in data]), "ce")
        assert loss.data.item() == pytest.approx(math.log(2), rel=1e-6)

    def test_single_record_memorized(self):
        data = tiny_dataset(1)
        cfg = tiny_model_config(epochs=10, batch_size=1)
        result = train(data, cfg)
        assert result.log[-1].mean_loss < result.log[0].mean_loss
        assert result.log[-1].train_accuracy == 1.0

    def test_target_accuracy_stops_early(self):
        data = tiny_dataset(4)
        cfg = tiny_model_config(epochs=50, target_accuracy=0.5)
        result = train(data, cfg)
        assert result.stopped == "target_accuracy"
        assert len(result.log) < 50

    def test_epochs_stop_reason(self):
        result = train(tiny_dataset(2), tiny_model_config(epochs=2))
        assert result.stopped == "epochs"
        assert len(result.log) == 2

    def test_deterministic_parameters(self):
        data = tiny_dataset(4)
        cfg = tiny_model_config(epochs=2)
        a = train(data, cfg)
        b = train(data, cfg)
        assert set(a.params) == set(b.params)
        for name in a.params:
            np.testing.assert_array_equal(a.params[name].data, b.params[name].data)

    def test_freeze_text_holds_text_parameters(self):
        data = tiny_dataset(4)
        cfg = tiny_model_config(epochs=2, freeze_text=True)
        model = VsllmModel(cfg)
        before = {
            k: v.data.copy() for k, v in model.init_params().items()
        }
        result = train(data, cfg)
        for name, tensor in result.params.items():
            if name.startswith("text."):
                np.testing.assert_array_equal(tensor.data, before[name])
        # and something else did move
        moved = any(
            not np.array_equal(result.params[n].data, before[n])
            for n in result.params
            if not n.startswith("text.")
        )
        assert moved

    def test_empty_dataset_rejected(self):
        with pytest.raises(EmptyDataset):
            train([], tiny_model_config())

    def test_predict_matches_forward_argmax(self):
        data = tiny_dataset(5)
        cfg = tiny_model_config(epochs=1)
        result = train(data, cfg)
        preds = predict(data, result.params, cfg, batch_size=2)
        assert preds.shape == (5,)
        model = VsllmModel(cfg)
        for (sketch, caption, _), pred in zip(data, preds):
            single = model.forward(sketch, caption, result.params)
            assert LABELS[pred] == single.predicted_label


class TestAblations:
    def test_row_names_in_order(self):
        assert [name for name, _ in ABLATION_ROWS] == ["no_caption", "no_temporal", "ce", "full"]

    def test_switches_derive_configs(self):
        base = tiny_model_config()
        by_name = dict(ABLATION_ROWS)
        nc = apply_switches(base, by_name["no_caption"])
        assert not nc.use_caption and nc.use_temporal and nc.loss == "focal"
        nt = apply_switches(base, by_name["no_temporal"])
        assert nt.use_caption and not nt.use_temporal
        ce = apply_switches(base, by_name["ce"])
        assert ce.loss == "ce" and ce.use_caption and ce.use_temporal
        full = apply_switches(base, by_name["full"])
        assert full == base

    def test_both_branches_off_rejected(self):
        with pytest.raises(InvalidSwitchCombination):
            apply_switches(tiny_model_config(), AblationSwitches(no_caption=True, no_temporal=True))

    def test_unknown_variants_rejected(self):
        with pytest.raises(InvalidSwitchCombination):
            apply_switches(tiny_model_config(), AblationSwitches(loss_variant="mse"))
        with pytest.raises(InvalidSwitchCombination):
            apply_switches(tiny_model_config(), AblationSwitches(encoder_variant="resnet"))

    def test_no_temporal_model_trains_and_predicts(self):
        cfg = apply_switches(tiny_model_config(epochs=2), AblationSwitches(no_temporal=True))
        data = tiny_dataset(4)
        result = train(data, cfg)
        assert "temporal.mean.weight" in result.params
        assert "temporal.lstm0.w_ih" not in result.params
        preds = predict(data, result.params, cfg)
        assert set(np.unique(preds)).issubset({0, 1})

    def test_no_caption_model_has_no_text_params(self):
        cfg = apply_switches(tiny_model_config(epochs=1), AblationSwitches(no_caption=True))
        result = train(tiny_dataset(4), cfg)
        assert not any(k.startswith("text.") for k in result.params)
