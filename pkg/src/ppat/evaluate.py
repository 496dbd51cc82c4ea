"""Metrics, classical baselines over psychologist feature vectors, and the
cross-validation / ablation orchestration that puts the pipeline and the
baselines on identical fold plans.
"""

from __future__ import annotations

import time
from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np

from .autodiff import Tensor, as_tensor, backward, relu, zero_grads
from .data import DatasetRecord, FoldPlan, make_folds
from .errors import EmptyDataset, LengthMismatch, SchemaError
from .layers import linear, uniform_init, zeros_param
from .losses import batch_mean_loss
from .model import (
    ABLATION_ROWS,
    AblationSwitches,
    ModelConfig,
    TrainResult,
    apply_switches,
    config_hash,
    predict,
    train,
)
from .optim import AdamConfig, AdamState, adam_step, collect_grads

FEATS_SCALE = 5.0  # psychologist scores arrive in [0, 5]


def accuracy(predictions: Sequence[int], labels: Sequence[int]) -> float:
    predictions = np.asarray(predictions)
    labels = np.asarray(labels)
    if predictions.shape != labels.shape or predictions.size == 0:
        raise LengthMismatch(
            f"predictions {predictions.shape} vs labels {labels.shape}; need equal, nonempty"
        )
    return float((predictions == labels).mean())


def per_class_recall(predictions: Sequence[int], labels: Sequence[int]) -> dict[str, float]:
    """Recall for each class; NaN when a class is absent from labels."""
    predictions = np.asarray(predictions)
    labels = np.asarray(labels)
    if predictions.shape != labels.shape or predictions.size == 0:
        raise LengthMismatch(
            f"predictions {predictions.shape} vs labels {labels.shape}; need equal, nonempty"
        )
    out = {}
    for name, cls in (("recall_neg", 0), ("recall_pos", 1)):
        mask = labels == cls
        out[name] = float((predictions[mask] == cls).mean()) if mask.any() else float("nan")
    return out


def _feats_matrix(records: Sequence[DatasetRecord]) -> tuple[np.ndarray, np.ndarray]:
    if not records:
        raise EmptyDataset("baseline requires at least one record")
    rows = []
    for record in records:
        if record.feats is None:
            raise SchemaError("feats", f"record {record.record_id} has no feature vector")
        rows.append(record.feats.as_array() / FEATS_SCALE)
    return np.stack(rows), np.array([r.label for r in records], dtype=np.int64)


# -- logistic regression ----------------------------------------------------


def _sigmoid(z: np.ndarray) -> np.ndarray:
    out = np.empty_like(z)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out


def logreg_loss_and_grad(
    weights: np.ndarray, bias: float, x: np.ndarray, y: np.ndarray
) -> tuple[float, np.ndarray, float]:
    """Mean binary cross-entropy and its exact gradient."""
    z = x @ weights + bias
    p = _sigmoid(z)
    eps = 1e-12
    loss = float(-np.mean(y * np.log(p + eps) + (1 - y) * np.log(1 - p + eps)))
    residual = (p - y) / len(y)
    return loss, x.T @ residual, float(residual.sum())


@dataclass(frozen=True)
class LogregClassifier:
    weights: np.ndarray
    bias: float

    def predict_proba(self, x: np.ndarray) -> np.ndarray:
        return _sigmoid(x @ self.weights + self.bias)

    def predict(self, x: np.ndarray) -> np.ndarray:
        return (self.predict_proba(x) >= 0.5).astype(np.int64)


def fit_logreg(
    x: np.ndarray,
    y: np.ndarray,
    learning_rate: float = 0.1,
    iterations: int = 500,
    seed: int = 0,
) -> LogregClassifier:
    """Full-batch gradient descent; deterministic for a fixed seed."""
    if len(x) == 0:
        raise EmptyDataset("logistic regression requires data")
    rng = np.random.default_rng(seed)
    weights = rng.normal(0.0, 0.01, size=x.shape[1])
    bias = 0.0
    for _ in range(iterations):
        _, gw, gb = logreg_loss_and_grad(weights, bias, x, y)
        weights = weights - learning_rate * gw
        bias = bias - learning_rate * gb
    return LogregClassifier(weights=weights, bias=bias)


def baseline_logreg(
    records: Sequence[DatasetRecord],
    learning_rate: float = 0.1,
    iterations: int = 500,
    seed: int = 0,
) -> tuple[LogregClassifier, float]:
    """Train on scaled feature vectors; returns the classifier and its
    train accuracy."""
    x, y = _feats_matrix(records)
    classifier = fit_logreg(x, y, learning_rate, iterations, seed)
    return classifier, accuracy(classifier.predict(x), y)


# -- small MLP ---------------------------------------------------------------


@dataclass(frozen=True)
class MlpClassifier:
    params: dict[str, Tensor]

    def logits(self, x: np.ndarray) -> np.ndarray:
        h = relu(linear(as_tensor(x), self.params["hidden.weight"], self.params["hidden.bias"]))
        return linear(h, self.params["out.weight"], self.params["out.bias"]).data

    def predict(self, x: np.ndarray) -> np.ndarray:
        return self.logits(x).argmax(axis=1).astype(np.int64)


def fit_mlp(
    x: np.ndarray,
    y: np.ndarray,
    hidden: int = 32,
    epochs: int = 500,
    seed: int = 0,
    learning_rate: float = 0.001,
) -> MlpClassifier:
    """One ReLU hidden layer trained with Adam; the output layer starts at
    zero so the initial per-sample loss is exactly ln 2."""
    if len(x) == 0:
        raise EmptyDataset("mlp requires data")
    rng = np.random.default_rng(seed)
    dtype = np.float64
    params = {
        "hidden.weight": uniform_init(rng, (hidden, x.shape[1]), x.shape[1], dtype),
        "hidden.bias": zeros_param((hidden,), dtype),
        "out.weight": zeros_param((2, hidden), dtype),
        "out.bias": zeros_param((2,), dtype),
    }
    state = AdamState.initial(params)
    config = AdamConfig(learning_rate=learning_rate)
    x_t = x.astype(dtype)
    for _ in range(epochs):
        h = relu(linear(as_tensor(x_t), params["hidden.weight"], params["hidden.bias"]))
        logits = linear(h, params["out.weight"], params["out.bias"])
        loss = batch_mean_loss(logits, y, "ce", None)
        backward(loss)
        grads = collect_grads(params)
        _, state = adam_step(params, grads, state, config)
        zero_grads(params)
    return MlpClassifier(params=params)


def baseline_mlp(
    records: Sequence[DatasetRecord],
    hidden: int = 32,
    epochs: int = 500,
    seed: int = 0,
) -> tuple[MlpClassifier, float]:
    x, y = _feats_matrix(records)
    classifier = fit_mlp(x, y, hidden=hidden, epochs=epochs, seed=seed)
    return classifier, accuracy(classifier.predict(x), y)


# -- cross validation --------------------------------------------------------


def _fold_metrics(fold: int, predictions: np.ndarray, labels: np.ndarray) -> dict:
    recalls = per_class_recall(predictions, labels)
    return {
        "fold": fold,
        "acc": accuracy(predictions, labels),
        "recall_pos": recalls["recall_pos"],
        "recall_neg": recalls["recall_neg"],
    }


def _metrics_record(run_id: str, cfg_hash: str, folds: list[dict]) -> dict:
    return {
        "run_id": run_id,
        "config_hash": cfg_hash,
        "folds": folds,
        "mean_acc": float(np.mean([f["acc"] for f in folds])),
    }


def _examples(
    records: Sequence[DatasetRecord], captions: Mapping[str, str], use_caption: bool
) -> list[tuple]:
    out = []
    for record in records:
        caption = captions.get(record.record_id, "") if use_caption else ""
        out.append((record.sketch, caption, record.label))
    return out


def cross_validate(
    records: Sequence[DatasetRecord],
    captions: Mapping[str, str],
    config: ModelConfig,
    plan: FoldPlan | None = None,
    run_id: str | None = None,
) -> dict:
    """Train and score the pipeline once per fold; returns the metrics
    record consumed by reports and the comparison tables."""
    if plan is None:
        plan = make_folds(records, config.seed)
    cfg_hash = config_hash(config)
    if run_id is None:
        run_id = f"run-{int(time.time())}-{cfg_hash[:8]}"
    folds = []
    for fold in range(plan.num_folds):
        train_records, test_records = plan.split(records, fold)
        result: TrainResult = train(_examples(train_records, captions, config.use_caption), config)
        test_examples = _examples(test_records, captions, config.use_caption)
        predictions = predict(test_examples, result.params, config)
        labels = np.array([r.label for r in test_records], dtype=np.int64)
        folds.append(_fold_metrics(fold, predictions, labels))
    return _metrics_record(run_id, cfg_hash, folds)


def cross_validate_logreg(
    records: Sequence[DatasetRecord],
    plan: FoldPlan,
    seed: int = 0,
    run_id: str | None = None,
) -> dict:
    """Same fold plan, same metrics schema, classical baseline."""
    if run_id is None:
        run_id = f"logreg-{int(time.time())}"
    folds = []
    for fold in range(plan.num_folds):
        train_records, test_records = plan.split(records, fold)
        classifier, _ = baseline_logreg(train_records, seed=seed)
        x, labels = _feats_matrix(test_records)
        folds.append(_fold_metrics(fold, classifier.predict(x), labels))
    return _metrics_record(run_id, f"logreg-lr0.1-it500-seed{seed}", folds)


def cross_validate_mlp(
    records: Sequence[DatasetRecord],
    plan: FoldPlan,
    seed: int = 0,
    epochs: int = 500,
    run_id: str | None = None,
) -> dict:
    if run_id is None:
        run_id = f"mlp-{int(time.time())}"
    folds = []
    for fold in range(plan.num_folds):
        train_records, test_records = plan.split(records, fold)
        classifier, _ = baseline_mlp(train_records, seed=seed, epochs=epochs)
        x, labels = _feats_matrix(test_records)
        folds.append(_fold_metrics(fold, classifier.predict(x), labels))
    return _metrics_record(run_id, f"mlp-h32-e{epochs}-seed{seed}", folds)


def score_prediction_file(
    predictions: Mapping[str, int], records: Sequence[DatasetRecord], plan: FoldPlan, name: str
) -> dict:
    """Score externally computed predictions (e.g. classical baselines run
    elsewhere) on the same fold plan and schema."""
    folds = []
    for fold in range(plan.num_folds):
        _, test_records = plan.split(records, fold)
        try:
            preds = np.array([predictions[r.record_id] for r in test_records], dtype=np.int64)
        except KeyError as exc:
            raise SchemaError("predictions", f"missing prediction for record {exc}") from exc
        labels = np.array([r.label for r in test_records], dtype=np.int64)
        folds.append(_fold_metrics(fold, preds, labels))
    return _metrics_record(f"external-{name}", f"external-{name}", folds)


def run_ablations(
    records: Sequence[DatasetRecord],
    captions: Mapping[str, str],
    config: ModelConfig,
    plan: FoldPlan | None = None,
    rows: Sequence[tuple[str, AblationSwitches]] = ABLATION_ROWS,
) -> list[dict]:
    """One metrics record per ablation row, all on one fold plan."""
    if plan is None:
        plan = make_folds(records, config.seed)
    results = []
    for name, switches in rows:
        row_config = apply_switches(config, switches)
        metrics = cross_validate(records, captions, row_config, plan, run_id=f"ablation-{name}")
        metrics["row"] = name
        metrics["switches"] = {
            "no_caption": switches.no_caption,
            "no_temporal": switches.no_temporal,
            "loss_variant": switches.loss_variant,
            "encoder_variant": switches.encoder_variant,
        }
        results.append(metrics)
    return results
