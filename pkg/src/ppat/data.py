"""Dataset schema: PHQ-9 scored records with optional psychologist feature
vectors, stratified fold planning, a fixed holdout preset, and a seeded
synthetic corpus generator for desk-scale experiments.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .errors import (
    InvalidFraction,
    ItemOutOfRange,
    LengthMismatch,
    SchemaError,
    TooFewRecords,
)
from .sketch import Sketch, Stroke, sketch_from_dict, sketch_to_dict

PHQ9_ITEM_COUNT = 9
PHQ9_ITEM_MAX = 3
DEPRESSION_THRESHOLD = 10  # PHQ-9 total at or above this maps to the positive class
NUM_FOLDS = 5

FEATS_DIMENSIONS = (
    "color prominence",
    "appropriate color",
    "effort",
    "space use",
    "integration",
    "authenticity",
    "logic",
    "problem-solving",
    "development level",
    "detail and environment",
    "line quality",
    "people",
    "rotation",
    "continuous repetition",
)
FEATS_MIN = 0.0
FEATS_MAX = 5.0

LABEL_DEPRESSED = 1
LABEL_NOT_DEPRESSED = 0


@dataclass(frozen=True)
class Phq9Response:
    """Nine questionnaire items, each scored 0 to 3."""

    items: tuple[int, ...]

    def __post_init__(self):
        if len(self.items) != PHQ9_ITEM_COUNT:
            raise LengthMismatch(f"need {PHQ9_ITEM_COUNT} items, got {len(self.items)}")
        for i, item in enumerate(self.items):
            if not isinstance(item, int) or isinstance(item, bool):
                raise ItemOutOfRange(f"items[{i}] must be an integer, got {item!r}")
            if not 0 <= item <= PHQ9_ITEM_MAX:
                raise ItemOutOfRange(f"items[{i}] = {item} outside 0..{PHQ9_ITEM_MAX}")

    @property
    def total(self) -> int:
        return sum(self.items)


def label_from_phq9(response: Phq9Response) -> int:
    """Positive (depressed) exactly when the questionnaire total reaches the
    screening threshold."""
    return LABEL_DEPRESSED if response.total >= DEPRESSION_THRESHOLD else LABEL_NOT_DEPRESSED


@dataclass(frozen=True)
class FeatsVector:
    """Psychologist scores on the 14 formal drawing dimensions, each 0-5,
    in the frozen order of FEATS_DIMENSIONS."""

    values: tuple[float, ...]

    def __post_init__(self):
        if len(self.values) != len(FEATS_DIMENSIONS):
            raise LengthMismatch(
                f"need {len(FEATS_DIMENSIONS)} scores, got {len(self.values)}"
            )
        for i, value in enumerate(self.values):
            if not FEATS_MIN <= value <= FEATS_MAX:
                raise ItemOutOfRange(
                    f"{FEATS_DIMENSIONS[i]!r} score {value} outside "
                    f"[{FEATS_MIN}, {FEATS_MAX}]"
                )

    def as_array(self, dtype=np.float64) -> np.ndarray:
        return np.array(self.values, dtype=dtype)


@dataclass(frozen=True)
class DatasetRecord:
    sketch: Sketch
    phq9: Phq9Response
    feats: FeatsVector | None = None
    demographics: dict | None = None

    @property
    def label(self) -> int:
        return label_from_phq9(self.phq9)

    @property
    def record_id(self) -> str:
        return self.sketch.sketch_id


def record_to_dict(record: DatasetRecord) -> dict:
    out = {
        "sketch": sketch_to_dict(record.sketch),
        "phq9": {"items": list(record.phq9.items), "total": record.phq9.total},
        "label": record.label,
    }
    if record.feats is not None:
        out["feats"] = [float(v) for v in record.feats.values]
    if record.demographics is not None:
        out["demographics"] = dict(record.demographics)
    return out


def record_from_dict(raw: dict) -> DatasetRecord:
    if not isinstance(raw, dict):
        raise SchemaError("record", "must be an object")
    for key in ("sketch", "phq9"):
        if key not in raw:
            raise SchemaError(key, "missing required field")
    phq9_raw = raw["phq9"]
    if not isinstance(phq9_raw, dict) or "items" not in phq9_raw:
        raise SchemaError("phq9", "must be an object with an items list")
    items = phq9_raw["items"]
    if not isinstance(items, list):
        raise SchemaError("phq9.items", "must be a list")
    try:
        phq9 = Phq9Response(items=tuple(items))
    except (ItemOutOfRange, LengthMismatch) as exc:
        raise SchemaError("phq9.items", str(exc)) from exc
    if "total" in phq9_raw and phq9_raw["total"] != phq9.total:
        raise SchemaError("phq9.total", f"stored {phq9_raw['total']} != sum {phq9.total}")

    feats = None
    if raw.get("feats") is not None:
        if not isinstance(raw["feats"], list):
            raise SchemaError("feats", "must be a list of scores")
        try:
            feats = FeatsVector(values=tuple(float(v) for v in raw["feats"]))
        except (ItemOutOfRange, LengthMismatch, TypeError, ValueError) as exc:
            raise SchemaError("feats", str(exc)) from exc

    demographics = raw.get("demographics")
    if demographics is not None and not isinstance(demographics, dict):
        raise SchemaError("demographics", "must be an object")

    record = DatasetRecord(
        sketch=sketch_from_dict(raw["sketch"]),
        phq9=phq9,
        feats=feats,
        demographics=demographics,
    )
    if "label" in raw and raw["label"] != record.label:
        raise SchemaError(
            "label", f"stored {raw['label']} inconsistent with phq9 total {phq9.total}"
        )
    return record


def write_corpus(records: Iterable[DatasetRecord], path: str | Path) -> int:
    count = 0
    with open(path, "w", encoding="utf-8") as fh:
        for record in records:
            fh.write(json.dumps(record_to_dict(record), sort_keys=True, separators=(",", ":")))
            fh.write("\n")
            count += 1
    return count


def read_corpus(path: str | Path) -> list[DatasetRecord]:
    records = []
    with open(path, "r", encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                raw = json.loads(line)
            except ValueError as exc:
                raise SchemaError(f"line {line_no}", f"invalid JSON: {exc}") from exc
            records.append(record_from_dict(raw))
    return records


@dataclass(frozen=True)
class FoldPlan:
    """Record id -> fold index assignment; folds partition the corpus and
    per-fold positive counts differ by at most one."""

    seed: int
    num_folds: int
    assignments: dict[str, int]

    def fold_of(self, record_id: str) -> int:
        return self.assignments[record_id]

    def split(
        self, records: Sequence[DatasetRecord], fold: int
    ) -> tuple[list[DatasetRecord], list[DatasetRecord]]:
        train = [r for r in records if self.assignments[r.record_id] != fold]
        test = [r for r in records if self.assignments[r.record_id] == fold]
        return train, test


def make_folds(
    records: Sequence[DatasetRecord], seed: int, num_folds: int = NUM_FOLDS
) -> FoldPlan:
    """Stratified assignment: shuffle each class with the seed, then deal
    records round-robin into folds."""
    by_class: dict[int, list[str]] = {LABEL_DEPRESSED: [], LABEL_NOT_DEPRESSED: []}
    for record in records:
        by_class[record.label].append(record.record_id)
    for label, ids in by_class.items():
        if len(ids) < num_folds:
            raise TooFewRecords(
                f"class {label} has {len(ids)} records, need at least {num_folds}"
            )
    rng = np.random.default_rng(seed)
    assignments: dict[str, int] = {}
    for label in (LABEL_DEPRESSED, LABEL_NOT_DEPRESSED):
        ids = by_class[label]
        order = rng.permutation(len(ids))
        for position, idx in enumerate(order):
            assignments[ids[idx]] = position % num_folds
    return FoldPlan(seed=seed, num_folds=num_folds, assignments=assignments)


# corpus shape used by the fixed holdout preset: 553 train (88 positive),
# 137 test (29 positive)
HOLDOUT_TRAIN_POS = 88
HOLDOUT_TRAIN_NEG = 465
HOLDOUT_TEST_POS = 29
HOLDOUT_TEST_NEG = 108


def holdout_split(
    records: Sequence[DatasetRecord],
    seed: int,
    train_pos: int = HOLDOUT_TRAIN_POS,
    train_neg: int = HOLDOUT_TRAIN_NEG,
    test_pos: int = HOLDOUT_TEST_POS,
    test_neg: int = HOLDOUT_TEST_NEG,
) -> tuple[list[DatasetRecord], list[DatasetRecord]]:
    """Named single-split preset with fixed per-class train/test counts."""
    positives = [r for r in records if r.label == LABEL_DEPRESSED]
    negatives = [r for r in records if r.label == LABEL_NOT_DEPRESSED]
    if len(positives) < train_pos + test_pos or len(negatives) < train_neg + test_neg:
        raise TooFewRecords(
            f"need {train_pos + test_pos} positives and {train_neg + test_neg} "
            f"negatives, got {len(positives)}/{len(negatives)}"
        )
    rng = np.random.default_rng(seed)
    pos_order = [positives[i] for i in rng.permutation(len(positives))]
    neg_order = [negatives[i] for i in rng.permutation(len(negatives))]
    train = pos_order[:train_pos] + neg_order[:train_neg]
    test = pos_order[train_pos : train_pos + test_pos] + neg_order[
        train_neg : train_neg + test_neg
    ]
    return train, test


# synthetic corpus palettes: the positive class draws with few muted colors
# in a small region, the negative class with many saturated colors broadly
_DULL_PALETTE = (
    (40, 40, 40),
    (90, 85, 80),
    (60, 50, 45),
    (110, 110, 115),
    (70, 60, 70),
    (50, 55, 60),
)
_VIVID_PALETTE = (
    (220, 40, 40),
    (40, 160, 220),
    (250, 200, 40),
    (60, 190, 90),
    (240, 120, 30),
    (170, 60, 200),
    (250, 90, 160),
    (30, 210, 200),
)

_AGE_BANDS = ("18-25", "26-35", "36-50", "51+")
_GENDERS = ("female", "male", "nonbinary", "undisclosed")


def _phq9_items_for_total(total: int, rng: np.random.Generator) -> tuple[int, ...]:
    items = [0] * PHQ9_ITEM_COUNT
    for _ in range(total):
        open_slots = [i for i in range(PHQ9_ITEM_COUNT) if items[i] < PHQ9_ITEM_MAX]
        items[open_slots[int(rng.integers(len(open_slots)))]] += 1
    return tuple(items)


def _synth_sketch(rng: np.random.Generator, sketch_id: str, positive: bool) -> Sketch:
    canvas = 512.0
    if positive:
        n_strokes = int(rng.integers(3, 9))
        palette = _DULL_PALETTE
        n_colors = int(rng.integers(1, 3))
        extent = float(rng.uniform(0.12, 0.30))
        width_lo, width_hi = 3.0, 6.0
    else:
        n_strokes = int(rng.integers(18, 33))
        palette = _VIVID_PALETTE
        n_colors = int(rng.integers(4, 7))
        extent = float(rng.uniform(0.70, 1.00))
        width_lo, width_hi = 10.0, 16.0

    color_idx = rng.choice(len(palette), size=n_colors, replace=False)
    colors = [palette[int(i)] for i in color_idx]
    half = extent * canvas / 2.0
    cx = float(rng.uniform(half, canvas - half))
    cy = float(rng.uniform(half, canvas - half))
    lo_x, hi_x = cx - half, cx + half
    lo_y, hi_y = cy - half, cy + half

    strokes = []
    for i in range(n_strokes):
        n_points = int(rng.integers(3, 7))
        x = float(rng.uniform(lo_x, hi_x))
        y = float(rng.uniform(lo_y, hi_y))
        points = [(round(x, 2), round(y, 2))]
        step = extent * canvas / 3.0
        for _ in range(n_points - 1):
            x = float(np.clip(x + rng.uniform(-step, step), lo_x, hi_x))
            y = float(np.clip(y + rng.uniform(-step, step), lo_y, hi_y))
            points.append((round(x, 2), round(y, 2)))
        t_start = i * 700  # ms since drawing began
        strokes.append(
            Stroke(
                points=tuple(points),
                color=colors[int(rng.integers(n_colors))],
                width=round(float(rng.uniform(width_lo, width_hi)), 2),
                t_start=t_start,
                t_end=t_start + int(rng.integers(200, 650)),
            )
        )
    return Sketch(sketch_id=sketch_id, strokes=tuple(strokes))


def _synth_feats(rng: np.random.Generator, positive: bool) -> FeatsVector:
    mean = 2.3 if positive else 2.9
    values = rng.normal(mean, 1.0, size=len(FEATS_DIMENSIONS))
    values = np.clip(values, FEATS_MIN, FEATS_MAX)
    return FeatsVector(values=tuple(round(float(v), 3) for v in values))


def synth_corpus(n: int, positive_fraction: float, seed: int) -> list[DatasetRecord]:
    """Procedural corpus with a visual class contrast (coverage, palette,
    stroke count) and questionnaire scores consistent with each label."""
    if n < 10:
        raise TooFewRecords(f"need at least 10 records, got {n}")
    if not 0.0 < positive_fraction < 1.0:
        raise InvalidFraction(f"positive_fraction must be in (0, 1), got {positive_fraction}")
    n_positive = int(round(n * positive_fraction))
    if n_positive < 1 or n_positive > n - 1:
        raise InvalidFraction(
            f"positive_fraction {positive_fraction} leaves no records in one class"
        )
    rng = np.random.default_rng(seed)
    labels = np.zeros(n, dtype=np.int64)
    labels[:n_positive] = 1
    rng.shuffle(labels)

    records = []
    for i, label in enumerate(labels):
        positive = bool(label)
        sketch = _synth_sketch(rng, f"synth-{seed}-{i:04d}", positive)
        total = int(rng.integers(10, 25)) if positive else int(rng.integers(0, 8))
        phq9 = Phq9Response(items=_phq9_items_for_total(total, rng))
        demographics = {
            "age_band": _AGE_BANDS[int(rng.integers(len(_AGE_BANDS)))],
            "gender": _GENDERS[int(rng.integers(len(_GENDERS)))],
        }
        records.append(
            DatasetRecord(
                sketch=sketch,
                phq9=phq9,
                feats=_synth_feats(rng, positive),
                demographics=demographics,
            )
        )
    return records
