"""Caption acquisition: prompt templates, a deterministic mock provider, a
generic HTTP provider, and an append-only cache keyed by sketch content.

Captions are produced before training and persisted; the training loop only
ever reads the cache.
"""

from __future__ import annotations

import base64
import hashlib
import json
import os
import threading
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from datetime import datetime, timezone
from importlib import resources
from pathlib import Path
from typing import Callable, Protocol

from .errors import CacheIOError, ProviderRejection, ProviderTimeout, TemplateError
from .raster import RasterImage, rasterize
from .sketch import Sketch

CAPTION_IMAGE_SIZE = 96
DEFAULT_ELEMENT_TAGS = ("color usage", "space utilization", "stroke effort", "overall mood")
REQUIRED_ELEMENT_TAGS = ("color usage", "space utilization")
IMAGE_PLACEHOLDER = "{image}"
ELEMENTS_PLACEHOLDER = "{elements}"
AUTH_TOKEN_ENV = "PPAT_CAPTION_TOKEN"

RETRY_DELAYS = (1.0, 2.0, 4.0)


@dataclass(frozen=True)
class MentalPrompt:
    """Versioned instruction template aimed at psychologically relevant
    drawing elements."""

    template_version: str
    template_text: str
    element_tags: tuple[str, ...] = DEFAULT_ELEMENT_TAGS

    def __post_init__(self):
        if len(set(self.element_tags)) != len(self.element_tags):
            raise TemplateError("duplicate element tags")
        missing = [tag for tag in REQUIRED_ELEMENT_TAGS if tag not in self.element_tags]
        if missing:
            raise TemplateError(f"element tags must include {missing}")


@dataclass(frozen=True)
class CaptionRecord:
    sketch_hash: str
    template_version: str
    caption_text: str
    provider: str
    created_at: str

    def to_dict(self) -> dict:
        return {
            "sketch_hash": self.sketch_hash,
            "template_version": self.template_version,
            "caption_text": self.caption_text,
            "provider": self.provider,
            "created_at": self.created_at,
        }


def default_prompt(template_version: str = "v1") -> MentalPrompt:
    """Load a shipped template by version."""
    try:
        text = (
            resources.files("ppat").joinpath(f"prompts/{template_version}.txt").read_text()
        )
    except (FileNotFoundError, ModuleNotFoundError) as exc:
        raise TemplateError(f"no template asset for version {template_version!r}") from exc
    return MentalPrompt(template_version=template_version, template_text=text)


def render_prompt(prompt: MentalPrompt) -> str:
    """Substitute the element tags and image marker; every tag must appear
    verbatim in the result."""
    rendered = prompt.template_text
    rendered = rendered.replace(ELEMENTS_PLACEHOLDER, ", ".join(prompt.element_tags))
    rendered = rendered.replace(IMAGE_PLACEHOLDER, "[attached drawing]")
    for tag in prompt.element_tags:
        if tag not in rendered:
            raise TemplateError(f"rendered prompt is missing element tag {tag!r}")
    return rendered


def sketch_content_hash(sketch: Sketch, size: int = CAPTION_IMAGE_SIZE) -> str:
    """Content hash of the rasterized pixels, so visually identical sketches
    share cache entries."""
    return hashlib.sha256(rasterize(sketch, size, size).pixels).hexdigest()


def _bounding_box_fraction(sketch: Sketch) -> float:
    xs = [p[0] for s in sketch.strokes for p in s.points]
    ys = [p[1] for s in sketch.strokes for p in s.points]
    area = (max(xs) - min(xs)) * (max(ys) - min(ys))
    return area / float(sketch.canvas_size * sketch.canvas_size)


def _utilization_phrase(bbox_fraction: float) -> str:
    if bbox_fraction < 0.2:
        return "low space utilization"
    if bbox_fraction < 0.55:
        return "moderate space utilization"
    return "high space utilization"


def mock_caption(sketch: Sketch) -> str:
    """Deterministic caption from sketch statistics; stands in for a remote
    vision-language provider during tests and offline runs."""
    colors = len({stroke.color for stroke in sketch.strokes})
    image = rasterize(sketch, CAPTION_IMAGE_SIZE, CAPTION_IMAGE_SIZE)
    coverage_pct = int(round(image.ink_coverage() * 100))
    phrase = _utilization_phrase(_bounding_box_fraction(sketch))
    color_word = "color" if colors == 1 else "colors"
    return (
        f"a drawing of {sketch.stroke_count} strokes using {colors} {color_word} "
        f"covering {coverage_pct}% of the canvas with {phrase}"
    )


class CaptionClient(Protocol):
    name: str

    def caption(self, sketch: Sketch, prompt_text: str, image: RasterImage) -> str: ...


class MockCaptionClient:
    """Offline provider; ignores the prompt text and derives the caption
    from the sketch itself."""

    name = "mock"

    def __init__(self):
        self.calls = 0

    def caption(self, sketch: Sketch, prompt_text: str, image: RasterImage) -> str:
        self.calls += 1
        return mock_caption(sketch)


class RemoteCaptionClient:
    """HTTP JSON provider: POST {prompt, image_b64, width, height} and read
    back {"caption": ...}."""

    name = "remote"

    def __init__(self, endpoint: str, auth_token: str | None = None, timeout: float = 30.0):
        self.endpoint = endpoint
        self.auth_token = auth_token if auth_token is not None else os.environ.get(AUTH_TOKEN_ENV)
        self.timeout = timeout

    def caption(self, sketch: Sketch, prompt_text: str, image: RasterImage) -> str:
        import httpx

        headers = {}
        if self.auth_token:
            headers["Authorization"] = f"Bearer {self.auth_token}"
        payload = {
            "prompt": prompt_text,
            "image_b64": base64.b64encode(image.pixels).decode("ascii"),
            "width": image.width,
            "height": image.height,
        }
        try:
            response = httpx.post(
                self.endpoint, json=payload, headers=headers, timeout=self.timeout
            )
        except (httpx.TimeoutException, httpx.ConnectError) as exc:
            raise ProviderTimeout(str(exc)) from exc
        if response.status_code != 200:
            raise ProviderRejection(f"provider returned HTTP {response.status_code}")
        try:
            caption = response.json()["caption"]
        except (ValueError, KeyError) as exc:
            raise ProviderRejection(f"malformed provider response: {exc}") from exc
        if not isinstance(caption, str):
            raise ProviderRejection("provider caption is not a string")
        return caption


class CaptionCache:
    """Append-only newline-delimited JSON store with an in-memory index on
    (sketch_hash, template_version). Reads are lock-free against the index;
    appends are serialized."""

    def __init__(self, path: str | Path):
        self.path = Path(path)
        self._lock = threading.Lock()
        self._index: dict[tuple[str, str], CaptionRecord] = {}
        if self.path.exists():
            self._load()

    def _load(self):
        try:
            with open(self.path, "r", encoding="utf-8") as fh:
                for line_no, line in enumerate(fh, start=1):
                    line = line.strip()
                    if not line:
                        continue
                    try:
                        raw = json.loads(line)
                        record = CaptionRecord(
                            sketch_hash=raw["sketch_hash"],
                            template_version=raw["template_version"],
                            caption_text=raw["caption_text"],
                            provider=raw["provider"],
                            created_at=raw["created_at"],
                        )
                    except (ValueError, KeyError, TypeError) as exc:
                        raise CacheIOError(
                            f"{self.path}:{line_no}: bad cache line: {exc}"
                        ) from exc
                    self._index[(record.sketch_hash, record.template_version)] = record
        except OSError as exc:
            raise CacheIOError(f"cannot read cache {self.path}: {exc}") from exc

    def __len__(self) -> int:
        return len(self._index)

    def get(self, sketch_hash: str, template_version: str) -> CaptionRecord | None:
        return self._index.get((sketch_hash, template_version))

    def put(self, record: CaptionRecord) -> CaptionRecord:
        """First write wins for a given key; later puts return the original."""
        with self._lock:
            key = (record.sketch_hash, record.template_version)
            existing = self._index.get(key)
            if existing is not None:
                return existing
            try:
                self.path.parent.mkdir(parents=True, exist_ok=True)
                with open(self.path, "a", encoding="utf-8") as fh:
                    fh.write(json.dumps(record.to_dict(), sort_keys=True) + "\n")
                    fh.flush()
            except OSError as exc:
                raise CacheIOError(f"cannot append to cache {self.path}: {exc}") from exc
            self._index[key] = record
            return record


def generate_caption(
    sketch: Sketch,
    prompt: MentalPrompt,
    client: CaptionClient,
    cache: CaptionCache,
    sleeper: Callable[[float], None] = time.sleep,
) -> CaptionRecord:
    """Cache-first caption lookup; on a miss, call the provider with the
    rendered prompt and rasterized image, retrying timeouts with backoff."""
    sketch_hash = sketch_content_hash(sketch)
    cached = cache.get(sketch_hash, prompt.template_version)
    if cached is not None:
        return cached

    prompt_text = render_prompt(prompt)
    image = rasterize(sketch, CAPTION_IMAGE_SIZE, CAPTION_IMAGE_SIZE)
    attempts = 1 + len(RETRY_DELAYS)
    for attempt in range(attempts):
        try:
            text = client.caption(sketch, prompt_text, image)
            break
        except ProviderTimeout:
            if attempt == attempts - 1:
                raise
            sleeper(RETRY_DELAYS[attempt])
    record = CaptionRecord(
        sketch_hash=sketch_hash,
        template_version=prompt.template_version,
        caption_text=text,
        provider=client.name,
        created_at=datetime.now(timezone.utc).isoformat(),
    )
    return cache.put(record)


def ensure_captions(
    sketches: list[Sketch],
    prompt: MentalPrompt,
    client: CaptionClient,
    cache: CaptionCache,
    concurrency: int = 4,
    sleeper: Callable[[float], None] = time.sleep,
) -> dict[str, CaptionRecord]:
    """Caption every sketch, reusing the cache; provider calls for distinct
    sketches may run in parallel up to the concurrency cap."""
    results: dict[str, CaptionRecord] = {}
    with ThreadPoolExecutor(max_workers=max(1, concurrency)) as pool:
        futures = {
            sketch.sketch_id: pool.submit(
                generate_caption, sketch, prompt, client, cache, sleeper
            )
            for sketch in sketches
        }
        for sketch_id, future in futures.items():
            results[sketch_id] = future.result()
    return results
