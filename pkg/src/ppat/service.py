"""HTTP assessment service: durable submission log, cache-first captioning,
synchronous model inference, and the 12-frame preview endpoint.

Persistence is an append-only newline-delimited JSON event log; the
in-memory index is rebuilt by replaying the log at startup.  Every write is
flushed and fsynced before the request is acknowledged.
"""

from __future__ import annotations

import base64
import json
import os
import threading
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path

from fastapi import FastAPI, Request
from fastapi.middleware.cors import CORSMiddleware
from fastapi.responses import JSONResponse, Response

from .captions import (
    CaptionCache,
    CaptionRecord,
    MockCaptionClient,
    RemoteCaptionClient,
    default_prompt,
    generate_caption,
)
from .checkpoint import load_checkpoint
from .data import Phq9Response, label_from_phq9
from .errors import (
    CacheIOError,
    ItemOutOfRange,
    LengthMismatch,
    PpatError,
    ProviderRejection,
    ProviderTimeout,
    SchemaError,
)
from .model import Assessment, ModelConfig, VsllmModel, config_from_dict
from .raster import rasterize_sequence
from .sketch import Sketch, decompose, sketch_from_dict, sketch_to_dict

MAX_BODY_BYTES = 1 << 20  # 1 MiB
PREVIEW_SIZE = 96


def canonical_json(obj) -> str:
    return json.dumps(obj, sort_keys=True, separators=(",", ":"))


def _utc_now() -> str:
    return datetime.now(timezone.utc).isoformat()


@dataclass(frozen=True)
class SubmissionEnvelope:
    participant_ref: str
    sketch: Sketch
    phq9: Phq9Response | None = None
    client_version: str = ""


def envelope_from_dict(raw: dict) -> SubmissionEnvelope:
    if not isinstance(raw, dict):
        raise SchemaError("body", "must be a JSON object")
    participant_ref = raw.get("participant_ref")
    if not isinstance(participant_ref, str) or not participant_ref:
        raise SchemaError("participant_ref", "must be a nonempty string")
    if "sketch" not in raw:
        raise SchemaError("sketch", "missing required field")
    sketch = sketch_from_dict(raw["sketch"])
    phq9 = None
    if raw.get("phq9") is not None:
        phq9_raw = raw["phq9"]
        if not isinstance(phq9_raw, dict) or not isinstance(phq9_raw.get("items"), list):
            raise SchemaError("phq9.items", "must be a list of 9 integers")
        try:
            phq9 = Phq9Response(items=tuple(phq9_raw["items"]))
        except (ItemOutOfRange, LengthMismatch) as exc:
            raise SchemaError("phq9.items", str(exc)) from exc
    client_version = raw.get("client_version", "")
    if not isinstance(client_version, str):
        raise SchemaError("client_version", "must be a string")
    return SubmissionEnvelope(
        participant_ref=participant_ref,
        sketch=sketch,
        phq9=phq9,
        client_version=client_version,
    )


def envelope_to_dict(envelope: SubmissionEnvelope) -> dict:
    return {
        "participant_ref": envelope.participant_ref,
        "sketch": sketch_to_dict(envelope.sketch),
        "phq9": {"items": list(envelope.phq9.items)} if envelope.phq9 else None,
        "client_version": envelope.client_version,
    }


@dataclass
class StoredRecord:
    record_id: int
    envelope: SubmissionEnvelope
    created_at: str
    assessment_json: str | None = None
    caption: CaptionRecord | None = None
    assessed_at: str | None = None

    def public_dict(self) -> dict:
        """External view; questionnaire answers are reduced to their
        derived summary and never leave the store item-by-item."""
        phq9_summary = None
        if self.envelope.phq9 is not None:
            phq9_summary = {
                "total": self.envelope.phq9.total,
                "label": label_from_phq9(self.envelope.phq9),
            }
        return {
            "record_id": self.record_id,
            "participant_ref": self.envelope.participant_ref,
            "sketch": sketch_to_dict(self.envelope.sketch),
            "phq9_summary": phq9_summary,
            "client_version": self.envelope.client_version,
            "created_at": self.created_at,
            "assessed_at": self.assessed_at,
            "assessment": json.loads(self.assessment_json) if self.assessment_json else None,
        }


class RecordStore:
    """Append-only event log plus in-memory index; single serialized
    writer, lock-free reads of immutable snapshots."""

    def __init__(self, directory: str | Path):
        self.directory = Path(directory)
        self.path = self.directory / "records.ndjson"
        self._lock = threading.Lock()
        self._records: dict[int, StoredRecord] = {}
        self._next_id = 1
        self.directory.mkdir(parents=True, exist_ok=True)
        if self.path.exists():
            self._replay()

    def _replay(self):
        with open(self.path, "r", encoding="utf-8") as fh:
            for line_no, line in enumerate(fh, start=1):
                line = line.strip()
                if not line:
                    continue
                try:
                    event = json.loads(line)
                    kind = event["event"]
                    if kind == "submission":
                        record = StoredRecord(
                            record_id=event["record_id"],
                            envelope=envelope_from_dict(event["envelope"]),
                            created_at=event["created_at"],
                        )
                        self._records[record.record_id] = record
                        self._next_id = max(self._next_id, record.record_id + 1)
                    elif kind == "assessment":
                        record = self._records[event["record_id"]]
                        record.assessment_json = event["assessment_json"]
                        record.assessed_at = event["created_at"]
                        if event.get("caption") is not None:
                            record.caption = CaptionRecord(**event["caption"])
                    else:
                        raise ValueError(f"unknown event kind {kind!r}")
                except (KeyError, ValueError, TypeError, SchemaError, PpatError) as exc:
                    raise CacheIOError(f"{self.path}:{line_no}: corrupt event: {exc}") from exc

    def _append(self, event: dict) -> None:
        with open(self.path, "a", encoding="utf-8") as fh:
            fh.write(canonical_json(event) + "\n")
            fh.flush()
            os.fsync(fh.fileno())

    def add_submission(self, envelope: SubmissionEnvelope) -> StoredRecord:
        with self._lock:
            record = StoredRecord(
                record_id=self._next_id,
                envelope=envelope,
                created_at=_utc_now(),
            )
            self._append(
                {
                    "event": "submission",
                    "record_id": record.record_id,
                    "envelope": envelope_to_dict(envelope),
                    "created_at": record.created_at,
                }
            )
            self._records[record.record_id] = record
            self._next_id += 1
            return record

    def set_assessment(
        self, record_id: int, assessment_json: str, caption: CaptionRecord | None
    ) -> StoredRecord:
        with self._lock:
            record = self._records[record_id]
            if record.assessment_json is not None:
                return record
            stamped = _utc_now()
            self._append(
                {
                    "event": "assessment",
                    "record_id": record_id,
                    "assessment_json": assessment_json,
                    "caption": caption.to_dict() if caption else None,
                    "created_at": stamped,
                }
            )
            record.assessment_json = assessment_json
            record.assessed_at = stamped
            record.caption = caption
            return record

    def get(self, record_id: int) -> StoredRecord | None:
        return self._records.get(record_id)

    def __len__(self) -> int:
        return len(self._records)


@dataclass
class ServiceState:
    store: RecordStore
    cache: CaptionCache
    client: object
    prompt: object
    model: VsllmModel | None = None
    params: dict | None = None
    model_lock: threading.Lock = field(default_factory=threading.Lock)

    @property
    def model_loaded(self) -> bool:
        return self.params is not None


def load_model_state(ckpt_path: str | Path) -> tuple[VsllmModel, dict]:
    params, metadata = load_checkpoint(ckpt_path)
    if "config" not in metadata:
        raise SchemaError("metadata.config", "checkpoint is missing its model config")
    config: ModelConfig = config_from_dict(metadata["config"])
    return VsllmModel(config), params


def create_app(
    store_dir: str | Path,
    ckpt_path: str | Path | None = None,
    provider: str = "mock",
    endpoint: str | None = None,
    cors_origins: tuple[str, ...] = ("*",),
    auth_token: str | None = None,
    template_version: str = "v1",
):
    """Build the FastAPI application; kept a factory so tests can spin up
    isolated instances against temp directories."""
    if provider == "mock":
        client = MockCaptionClient()
    elif provider == "remote":
        if not endpoint:
            raise SchemaError("endpoint", "remote provider requires an endpoint URL")
        client = RemoteCaptionClient(endpoint)
    else:
        raise SchemaError("provider", f"unknown provider {provider!r}")

    state = ServiceState(
        store=RecordStore(store_dir),
        cache=CaptionCache(Path(store_dir) / "captions.ndjson"),
        client=client,
        prompt=default_prompt(template_version),
    )
    if ckpt_path is not None:
        state.model, state.params = load_model_state(ckpt_path)

    app = FastAPI(title="ppat assessment service")
    app.state.service = state
    app.add_middleware(
        CORSMiddleware,
        allow_origins=list(cors_origins),
        allow_methods=["*"],
        allow_headers=["*"],
    )

    def error_response(status: int, code: str, message: str, field_path: str | None = None):
        body = {"error": {"code": code, "message": message}}
        if field_path is not None:
            body["error"]["field"] = field_path
        return JSONResponse(status_code=status, content=body)

    def check_auth(request: Request):
        if auth_token is None:
            return None
        header = request.headers.get("authorization", "")
        if header != f"Bearer {auth_token}":
            return error_response(401, "Unauthorized", "missing or invalid bearer token")
        return None

    @app.get("/v1/health")
    def health():
        return {"status": "ok", "model_loaded": state.model_loaded, "records": len(state.store)}

    @app.post("/v1/submissions")
    async def submit(request: Request):
        denied = check_auth(request)
        if denied:
            return denied
        body = await request.body()
        if len(body) > MAX_BODY_BYTES:
            return error_response(413, "PayloadTooLarge", f"body exceeds {MAX_BODY_BYTES} bytes")
        try:
            raw = json.loads(body)
        except ValueError as exc:
            return error_response(400, "SchemaError", f"invalid JSON: {exc}", "body")
        try:
            envelope = envelope_from_dict(raw)
        except SchemaError as exc:
            return error_response(400, "SchemaError", exc.message, exc.field)
        except PpatError as exc:
            return error_response(400, "SchemaError", str(exc), "sketch")
        try:
            record = state.store.add_submission(envelope)
        except OSError as exc:
            return error_response(503, "StoreUnavailable", str(exc))
        return JSONResponse(status_code=201, content={"record_id": record.record_id})

    @app.post("/v1/submissions/{record_id}/assess")
    def assess(record_id: int, request: Request):
        denied = check_auth(request)
        if denied:
            return denied
        record = state.store.get(record_id)
        if record is None:
            return error_response(404, "UnknownRecord", f"no record {record_id}")
        if record.assessment_json is not None:
            return Response(content=record.assessment_json, media_type="application/json")
        if not state.model_loaded:
            return error_response(409, "ModelNotLoaded", "no checkpoint loaded")
        sketch = record.envelope.sketch
        try:
            caption_record = generate_caption(sketch, state.prompt, state.client, state.cache)
        except ProviderTimeout as exc:
            return error_response(502, "ProviderTimeout", str(exc))
        except ProviderRejection as exc:
            return error_response(502, "ProviderRejection", str(exc))
        except CacheIOError as exc:
            return error_response(503, "StoreUnavailable", str(exc))
        with state.model_lock:
            assessment: Assessment = state.model.forward(
                sketch, caption_record.caption_text, state.params, caption_record
            )
        assessment_json = canonical_json(assessment.to_dict())
        try:
            record = state.store.set_assessment(record_id, assessment_json, caption_record)
        except OSError as exc:
            return error_response(503, "StoreUnavailable", str(exc))
        return Response(content=record.assessment_json, media_type="application/json")

    @app.get("/v1/submissions/{record_id}")
    def get_submission(record_id: int, request: Request):
        denied = check_auth(request)
        if denied:
            return denied
        record = state.store.get(record_id)
        if record is None:
            return error_response(404, "UnknownRecord", f"no record {record_id}")
        return record.public_dict()

    @app.get("/v1/preview/{record_id}")
    def preview(record_id: int, request: Request):
        denied = check_auth(request)
        if denied:
            return denied
        record = state.store.get(record_id)
        if record is None:
            return error_response(404, "UnknownRecord", f"no record {record_id}")
        seq = decompose(record.envelope.sketch)
        frames = rasterize_sequence(seq, PREVIEW_SIZE, PREVIEW_SIZE)
        return {
            "record_id": record_id,
            "cumulative_counts": list(seq.cumulative_counts),
            "frames": [
                {
                    "index": i + 1,
                    "width": frame.width,
                    "height": frame.height,
                    "pixels_b64": base64.b64encode(frame.pixels).decode("ascii"),
                }
                for i, frame in enumerate(frames)
            ],
        }

    return app
