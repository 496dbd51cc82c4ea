"""Parameter checkpoints.

File layout: one line of compact JSON
`{"format_version": 1, "tensor_manifest": [{"name", "shape", "dtype"}, ...],
"metadata": {...}}` terminated by a newline, then the raw little-endian
value blobs concatenated in manifest order.
"""

from __future__ import annotations

import json

import numpy as np

from .autodiff import Tensor

FORMAT_VERSION = 1

_DTYPES = {"float32": "<f4", "float64": "<f8"}


def save_checkpoint(path, params: dict[str, Tensor], metadata: dict | None = None) -> None:
    manifest = []
    blobs = []
    for name, tensor in params.items():
        dtype = str(tensor.data.dtype)
        if dtype not in _DTYPES:
            raise ValueError(f"unsupported dtype {dtype} for {name!r}")
        manifest.append({"name": name, "shape": list(tensor.data.shape), "dtype": dtype})
        blobs.append(np.ascontiguousarray(tensor.data).astype(_DTYPES[dtype]).tobytes())
    header = {
        "format_version": FORMAT_VERSION,
        "tensor_manifest": manifest,
        "metadata": metadata or {},
    }
    with open(path, "wb") as fh:
        fh.write(json.dumps(header, separators=(",", ":")).encode("utf-8"))
        fh.write(b"\n")
        for blob in blobs:
            fh.write(blob)


def load_checkpoint(path) -> tuple[dict[str, Tensor], dict]:
    with open(path, "rb") as fh:
        header_line = fh.readline()
        header = json.loads(header_line.decode("utf-8"))
        if header.get("format_version") != FORMAT_VERSION:
            raise ValueError(f"unsupported checkpoint version {header.get('format_version')}")
        params: dict[str, Tensor] = {}
        for entry in header["tensor_manifest"]:
            shape = tuple(entry["shape"])
            dtype = _DTYPES[entry["dtype"]]
            count = int(np.prod(shape)) if shape else 1
            raw = fh.read(count * np.dtype(dtype).itemsize)
            if len(raw) != count * np.dtype(dtype).itemsize:
                raise ValueError(f"{path}: truncated blob for {entry['name']!r}")
            data = np.frombuffer(raw, dtype=dtype).reshape(shape).astype(entry["dtype"])
            params[entry["name"]] = Tensor(data.copy(), requires_grad=True)
    return params, header.get("metadata", {})
