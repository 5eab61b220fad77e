"""Checkpoint files: a versioned JSON tensor dump.

Layout::

    {
      "format": "tagtriad-checkpoint",
      "version": 1,
      "kind": "lstm" | "doc2vec_mnlr" | "bert_pretrained" | "bert_finetuned",
      "config": {...},            # full model configuration
      "vocab_hash": "<sha256>",   # hash of the serialized vocabulary
      "meta": {...},              # free-form provenance
      "tensors": [
        {"name": str, "shape": [int, ...], "dtype": "float64" | "float32",
         "data": "<base64 of little-endian row-major bytes>"}
      ]
    }

Data is base64 rather than decimal text so that a load reproduces every
value bit for bit.
"""

from __future__ import annotations

import base64
import json
from pathlib import Path

import numpy as np

FORMAT = "tagtriad-checkpoint"
VERSION = 1
KINDS = ("lstm", "doc2vec_mnlr", "bert_pretrained", "bert_finetuned")


class CheckpointError(ValueError):
    pass


def encode_tensor(name: str, arr: np.ndarray) -> dict:
    arr = np.ascontiguousarray(arr)
    dtype = arr.dtype.newbyteorder("<")
    return {
        "name": name,
        "shape": list(arr.shape),
        "dtype": arr.dtype.name,
        "data": base64.b64encode(arr.astype(dtype, copy=False).tobytes()).decode("ascii"),
    }


def decode_tensor(entry: dict) -> np.ndarray:
    dtype = np.dtype(entry["dtype"]).newbyteorder("<")
    raw = base64.b64decode(entry["data"])
    arr = np.frombuffer(raw, dtype=dtype).astype(entry["dtype"]).reshape(entry["shape"])
    return arr.copy()


def save_checkpoint(path, kind: str, tensors: dict, config: dict, vocab_hash: str, meta: dict | None = None):
    if kind not in KINDS:
        raise CheckpointError(f"unknown checkpoint kind {kind!r}")
    payload = {
        "format": FORMAT,
        "version": VERSION,
        "kind": kind,
        "config": config,
        "vocab_hash": vocab_hash,
        "meta": meta or {},
        "tensors": [encode_tensor(k, np.asarray(v)) for k, v in tensors.items()],
    }
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(payload, ensure_ascii=False, sort_keys=True), encoding="utf-8")
    return path


def load_checkpoint(path, expect_kind=None) -> dict:
    path = Path(path)
    if not path.is_file():
        raise CheckpointError(f"checkpoint not found: {path}")
    payload = json.loads(path.read_text(encoding="utf-8"))
    if payload.get("format") != FORMAT:
        raise CheckpointError(f"{path} is not a tagtriad checkpoint")
    if payload.get("version") != VERSION:
        raise CheckpointError(f"{path}: unsupported checkpoint version {payload.get('version')}")
    if expect_kind is not None:
        kinds = (expect_kind,) if isinstance(expect_kind, str) else tuple(expect_kind)
        if payload["kind"] not in kinds:
            raise CheckpointError(f"{path}: expected kind {' or '.join(kinds)}, found {payload['kind']}")
    payload["tensors"] = {e["name"]: decode_tensor(e) for e in payload["tensors"]}
    return payload
