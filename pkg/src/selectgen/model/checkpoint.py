"""Checkpoint file format.

A checkpoint is a single JSON document holding the model config, the
vocabulary, training metadata, and every parameter as base64-encoded
little-endian float64 bytes.  The `id` field is the sha256 hex digest of the
canonical serialization of everything else; it doubles as the identity
reported by the service health endpoint.
"""

from __future__ import annotations

import base64
import hashlib
import json
from pathlib import Path

import numpy as np

from ..data.vocab import Vocabulary
from ..errors import ParseError
from .config import ModelConfig
from .network import Model

FORMAT = "selectgen-checkpoint-v1"


def _encode_array(a: np.ndarray) -> dict:
    return {
        "shape": list(a.shape),
        "data": base64.b64encode(np.ascontiguousarray(a, dtype="<f8").tobytes()).decode("ascii"),
    }


def _decode_array(d: dict) -> np.ndarray:
    raw = base64.b64decode(d["data"])
    a = np.frombuffer(raw, dtype="<f8").astype(np.float64)
    return a.reshape(d["shape"])


def checkpoint_id(doc: dict) -> str:
    body = {k: v for k, v in doc.items() if k != "id"}
    blob = json.dumps(body, sort_keys=True, separators=(",", ":")).encode("utf-8")
    return hashlib.sha256(blob).hexdigest()


def save_checkpoint(path: str | Path, model: Model, vocab: Vocabulary,
                    meta: dict | None = None) -> str:
    doc = {
        "format": FORMAT,
        "config": model.config.to_dict(),
        "vocab": vocab.to_dict(),
        "meta": dict(meta or {}),
        "params": {k: _encode_array(p.data) for k, p in sorted(model.params.items())},
    }
    doc["id"] = checkpoint_id(doc)
    Path(path).write_text(json.dumps(doc, sort_keys=True, indent=1) + "\n")
    return doc["id"]


def load_checkpoint(path: str | Path) -> tuple[Model, Vocabulary, dict, str]:
    path = Path(path)
    try:
        doc = json.loads(path.read_text())
    except (OSError, json.JSONDecodeError) as e:
        raise ParseError(f"cannot read checkpoint {path}: {e}") from e
    if not isinstance(doc, dict) or doc.get("format") != FORMAT:
        raise ParseError(f"{path}: not a {FORMAT} file")
    for key in ("config", "vocab", "params", "id"):
        if key not in doc:
            raise ParseError(f"{path}: missing checkpoint field {key!r}")
    if checkpoint_id(doc) != doc["id"]:
        raise ParseError(f"{path}: checkpoint id does not match its contents")
    config = ModelConfig.from_dict(doc["config"])
    vocab = Vocabulary.from_dict(doc["vocab"])
    model = Model(config, np.random.default_rng(0))
    saved = doc["params"]
    if set(saved) != set(model.params):
        raise ParseError(f"{path}: parameter names do not match the config")
    for name, p in model.params.items():
        a = _decode_array(saved[name])
        if a.shape != p.data.shape:
            raise ParseError(f"{path}: bad shape for {name}: {a.shape}")
        p.data = a
    return model, vocab, doc.get("meta", {}), doc["id"]
