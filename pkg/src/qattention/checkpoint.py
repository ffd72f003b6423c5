"""Model checkpoint as a single schema-versioned JSON document.

Parameter arrays are embedded as base64 of their little-endian float64
bytes, so a reload is bit-exact.
"""

from __future__ import annotations

import base64
import json
from pathlib import Path

import numpy as np

from .classifier import ModelCheckpoint
from .errors import CompatibilityError, StorageError

SCHEMA_VERSION = 1
CHECKPOINT_KIND = "qattention.checkpoint"


def encode_array(a):
    a = np.ascontiguousarray(a, dtype="<f8")
    return {"dtype": "<f8", "shape": list(a.shape), "data": base64.b64encode(a.tobytes()).decode("ascii")}


def decode_array(doc):
    raw = base64.b64decode(doc["data"])
    return np.frombuffer(raw, dtype=np.dtype(doc["dtype"])).astype(np.float64).reshape(doc["shape"])


def checkpoint_to_dict(ckpt, config_digest=None, manifest_digest=None):
    return {
        "schema_version": SCHEMA_VERSION,
        "kind": CHECKPOINT_KIND,
        "n_qubits": ckpt.n_qubits,
        "layers": ckpt.layers,
        "labels": list(ckpt.labels),
        "arrays": {"theta": encode_array(ckpt.theta), "W": encode_array(ckpt.W), "b": encode_array(ckpt.b)},
        "metadata": ckpt.metadata,
        "config_digest": config_digest,
        "manifest_digest": manifest_digest,
    }


def save_checkpoint(ckpt, path, config_digest=None, manifest_digest=None):
    doc = checkpoint_to_dict(ckpt, config_digest, manifest_digest)
    try:
        Path(path).write_text(json.dumps(doc, indent=1, sort_keys=True) + "\n")
    except OSError as exc:
        raise StorageError(f"cannot write checkpoint {path}: {exc}") from exc
    return path


def load_checkpoint(path):
    """Return ``(ModelCheckpoint, document)``; the document keeps the digests."""
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"checkpoint not found: {path}")
    try:
        doc = json.loads(path.read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise StorageError(f"cannot read checkpoint {path}: {exc}") from exc
    if doc.get("kind") != CHECKPOINT_KIND or doc.get("schema_version") != SCHEMA_VERSION:
        raise CompatibilityError(
            f"{path} is not a schema-{SCHEMA_VERSION} checkpoint (found {doc.get('kind')}, "
            f"version {doc.get('schema_version')})"
        )
    arrays = doc["arrays"]
    ckpt = ModelCheckpoint(
        n_qubits=doc["n_qubits"],
        layers=doc["layers"],
        theta=decode_array(arrays["theta"]),
        W=decode_array(arrays["W"]),
        b=decode_array(arrays["b"]),
        labels=tuple(doc["labels"]),
        metadata=doc.get("metadata", {}),
    )
    return ckpt, doc
