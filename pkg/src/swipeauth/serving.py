"""Shared glue for the CLI and the HTTP service.

Swipe payloads (raw device units + screen dims) are turned into sequences
and scored exactly like the offline pipeline, so a recorded payload
replayed offline reproduces the service's score. Galleries persist as one
JSON file per user; writes are serialized per user id.
"""

from __future__ import annotations

import json
import math
import re
import threading
from pathlib import Path

import numpy as np

from .errors import DataFormatError, EnrollmentError, MalformedSequenceError
from .net.model import embed
from .touchcore import TouchSequence, build_feature_matrix, normalize_sequence
from .verify import Gallery

USER_ID_RE = re.compile(r"^[A-Za-z0-9_-]{1,64}$")


def payload_to_sequence(payload: dict) -> TouchSequence:
    """Build a validated sequence from a service-shaped swipe payload.

    Expected keys: user_id, samples (list of [x, y, p, t]), screen_width,
    screen_height, optional device_id.
    """
    try:
        user_id = payload["user_id"]
        samples = payload["samples"]
        width = float(payload["screen_width"])
        height = float(payload["screen_height"])
    except (KeyError, TypeError, ValueError) as exc:
        raise MalformedSequenceError(f"bad payload: {exc}") from exc
    if not isinstance(user_id, str) or not USER_ID_RE.match(user_id):
        raise MalformedSequenceError(
            "user_id must be 1-64 chars of [A-Za-z0-9_-]")
    arr = np.asarray(samples, dtype=np.float64)
    if arr.ndim != 2 or arr.shape[1] != 4:
        raise MalformedSequenceError("samples must be rows of [x, y, p, t]")
    seq = TouchSequence(
        x=arr[:, 0], y=arr[:, 1], p=arr[:, 2], t=arr[:, 3],
        user_id=user_id, session_id="live",
        device_id=str(payload.get("device_id", "unknown")),
        screen_width=width, screen_height=height,
        pressure_missing=bool(np.all(arr[:, 2] == 0.0)),
    )
    seq.validate()
    return seq


def embed_payload(model, payload: dict) -> np.ndarray:
    """Featurize and embed a payload through the offline path."""
    seq = payload_to_sequence(payload)
    fm = build_feature_matrix(normalize_sequence(seq))
    return embed(model, fm, mode="infer")


class GalleryStore:
    """Directory of per-user gallery files with serialized writes."""

    def __init__(self, root):
        self.root = Path(root)
        self.root.mkdir(parents=True, exist_ok=True)
        self._locks: dict[str, threading.Lock] = {}
        self._registry = threading.Lock()

    def _lock(self, user_id: str) -> threading.Lock:
        with self._registry:
            return self._locks.setdefault(user_id, threading.Lock())

    def _path(self, user_id: str) -> Path:
        if not USER_ID_RE.match(user_id):
            raise EnrollmentError(f"unusable user_id {user_id!r}")
        return self.root / f"{user_id}.json"

    def load(self, user_id: str) -> Gallery | None:
        path = self._path(user_id)
        if not path.exists():
            return None
        try:
            doc = json.loads(path.read_text())
            embeddings = [np.asarray(e, dtype=np.float64)
                          for e in doc["embeddings"]]
        except (json.JSONDecodeError, KeyError, TypeError) as exc:
            raise DataFormatError(f"{path}: corrupt gallery file") from exc
        gallery = Gallery(user_id=user_id, embeddings=embeddings)
        gallery.validate()
        return gallery

    def append(self, user_id: str, embedding: np.ndarray,
               model_version: str) -> int:
        """Add one embedding; returns the new gallery size."""
        path = self._path(user_id)
        with self._lock(user_id):
            existing = self.load(user_id)
            embeddings = existing.embeddings if existing else []
            embeddings.append(np.asarray(embedding, dtype=np.float64))
            doc = {
                "user_id": user_id,
                "model_version": model_version,
                "embeddings": [[float(v) for v in e] for e in embeddings],
            }
            tmp = path.with_suffix(".json.tmp")
            tmp.write_text(json.dumps(doc) + "\n")
            tmp.replace(path)
            return len(embeddings)


# ---------------------------------------------------------------------------
# Checkpoint sidecar: operating threshold from the latest evaluation
# ---------------------------------------------------------------------------

def sidecar_path(checkpoint_path) -> Path:
    return Path(str(checkpoint_path) + ".sidecar.json")


def write_sidecar(checkpoint_path, eer_by_g: dict, threshold_by_g: dict) -> Path:
    gs = sorted(threshold_by_g)
    doc = {
        "default_threshold": threshold_by_g[gs[-1]],
        "threshold_by_g": {str(g): threshold_by_g[g] for g in gs},
        "eer_by_g": {str(g): eer_by_g[g] for g in gs},
    }
    path = sidecar_path(checkpoint_path)
    path.write_text(json.dumps(doc, sort_keys=True) + "\n")
    return path


def read_default_threshold(checkpoint_path, margin: float = 1.5) -> float:
    """Latest evaluated operating threshold; falls back to margin / 2."""
    path = sidecar_path(checkpoint_path)
    if path.exists():
        try:
            doc = json.loads(path.read_text())
            value = float(doc["default_threshold"])
            if math.isfinite(value) and value >= 0:
                return value
        except (json.JSONDecodeError, KeyError, TypeError, ValueError):
            pass
    return margin / 2.0
