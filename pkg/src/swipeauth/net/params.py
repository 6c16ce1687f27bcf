"""Model parameters and the versioned text checkpoint format.

Gate matrices are stored fused as (in_dim, 4*units) blocks in the order
input, forget, cell, output; the checkpoint file lists them per gate so it
stays self-describing. Floats are serialized with shortest round-trip
precision, so save -> load -> save is byte-identical.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from ..errors import DataFormatError, ShapeError

CHECKPOINT_FORMAT = "swipeauth-checkpoint"
CHECKPOINT_VERSION = "1"

GATE_ORDER = ("input", "forget", "cell", "output")

BN_EPS = 1e-3
BN_MOMENTUM = 0.99

#: Architecture constants: feature channels in, embedding size out.
INPUT_DIM = 11
HIDDEN_UNITS = 64


@dataclass
class LstmLayerParams:
    """Fused gate parameters of one recurrent layer."""

    w: np.ndarray  # (in_dim, 4*units) input projections, gate blocks
    u: np.ndarray  # (units, 4*units) recurrent projections
    b: np.ndarray  # (4*units,) biases

    @property
    def in_dim(self) -> int:
        return self.w.shape[0]

    @property
    def units(self) -> int:
        return self.u.shape[0]

    def validate(self) -> None:
        h = self.units
        if self.w.shape[1] != 4 * h or self.u.shape != (h, 4 * h) \
                or self.b.shape != (4 * h,):
            raise ShapeError(
                f"inconsistent layer shapes w{self.w.shape} u{self.u.shape} "
                f"b{self.b.shape}")
        for arr in (self.w, self.u, self.b):
            if not np.all(np.isfinite(arr)):
                raise ShapeError("non-finite layer parameters")

    def copy(self) -> "LstmLayerParams":
        return LstmLayerParams(self.w.copy(), self.u.copy(), self.b.copy())


@dataclass
class BatchNormParams:
    """Per-feature scale/shift plus running statistics for inference."""

    gamma: np.ndarray
    beta: np.ndarray
    running_mean: np.ndarray
    running_var: np.ndarray

    def validate(self) -> None:
        n = self.gamma.shape[0]
        for name, arr in (("beta", self.beta), ("running_mean", self.running_mean),
                          ("running_var", self.running_var)):
            if arr.shape != (n,):
                raise ShapeError(f"batch-norm {name} shape {arr.shape} != ({n},)")
        for arr in (self.gamma, self.beta, self.running_mean, self.running_var):
            if not np.all(np.isfinite(arr)):
                raise ShapeError("non-finite batch-norm parameters")
        if np.any(self.running_var < 0):
            raise ShapeError("negative running variance")

    def copy(self) -> "BatchNormParams":
        return BatchNormParams(self.gamma.copy(), self.beta.copy(),
                               self.running_mean.copy(), self.running_var.copy())


@dataclass
class ModelParams:
    """All weights of the two-layer recurrent embedding network."""

    layer1: LstmLayerParams
    norm: BatchNormParams
    layer2: LstmLayerParams
    version: str = CHECKPOINT_VERSION

    def validate(self) -> None:
        self.layer1.validate()
        self.norm.validate()
        self.layer2.validate()
        if self.norm.gamma.shape[0] != self.layer1.units:
            raise ShapeError("batch-norm width does not match layer1 units")
        if self.layer2.in_dim != self.layer1.units:
            raise ShapeError("layer2 input width does not match layer1 units")

    def copy(self) -> "ModelParams":
        return ModelParams(self.layer1.copy(), self.norm.copy(),
                           self.layer2.copy(), self.version)

    def trainable(self) -> list[tuple[str, np.ndarray]]:
        """Named trainable tensors in a fixed order (running stats excluded)."""
        return [
            ("layer1.w", self.layer1.w),
            ("layer1.u", self.layer1.u),
            ("layer1.b", self.layer1.b),
            ("norm.gamma", self.norm.gamma),
            ("norm.beta", self.norm.beta),
            ("layer2.w", self.layer2.w),
            ("layer2.u", self.layer2.u),
            ("layer2.b", self.layer2.b),
        ]


def _glorot(rng: np.random.Generator, fan_in: int, fan_out: int,
            shape: tuple[int, ...]) -> np.ndarray:
    limit = np.sqrt(6.0 / (fan_in + fan_out))
    return rng.uniform(-limit, limit, shape)


def _init_layer(rng: np.random.Generator, in_dim: int, units: int) -> LstmLayerParams:
    w = np.concatenate(
        [_glorot(rng, in_dim, units, (in_dim, units)) for _ in GATE_ORDER], axis=1)
    u = np.concatenate(
        [_glorot(rng, units, units, (units, units)) for _ in GATE_ORDER], axis=1)
    b = np.zeros(4 * units)
    b[units:2 * units] = 1.0  # forget-gate bias: keep early cell memory open
    return LstmLayerParams(w=w, u=u, b=b)


def init_model(seed: int, in_dim: int = INPUT_DIM,
               units: int = HIDDEN_UNITS) -> ModelParams:
    """Seeded Glorot-uniform weights, zero biases except forget gate = 1."""
    rng = np.random.default_rng(seed)
    layer1 = _init_layer(rng, in_dim, units)
    norm = BatchNormParams(
        gamma=np.ones(units), beta=np.zeros(units),
        running_mean=np.zeros(units), running_var=np.ones(units))
    layer2 = _init_layer(rng, units, units)
    model = ModelParams(layer1=layer1, norm=norm, layer2=layer2)
    model.validate()
    return model


# ---------------------------------------------------------------------------
# Checkpoint serialization
# ---------------------------------------------------------------------------

def _gate_slices(units: int) -> dict[str, slice]:
    return {g: slice(k * units, (k + 1) * units) for k, g in enumerate(GATE_ORDER)}


def _layer_tensors(prefix: str, layer: LstmLayerParams) -> list[tuple[str, np.ndarray]]:
    sl = _gate_slices(layer.units)
    out = []
    for g in GATE_ORDER:
        out.append((f"{prefix}.w_{g}", layer.w[:, sl[g]]))
    for g in GATE_ORDER:
        out.append((f"{prefix}.u_{g}", layer.u[:, sl[g]]))
    for g in GATE_ORDER:
        out.append((f"{prefix}.b_{g}", layer.b[sl[g]]))
    return out


def save_checkpoint(path, model: ModelParams, config=None,
                    meta: dict | None = None) -> None:
    """Write the model (and optionally its training config) as JSON text."""
    model.validate()
    tensors = []
    named = (_layer_tensors("layer1", model.layer1)
             + [("norm.gamma", model.norm.gamma), ("norm.beta", model.norm.beta),
                ("norm.running_mean", model.norm.running_mean),
                ("norm.running_var", model.norm.running_var)]
             + _layer_tensors("layer2", model.layer2))
    for name, arr in named:
        tensors.append({"name": name, "shape": list(arr.shape),
                        "values": [float(v) for v in arr.ravel()]})
    doc = {
        "format": CHECKPOINT_FORMAT,
        "version": model.version,
        "config": dict(config.__dict__) if config is not None else None,
        "meta": meta or {},
        "tensors": tensors,
    }
    Path(path).write_text(json.dumps(doc) + "\n")


def load_checkpoint(path) -> tuple[ModelParams, dict | None, dict]:
    """Read a checkpoint; returns (model, config dict or None, meta dict)."""
    try:
        doc = json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise DataFormatError(f"{path}: not valid JSON: {exc}") from exc
    if doc.get("format") != CHECKPOINT_FORMAT:
        raise DataFormatError(f"{path}: missing format tag {CHECKPOINT_FORMAT!r}")
    tensors: dict[str, np.ndarray] = {}
    for entry in doc.get("tensors", []):
        arr = np.array(entry["values"], dtype=np.float64).reshape(entry["shape"])
        tensors[entry["name"]] = arr

    def fuse(prefix: str, kind: str, axis: int) -> np.ndarray:
        try:
            parts = [tensors[f"{prefix}.{kind}_{g}"] for g in GATE_ORDER]
        except KeyError as exc:
            raise DataFormatError(f"{path}: missing tensor {exc}") from exc
        return np.concatenate(parts, axis=axis)

    def layer(prefix: str) -> LstmLayerParams:
        return LstmLayerParams(w=fuse(prefix, "w", 1), u=fuse(prefix, "u", 1),
                               b=fuse(prefix, "b", 0))

    try:
        norm = BatchNormParams(
            gamma=tensors["norm.gamma"], beta=tensors["norm.beta"],
            running_mean=tensors["norm.running_mean"],
            running_var=tensors["norm.running_var"])
    except KeyError as exc:
        raise DataFormatError(f"{path}: missing tensor {exc}") from exc
    model = ModelParams(layer1=layer("layer1"), norm=norm, layer2=layer("layer2"),
                        version=str(doc.get("version", "")))
    model.validate()
    return model, doc.get("config"), doc.get("meta") or {}
