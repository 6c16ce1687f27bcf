"""Forward and backward passes of the two-layer embedding network.

Layer1 emits its full hidden sequence; batch normalization and dropout sit
between the layers; the final hidden state of layer2 is the embedding.
Both Siamese branches share these weights, so the trainer stacks a pair
batch into one forward call and splits the embedding rows afterwards.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import ShapeError
from ..touchcore import FeatureMatrix
from .layers import (
    LstmCache,
    batchnorm_backward,
    batchnorm_forward_infer,
    batchnorm_forward_train,
    dropout_mask,
    ensure_finite,
    lstm_forward,
    lstm_backward,
    recurrent_masks,
    sigmoid,
)
from .params import BN_MOMENTUM, LstmLayerParams, ModelParams


def recurrent_step(layer: LstmLayerParams, x_t: np.ndarray, h_prev: np.ndarray,
                   c_prev: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """One gated-recurrence update for a single timestep.

    i, f, o = sigmoid(gates); g = tanh; c' = f*c + i*g; h' = o*tanh(c').
    """
    x_t = np.atleast_2d(np.asarray(x_t, dtype=np.float64))
    h_prev = np.atleast_2d(np.asarray(h_prev, dtype=np.float64))
    c_prev = np.atleast_2d(np.asarray(c_prev, dtype=np.float64))
    H = layer.units
    if x_t.shape[1] != layer.in_dim:
        raise ShapeError(f"input width {x_t.shape[1]} != layer in_dim {layer.in_dim}")
    if h_prev.shape[1] != H or c_prev.shape[1] != H:
        raise ShapeError("state width does not match layer units")
    z = x_t @ layer.w + h_prev @ layer.u + layer.b
    i = sigmoid(z[:, :H])
    f = sigmoid(z[:, H:2 * H])
    g = np.tanh(z[:, 2 * H:3 * H])
    o = sigmoid(z[:, 3 * H:])
    c = f * c_prev + i * g
    h = o * np.tanh(c)
    return np.squeeze(h), np.squeeze(c)


@dataclass
class ForwardCache:
    """Intermediates of one train-mode forward pass."""

    lstm1: LstmCache
    bn: tuple
    drop: np.ndarray | None
    lstm2: LstmCache


def forward_batch(model: ModelParams, x: np.ndarray, train: bool = False,
                  rng: np.random.Generator | None = None,
                  dropout: float = 0.0, recurrent_dropout: float = 0.0,
                  running_update: str | None = None,
                  collect: bool = False):
    """Embed a batch of (B, T, channels) inputs.

    train=True normalizes with batch statistics and applies dropout (when a
    rate and rng are given); train=False uses running statistics and is
    deterministic. running_update: None leaves the running statistics
    untouched, "assign" overwrites them with the batch statistics, "ema"
    blends them in with the configured momentum.

    Returns (embeddings (B, units), ForwardCache | None).
    """
    B = x.shape[0]
    use_drop = train and rng is not None
    rec1 = recurrent_masks(rng, B, model.layer1.units, recurrent_dropout) \
        if use_drop else None
    h1, cache1 = lstm_forward(model.layer1, x, rec1, collect=collect)
    ensure_finite(h1, "layer1")

    if train:
        bn_out, bn_cache, mu, var = batchnorm_forward_train(model.norm, h1)
        if running_update == "assign":
            model.norm.running_mean[:] = mu
            model.norm.running_var[:] = var
        elif running_update == "ema":
            model.norm.running_mean[:] = (BN_MOMENTUM * model.norm.running_mean
                                          + (1.0 - BN_MOMENTUM) * mu)
            model.norm.running_var[:] = (BN_MOMENTUM * model.norm.running_var
                                         + (1.0 - BN_MOMENTUM) * var)
    else:
        bn_out = batchnorm_forward_infer(model.norm, h1)
        bn_cache = None
    ensure_finite(bn_out, "norm")

    drop = dropout_mask(rng, bn_out.shape, dropout) if use_drop else None
    x2 = bn_out * drop if drop is not None else bn_out

    rec2 = recurrent_masks(rng, B, model.layer2.units, recurrent_dropout) \
        if use_drop else None
    h2, cache2 = lstm_forward(model.layer2, x2, rec2, collect=collect)
    ensure_finite(h2, "layer2")

    emb = h2[:, -1].copy()
    cache = ForwardCache(cache1, bn_cache, drop, cache2) if collect else None
    return emb, cache


def backward_batch(model: ModelParams, cache: ForwardCache,
                   demb: np.ndarray) -> dict[str, np.ndarray]:
    """Gradients of a scalar loss wrt every trainable tensor.

    demb is the loss gradient wrt the embeddings (B, units); the cache must
    come from a train-mode forward (batch-statistic normalization).
    """
    B, T, _ = cache.lstm2.x.shape
    H2 = model.layer2.units
    dhs2 = np.zeros((B, T, H2))
    dhs2[:, -1] = demb
    dx2, dw2, du2, db2 = lstm_backward(model.layer2, cache.lstm2, dhs2)

    if cache.drop is not None:
        dx2 = dx2 * cache.drop
    dh1, dgamma, dbeta = batchnorm_backward(cache.bn, dx2)

    _, dw1, du1, db1 = lstm_backward(model.layer1, cache.lstm1, dh1)
    return {
        "layer1.w": dw1, "layer1.u": du1, "layer1.b": db1,
        "norm.gamma": dgamma, "norm.beta": dbeta,
        "layer2.w": dw2, "layer2.u": du2, "layer2.b": db2,
    }


def _as_input(features) -> np.ndarray:
    values = features.values if isinstance(features, FeatureMatrix) else np.asarray(features)
    if values.ndim != 2:
        raise ShapeError(f"expected a 2-D feature matrix, got shape {values.shape}")
    return values.T  # (timesteps, channels)


def embed(model: ModelParams, features, mode: str = "infer") -> np.ndarray:
    """Embedding vector for one swipe's feature matrix.

    Infer mode is deterministic and leaves the model untouched; train mode
    normalizes over this single sequence's timesteps (useful for checks,
    the trainer calls the batched path instead).
    """
    return embed_batch(model, [features], mode=mode)[0]


def embed_batch(model: ModelParams, features_list, mode: str = "infer") -> np.ndarray:
    """Embeddings for many swipes in one batched forward pass."""
    if mode not in ("infer", "train"):
        raise ValueError(f"unknown mode {mode!r}")
    x = np.stack([_as_input(f) for f in features_list])
    emb, _ = forward_batch(model, x, train=(mode == "train"))
    ensure_finite(emb, "embedding")
    return emb


# ---------------------------------------------------------------------------
# Pair loss
# ---------------------------------------------------------------------------

def contrastive_loss(e1: np.ndarray, e2: np.ndarray, genuine: bool,
                     margin: float) -> float:
    """Squared distance for genuine pairs, squared hinge for impostors."""
    d = float(np.linalg.norm(np.asarray(e1) - np.asarray(e2)))
    if genuine:
        return d * d
    gap = max(0.0, margin - d)
    return gap * gap


def contrastive_loss_grads(E1: np.ndarray, E2: np.ndarray, genuine: np.ndarray,
                           margin: float):
    """Vectorized pair losses and their embedding gradients.

    Returns (losses (P,), dE1 (P, H), dE2 (P, H)). The impostor gradient at
    zero distance uses the zero subgradient.
    """
    diff = E1 - E2
    d = np.linalg.norm(diff, axis=1)
    gap = np.maximum(0.0, margin - d)
    losses = np.where(genuine, d * d, gap * gap)

    coef = np.empty_like(d)
    coef[genuine] = 2.0
    imp = ~genuine
    safe_d = np.where(d > 0.0, d, 1.0)
    coef[imp] = np.where(d[imp] > 0.0, -2.0 * gap[imp] / safe_d[imp], 0.0)
    dE1 = coef[:, None] * diff
    return losses, dE1, -dE1
