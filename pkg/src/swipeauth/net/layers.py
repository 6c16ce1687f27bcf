"""Numeric kernels: gated recurrence, batch normalization, dropout.

Everything is float64 and batched over full sequences. Forward passes
return the caches their backward passes need; backward passes return
gradients in the same fused layout as the parameters.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import NumericError
from .params import BN_EPS, BatchNormParams, LstmLayerParams


def sigmoid(x: np.ndarray) -> np.ndarray:
    """Numerically stable logistic function."""
    out = np.empty_like(x)
    pos = x >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-x[pos]))
    ex = np.exp(x[~pos])
    out[~pos] = ex / (1.0 + ex)
    return out


def ensure_finite(arr: np.ndarray, stage: str) -> None:
    if not np.all(np.isfinite(arr)):
        raise NumericError(f"non-finite values produced by {stage}", stage=stage)


@dataclass
class LstmCache:
    """Per-timestep intermediates needed by backpropagation through time."""

    x: np.ndarray          # (B, T, D) inputs
    gates: np.ndarray      # (T, B, 4H) post-activation [i, f, g, o]
    c: np.ndarray          # (T, B, H) cell state after each step
    tanh_c: np.ndarray     # (T, B, H)
    h_prev: np.ndarray     # (T, B, H) hidden state entering each step
    c_prev: np.ndarray     # (T, B, H)
    rec_masks: np.ndarray | None  # (B, 4, H) variational recurrent dropout


def lstm_forward(layer: LstmLayerParams, x: np.ndarray,
                 rec_masks: np.ndarray | None = None,
                 collect: bool = False) -> tuple[np.ndarray, LstmCache | None]:
    """Run the full sequence; returns the hidden sequence (B, T, H).

    rec_masks, when given, multiply the previous hidden state per gate
    (one mask per sequence, fixed across timesteps, inverted scaling).
    """
    B, T, D = x.shape
    H = layer.units
    xw = x.reshape(B * T, D) @ layer.w
    xw = xw.reshape(B, T, 4 * H) + layer.b

    h = np.zeros((B, H))
    c = np.zeros((B, H))
    hs = np.empty((B, T, H))
    cache = None
    if collect:
        cache = LstmCache(
            x=x,
            gates=np.empty((T, B, 4 * H)),
            c=np.empty((T, B, H)),
            tanh_c=np.empty((T, B, H)),
            h_prev=np.empty((T, B, H)),
            c_prev=np.empty((T, B, H)),
            rec_masks=rec_masks,
        )

    for t in range(T):
        z = xw[:, t].copy()
        if rec_masks is None:
            z += h @ layer.u
        else:
            for k in range(4):
                sl = slice(k * H, (k + 1) * H)
                z[:, sl] += (h * rec_masks[:, k]) @ layer.u[:, sl]
        i = sigmoid(z[:, :H])
        f = sigmoid(z[:, H:2 * H])
        g = np.tanh(z[:, 2 * H:3 * H])
        o = sigmoid(z[:, 3 * H:])
        c_new = f * c + i * g
        tc = np.tanh(c_new)
        h_new = o * tc
        if collect:
            cache.gates[t] = np.concatenate([i, f, g, o], axis=1)
            cache.c[t] = c_new
            cache.tanh_c[t] = tc
            cache.h_prev[t] = h
            cache.c_prev[t] = c
        h, c = h_new, c_new
        hs[:, t] = h
    return hs, cache


def lstm_backward(layer: LstmLayerParams, cache: LstmCache,
                  dhs: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
    """BPTT given gradients wrt every emitted hidden state.

    Returns (dx, dw, du, db) with dx shaped like cache.x.
    """
    B, T, D = cache.x.shape
    H = layer.units
    masks = cache.rec_masks

    dz_all = np.empty((T, B, 4 * H))
    du = np.zeros_like(layer.u)
    dh_next = np.zeros((B, H))
    dc_next = np.zeros((B, H))

    for t in reversed(range(T)):
        gates = cache.gates[t]
        i, f = gates[:, :H], gates[:, H:2 * H]
        g, o = gates[:, 2 * H:3 * H], gates[:, 3 * H:]
        tc = cache.tanh_c[t]

        dh = dhs[:, t] + dh_next
        do = dh * tc
        dc = dh * o * (1.0 - tc * tc) + dc_next
        df = dc * cache.c_prev[t]
        di = dc * g
        dg = dc * i
        dc_next = dc * f

        dz = np.concatenate([
            di * i * (1.0 - i),
            df * f * (1.0 - f),
            dg * (1.0 - g * g),
            do * o * (1.0 - o),
        ], axis=1)
        dz_all[t] = dz

        if masks is None:
            du += cache.h_prev[t].T @ dz
            dh_next = dz @ layer.u.T
        else:
            dh_next = np.zeros((B, H))
            for k in range(4):
                sl = slice(k * H, (k + 1) * H)
                hp = cache.h_prev[t] * masks[:, k]
                du[:, sl] += hp.T @ dz[:, sl]
                dh_next += (dz[:, sl] @ layer.u[:, sl].T) * masks[:, k]

    dz_flat = dz_all.transpose(1, 0, 2).reshape(B * T, 4 * H)
    dw = cache.x.reshape(B * T, D).T @ dz_flat
    db = dz_flat.sum(axis=0)
    dx = (dz_flat @ layer.w.T).reshape(B, T, D)
    return dx, dw, du, db


# ---------------------------------------------------------------------------
# Batch normalization (per feature over batch and timesteps)
# ---------------------------------------------------------------------------

def batchnorm_forward_train(norm: BatchNormParams, x: np.ndarray):
    """Normalize with batch statistics; returns (out, cache, mean, var)."""
    B, T, H = x.shape
    flat = x.reshape(B * T, H)
    mu = flat.mean(axis=0)
    var = flat.var(axis=0)
    inv = 1.0 / np.sqrt(var + BN_EPS)
    xhat = (flat - mu) * inv
    out = (norm.gamma * xhat + norm.beta).reshape(B, T, H)
    return out, (xhat, inv, norm.gamma.copy()), mu, var


def batchnorm_forward_infer(norm: BatchNormParams, x: np.ndarray) -> np.ndarray:
    """Normalize with frozen running statistics (deterministic).

    Kept as a literal division so the output equals
    gamma * (x - mean) / sqrt(var + eps) + beta to the last bit.
    """
    return (norm.gamma * (x - norm.running_mean)
            / np.sqrt(norm.running_var + BN_EPS) + norm.beta)


def batchnorm_backward(cache, dout: np.ndarray):
    """Backward through train-mode normalization (batch statistics included)."""
    xhat, inv, gamma = cache
    B, T, H = dout.shape
    n = B * T
    dflat = dout.reshape(n, H)
    dgamma = (dflat * xhat).sum(axis=0)
    dbeta = dflat.sum(axis=0)
    dxhat = dflat * gamma
    dx = (inv / n) * (n * dxhat - dxhat.sum(axis=0) - xhat * (dxhat * xhat).sum(axis=0))
    return dx.reshape(B, T, H), dgamma, dbeta


# ---------------------------------------------------------------------------
# Dropout masks (inverted scaling: inference needs no rescale)
# ---------------------------------------------------------------------------

def dropout_mask(rng: np.random.Generator, shape, rate: float) -> np.ndarray | None:
    if rate <= 0.0:
        return None
    return (rng.random(shape) >= rate) / (1.0 - rate)


def recurrent_masks(rng: np.random.Generator, batch: int, units: int,
                    rate: float) -> np.ndarray | None:
    """One mask per sequence per gate, fixed across timesteps."""
    if rate <= 0.0:
        return None
    return (rng.random((batch, 4, units)) >= rate) / (1.0 - rate)
