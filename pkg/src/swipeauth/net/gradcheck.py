"""Finite-difference verification of the analytic backward pass.

Runs the pair loss through the train-mode forward (batch statistics, no
dropout) and compares every analytic parameter gradient against central
differences. Intended for tiny configurations where the full sweep is
cheap.
"""

from __future__ import annotations

import numpy as np

from .model import backward_batch, contrastive_loss, contrastive_loss_grads, forward_batch
from .params import ModelParams


def _pair_loss(model: ModelParams, x1: np.ndarray, x2: np.ndarray,
               genuine: bool, margin: float, collect: bool = False):
    x = np.stack([x1, x2])
    emb, cache = forward_batch(model, x, train=True, collect=collect)
    loss = contrastive_loss(emb[0], emb[1], genuine, margin)
    return loss, emb, cache


def analytic_pair_grads(model: ModelParams, x1: np.ndarray, x2: np.ndarray,
                        genuine: bool, margin: float) -> dict[str, np.ndarray]:
    """Backpropagated gradients of the single-pair loss."""
    _, emb, cache = _pair_loss(model, x1, x2, genuine, margin, collect=True)
    flags = np.array([genuine])
    _, de1, de2 = contrastive_loss_grads(emb[:1], emb[1:], flags, margin)
    demb = np.concatenate([de1, de2])
    return backward_batch(model, cache, demb)


def gradient_check(model: ModelParams, x1: np.ndarray, x2: np.ndarray,
                   genuine: bool, margin: float, step: float = 1e-5,
                   floor: float = 1e-3):
    """Max relative error between analytic and numeric gradients.

    The relative error divides by max(|analytic|, |numeric|, floor); the
    floor keeps near-zero gradients from amplifying finite-difference
    noise. Returns (max_rel_error, per_tensor_errors).
    """
    analytic = analytic_pair_grads(model, x1, x2, genuine, margin)
    per_tensor: dict[str, float] = {}
    worst = 0.0
    for name, arr in model.trainable():
        flat = arr.ravel()
        a_flat = analytic[name].ravel()
        tensor_worst = 0.0
        for idx in range(flat.size):
            orig = flat[idx]
            flat[idx] = orig + step
            lp, _, _ = _pair_loss(model, x1, x2, genuine, margin)
            flat[idx] = orig - step
            lm, _, _ = _pair_loss(model, x1, x2, genuine, margin)
            flat[idx] = orig
            numeric = (lp - lm) / (2.0 * step)
            rel = abs(a_flat[idx] - numeric) / max(abs(a_flat[idx]),
                                                   abs(numeric), floor)
            tensor_worst = max(tensor_worst, rel)
        per_tensor[name] = tensor_worst
        worst = max(worst, tensor_worst)
    return worst, per_tensor
