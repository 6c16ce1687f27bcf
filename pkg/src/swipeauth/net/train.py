"""Siamese pair training over a user-keyed swipe dataset.

Each batch holds an exact half/half mix of genuine and impostor pairs,
sampled uniformly over the respective pair populations. Both branches run
through one stacked forward pass so they share weights and batch
statistics. Everything is driven by a single seeded generator, so a seed
fully determines the resulting parameters.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import ConfigError
from ..touchcore import build_feature_matrix, normalize_sequence
from .model import backward_batch, contrastive_loss_grads, forward_batch
from .optimizer import AdamState, adam_step
from .params import HIDDEN_UNITS, INPUT_DIM, ModelParams, init_model


@dataclass
class TrainConfig:
    """Optimizer, loss, schedule, and regularization settings."""

    learning_rate: float = 0.05
    beta1: float = 0.9
    beta2: float = 0.999
    epsilon: float = 1e-8
    margin: float = 1.5
    epochs: int = 30
    batches_per_epoch: int = 100
    batch_size: int = 512          # pairs per batch
    dropout: float = 0.5
    recurrent_dropout: float = 0.2
    seed: int = 0

    def validate(self) -> None:
        for name in ("learning_rate", "beta1", "beta2", "dropout",
                     "recurrent_dropout"):
            v = getattr(self, name)
            if not 0.0 <= v < 1.0:
                raise ConfigError(f"{name}={v} outside [0, 1)")
        if self.learning_rate <= 0.0:
            raise ConfigError("learning_rate must be positive")
        if self.epsilon <= 0.0:
            raise ConfigError("epsilon must be positive")
        if self.margin <= 0.0:
            raise ConfigError("margin must be positive")
        for name in ("epochs", "batches_per_epoch", "batch_size"):
            if getattr(self, name) < 1:
                raise ConfigError(f"{name} must be positive")
        if self.batch_size % 2 != 0:
            raise ConfigError("batch_size must be even to balance pair labels")


@dataclass
class TrainResult:
    """Final parameters plus the per-batch loss trace."""

    params: ModelParams
    batch_losses: list[float]
    config: TrainConfig

    def epoch_mean_losses(self) -> list[float]:
        per = self.config.batches_per_epoch
        return [float(np.mean(self.batch_losses[i:i + per]))
                for i in range(0, len(self.batch_losses), per)]


@dataclass
class _PairPool:
    features: np.ndarray            # (n, T, channels)
    owner: np.ndarray               # (n,) user index per swipe
    user_rows: list[np.ndarray]     # swipe row indices per user
    pair_weight_cum: np.ndarray     # cumulative genuine-pair counts per user


def build_pair_pool(dataset) -> _PairPool:
    """Featurize every swipe once and index it by owner."""
    feats, owner, user_rows = [], [], []
    uids = dataset.user_ids()
    for ui, uid in enumerate(uids):
        rows = []
        for _, seq in dataset.user_swipes(uid):
            fm = build_feature_matrix(normalize_sequence(seq))
            rows.append(len(feats))
            feats.append(fm.values.T)
            owner.append(ui)
        user_rows.append(np.array(rows, dtype=np.intp))

    pair_counts = np.array([len(r) * (len(r) - 1) // 2 for r in user_rows],
                           dtype=np.float64)
    eligible = int(np.sum(pair_counts > 0))
    if len(uids) < 2 or eligible < 2:
        raise ConfigError(
            f"training needs >= 2 users with >= 2 swipes each, got "
            f"{eligible} of {len(uids)}")
    return _PairPool(
        features=np.stack(feats),
        owner=np.array(owner, dtype=np.intp),
        user_rows=user_rows,
        pair_weight_cum=np.cumsum(pair_counts),
    )


def sample_pair_batch(pool: _PairPool, rng: np.random.Generator, n_pairs: int):
    """Exactly n_pairs/2 genuine then n_pairs/2 impostor index pairs.

    Genuine pairs are uniform over all same-user swipe pairs; impostor
    pairs are uniform over all cross-user swipe pairs.
    """
    half = n_pairs // 2
    left = np.empty(n_pairs, dtype=np.intp)
    right = np.empty(n_pairs, dtype=np.intp)
    genuine = np.zeros(n_pairs, dtype=bool)
    genuine[:half] = True

    total_w = pool.pair_weight_cum[-1]
    for k in range(half):
        u = int(np.searchsorted(pool.pair_weight_cum, rng.random() * total_w,
                                side="right"))
        i, j = rng.choice(len(pool.user_rows[u]), size=2, replace=False)
        left[k], right[k] = pool.user_rows[u][i], pool.user_rows[u][j]

    n = pool.features.shape[0]
    for k in range(half, n_pairs):
        a = int(rng.integers(n))
        b = int(rng.integers(n))
        while pool.owner[b] == pool.owner[a]:
            b = int(rng.integers(n))
        left[k], right[k] = a, b
    return left, right, genuine


def train(dataset, config: TrainConfig) -> TrainResult:
    """Train the Siamese embedding network; deterministic given the seed."""
    config.validate()
    pool = build_pair_pool(dataset)
    model = init_model(config.seed, in_dim=INPUT_DIM, units=HIDDEN_UNITS)
    state = AdamState()
    rng = np.random.default_rng(config.seed)

    half = config.batch_size // 2
    batch_losses: list[float] = []
    step = 0
    for _ in range(config.epochs):
        for _ in range(config.batches_per_epoch):
            left, right, genuine = sample_pair_batch(pool, rng, config.batch_size)
            x = np.concatenate([pool.features[left], pool.features[right]])
            emb, cache = forward_batch(
                model, x, train=True, rng=rng,
                dropout=config.dropout,
                recurrent_dropout=config.recurrent_dropout,
                running_update="assign" if step == 0 else "ema",
                collect=True)
            e1, e2 = emb[:config.batch_size], emb[config.batch_size:]
            losses, de1, de2 = contrastive_loss_grads(e1, e2, genuine,
                                                      config.margin)
            demb = np.concatenate([de1, de2]) / config.batch_size
            grads = backward_batch(model, cache, demb)
            adam_step(state, model.trainable(), grads, config)
            batch_losses.append(float(losses.mean()))
            step += 1

    model.validate()
    return TrainResult(params=model, batch_losses=batch_losses, config=config)
