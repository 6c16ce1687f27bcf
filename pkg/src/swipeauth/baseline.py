"""Global-feature SVM baseline: 29 features per swipe, RBF kernel, SMO.

The feature table is documented in docs/baseline_features.md. One binary
SVM is trained per (user, gallery size): the gallery swipes are the
genuine class, swipes of training-split users the impostor class. Scores
are negated decision values so lower means more genuine, matching the
distance convention of the verification module.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, ConvergenceError
from .touchcore import TouchSequence, derivatives, normalize_sequence

FEATURE_NAMES = (
    "mean_vx", "mean_vy", "mean_speed",
    "max_vx", "max_vy", "max_speed",
    "min_vx", "min_vy",
    "mean_ax", "mean_ay", "mean_amag",
    "max_ax", "max_ay", "max_amag",
    "min_ax", "min_ay",
    "duration",
    "path_length",
    "endpoint_distance",
    "straightness",
    "start_x", "start_y", "end_x", "end_y",
    "mean_pressure", "max_pressure",
    "mean_angle", "std_angle", "net_angle",
)
N_FEATURES = len(FEATURE_NAMES)

DEFAULT_C = 10.0
DEFAULT_GAMMA = 1.0 / N_FEATURES


def _wrap_angle(a: np.ndarray) -> np.ndarray:
    """Wrap into (-pi, pi]."""
    return np.pi - np.mod(np.pi - a, 2.0 * np.pi)


def global_features(seq: TouchSequence) -> np.ndarray:
    """The 29-value summary of one normalized swipe (see FEATURE_NAMES)."""
    seq.validate()
    vx, vy, ax, ay, _, _ = derivatives(seq)
    speed = np.hypot(vx, vy)
    amag = np.hypot(ax, ay)

    dx = np.diff(seq.x)
    dy = np.diff(seq.y)
    step_len = np.hypot(dx, dy)
    path_length = float(step_len.sum())
    endpoint_distance = float(np.hypot(seq.x[-1] - seq.x[0], seq.y[-1] - seq.y[0]))
    straightness = endpoint_distance / path_length if path_length > 0 else 1.0

    angles = np.arctan2(dy, dx)
    turns = _wrap_angle(np.diff(angles))

    return np.array([
        vx.mean(), vy.mean(), speed.mean(),
        vx.max(), vy.max(), speed.max(),
        vx.min(), vy.min(),
        ax.mean(), ay.mean(), amag.mean(),
        ax.max(), ay.max(), amag.max(),
        ax.min(), ay.min(),
        seq.t[-1] - seq.t[0],
        path_length,
        endpoint_distance,
        straightness,
        seq.x[0], seq.y[0], seq.x[-1], seq.y[-1],
        seq.p.mean(), seq.p.max(),
        angles.mean(), angles.std(), turns.sum(),
    ], dtype=np.float64)


# ---------------------------------------------------------------------------
# Gaussian kernel
# ---------------------------------------------------------------------------

def rbf_kernel(a: np.ndarray, b: np.ndarray, gamma: float) -> float:
    """exp(-gamma * ||a - b||^2)."""
    if a.shape != b.shape:
        raise ConfigError(f"kernel arguments differ in shape: {a.shape} vs {b.shape}")
    if gamma < 0:
        raise ConfigError(f"gamma must be >= 0, got {gamma}")
    d = a - b
    return float(np.exp(-gamma * np.dot(d, d)))


def rbf_kernel_matrix(A: np.ndarray, B: np.ndarray, gamma: float) -> np.ndarray:
    """Pairwise kernel values between the rows of A and B."""
    sq = (np.sum(A * A, axis=1)[:, None] + np.sum(B * B, axis=1)[None, :]
          - 2.0 * A @ B.T)
    return np.exp(-gamma * np.maximum(sq, 0.0))


# ---------------------------------------------------------------------------
# Sequential minimal optimization for the soft-margin dual
# ---------------------------------------------------------------------------

def kkt_violations(K: np.ndarray, y: np.ndarray, alpha: np.ndarray, b: float,
                   C: float) -> np.ndarray:
    """Per-point violation of the optimality conditions, in margin units."""
    yf = y * (K @ (alpha * y) + b)
    at_zero = alpha <= 1e-9
    at_c = alpha >= C - 1e-9
    interior = ~at_zero & ~at_c
    viol = np.zeros_like(yf)
    viol[at_zero] = np.maximum(0.0, 1.0 - yf[at_zero])
    viol[interior] = np.abs(1.0 - yf[interior])
    viol[at_c] = np.maximum(0.0, yf[at_c] - 1.0)
    return viol


def smo_solve(K: np.ndarray, y: np.ndarray, C: float, tol: float = 1e-3,
              max_iter: int | None = None) -> tuple[np.ndarray, float, float]:
    """Maximal-violating-pair SMO on a precomputed kernel matrix.

    Iterates two-variable analytic updates until the duality gap implies
    every KKT violation is below tol. Returns (alpha, bias, residual).
    """
    n = y.shape[0]
    if max_iter is None:
        max_iter = max(20000, 400 * n)
    alpha = np.zeros(n)
    g = np.zeros(n)  # sum_j alpha_j y_j K_ij
    slack = 1e-12 * max(1.0, C)

    pos, neg = y > 0, y < 0

    def bounds():
        movable_up = (pos & (alpha < C - slack)) | (neg & (alpha > slack))
        movable_low = (pos & (alpha > slack)) | (neg & (alpha < C - slack))
        return movable_up, movable_low

    gap = np.inf
    for _ in range(max_iter):
        F = y - g
        up, low = bounds()
        if not up.any() or not low.any():
            gap = 0.0
            break
        i = int(np.argmax(np.where(up, F, -np.inf)))
        j = int(np.argmin(np.where(low, F, np.inf)))
        gap = F[i] - F[j]
        # stop at half the allowed violation so convergence has headroom
        if gap < tol:
            break

        # Move lambda along alpha_i*y_i += lam, alpha_j*y_j -= lam.
        lam_hi = min(C - alpha[i] if y[i] > 0 else alpha[i],
                     alpha[j] if y[j] > 0 else C - alpha[j])
        eta = K[i, i] + K[j, j] - 2.0 * K[i, j]
        lam = lam_hi if eta <= 1e-12 else min(lam_hi, gap / eta)
        if lam <= 0.0:
            break
        alpha[i] += y[i] * lam
        alpha[j] -= y[j] * lam
        g += lam * (K[:, i] - K[:, j])

    F = y - g
    up, low = bounds()
    hi = float(np.max(F[up])) if up.any() else None
    lo = float(np.min(F[low])) if low.any() else None
    if hi is not None and lo is not None:
        b = (hi + lo) / 2.0
        residual = max(0.0, (hi - lo) / 2.0)
    else:
        b = hi if hi is not None else (lo if lo is not None else 0.0)
        residual = 0.0
    if residual >= tol:
        raise ConvergenceError(
            f"SMO stopped after {max_iter} iterations with residual {residual:.6g}",
            residual=residual)
    return alpha, float(b), residual


@dataclass
class SvmModel:
    """Trained per-user classifier; support vectors are standardized rows."""

    support_vectors: np.ndarray  # (m, N_FEATURES)
    dual_coef: np.ndarray        # (m,) alpha_i * y_i
    bias: float
    gamma: float
    C: float
    feat_mean: np.ndarray
    feat_std: np.ndarray
    kkt_residual: float = 0.0

    def validate(self) -> None:
        if np.any(np.abs(self.dual_coef) > self.C + 1e-9):
            raise ConfigError("dual coefficient exceeds the box constraint")
        if abs(float(self.dual_coef.sum())) > 1e-6:
            raise ConfigError("dual coefficients do not sum to zero")

    def decision(self, probe: np.ndarray) -> float:
        z = (probe - self.feat_mean) / self.feat_std
        k = rbf_kernel_matrix(self.support_vectors, z[None, :], self.gamma)[:, 0]
        return float(self.dual_coef @ k + self.bias)


def train_user_svm(genuine: np.ndarray, impostors: np.ndarray,
                   C: float = DEFAULT_C, gamma: float = DEFAULT_GAMMA,
                   tol: float = 1e-3) -> SvmModel:
    """Fit the soft-margin dual on standardized features via SMO.

    genuine rows are labeled +1, impostor rows -1; standardization
    statistics come from the combined training set.
    """
    genuine = np.atleast_2d(np.asarray(genuine, dtype=np.float64))
    impostors = np.atleast_2d(np.asarray(impostors, dtype=np.float64))
    if genuine.shape[0] < 1 or impostors.shape[0] < 1:
        raise ConfigError("need at least one genuine and one impostor sample")

    X = np.concatenate([genuine, impostors])
    y = np.concatenate([np.ones(genuine.shape[0]), -np.ones(impostors.shape[0])])
    mean = X.mean(axis=0)
    std = X.std(axis=0)
    std[std < 1e-12] = 1.0
    Z = (X - mean) / std

    K = rbf_kernel_matrix(Z, Z, gamma)
    alpha, b, residual = smo_solve(K, y, C, tol=tol)

    sv = alpha > 1e-9
    model = SvmModel(
        support_vectors=Z[sv], dual_coef=(alpha * y)[sv], bias=b,
        gamma=gamma, C=C, feat_mean=mean, feat_std=std,
        kkt_residual=residual)
    model.validate()
    return model


def svm_score(model: SvmModel, probe: np.ndarray) -> float:
    """Negated decision value, so lower means more genuine."""
    return -model.decision(probe)


# ---------------------------------------------------------------------------
# Protocol adapter
# ---------------------------------------------------------------------------

class SvmBaselineScorer:
    """Per-(user, G) SVM scoring for evaluate_protocol.

    The impostor pool comes from training-split users; any pool rows owned
    by the user under evaluation are excluded, which makes within-train
    grid search safe.
    """

    def __init__(self, impostor_dataset, C: float = DEFAULT_C,
                 gamma: float = DEFAULT_GAMMA):
        self.C = C
        self.gamma = gamma
        self._pool_owner: list[str] = []
        rows = []
        for uid, _, seq in impostor_dataset.all_swipes():
            rows.append(global_features(normalize_sequence(seq)))
            self._pool_owner.append(uid)
        if not rows:
            raise ConfigError("impostor pool is empty")
        self._pool = np.stack(rows)
        self._cache: dict[str, np.ndarray] = {}

    def prepare(self, items) -> None:
        for pid, seq in items:
            self._cache[pid] = global_features(normalize_sequence(seq))

    def _features(self, pid: str, seq) -> np.ndarray:
        if pid not in self._cache:
            self._cache[pid] = global_features(normalize_sequence(seq))
        return self._cache[pid]

    def fit_user(self, user_id: str, gallery_items):
        gallery = np.stack([self._features(pid, seq) for pid, seq in gallery_items])
        keep = np.array([o != user_id for o in self._pool_owner])
        model = train_user_svm(gallery, self._pool[keep], C=self.C,
                               gamma=self.gamma)

        def score_probe(pid: str, seq) -> float:
            return svm_score(model, self._features(pid, seq))

        return score_probe
