"""Enrollment, gallery scoring, EER, and the open-set evaluation protocol.

Scores are distances: lower means more genuine. A gallery's score for a
probe is the mean Euclidean distance between the probe embedding and each
enrolled embedding. The protocol enrolls each test user's first G swipes,
probes with the user's remaining swipes (genuine) and every other test
user's swipes (impostor), and reports the equal error rate per G.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import EnrollmentError, ProtocolError
from .net.model import embed_batch
from .touchcore import build_feature_matrix, normalize_sequence

log = logging.getLogger(__name__)


@dataclass
class Gallery:
    """A user's enrolled embeddings."""

    user_id: str
    embeddings: list[np.ndarray]

    def validate(self) -> None:
        if not self.embeddings:
            raise EnrollmentError(f"gallery for {self.user_id} is empty")
        width = self.embeddings[0].shape[0]
        for e in self.embeddings:
            if e.shape != (width,) or not np.all(np.isfinite(e)):
                raise EnrollmentError("gallery embedding malformed")


@dataclass
class ScoreSet:
    """Genuine and impostor distance scores."""

    genuine: list[float] = field(default_factory=list)
    impostor: list[float] = field(default_factory=list)


def enroll(user_id: str, swipes, model) -> Gallery:
    """Embed each feature matrix in infer mode; order preserved."""
    swipes = list(swipes)
    if not swipes:
        raise EnrollmentError(f"no swipes supplied for {user_id}")
    emb = embed_batch(model, swipes, mode="infer")
    gallery = Gallery(user_id=user_id, embeddings=[e.copy() for e in emb])
    gallery.validate()
    return gallery


def score(gallery: Gallery, probe: np.ndarray) -> float:
    """Mean Euclidean distance between the probe and the gallery embeddings.

    Summed with fsum so the result is independent of gallery order.
    """
    gallery.validate()
    stack = np.stack(gallery.embeddings)
    dists = np.linalg.norm(stack - probe, axis=1)
    return math.fsum(dists) / dists.size


@dataclass
class VerifyDecision:
    accept: bool
    score: float
    threshold: float


def verify(gallery: Gallery, probe: np.ndarray, threshold: float) -> VerifyDecision:
    """Accept iff score <= threshold (boundary inclusive)."""
    if threshold < 0:
        raise ProtocolError(f"threshold must be >= 0, got {threshold}")
    s = score(gallery, probe)
    return VerifyDecision(accept=s <= threshold, score=s, threshold=threshold)


# ---------------------------------------------------------------------------
# Equal error rate
# ---------------------------------------------------------------------------

def eer_candidates(scores: ScoreSet) -> np.ndarray:
    """Midpoints between adjacent sorted unique scores, plus one candidate
    below the minimum and one above the maximum."""
    uniq = np.unique(np.concatenate([scores.genuine, scores.impostor]))
    mids = (uniq[:-1] + uniq[1:]) / 2.0
    return np.concatenate([[uniq[0] - 1.0], mids, [uniq[-1] + 1.0]])


def compute_eer(scores: ScoreSet) -> tuple[float, float]:
    """EER and its threshold under the accept-iff-score<=threshold rule.

    FAR(t) is the fraction of impostor scores <= t, FRR(t) the fraction of
    genuine scores > t. The sweep picks the candidate threshold minimizing
    |FAR - FRR| (smallest threshold on ties) and reports (FAR + FRR) / 2
    there. The result lands in [0, 0.5] when lower scores really are more
    genuine; with reversed score polarity it approaches 1 - EER and is
    deliberately not clamped, so a polarity bug stays visible.
    """
    if not scores.genuine or not scores.impostor:
        raise ProtocolError("need both genuine and impostor scores")
    gen = np.sort(np.asarray(scores.genuine, dtype=np.float64))
    imp = np.sort(np.asarray(scores.impostor, dtype=np.float64))
    cand = eer_candidates(scores)
    far = np.searchsorted(imp, cand, side="right") / imp.size
    frr = (gen.size - np.searchsorted(gen, cand, side="right")) / gen.size
    best = int(np.argmin(np.abs(far - frr)))  # argmin takes the first tie
    return float((far[best] + frr[best]) / 2.0), float(cand[best])


# ---------------------------------------------------------------------------
# Open-set evaluation protocol
# ---------------------------------------------------------------------------

class EmbeddingScorer:
    """Gallery-mean distance scoring with a trained embedding model."""

    def __init__(self, model):
        self.model = model
        self._cache: dict[str, np.ndarray] = {}

    def prepare(self, items) -> None:
        """Embed every (probe_id, sequence) once, in one batched pass."""
        items = list(items)
        feats = [build_feature_matrix(normalize_sequence(seq)) for _, seq in items]
        embeddings = embed_batch(self.model, feats, mode="infer")
        for (pid, _), e in zip(items, embeddings):
            self._cache[pid] = e

    def _embedding(self, pid: str, seq) -> np.ndarray:
        if pid not in self._cache:
            fm = build_feature_matrix(normalize_sequence(seq))
            self._cache[pid] = embed_batch(self.model, [fm], mode="infer")[0]
        return self._cache[pid]

    def fit_user(self, user_id: str, gallery_items):
        gallery = Gallery(
            user_id=user_id,
            embeddings=[self._embedding(pid, seq) for pid, seq in gallery_items])
        gallery.validate()

        def score_probe(pid: str, seq) -> float:
            return score(gallery, self._embedding(pid, seq))

        return score_probe


@dataclass
class TrialRow:
    """One score-dump row."""

    user_id: str
    probe_id: str
    gallery_size: int
    score: float
    genuine: bool


@dataclass
class ProtocolResult:
    """EER per gallery size plus every individual trial."""

    eer_by_g: dict[int, float]
    threshold_by_g: dict[int, float]
    scores_by_g: dict[int, ScoreSet]
    rows: list[TrialRow]
    skipped_by_g: dict[int, list[str]]


def evaluate_protocol(dataset, scorer, g_values) -> ProtocolResult:
    """Evaluate a scorer on every test user for each gallery size.

    For each user and G, the chronologically first G swipes enroll the
    user, the remainder are genuine probes, and every swipe of every other
    user is an impostor probe. Users with too few swipes for a G are
    skipped and logged.
    """
    g_values = sorted(set(int(g) for g in g_values))
    if not g_values or g_values[0] < 1:
        raise ProtocolError("gallery sizes must be >= 1")

    per_user = {uid: dataset.user_swipes(uid) for uid in dataset.user_ids()}
    all_items = [item for items in per_user.values() for item in items]
    if hasattr(scorer, "prepare"):
        scorer.prepare(all_items)

    result = ProtocolResult({}, {}, {}, [], {})
    for g in g_values:
        scores = ScoreSet()
        skipped = [uid for uid, items in per_user.items() if len(items) <= g]
        for uid in skipped:
            log.info("gallery size %d: skipping %s (%d swipes)",
                     g, uid, len(per_user[uid]))
        eligible = [uid for uid in per_user if uid not in skipped]
        if not eligible:
            raise ProtocolError(f"no user has more than {g} swipes")

        for uid in eligible:
            items = per_user[uid]
            probe_fn = scorer.fit_user(uid, items[:g])
            for pid, seq in items[g:]:
                s = float(probe_fn(pid, seq))
                scores.genuine.append(s)
                result.rows.append(TrialRow(uid, pid, g, s, True))
            for other in dataset.user_ids():
                if other == uid:
                    continue
                for pid, seq in per_user[other]:
                    s = float(probe_fn(pid, seq))
                    scores.impostor.append(s)
                    result.rows.append(TrialRow(uid, pid, g, s, False))

        eer, threshold = compute_eer(scores)
        result.eer_by_g[g] = eer
        result.threshold_by_g[g] = threshold
        result.scores_by_g[g] = scores
        result.skipped_by_g[g] = skipped
    return result


# ---------------------------------------------------------------------------
# Score-dump file (delimited text, one row per trial)
# ---------------------------------------------------------------------------

SCORE_DUMP_HEADER = "user_id,probe_id,G,score,genuine"


def write_score_dump(path, rows) -> None:
    lines = [SCORE_DUMP_HEADER]
    for r in rows:
        lines.append(f"{r.user_id},{r.probe_id},{r.gallery_size},"
                     f"{repr(r.score)},{int(r.genuine)}")
    Path(path).write_text("\n".join(lines) + "\n")


def read_score_dump(path) -> list[TrialRow]:
    lines = Path(path).read_text().splitlines()
    if not lines or lines[0] != SCORE_DUMP_HEADER:
        raise ProtocolError(f"{path}: not a score dump")
    rows = []
    for line in lines[1:]:
        uid, pid, g, s, flag = line.split(",")
        rows.append(TrialRow(uid, pid, int(g), float(s), flag == "1"))
    return rows
