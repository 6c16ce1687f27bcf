"""Dataset schema, import/export, seeded synthetic swipes, and user splits.

The on-disk layout is a JSON manifest (users -> sessions -> swipe files)
plus one delimited text file per swipe. Export mirrors import bit-exactly:
floats are written with shortest round-trip precision.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import (
    DataFormatError,
    GenerationError,
    MalformedSequenceError,
    InvalidMetadataError,
    SplitError,
)
from .touchcore import MIN_SEQUENCE_LENGTH, TouchSequence

MANIFEST_FORMAT = "swipeauth-dataset"
MANIFEST_VERSION = 1

# Common portrait phone resolutions; one per synthetic user.
_SCREENS = ((1080, 1920), (1080, 2340), (720, 1280), (1440, 2560), (1080, 2400))

_MAX_SESSIONS = 5


@dataclass
class Provenance:
    source: str  # "synthetic" | "imported"
    seed: int | None = None


@dataclass
class ImportReport:
    """Counts from one load_dataset call: declared = kept + dropped."""

    declared: int = 0
    kept: int = 0
    dropped: int = 0
    reasons: dict[str, int] = field(default_factory=dict)

    def drop(self, reason: str) -> None:
        self.dropped += 1
        self.reasons[reason] = self.reasons.get(reason, 0) + 1


@dataclass
class Dataset:
    """Users -> sessions -> ordered swipes, plus provenance."""

    users: dict[str, dict[str, list[TouchSequence]]]
    provenance: Provenance

    def user_ids(self) -> list[str]:
        return sorted(self.users)

    def n_swipes(self) -> int:
        return sum(len(sw) for sess in self.users.values() for sw in sess.values())

    def user_swipes(self, user_id: str) -> list[tuple[str, TouchSequence]]:
        """Chronological (swipe_id, sequence) pairs: sessions in id order,
        swipes in capture order within each session."""
        out = []
        for session_id in sorted(self.users[user_id]):
            for i, seq in enumerate(self.users[user_id][session_id]):
                out.append((f"{user_id}/{session_id}/{i:03d}", seq))
        return out

    def all_swipes(self) -> list[tuple[str, str, TouchSequence]]:
        """(user_id, swipe_id, sequence) for every swipe, users sorted."""
        return [(uid, sid, seq)
                for uid in self.user_ids()
                for sid, seq in self.user_swipes(uid)]

    def subset(self, user_ids) -> "Dataset":
        keep = set(user_ids)
        return Dataset(
            users={u: s for u, s in self.users.items() if u in keep},
            provenance=self.provenance,
        )

    def validate(self) -> None:
        if not self.users:
            raise DataFormatError("dataset has no users")
        for uid, sessions in self.users.items():
            if not any(sessions.values()):
                raise DataFormatError(f"user {uid} has no swipes")
            for sid, swipes in sessions.items():
                for seq in swipes:
                    if seq.user_id != uid or seq.session_id != sid:
                        raise DataFormatError(
                            f"sequence ids ({seq.user_id}, {seq.session_id}) do not "
                            f"match map position ({uid}, {sid})")
                    seq.validate()


@dataclass
class SynthUserStyle:
    """Per-user swipe habits the synthetic generator samples around."""

    start_center: tuple[float, float]  # normalized units
    start_spread: float
    end_center: tuple[float, float]
    end_spread: float
    curvature: float                   # perpendicular bow, normalized units
    duration_mean: float               # ms
    duration_jitter: float             # ms
    rate_hz: float
    pressure_mean: float
    pressure_jitter: float
    noise_amp: float                   # normalized units

    def validate(self) -> None:
        for cx, cy in (self.start_center, self.end_center):
            if not (0.0 <= cx <= 1.0 and 0.0 <= cy <= 1.0):
                raise GenerationError(f"style region ({cx}, {cy}) outside [0,1]^2")
        if self.duration_mean <= 0 or self.rate_hz <= 0:
            raise GenerationError("duration and sample rate must be positive")
        if self.start_spread < 0 or self.end_spread < 0 or self.noise_amp < 0:
            raise GenerationError("spreads and noise amplitude must be non-negative")
        if not 0.0 <= self.pressure_mean <= 1.0:
            raise GenerationError("pressure mean outside [0,1]")


def _sample_style(rng: np.random.Generator) -> SynthUserStyle:
    """Draw one user's habits; ranges are wide across users and tight within.

    Durations and rates are chosen so a deliberate drag-and-drop swipe spans
    roughly the full fixed feature window at a modern touch sampling rate.
    """
    return SynthUserStyle(
        start_center=(rng.uniform(0.05, 0.30), rng.uniform(0.08, 0.92)),
        start_spread=rng.uniform(0.002, 0.008),
        end_center=(rng.uniform(0.70, 0.95), rng.uniform(0.08, 0.92)),
        end_spread=rng.uniform(0.002, 0.008),
        curvature=rng.uniform(-0.35, 0.35),
        duration_mean=rng.uniform(1100.0, 1900.0),
        duration_jitter=rng.uniform(5.0, 25.0),
        rate_hz=rng.uniform(90.0, 130.0),
        pressure_mean=rng.uniform(0.10, 0.95),
        pressure_jitter=rng.uniform(0.005, 0.02),
        noise_amp=rng.uniform(0.0005, 0.002),
    )


def _minimum_jerk(tau: np.ndarray) -> np.ndarray:
    """Smooth 0->1 position profile with zero boundary velocity/acceleration."""
    return 10.0 * tau**3 - 15.0 * tau**4 + 6.0 * tau**5


def _pressure_profile(tau: np.ndarray) -> np.ndarray:
    """Rise-hold-fall envelope: 0 at the ends, 1 over the middle."""
    edge = 0.15
    rise = np.clip(tau / edge, 0.0, 1.0)
    fall = np.clip((1.0 - tau) / edge, 0.0, 1.0)
    return np.minimum(rise, fall)


def _synth_swipe(style: SynthUserStyle, rng: np.random.Generator,
                 user_id: str, session_id: str, device_id: str,
                 screen: tuple[int, int]) -> TouchSequence:
    start = np.array(style.start_center) + rng.normal(0.0, style.start_spread, 2)
    end = np.array(style.end_center) + rng.normal(0.0, style.end_spread, 2)
    duration = max(80.0, style.duration_mean + rng.normal(0.0, style.duration_jitter))

    n = max(MIN_SEQUENCE_LENGTH, int(round(duration / 1000.0 * style.rate_hz)))
    dt = duration / (n - 1)
    # Strictly increasing timestamps with sampling jitter.
    increments = dt * rng.uniform(0.8, 1.2, n - 1)
    t = np.concatenate([[0.0], np.cumsum(increments)])
    tau = t / t[-1]

    s = _minimum_jerk(tau)
    chord = end - start
    perp = np.array([-chord[1], chord[0]])
    norm = np.hypot(*chord)
    if norm < 1e-9:
        raise GenerationError("degenerate style: start and end regions coincide")
    perp /= norm
    bow = style.curvature * 16.0 * tau**2 * (1.0 - tau) ** 2

    xy = start[None, :] + chord[None, :] * s[:, None] + perp[None, :] * bow[:, None]
    xy += rng.normal(0.0, style.noise_amp, xy.shape)

    p = style.pressure_mean * _pressure_profile(tau)
    p = np.clip(p + rng.normal(0.0, style.pressure_jitter, n), 0.0, 1.0)

    w, h = screen
    return TouchSequence(
        x=xy[:, 0] * w, y=xy[:, 1] * h, p=p, t=t,
        user_id=user_id, session_id=session_id, device_id=device_id,
        screen_width=float(w), screen_height=float(h),
    )


def synth_generate(n_users: int, swipes_per_user: int, seed: int,
                   styles: list[SynthUserStyle] | None = None) -> Dataset:
    """Generate a seeded synthetic dataset of right-swipe gestures.

    One style per user is drawn from the seed (or supplied explicitly);
    swipes are minimum-jerk point-to-point trajectories with curvature,
    sampling jitter, Gaussian noise, and a rise-hold-fall pressure profile.
    Output is deterministic per seed.
    """
    if n_users < 2 or swipes_per_user < 2:
        raise GenerationError("need at least 2 users and 2 swipes per user")
    if styles is not None and len(styles) != n_users:
        raise GenerationError(f"got {len(styles)} styles for {n_users} users")

    rng = np.random.default_rng(seed)
    users: dict[str, dict[str, list[TouchSequence]]] = {}
    per_session = math.ceil(swipes_per_user / _MAX_SESSIONS)

    for u in range(n_users):
        user_id = f"u{u:04d}"
        device_id = f"dev{u:03d}"
        screen = _SCREENS[u % len(_SCREENS)]
        style = styles[u] if styles is not None else _sample_style(rng)
        style.validate()

        sessions: dict[str, list[TouchSequence]] = {}
        for k in range(swipes_per_user):
            session_id = f"s{k // per_session:02d}"
            seq = _synth_swipe(style, rng, user_id, session_id, device_id, screen)
            sessions.setdefault(session_id, []).append(seq)
        users[user_id] = sessions

    ds = Dataset(users=users, provenance=Provenance(source="synthetic", seed=seed))
    ds.validate()
    return ds


# ---------------------------------------------------------------------------
# On-disk format
# ---------------------------------------------------------------------------

def _fmt(v: float) -> str:
    return repr(float(v))


def _write_swipe_file(path: Path, seq: TouchSequence) -> None:
    if "," in seq.device_id or "=" in seq.device_id:
        raise DataFormatError(f"device_id {seq.device_id!r} not storable")
    lines = [
        f"#device_id={seq.device_id}"
        f",screen_width={_fmt(seq.screen_width)}"
        f",screen_height={_fmt(seq.screen_height)}"
        f",pressure_missing={int(seq.pressure_missing)}",
        "x,y,p,t",
    ]
    for x, y, p, t in zip(seq.x, seq.y, seq.p, seq.t):
        lines.append(f"{_fmt(x)},{_fmt(y)},{_fmt(p)},{_fmt(t)}")
    path.write_text("\n".join(lines) + "\n")


def _read_swipe_file(path: Path, user_id: str, session_id: str) -> TouchSequence:
    text = path.read_text()
    lines = text.splitlines()
    if len(lines) < 3 or not lines[0].startswith("#") or lines[1] != "x,y,p,t":
        raise DataFormatError(f"{path}: bad swipe file header")
    header: dict[str, str] = {}
    for kv in lines[0][1:].split(","):
        key, _, val = kv.partition("=")
        header[key] = val
    try:
        device_id = header["device_id"]
        width = float(header["screen_width"])
        height = float(header["screen_height"])
        missing = bool(int(header.get("pressure_missing", "0")))
    except (KeyError, ValueError) as exc:
        raise DataFormatError(f"{path}: bad swipe file header: {exc}") from exc
    try:
        rows = np.array([[float(c) for c in line.split(",")] for line in lines[2:]],
                        dtype=np.float64)
    except ValueError as exc:
        raise MalformedSequenceError(f"{path}: unparsable sample row") from exc
    if rows.ndim != 2 or rows.shape[1] != 4:
        raise MalformedSequenceError(f"{path}: rows must have 4 columns")
    return TouchSequence(
        x=rows[:, 0], y=rows[:, 1], p=rows[:, 2], t=rows[:, 3],
        user_id=user_id, session_id=session_id, device_id=device_id,
        screen_width=width, screen_height=height, pressure_missing=missing,
    )


def export_dataset(dataset: Dataset, out_dir) -> Path:
    """Write manifest + swipe files under out_dir; returns the manifest path."""
    out = Path(out_dir)
    (out / "swipes").mkdir(parents=True, exist_ok=True)
    manifest_users: dict[str, dict[str, list[str]]] = {}
    for uid in dataset.user_ids():
        manifest_users[uid] = {}
        for sid in sorted(dataset.users[uid]):
            rels = []
            for i, seq in enumerate(dataset.users[uid][sid]):
                rel = f"swipes/{uid}_{sid}_{i:03d}.csv"
                _write_swipe_file(out / rel, seq)
                rels.append(rel)
            manifest_users[uid][sid] = rels
    manifest = {
        "format": MANIFEST_FORMAT,
        "version": MANIFEST_VERSION,
        "provenance": {"source": dataset.provenance.source,
                       "seed": dataset.provenance.seed},
        "users": manifest_users,
    }
    path = out / "manifest.json"
    path.write_text(json.dumps(manifest, indent=1, sort_keys=True) + "\n")
    return path


def load_dataset(manifest_path) -> tuple[Dataset, ImportReport]:
    """Load and validate a dataset; invalid swipes are dropped and counted.

    Raises:
        OSError: manifest or a referenced swipe file is unreadable.
        DataFormatError: manifest or swipe file violates the schema.
        DataFormatError("no valid users"): every sequence was dropped.
    """
    path = Path(manifest_path)
    try:
        doc = json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise DataFormatError(f"{path}: not valid JSON: {exc}") from exc

    if not isinstance(doc, dict) or doc.get("format") != MANIFEST_FORMAT:
        raise DataFormatError(f"{path}: missing format tag {MANIFEST_FORMAT!r}")
    if doc.get("version") != MANIFEST_VERSION:
        raise DataFormatError(f"{path}: unsupported version {doc.get('version')!r}")
    users_doc = doc.get("users")
    if not isinstance(users_doc, dict) or not users_doc:
        raise DataFormatError(f"{path}: 'users' must be a non-empty object")

    report = ImportReport()
    users: dict[str, dict[str, list[TouchSequence]]] = {}
    for uid, sessions_doc in users_doc.items():
        if not isinstance(sessions_doc, dict):
            raise DataFormatError(f"{path}: user {uid}: sessions must be an object")
        sessions: dict[str, list[TouchSequence]] = {}
        for sid, files in sessions_doc.items():
            if not isinstance(files, list):
                raise DataFormatError(f"{path}: {uid}/{sid}: expected a file list")
            kept: list[TouchSequence] = []
            for rel in files:
                report.declared += 1
                try:
                    seq = _read_swipe_file(path.parent / rel, uid, sid)
                    seq.validate()
                except (MalformedSequenceError, InvalidMetadataError) as exc:
                    report.drop(type(exc).__name__)
                    continue
                report.kept += 1
                kept.append(seq)
            if kept:
                sessions[sid] = kept
        if sessions:
            users[uid] = sessions

    if not users:
        raise DataFormatError(f"{path}: no valid users after validation")

    prov_doc = doc.get("provenance") or {}
    prov = Provenance(source=str(prov_doc.get("source", "imported")),
                      seed=prov_doc.get("seed"))
    ds = Dataset(users=users, provenance=prov)
    ds.validate()
    return ds, report


def split_users(dataset: Dataset, train_fraction: float = 0.7,
                seed: int = 0) -> tuple[Dataset, Dataset]:
    """User-disjoint split: floor(train_fraction * U) users train, rest test."""
    uids = dataset.user_ids()
    if len(uids) < 2:
        raise SplitError("need at least 2 users to split")
    rng = np.random.default_rng(seed)
    order = [uids[i] for i in rng.permutation(len(uids))]
    n_train = math.floor(train_fraction * len(uids))
    if n_train < 1 or len(uids) - n_train < 1:
        raise SplitError(
            f"split {train_fraction} of {len(uids)} users leaves one side empty")
    train_ids, test_ids = order[:n_train], order[n_train:]
    return dataset.subset(train_ids), dataset.subset(test_ids)
