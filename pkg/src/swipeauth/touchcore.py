"""Touch-sequence data types and the 11-channel fixed-length feature matrix.

A swipe is an ordered stream of (x, y, pressure, timestamp) samples. The
feature matrix stacks the normalized raw channels with their time
derivatives and the DFT magnitudes of both axes, padded or truncated to a
fixed number of timesteps so every downstream consumer sees the same shape.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .errors import InvalidMetadataError, MalformedSequenceError

#: Fixed channel order of the feature matrix.
CHANNEL_NAMES = ("x", "y", "p", "vx", "vy", "ax", "ay", "jx", "jy", "fx", "fy")
N_CHANNELS = len(CHANNEL_NAMES)

#: Fixed timestep count: shorter swipes are zero-padded, longer ones truncated.
N_TIMESTEPS = 100

#: Shortest usable swipe; third derivatives need at least 4 intervals.
MIN_SEQUENCE_LENGTH = 5


@dataclass(frozen=True)
class RawTouchSample:
    """One touchscreen sample: coordinates, pressure in [0, 1], time in ms."""

    x: float
    y: float
    p: float
    t: float


@dataclass
class TouchSequence:
    """One swipe: parallel sample arrays plus capture metadata.

    The arrays are kept separate (rather than a list of samples) so the
    numeric pipeline can stay vectorized; ``samples()`` reconstructs the
    per-sample view when needed.
    """

    x: np.ndarray
    y: np.ndarray
    p: np.ndarray
    t: np.ndarray
    user_id: str
    session_id: str
    device_id: str
    screen_width: float
    screen_height: float
    pressure_missing: bool = False

    def __post_init__(self):
        self.x = np.asarray(self.x, dtype=np.float64)
        self.y = np.asarray(self.y, dtype=np.float64)
        self.p = np.asarray(self.p, dtype=np.float64)
        self.t = np.asarray(self.t, dtype=np.float64)

    @classmethod
    def from_samples(cls, samples, user_id, session_id, device_id,
                     screen_width, screen_height, pressure_missing=False):
        """Build a sequence from an iterable of RawTouchSample (or 4-tuples)."""
        rows = [(s.x, s.y, s.p, s.t) if isinstance(s, RawTouchSample) else tuple(s)
                for s in samples]
        arr = np.asarray(rows, dtype=np.float64).reshape(-1, 4)
        return cls(x=arr[:, 0], y=arr[:, 1], p=arr[:, 2], t=arr[:, 3],
                   user_id=user_id, session_id=session_id, device_id=device_id,
                   screen_width=screen_width, screen_height=screen_height,
                   pressure_missing=pressure_missing)

    def samples(self) -> list[RawTouchSample]:
        return [RawTouchSample(float(x), float(y), float(p), float(t))
                for x, y, p, t in zip(self.x, self.y, self.p, self.t)]

    def __len__(self) -> int:
        return int(self.x.shape[0])

    def validate(self) -> None:
        """Raise if any sequence invariant is violated."""
        n = len(self)
        if not (self.y.shape[0] == self.p.shape[0] == self.t.shape[0] == n):
            raise MalformedSequenceError("sample arrays have mismatched lengths")
        if n < MIN_SEQUENCE_LENGTH:
            raise MalformedSequenceError(
                f"sequence has {n} samples, minimum is {MIN_SEQUENCE_LENGTH}")
        if self.screen_width <= 0 or self.screen_height <= 0:
            raise InvalidMetadataError(
                f"screen dims must be positive, got "
                f"{self.screen_width}x{self.screen_height}")
        for name, arr in (("x", self.x), ("y", self.y), ("p", self.p), ("t", self.t)):
            if not np.all(np.isfinite(arr)):
                raise MalformedSequenceError(f"non-finite values in channel {name}")
        if np.any(self.t < 0):
            raise MalformedSequenceError("negative timestamps")
        if np.any(np.diff(self.t) <= 0):
            raise MalformedSequenceError("timestamps are not strictly increasing")
        if np.any(self.p < 0) or np.any(self.p > 1):
            raise MalformedSequenceError("pressure outside [0, 1]")


@dataclass
class FeatureMatrix:
    """11 x N_TIMESTEPS feature block for one swipe.

    ``values`` rows follow CHANNEL_NAMES; columns at index >= valid_length
    are exactly zero.
    """

    values: np.ndarray
    valid_length: int

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=np.float64)

    def validate(self) -> None:
        if self.values.shape != (N_CHANNELS, N_TIMESTEPS):
            raise MalformedSequenceError(
                f"feature matrix shape {self.values.shape}, "
                f"expected ({N_CHANNELS}, {N_TIMESTEPS})")
        if not np.all(np.isfinite(self.values)):
            raise MalformedSequenceError("non-finite feature values")
        if not 0 < self.valid_length <= N_TIMESTEPS:
            raise MalformedSequenceError(f"bad valid_length {self.valid_length}")
        if np.any(self.values[:, self.valid_length:] != 0.0):
            raise MalformedSequenceError("padding columns are not zero")


def normalize_sequence(seq: TouchSequence) -> TouchSequence:
    """Scale coordinates into [0, 1] screen units; pressure and time pass through.

    Returns a new sequence with screen dims set to 1x1 so the operation is
    idempotent.
    """
    seq.validate()
    return replace(
        seq,
        x=seq.x / seq.screen_width,
        y=seq.y / seq.screen_height,
        p=seq.p.copy(),
        t=seq.t.copy(),
        screen_width=1.0,
        screen_height=1.0,
    )


def _ddt(v: np.ndarray, t: np.ndarray) -> np.ndarray:
    """Time derivative of v(t): central differences interior, one-sided at ends."""
    d = np.empty_like(v)
    d[1:-1] = (v[2:] - v[:-2]) / (t[2:] - t[:-2])
    d[0] = (v[1] - v[0]) / (t[1] - t[0])
    d[-1] = (v[-1] - v[-2]) / (t[-1] - t[-2])
    return d


def derivatives(seq: TouchSequence):
    """Velocity, acceleration and jerk of both axes over real timestamps.

    Timestamps are consumed here; they never appear as a feature channel
    because absolute timing encodes the device rather than the user.

    Returns:
        (vx, vy, ax, ay, jx, jy), each the same length as the sequence.
    """
    seq.validate()
    if np.any(np.diff(seq.t) == 0):
        raise MalformedSequenceError("repeated timestamps")
    vx = _ddt(seq.x, seq.t)
    vy = _ddt(seq.y, seq.t)
    ax = _ddt(vx, seq.t)
    ay = _ddt(vy, seq.t)
    jx = _ddt(ax, seq.t)
    jy = _ddt(ay, seq.t)
    return vx, vy, ax, ay, jx, jy


def spectrum(channel: np.ndarray) -> np.ndarray:
    """Magnitude of the unnormalized DFT: bin k = |sum_j v_j exp(-2*pi*i*j*k/n)|."""
    v = np.asarray(channel, dtype=np.float64)
    if v.ndim != 1 or v.size < 1:
        raise MalformedSequenceError("spectrum input must be a non-empty vector")
    if not np.all(np.isfinite(v)):
        raise MalformedSequenceError("non-finite values in spectrum input")
    return np.abs(np.fft.fft(v))


def _fit_length(channel: np.ndarray, n: int = N_TIMESTEPS) -> np.ndarray:
    """Post-pad with zeros to n columns, or keep only the first n."""
    if channel.shape[0] >= n:
        return channel[:n]
    out = np.zeros(n, dtype=np.float64)
    out[:channel.shape[0]] = channel
    return out


def build_feature_matrix(seq: TouchSequence) -> FeatureMatrix:
    """Extract all 11 channels at the swipe's true length, then pad/truncate.

    Channels are computed on the unpadded signal so derivatives and spectra
    are not contaminated by artificial zeros; padding happens last.
    """
    seq.validate()
    vx, vy, ax, ay, jx, jy = derivatives(seq)
    channels = [
        seq.x, seq.y, seq.p,
        vx, vy, ax, ay, jx, jy,
        spectrum(seq.x), spectrum(seq.y),
    ]
    values = np.stack([_fit_length(c) for c in channels])
    fm = FeatureMatrix(values=values, valid_length=min(len(seq), N_TIMESTEPS))
    fm.validate()
    return fm
