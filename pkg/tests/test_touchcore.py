"""Feature extraction: analytic oracles and invariant properties."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from swipeauth.errors import InvalidMetadataError, MalformedSequenceError
from swipeauth.touchcore import (
    N_CHANNELS,
    N_TIMESTEPS,
    TouchSequence,
    build_feature_matrix,
    derivatives,
    normalize_sequence,
    spectrum,
)


def make_seq(x, y=None, p=None, t=None, width=1.0, height=1.0, user="u", n=None):
    x = np.asarray(x, dtype=np.float64)
    n = len(x) if n is None else n
    return TouchSequence(
        x=x,
        y=np.zeros(n) + 0.5 if y is None else np.asarray(y, dtype=np.float64),
        p=np.zeros(n) + 0.5 if p is None else np.asarray(p, dtype=np.float64),
        t=np.arange(n, dtype=np.float64) if t is None else np.asarray(t, dtype=np.float64),
        user_id=user, session_id="s0", device_id="d0",
        screen_width=width, screen_height=height,
    )


def naive_dft_magnitude(v):
    """Independent O(n^2) oracle: |sum_j v_j exp(-2 pi i j k / n)|."""
    n = len(v)
    out = np.empty(n)
    for k in range(n):
        acc = 0.0 + 0.0j
        for j in range(n):
            acc += v[j] * np.exp(-2j * np.pi * j * k / n)
        out[k] = abs(acc)
    return out


class TestNormalize:
    def test_endpoints_and_midpoint(self):
        seq = make_seq([0.0, 270.0, 540.0, 810.0, 1080.0],
                       y=[0, 480, 960, 1440, 1920], width=1080, height=1920)
        out = normalize_sequence(seq)
        assert np.allclose(out.x, [0.0, 0.25, 0.5, 0.75, 1.0])
        assert np.allclose(out.y, [0.0, 0.25, 0.5, 0.75, 1.0])
        assert out.screen_width == 1.0 and out.screen_height == 1.0

    def test_identity_on_unit_screen(self):
        seq = make_seq([0.1, 0.2, 0.3, 0.4, 0.5])
        out = normalize_sequence(seq)
        assert np.array_equal(out.x, seq.x)
        assert np.array_equal(out.t, seq.t)

    def test_exact_division(self):
        seq = make_seq([270.0] * 5, y=[480.0] * 5, width=1080, height=1920)
        out = normalize_sequence(seq)
        assert np.allclose(out.x, 0.25) and np.allclose(out.y, 0.25)

    def test_idempotent(self):
        seq = make_seq(np.linspace(0, 900, 7), width=1080, height=1920)
        once = normalize_sequence(seq)
        twice = normalize_sequence(once)
        assert np.array_equal(once.x, twice.x)
        assert np.array_equal(once.y, twice.y)

    def test_pressure_and_time_untouched(self):
        p = np.linspace(0.1, 0.9, 6)
        seq = make_seq(np.arange(6.0), p=p, width=50)
        out = normalize_sequence(seq)
        assert np.array_equal(out.p, p)

    def test_zero_screen_rejected(self):
        seq = make_seq(np.arange(5.0), width=0.0)
        with pytest.raises(InvalidMetadataError):
            normalize_sequence(seq)

    def test_too_short_rejected(self):
        seq = make_seq([0.0, 1.0, 2.0])
        with pytest.raises(MalformedSequenceError):
            normalize_sequence(seq)


class TestDerivatives:
    def test_constant_position_all_zero(self):
        seq = make_seq([0.3] * 8, t=np.cumsum(np.random.default_rng(0).uniform(1, 3, 8)))
        vx, vy, ax, ay, jx, jy = derivatives(seq)
        for d in (vx, ax, jx):
            assert np.allclose(d, 0.0, atol=1e-15)

    def test_uniform_motion(self):
        seq = make_seq([0.0, 1.0, 2.0, 3.0, 4.0])
        vx, _, ax, _, jx, _ = derivatives(seq)
        assert np.allclose(vx, 1.0)
        assert np.allclose(ax, 0.0, atol=1e-14)
        assert np.allclose(jx, 0.0, atol=1e-14)

    def test_quadratic_position_oracle(self):
        # x(t) = t^2: central differences are exact for quadratics, so the
        # interior must match vx = 2t and ax = 2 to rounding error.
        t = np.arange(6.0)
        seq = make_seq(t**2, t=t)
        vx, _, ax, _, _, _ = derivatives(seq)
        assert np.allclose(vx[1:-1], 2.0 * t[1:-1], atol=1e-12)
        assert np.allclose(ax[1:-1][1:-1], 2.0, atol=1e-12)

    def test_nonuniform_grid_quadratic(self):
        # Wide central differences of c*t^2 give 2*c*t + c*(dt_fwd - dt_back)
        # on an uneven grid; check the implementation hits that identity.
        rng = np.random.default_rng(3)
        t = np.cumsum(rng.uniform(0.5, 2.0, 12))
        c = 0.01
        seq = make_seq(c * t**2, t=t)
        vx = derivatives(seq)[0]
        dt = np.diff(t)
        expected = 2.0 * c * t[1:-1] + c * (dt[1:] - dt[:-1])
        assert np.allclose(vx[1:-1], expected, atol=1e-12)

    def test_linearity(self):
        rng = np.random.default_rng(5)
        t = np.cumsum(rng.uniform(0.5, 2.0, 10))
        a_ch = rng.normal(size=10)
        b_ch = rng.normal(size=10)
        combo = make_seq(2.5 * a_ch - 1.5 * b_ch, t=t)
        va = derivatives(make_seq(a_ch, t=t))[0]
        vb = derivatives(make_seq(b_ch, t=t))[0]
        vc = derivatives(combo)[0]
        assert np.allclose(vc, 2.5 * va - 1.5 * vb, atol=1e-12)

    def test_repeated_timestamps_rejected(self):
        seq = make_seq(np.arange(5.0), t=[0.0, 1.0, 1.0, 2.0, 3.0])
        with pytest.raises(MalformedSequenceError):
            derivatives(seq)


class TestSpectrum:
    def test_dc_only(self):
        c = 0.37
        mag = spectrum(np.full(8, c))
        assert np.isclose(mag[0], 8 * c, atol=1e-12)
        assert np.allclose(mag[1:], 0.0, atol=1e-12)

    def test_single_tone(self):
        v = np.cos(2 * np.pi * np.arange(8) / 8)
        mag = spectrum(v)
        assert np.isclose(mag[1], 4.0, atol=1e-12)
        assert np.isclose(mag[7], 4.0, atol=1e-12)
        assert np.allclose(np.delete(mag, [1, 7]), 0.0, atol=1e-12)

    def test_against_naive_dft(self):
        rng = np.random.default_rng(11)
        v = rng.normal(size=100)
        assert np.allclose(spectrum(v), naive_dft_magnitude(v), atol=1e-9)

    def test_length_one(self):
        assert np.allclose(spectrum(np.array([2.5])), [2.5])

    @given(st.integers(min_value=1, max_value=150), st.integers(min_value=0, max_value=2**31))
    @settings(max_examples=30, deadline=None)
    def test_parseval(self, n, seed):
        v = np.random.default_rng(seed).normal(size=n)
        mag = spectrum(v)
        lhs = np.sum(mag**2)
        rhs = n * np.sum(v**2)
        assert np.isclose(lhs, rhs, rtol=1e-6)


class TestBuildFeatureMatrix:
    def _seq_of_length(self, n, seed=0):
        rng = np.random.default_rng(seed)
        t = np.cumsum(rng.uniform(5.0, 15.0, n))
        return make_seq(rng.uniform(0, 1, n), y=rng.uniform(0, 1, n),
                        p=rng.uniform(0, 1, n), t=t)

    def test_exact_fit(self):
        fm = build_feature_matrix(self._seq_of_length(100))
        assert fm.valid_length == 100
        assert fm.values.shape == (N_CHANNELS, N_TIMESTEPS)

    def test_padding(self):
        fm = build_feature_matrix(self._seq_of_length(40))
        assert fm.valid_length == 40
        assert np.all(fm.values[:, 40:] == 0.0)
        assert np.any(fm.values[:, :40] != 0.0)

    def test_truncation(self):
        seq = self._seq_of_length(150)
        fm = build_feature_matrix(seq)
        assert fm.valid_length == 100
        # raw channels keep the first 100 samples verbatim
        assert np.array_equal(fm.values[0], seq.x[:100])
        assert np.array_equal(fm.values[2], seq.p[:100])

    def test_channels_match_operations(self):
        seq = self._seq_of_length(60, seed=4)
        fm = build_feature_matrix(seq)
        vx = derivatives(seq)[0]
        assert np.array_equal(fm.values[3, :60], vx)
        assert np.array_equal(fm.values[9, :60], spectrum(seq.x))

    def test_too_short_rejected(self):
        with pytest.raises(MalformedSequenceError):
            build_feature_matrix(self._seq_of_length(4))

    @given(st.integers(min_value=5, max_value=160), st.integers(min_value=0, max_value=2**31))
    @settings(max_examples=40, deadline=None)
    def test_shape_and_padding_property(self, n, seed):
        fm = build_feature_matrix(self._seq_of_length(n, seed=seed))
        assert fm.values.shape == (N_CHANNELS, N_TIMESTEPS)
        assert np.all(np.isfinite(fm.values))
        assert fm.valid_length == min(n, N_TIMESTEPS)
        assert np.all(fm.values[:, fm.valid_length:] == 0.0)
