"""Dataset generation, manifest round-trips, and user splits."""

import json

import numpy as np
import pytest

from swipeauth.dataio import (
    Dataset,
    Provenance,
    SynthUserStyle,
    export_dataset,
    load_dataset,
    split_users,
    synth_generate,
)
from swipeauth.errors import DataFormatError, GenerationError, SplitError


def small_dataset(seed=0, users=4, swipes=4):
    return synth_generate(users, swipes, seed=seed)


class TestSynthGenerate:
    def test_counts_and_validity(self):
        ds = synth_generate(60, 10, seed=3)
        assert len(ds.user_ids()) == 60
        assert ds.n_swipes() == 600
        ds.validate()  # every sequence passes touch-core invariants

    def test_determinism(self):
        a = synth_generate(6, 5, seed=11)
        b = synth_generate(6, 5, seed=11)
        for (u1, s1, q1), (u2, s2, q2) in zip(a.all_swipes(), b.all_swipes()):
            assert u1 == u2 and s1 == s2
            assert np.array_equal(q1.x, q2.x)
            assert np.array_equal(q1.t, q2.t)
            assert np.array_equal(q1.p, q2.p)

    def test_different_seed_differs(self):
        a = synth_generate(3, 3, seed=1)
        b = synth_generate(3, 3, seed=2)
        qa = a.all_swipes()[0][2]
        qb = b.all_swipes()[0][2]
        assert not (len(qa) == len(qb) and np.array_equal(qa.x, qb.x))

    def test_timestamps_and_pressure_across_seeds(self):
        for seed in range(10):
            ds = synth_generate(3, 4, seed=seed)
            for _, _, seq in ds.all_swipes():
                assert np.all(np.diff(seq.t) > 0)
                assert np.all((seq.p >= 0) & (seq.p <= 1))

    def test_nearest_neighbor_on_separated_styles(self):
        # Two users with maximally separated habits: endpoints alone should
        # classify swipes nearly perfectly (leave-one-out 1-NN oracle).
        far_a = SynthUserStyle(
            start_center=(0.05, 0.10), start_spread=0.004,
            end_center=(0.70, 0.15), end_spread=0.004,
            curvature=-0.3, duration_mean=1200.0, duration_jitter=10.0,
            rate_hz=100.0, pressure_mean=0.2, pressure_jitter=0.01,
            noise_amp=0.001)
        far_b = SynthUserStyle(
            start_center=(0.30, 0.90), start_spread=0.004,
            end_center=(0.95, 0.85), end_spread=0.004,
            curvature=0.3, duration_mean=1800.0, duration_jitter=10.0,
            rate_hz=120.0, pressure_mean=0.9, pressure_jitter=0.01,
            noise_amp=0.001)
        ds = synth_generate(2, 20, seed=5, styles=[far_a, far_b])
        feats, labels = [], []
        for uid, _, seq in ds.all_swipes():
            feats.append([seq.x[0] / seq.screen_width, seq.y[0] / seq.screen_height,
                          seq.x[-1] / seq.screen_width, seq.y[-1] / seq.screen_height])
            labels.append(uid)
        X = np.array(feats)
        correct = 0
        for i in range(len(X)):
            d = np.linalg.norm(X - X[i], axis=1)
            d[i] = np.inf
            correct += labels[int(np.argmin(d))] == labels[i]
        assert correct / len(X) > 0.95

    def test_degenerate_parameters(self):
        with pytest.raises(GenerationError):
            synth_generate(1, 10, seed=0)
        with pytest.raises(GenerationError):
            synth_generate(10, 1, seed=0)
        bad = SynthUserStyle(
            start_center=(0.5, 0.5), start_spread=0.0,
            end_center=(0.5, 0.5), end_spread=0.0,  # coincident regions
            curvature=0.0, duration_mean=500.0, duration_jitter=0.0,
            rate_hz=100.0, pressure_mean=0.5, pressure_jitter=0.0,
            noise_amp=0.0)
        with pytest.raises(GenerationError):
            synth_generate(2, 3, seed=0, styles=[bad, bad])

    def test_sessions_capped_at_five(self):
        ds = synth_generate(2, 10, seed=4)
        for uid in ds.user_ids():
            assert 1 <= len(ds.users[uid]) <= 5


class TestManifestRoundTrip:
    def test_export_import_equality(self, tmp_path):
        ds = small_dataset(seed=9)
        manifest = export_dataset(ds, tmp_path)
        loaded, report = load_dataset(manifest)
        assert report.dropped == 0
        assert report.kept == ds.n_swipes()
        assert loaded.user_ids() == ds.user_ids()
        for (u1, s1, q1), (u2, s2, q2) in zip(ds.all_swipes(), loaded.all_swipes()):
            assert (u1, s1) == (u2, s2)
            assert np.array_equal(q1.x, q2.x)
            assert np.array_equal(q1.y, q2.y)
            assert np.array_equal(q1.p, q2.p)
            assert np.array_equal(q1.t, q2.t)
            assert q1.device_id == q2.device_id
            assert q1.screen_width == q2.screen_width

    def test_reexport_is_bit_identical(self, tmp_path):
        ds = small_dataset(seed=10)
        m1 = export_dataset(ds, tmp_path / "a")
        loaded, _ = load_dataset(m1)
        m2 = export_dataset(loaded, tmp_path / "b")
        assert m1.read_text() == m2.read_text()
        for f1 in sorted((tmp_path / "a" / "swipes").iterdir()):
            f2 = tmp_path / "b" / "swipes" / f1.name
            assert f1.read_bytes() == f2.read_bytes()

    def test_count_contract(self, tmp_path):
        ds = synth_generate(2, 3, seed=0)
        # trim to 1 session per user to mirror the 2x1x3 layout
        manifest = export_dataset(ds, tmp_path)
        loaded, report = load_dataset(manifest)
        assert loaded.n_swipes() == 6
        assert report.declared == report.kept + report.dropped == 6

    def test_invalid_swipe_dropped_and_counted(self, tmp_path):
        ds = small_dataset(seed=2)
        manifest = export_dataset(ds, tmp_path)
        # corrupt one swipe file: make timestamps non-increasing
        victim = next((tmp_path / "swipes").glob("*.csv"))
        lines = victim.read_text().splitlines()
        parts = lines[2].split(",")
        parts2 = lines[3].split(",")
        parts2[3] = parts[3]  # duplicate timestamp
        lines[3] = ",".join(parts2)
        victim.write_text("\n".join(lines) + "\n")

        loaded, report = load_dataset(manifest)
        assert report.dropped == 1
        assert report.kept == ds.n_swipes() - 1
        assert report.reasons == {"MalformedSequenceError": 1}

    def test_missing_manifest(self, tmp_path):
        with pytest.raises(OSError):
            load_dataset(tmp_path / "nope.json")

    def test_schema_violations(self, tmp_path):
        p = tmp_path / "manifest.json"
        p.write_text("{ not json")
        with pytest.raises(DataFormatError):
            load_dataset(p)
        p.write_text(json.dumps({"format": "other", "version": 1, "users": {}}))
        with pytest.raises(DataFormatError):
            load_dataset(p)
        p.write_text(json.dumps({"format": "swipeauth-dataset", "version": 1,
                                 "users": {}}))
        with pytest.raises(DataFormatError):
            load_dataset(p)

    def test_all_swipes_invalid_raises(self, tmp_path):
        ds = synth_generate(2, 2, seed=1)
        manifest = export_dataset(ds, tmp_path)
        for f in (tmp_path / "swipes").glob("*.csv"):
            lines = f.read_text().splitlines()
            f.write_text("\n".join(lines[:2] + lines[2:4]) + "\n")  # 2 samples
        with pytest.raises(DataFormatError):
            load_dataset(manifest)


class TestSplitUsers:
    def test_floor_split(self):
        ds = synth_generate(10, 3, seed=0)
        train, test = split_users(ds, 0.7, seed=1)
        assert len(train.user_ids()) == 7
        assert len(test.user_ids()) == 3
        assert set(train.user_ids()).isdisjoint(test.user_ids())

    def test_deterministic(self):
        ds = synth_generate(10, 3, seed=0)
        a = split_users(ds, 0.7, seed=5)
        b = split_users(ds, 0.7, seed=5)
        assert a[0].user_ids() == b[0].user_ids()

    def test_partition_property(self):
        ds = synth_generate(9, 3, seed=0)
        train, test = split_users(ds, 0.7, seed=3)
        assert sorted(train.user_ids() + test.user_ids()) == ds.user_ids()

    def test_disjoint_across_seeds(self):
        ds = synth_generate(10, 2, seed=0)
        for seed in range(100):
            train, test = split_users(ds, 0.7, seed=seed)
            assert set(train.user_ids()).isdisjoint(test.user_ids())
            assert len(train.user_ids()) == 7

    def test_split_errors(self):
        ds = synth_generate(2, 2, seed=0)
        solo = ds.subset(ds.user_ids()[:1])
        with pytest.raises(SplitError):
            split_users(solo, 0.7, seed=0)
        with pytest.raises(SplitError):
            split_users(ds, 0.05, seed=0)  # floor gives 0 train users


class TestDatasetValidation:
    def test_id_mismatch_detected(self):
        ds = small_dataset(seed=1)
        uid = ds.user_ids()[0]
        sid = sorted(ds.users[uid])[0]
        ds.users[uid][sid][0].user_id = "someone-else"
        with pytest.raises(DataFormatError):
            ds.validate()

    def test_empty_user_detected(self):
        ds = Dataset(users={"u": {"s": []}}, provenance=Provenance("synthetic", 0))
        with pytest.raises(DataFormatError):
            ds.validate()
