import os
import tempfile

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from corinfomax import data
from corinfomax.data import AugmentConfig, DataFormatError, Dataset


def nearest_centroid_accuracy(ds):
    centroids = np.stack([ds.features[:, ds.labels == c].mean(axis=1) for c in range(ds.num_classes)], axis=1)
    d2 = ((ds.features[:, None, :] - centroids[:, :, None]) ** 2).sum(axis=0)
    return np.mean(np.argmin(d2, axis=0) == ds.labels)


class TestDataset:
    def test_label_range(self):
        with pytest.raises(ValueError):
            Dataset(np.zeros((2, 3)), [0, 1, 2], 2)

    def test_too_few_samples(self):
        with pytest.raises(ValueError):
            Dataset(np.zeros((2, 1)), [0], 2)

    def test_subset(self):
        ds = Dataset(np.arange(6.0).reshape(2, 3), [0, 1, 0], 2)
        sub = ds.subset([2, 1])
        np.testing.assert_array_equal(sub.features, [[2, 1], [5, 4]])
        np.testing.assert_array_equal(sub.labels, [0, 1])


class TestBlobs:
    def test_zero_spread(self):
        ds = data.gen_blobs(3, 10, 5, 8.0, 0.0, 0)
        for c in range(3):
            cols = ds.features[:, ds.labels == c]
            assert np.all(cols == cols[:, :1])

    def test_balanced(self):
        ds = data.gen_blobs(4, 25, 6, 8.0, 1.0, 1)
        np.testing.assert_array_equal(np.bincount(ds.labels), [25] * 4)
        assert ds.features.shape == (6, 100)

    def test_anchor_geometry(self):
        ds = data.gen_blobs(5, 2, 16, 3.0, 0.0, 2)
        anchors = np.stack([ds.features[:, ds.labels == c][:, 0] for c in range(5)], axis=1)
        np.testing.assert_allclose(np.linalg.norm(anchors, axis=0), 3.0)
        cos = anchors.T @ anchors / 9.0
        assert np.all(cos[~np.eye(5, dtype=bool)] <= 0.5 + 1e-12)

    def test_nearest_centroid(self):
        assert nearest_centroid_accuracy(data.gen_blobs(4, 500, 16, 8.0, 1.0, 0)) >= 0.99

    def test_deterministic(self):
        a, b = data.gen_blobs(3, 5, 4, 8.0, 1.0, 7), data.gen_blobs(3, 5, 4, 8.0, 1.0, 7)
        assert np.array_equal(a.features, b.features)

    def test_rejection_failure(self):
        with pytest.raises(RuntimeError):
            data.gen_blobs(5, 1, 1, 1.0, 0.0, 0)

    def test_bad_separation(self):
        with pytest.raises(ValueError):
            data.gen_blobs(2, 1, 2, 0.0, 1.0, 0)


class TestSplit:
    def test_stratified(self):
        ds = data.gen_blobs(4, 50, 3, 8.0, 1.0, 0)
        train, test = data.train_test_split(ds, 0.2, 0)
        np.testing.assert_array_equal(np.bincount(test.labels), [10] * 4)
        assert len(train) + len(test) == 200
        both = np.concatenate([train.features, test.features], axis=1)
        assert np.array_equal(np.sort(both, axis=None), np.sort(ds.features, axis=None))


class TestTable:
    def test_two_rows(self, tmp_path):
        path = tmp_path / "t.csv"
        path.write_text("1.0,2.0,0\n3.0,4.0,1")
        ds = data.load_table(path)
        np.testing.assert_array_equal(ds.features, [[1.0, 3.0], [2.0, 4.0]])
        np.testing.assert_array_equal(ds.labels, [0, 1])

    def test_empty(self, tmp_path):
        path = tmp_path / "e.csv"
        path.write_text("")
        with pytest.raises(DataFormatError):
            data.load_table(path)

    def test_ragged(self, tmp_path):
        path = tmp_path / "r.csv"
        path.write_text("1,2,0\n1,1\n")
        with pytest.raises(DataFormatError, match="line 2"):
            data.load_table(path)

    def test_non_numeric(self, tmp_path):
        path = tmp_path / "n.csv"
        path.write_text("1,2,0\n1,x,1\n")
        with pytest.raises(DataFormatError, match="line 2"):
            data.load_table(path)

    def test_round_trip(self, tmp_path):
        ds = data.gen_blobs(3, 7, 5, 8.0, 1.3, 4)
        data.save_table(tmp_path / "d.csv", ds)
        back = data.load_table(tmp_path / "d.csv")
        assert np.array_equal(back.features, ds.features)
        assert np.array_equal(back.labels, ds.labels)

    @settings(max_examples=25, deadline=None)
    @given(st.lists(st.floats(allow_nan=False, allow_infinity=False), min_size=2, max_size=8))
    def test_round_trip_property(self, values):
        x = np.array(values).reshape(1, -1)
        ds = Dataset(x, np.arange(x.shape[1]) % 2, 2)
        with tempfile.TemporaryDirectory() as d:
            path = os.path.join(d, "p.csv")
            data.save_table(path, ds)
            assert np.array_equal(data.load_table(path).features, x)


class TestAugment:
    def test_identity(self):
        x = np.random.default_rng(0).normal(size=6)
        x1, x2 = data.augment_pair(x, AugmentConfig(), np.random.default_rng(1))
        assert np.array_equal(x1, x) and np.array_equal(x2, x)

    def test_noise_energy(self):
        d, std, draws = 8, 0.7, 10_000
        x = np.random.default_rng(2).normal(size=(d, 1))
        out = data.augment_batch(np.repeat(x, draws, axis=1), AugmentConfig(noise_std=std), np.random.default_rng(3))
        energy = np.mean(np.sum((out - x) ** 2, axis=0))
        assert abs(energy - d * std**2) <= 0.05 * d * std**2

    def test_branches_differ(self):
        x1, x2 = data.augment_pair(np.ones(4), AugmentConfig(noise_std=0.1), np.random.default_rng(4))
        assert not np.array_equal(x1, x2)

    def test_asymmetric_branches(self):
        x1, x2 = data.augment_pair(np.ones(4), AugmentConfig(), np.random.default_rng(5), AugmentConfig(noise_std=1.0))
        assert np.array_equal(x1, np.ones(4)) and not np.array_equal(x2, np.ones(4))

    def test_mask_rate(self):
        out = data.augment_batch(np.ones((10, 2000)), AugmentConfig(mask_prob=0.3), np.random.default_rng(6))
        assert abs(np.mean(out == 0.0) - 0.3) < 0.01

    def test_scale_range(self):
        out = data.augment_batch(np.ones((3, 500)), AugmentConfig(scale_range=(0.5, 1.5)), np.random.default_rng(7))
        assert np.all((out >= 0.5) & (out <= 1.5))
        assert np.all(out == out[:1])

    def test_invalid_configs(self):
        for kw in ({"noise_std": -1}, {"mask_prob": 1.0}, {"scale_range": (2.0, 1.0)}, {"max_angle": np.inf}):
            with pytest.raises(ValueError):
                AugmentConfig(**kw)

    @settings(max_examples=40, deadline=None)
    @given(st.integers(1, 10), st.integers(1, 12), st.floats(0.0, 3.0), st.integers(0, 2**32 - 1))
    def test_rotations_preserve_norm(self, d, n_rot, angle, seed):
        rng = np.random.default_rng(seed)
        x = rng.normal(size=(d, 5))
        out = data.augment_batch(x, AugmentConfig(rotate_pairs=n_rot, max_angle=angle), rng)
        np.testing.assert_allclose(np.linalg.norm(out, axis=0), np.linalg.norm(x, axis=0), rtol=0, atol=1e-12)

    @settings(max_examples=30, deadline=None)
    @given(st.integers(1, 10), st.integers(0, 2**32 - 1))
    def test_keeps_dimension(self, d, seed):
        cfg = AugmentConfig(0.5, 0.2, (0.5, 1.5), 3, 1.0)
        x1, x2 = data.augment_pair(np.ones(d), cfg, np.random.default_rng(seed))
        assert x1.shape == x2.shape == (d,)


class TestBatches:
    def test_single_batch(self):
        (b,) = data.batches(10, 10, 0)
        np.testing.assert_array_equal(np.sort(b), np.arange(10))

    def test_union(self):
        out = data.batches(23, 5, 1)
        assert [len(b) for b in out] == [5, 5, 5, 5, 3]
        np.testing.assert_array_equal(np.sort(np.concatenate(out)), np.arange(23))

    def test_drop_last(self):
        assert [len(b) for b in data.batches(23, 5, 1, drop_last=True)] == [5] * 4

    def test_deterministic(self):
        for a, b in zip(data.batches(30, 7, 3), data.batches(30, 7, 3)):
            assert np.array_equal(a, b)

    def test_too_large(self):
        with pytest.raises(ValueError):
            data.batches(5, 6, 0)
