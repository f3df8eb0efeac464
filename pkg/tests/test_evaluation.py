import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from corinfomax import data, net
from corinfomax.densela import ShapeError
from corinfomax.evaluation import (
    ProbeParams,
    effective_rank,
    embed,
    predict,
    probe_accuracy,
    probe_train,
    spectrum_report,
)


def blobs_embeddings(seed=0):
    ds = data.gen_blobs(4, 100, 16, 8.0, 1.0, seed)
    params = net.init_params(net.NetConfig(16, (32,), (16, 8), seed=seed))
    return embed(params, ds), ds.labels


class TestEmbed:
    def test_deterministic_and_shape(self):
        ds = data.gen_blobs(3, 10, 5, 8.0, 1.0, 0)
        params = net.init_params(net.NetConfig(5, (12, 7), (6, 3)))
        a, b = embed(params, ds), embed(params, ds)
        assert np.array_equal(a, b)
        assert a.shape == (7, 30)

    def test_zero_input_column(self):
        params = net.init_params(net.NetConfig(4, (6,), (5, 2)))
        params.biases[0][:] = np.arange(6.0) - 2.0
        ds = data.Dataset(np.zeros((4, 2)), [0, 1], 2)
        np.testing.assert_array_equal(embed(params, ds), np.maximum(np.arange(6.0) - 2.0, 0.0)[:, None] * np.ones(2))


class TestProbeTrain:
    def test_separable_toy(self):
        rng = np.random.default_rng(1)
        x = rng.normal(size=(2, 200))
        labels = (x[0] + 0.5 * x[1] > 0).astype(int)
        x[:, labels == 1] += 0.3 * np.array([[1.0], [0.5]])  # open a margin
        probe = probe_train(x, labels, 200, lr=0.5)
        assert probe_accuracy(probe, x, labels) == 1.0

    def test_zero_epochs(self):
        emb, labels = blobs_embeddings()
        probe = probe_train(emb, labels, 0)
        assert np.all(probe.weight == 0) and np.all(probe.bias == 0)
        assert probe_accuracy(probe, emb, labels) == pytest.approx(0.25)

    def test_loss_decreases(self):
        emb, labels = blobs_embeddings()
        history = []
        probe_train(emb, labels, 10, lr=0.05, batch_size=64, history=history)
        assert len(history) == 10
        assert np.all(np.diff(history) < 0)

    def test_deterministic(self):
        emb, labels = blobs_embeddings()
        a, b = probe_train(emb, labels, 5, seed=3), probe_train(emb, labels, 5, seed=3)
        assert np.array_equal(a.weight, b.weight)

    def test_single_class(self):
        with pytest.raises(ValueError):
            probe_train(np.ones((2, 5)), np.zeros(5, dtype=int), 3)

    def test_shape_mismatch(self):
        with pytest.raises(ShapeError):
            probe_train(np.ones((2, 5)), np.array([0, 1]), 3)

    def test_constant_feature(self):
        x = np.vstack([np.ones(6), np.arange(6.0)])
        labels = np.array([0, 0, 0, 1, 1, 1])
        assert probe_accuracy(probe_train(x, labels, 100), x, labels) == 1.0


class TestAccuracy:
    def test_perfect(self):
        emb = np.eye(3)
        assert probe_accuracy(ProbeParams(np.eye(3), np.zeros(3)), emb, [0, 1, 2]) == 1.0

    def test_constant_predictor(self):
        labels = np.repeat(np.arange(4), 5)
        probe = ProbeParams(np.zeros((4, 3)), np.zeros(4))
        assert probe_accuracy(probe, np.ones((3, 20)), labels) == 0.25

    def test_ties_go_low(self):
        np.testing.assert_array_equal(predict(ProbeParams(np.zeros((3, 1)), np.array([1.0, 1.0, 0.0])), np.ones((1, 2))),
                                      [0, 0])

    def test_permutation_oracle(self):
        emb, labels = blobs_embeddings()
        probe = probe_train(emb, labels, 20)
        assert probe_accuracy(probe, emb, labels) > 0.9
        rng = np.random.default_rng(2)
        accs = [probe_accuracy(probe, emb, rng.permutation(labels)) for _ in range(200)]
        # standard error of one draw is sqrt(3/16 / 400) ~ 0.022
        assert abs(np.mean(accs) - 0.25) <= 3 * 0.022 / np.sqrt(200)

    def test_shape_mismatch(self):
        with pytest.raises(ShapeError):
            probe_accuracy(ProbeParams(np.zeros((2, 3)), np.zeros(2)), np.zeros((4, 5)), np.zeros(5))

    @settings(max_examples=40, deadline=None)
    @given(st.integers(0, 2**32 - 1), st.floats(1e-3, 1e3))
    def test_logit_scaling(self, seed, c):
        rng = np.random.default_rng(seed)
        probe = ProbeParams(rng.normal(size=(4, 5)), rng.normal(size=4))
        emb = rng.normal(size=(5, 30))
        scaled = ProbeParams(c * probe.weight, c * probe.bias)
        np.testing.assert_array_equal(predict(probe, emb), predict(scaled, emb))


class TestSpectrum:
    def test_identity(self):
        s = spectrum_report(np.eye(6))
        np.testing.assert_allclose(s.eigenvalues, np.ones(6))
        assert s.effective_rank == pytest.approx(6.0, abs=1e-12)

    def test_rank_one(self):
        s = spectrum_report(np.diag([1.0, 0.0, 0.0, 0.0]))
        assert s.effective_rank == 1.0
        assert (s.min_eig, s.max_eig) == (0.0, 1.0)

    def test_asymmetric(self):
        with pytest.raises(ValueError):
            spectrum_report(np.array([[1.0, 1.0], [0.0, 1.0]]))

    def test_effective_rank_clips_round_off(self):
        assert effective_rank([1.0, 1.0, -1e-17]) == pytest.approx(2.0)

    @settings(max_examples=40, deadline=None)
    @given(st.integers(1, 12), st.integers(0, 2**32 - 1))
    def test_trace(self, n, seed):
        a = np.random.default_rng(seed).normal(size=(n, n + 2))
        r = a @ a.T
        s = spectrum_report(r)
        assert s.eigenvalues.sum() == pytest.approx(np.trace(r), rel=1e-9)
        assert 1.0 <= s.effective_rank <= n + 1e-9
