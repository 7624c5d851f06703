"""Tests for synthetic data generation and the toy softmax classifier."""

import dataclasses

import numpy as np
import pytest

from oodkit import (
    CrlParams,
    InvalidInputError,
    LabelVector,
    TrainingDivergedError,
    auroc,
    fit_crm,
    score_crl,
    score_maxlogits,
    score_msp,
)
from oodkit import synth
from oodkit.synth import GaussianMixtureSpec, LinearSoftmaxModel, _ood_center

from oracles import naive_matmul_logits


def small_spec(seed=0, stddev=1.0, n_per_class=20):
    means = np.array([[3.0, 0.0, 0.0], [-3.0, 0.0, 0.0], [0.0, 3.0, 0.0]])
    return GaussianMixtureSpec(
        n_classes=3, dim=3, means=means, stddev=stddev, n_per_class=n_per_class, seed=seed
    )


class TestSpecValidation:
    def test_duplicate_means_rejected(self):
        means = np.zeros((2, 2))
        with pytest.raises(InvalidInputError):
            GaussianMixtureSpec(2, 2, means, 1.0, 5, 0)

    def test_bad_counts_rejected(self):
        means = np.array([[0.0, 0.0], [1.0, 1.0]])
        with pytest.raises(InvalidInputError):
            GaussianMixtureSpec(2, 2, means, 1.0, 0, 0)
        with pytest.raises(InvalidInputError):
            GaussianMixtureSpec(2, 2, means, -1.0, 5, 0)
        with pytest.raises(InvalidInputError):
            GaussianMixtureSpec(2, 2, means, 1.0, 5, 2**64)


class TestGenerate:
    def test_deterministic(self):
        spec = small_spec()
        x1, y1 = synth.generate(spec)
        x2, y2 = synth.generate(spec)
        assert x1.tobytes() == x2.tobytes()
        np.testing.assert_array_equal(y1.labels, y2.labels)

    def test_streams_differ(self):
        spec = small_spec()
        x_train, _ = synth.generate(spec, stream=synth.STREAM_TRAIN)
        x_test, _ = synth.generate(spec, stream=synth.STREAM_TEST_ID)
        assert x_train.tobytes() != x_test.tobytes()

    def test_zero_stddev_collapses_to_means(self):
        spec = small_spec(stddev=0.0, n_per_class=4)
        x, y = synth.generate(spec)
        for k in range(3):
            np.testing.assert_array_equal(
                x[y.labels == k], np.tile(spec.means[k], (4, 1))
            )

    def test_sample_mean_near_class_mean(self):
        spec = small_spec(n_per_class=10000)
        x, y = synth.generate(spec)
        standard_error = spec.stddev / np.sqrt(10000)
        for k in range(3):
            sample_mean = x[y.labels == k].mean(axis=0)
            assert np.all(np.abs(sample_mean - spec.means[k]) <= 5 * standard_error)

    def test_block_layout(self):
        spec = small_spec(n_per_class=7)
        _, y = synth.generate(spec)
        np.testing.assert_array_equal(y.labels, np.repeat([0, 1, 2], 7))


class TestTrain:
    def separable_data(self):
        rng = np.random.Generator(np.random.Philox(99))
        x0 = rng.normal([-2.0, 0.0], 0.3, size=(50, 2))
        x1 = rng.normal([2.0, 0.0], 0.3, size=(50, 2))
        features = np.concatenate([x0, x1])
        labels = LabelVector(np.repeat([0, 1], 50))
        return features, labels

    def test_separable_data_reaches_full_accuracy(self):
        features, labels = self.separable_data()
        model = synth.train(features, labels, epochs=500, lr=0.1)
        assert synth.accuracy(model, features, labels) == 1.0

    def test_zero_epochs_gives_uniform_predictions(self):
        features, labels = self.separable_data()
        model = synth.train(features, labels, epochs=0, lr=0.1)
        np.testing.assert_array_equal(model.weights, 0.0)
        np.testing.assert_array_equal(model.bias, 0.0)
        z = synth.logits(model, features)
        np.testing.assert_array_equal(z.data, 0.0)

    def test_divergence_raises(self):
        # an lr this large overflows the parameters on the first update
        features, labels = self.separable_data()
        with np.errstate(over="ignore", invalid="ignore"):
            with pytest.raises(TrainingDivergedError):
                synth.train(features * 1e3, labels, epochs=5, lr=1e308)

    def test_gradients_match_finite_differences(self):
        rng = np.random.default_rng(77)
        for _ in range(50):
            n_classes = int(rng.integers(2, 6))
            dim = int(rng.integers(1, 11))
            n = int(rng.integers(n_classes, 15))
            features = rng.normal(0, 2, size=(n, dim))
            labels = LabelVector(
                np.concatenate(
                    [np.arange(n_classes), rng.integers(0, n_classes, n - n_classes)]
                ).astype(np.int64)
            )
            w = rng.normal(0, 1, size=(n_classes, dim))
            b = rng.normal(0, 1, size=n_classes)
            grad_w, grad_b = synth.cross_entropy_gradients(w, b, features, labels)
            h = 1e-5
            fd_w = np.zeros_like(w)
            for i in range(n_classes):
                for j in range(dim):
                    wp, wm = w.copy(), w.copy()
                    wp[i, j] += h
                    wm[i, j] -= h
                    fd_w[i, j] = (
                        synth.cross_entropy_loss(wp, b, features, labels)
                        - synth.cross_entropy_loss(wm, b, features, labels)
                    ) / (2 * h)
            fd_b = np.zeros_like(b)
            for i in range(n_classes):
                bp, bm = b.copy(), b.copy()
                bp[i] += h
                bm[i] -= h
                fd_b[i] = (
                    synth.cross_entropy_loss(w, bp, features, labels)
                    - synth.cross_entropy_loss(w, bm, features, labels)
                ) / (2 * h)
            np.testing.assert_allclose(grad_w, fd_w, rtol=1e-5, atol=1e-8)
            np.testing.assert_allclose(grad_b, fd_b, rtol=1e-5, atol=1e-8)

    def test_bad_lr_rejected(self):
        features, labels = self.separable_data()
        with pytest.raises(InvalidInputError):
            synth.train(features, labels, epochs=1, lr=0.0)


class TestLogitsOp:
    def test_zero_model(self):
        model = LinearSoftmaxModel(np.zeros((2, 3)), np.zeros(2))
        out = synth.logits(model, np.ones((4, 3)))
        np.testing.assert_array_equal(out.data, 0.0)

    def test_definition_on_unit_feature(self):
        model = LinearSoftmaxModel(
            np.array([[1.0, 2.0], [3.0, 4.0]]), np.array([0.5, -0.5])
        )
        out = synth.logits(model, np.array([[1.0, 0.0]]))
        np.testing.assert_array_equal(out.data, [[1.5, 2.5]])

    def test_matches_loop_oracle(self):
        rng = np.random.default_rng(78)
        w = rng.normal(0, 1, size=(4, 6))
        b = rng.normal(0, 1, size=4)
        x = rng.normal(0, 2, size=(9, 6))
        model = LinearSoftmaxModel(w, b)
        want = naive_matmul_logits(
            [list(r) for r in w], list(b), [list(r) for r in x]
        )
        np.testing.assert_allclose(synth.logits(model, x).data, want, atol=1e-12)

    def test_dim_mismatch(self):
        model = LinearSoftmaxModel(np.zeros((2, 3)), np.zeros(2))
        with pytest.raises(InvalidInputError):
            synth.logits(model, np.ones((4, 2)))


class TestMakeOod:
    def test_zero_offset_rejected(self):
        with pytest.raises(InvalidInputError):
            synth.make_ood(small_spec(), offset=0.0, n=10)

    def test_deterministic(self):
        spec = small_spec()
        a = synth.make_ood(spec, offset=3.0, n=10)
        b = synth.make_ood(spec, offset=3.0, n=10)
        assert a.tobytes() == b.tobytes()

    def test_center_distance_orthogonal_branch(self):
        rng = np.random.default_rng(79)
        for _ in range(20):
            c, d = int(rng.integers(2, 5)), int(rng.integers(6, 10))
            means = rng.normal(0, 3, size=(c, d))  # rank <= c < d: complement exists
            offset = float(rng.uniform(0.5, 8.0))
            center = _ood_center(means, offset)
            distances = np.linalg.norm(means - center, axis=1)
            assert np.all(distances >= offset - 1e-9)

    def test_center_distance_full_rank_fallback(self):
        means = np.array([[1.0, 0.0], [0.0, 1.0], [-1.0, -1.0]])  # spans R^2
        for offset in (0.5, 2.0, 7.0):
            center = _ood_center(means, offset)
            distances = np.linalg.norm(means - center, axis=1)
            assert np.all(distances >= offset - 1e-9)


class TestPipelineProperties:
    def test_full_chain_byte_reproducible(self):
        def run():
            spec = small_spec(seed=13, n_per_class=60)
            x_train, y_train = synth.generate(spec)
            model = synth.train(x_train, y_train, epochs=100, lr=0.5)
            z_train = synth.logits(model, x_train)
            crm = fit_crm(z_train, y_train)
            test_spec = dataclasses.replace(spec, n_per_class=30)
            x_test, _ = synth.generate(test_spec, stream=synth.STREAM_TEST_ID)
            z_test = synth.logits(model, x_test)
            z_ood = synth.logits(model, synth.make_ood(spec, offset=5.0, n=50))
            id_scores = score_crl(crm, z_test)
            ood_scores = score_crl(crm, z_ood)
            return (
                x_train.tobytes(),
                z_train.data.tobytes(),
                crm.prototypes_prob.tobytes(),
                id_scores.scores.tobytes(),
                ood_scores.scores.tobytes(),
                auroc(id_scores.scores, ood_scores.scores),
            )

        assert run() == run()

    def test_auroc_nondecreasing_in_offset(self):
        # documented fixed-seed grid configuration: four classes on a cross,
        # one at the centroid, OOD pushed along an orthogonal direction
        a, dim, seed = 5.0, 6, 5
        means = np.zeros((5, dim))
        means[0, 0] = a
        means[1, 0] = -a
        means[2, 1] = a
        means[3, 1] = -a
        spec = GaussianMixtureSpec(
            n_classes=5, dim=dim, means=means, stddev=1.0, n_per_class=1500, seed=seed
        )
        x_train, y_train = synth.generate(spec, stream=synth.STREAM_TRAIN)
        test_spec = dataclasses.replace(spec, n_per_class=200)
        x_test, _ = synth.generate(test_spec, stream=synth.STREAM_TEST_ID)
        model = synth.train(x_train, y_train, epochs=150, lr=0.5)
        z_id = synth.logits(model, x_test)
        crm = fit_crm(synth.logits(model, x_train), y_train)
        params = CrlParams()
        curves = {"crl": [], "maxlogits": [], "msp": []}
        for offset in (1.0, 2.0, 5.0, 10.0):
            z_ood = synth.logits(model, synth.make_ood(spec, offset=offset, n=1000))
            curves["crl"].append(
                auroc(score_crl(crm, z_id, params).scores, score_crl(crm, z_ood, params).scores)
            )
            curves["maxlogits"].append(
                auroc(score_maxlogits(z_id).scores, score_maxlogits(z_ood).scores)
            )
            curves["msp"].append(auroc(score_msp(z_id).scores, score_msp(z_ood).scores))
        for name, values in curves.items():
            assert all(
                x <= y for x, y in zip(values, values[1:])
            ), f"{name} not nondecreasing: {values}"
