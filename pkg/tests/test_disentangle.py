import numpy as np
import pytest
from conftest import fd_grad, rel_err
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra import numpy as hnp

from uqd.disentangle import (ClassificationDisentangled, SamplingSoftmaxConfig,
                             classification_uncertainty,
                             combine_gaussian_mixture, decompose_variance,
                             disentangle_logits, entropy, sampling_softmax)
from uqd.methods import PredictionSamples
from uqd.rng import RngStream
from uqd.tensor import GradientTape, Tensor, backward, softmax


class TestGaussianMixture:
    def test_shared_mean_and_variance(self):
        s = PredictionSamples([1.0, 1.0, 1.0], [0.5, 0.5, 0.5])
        mu, total = combine_gaussian_mixture(s)
        assert (mu, total) == (1.0, 0.5)
        ale, epi = decompose_variance(s)
        assert (ale, epi) == (0.5, 0.0)

    def test_disagreeing_deterministic_passes(self):
        s = PredictionSamples([0.0, 2.0], [0.0, 0.0])
        mu, total = combine_gaussian_mixture(s)
        assert (mu, total) == (1.0, 1.0)

    def test_mixed_spread(self):
        s = PredictionSamples([1.0, 2.0, 3.0], [0.1, 0.2, 0.3])
        mu, total = combine_gaussian_mixture(s)
        ale, epi = decompose_variance(s)
        np.testing.assert_allclose(mu, 2.0, rtol=1e-15)
        np.testing.assert_allclose(ale, 0.2, rtol=1e-15)
        np.testing.assert_allclose(epi, 2.0 / 3.0, rtol=1e-15)
        np.testing.assert_allclose(total, 0.2 + 2.0 / 3.0, rtol=1e-15)

    def test_against_numpy_moments(self):
        r = np.random.default_rng(0)
        means = r.normal(size=(7, 4, 8))
        variances = r.uniform(0.1, 2.0, size=(7, 4, 8))
        s = PredictionSamples(means, variances)
        mu, ale, epi = disentangle_logits(s)
        np.testing.assert_allclose(mu, means.mean(axis=0), rtol=1e-12)
        np.testing.assert_allclose(ale, variances.mean(axis=0), rtol=1e-12)
        np.testing.assert_allclose(epi, means.var(axis=0), rtol=1e-9,
                                   atol=1e-12)

    def test_identical_passes_have_exactly_zero_spread(self):
        # replicated rows must not leak epistemic variance through rounding
        r = np.random.default_rng(1)
        row = r.normal(size=5) * 1e3
        means = np.tile(row, (20, 1))
        s = PredictionSamples(means, np.ones_like(means))
        ale, epi = decompose_variance(s)
        np.testing.assert_array_equal(epi, np.zeros(5))
        mu, _ = combine_gaussian_mixture(s)
        np.testing.assert_array_equal(mu, row)

    @settings(max_examples=200, deadline=None)
    @given(means=hnp.arrays(np.float64, (4, 3),
                            elements=st.floats(-50, 50)),
           stds=hnp.arrays(np.float64, (4, 3),
                           elements=st.floats(0, 10)))
    def test_total_is_exactly_the_sum_of_parts(self, means, stds):
        s = PredictionSamples(means, np.square(stds))
        _, total = combine_gaussian_mixture(s)
        ale, epi = decompose_variance(s)
        np.testing.assert_array_equal(total, ale + epi)
        assert np.all(epi >= 0.0)
        assert np.all(ale >= 0.0)


class TestSamplingSoftmax:
    def test_zero_variance_is_plain_softmax_for_any_n(self):
        mu = np.array([50.0, 10.0])
        want = softmax(Tensor(mu)).data
        for n in (1, 7, 100, 10 ** 5):
            got = sampling_softmax(mu, np.zeros(2),
                                   SamplingSoftmaxConfig(n))
            np.testing.assert_array_equal(got, want)

    def test_reference_pairs_large_n(self):
        cfg = SamplingSoftmaxConfig(10 ** 5)
        cases = [
            ([50.0, 10.0], [0.0, 50.0 ** 2], [0.79, 0.21]),
            ([50.0, 100.0], [0.0, 50.0 ** 2], [0.16, 0.84]),
            ([50.0, 50.0], [0.0, 100.0 ** 2], [0.5, 0.5]),
        ]
        for i, (mu, var, want) in enumerate(cases):
            got = sampling_softmax(np.array(mu), np.array(var), cfg,
                                   rng=RngStream(0, 100 + i))
            np.testing.assert_allclose(got, want, atol=0.02)

    def test_rows_sum_to_one(self):
        r = np.random.default_rng(2)
        mu = r.normal(size=(6, 8)) * 5
        var = r.uniform(0.0, 9.0, size=(6, 8))
        got = sampling_softmax(mu, var, SamplingSoftmaxConfig(500),
                               rng=RngStream(0, 3))
        np.testing.assert_allclose(got.sum(axis=-1), np.ones(6), atol=1e-12)
        assert np.all(got >= 0.0)

    def test_shift_invariance_with_shared_noise(self):
        r = np.random.default_rng(3)
        mu = r.normal(size=4)
        var = r.uniform(0.5, 2.0, size=4)
        cfg = SamplingSoftmaxConfig(50)
        noise = RngStream(1, 4).normal((50, 4))
        a = sampling_softmax(mu, var, cfg, noise=noise)
        b = sampling_softmax(mu + 123.0, var, cfg, noise=noise)
        np.testing.assert_allclose(a, b, atol=1e-12)

    def test_estimates_converge_in_n(self):
        mu = np.array([50.0, 10.0])
        var = np.array([0.0, 50.0 ** 2])
        a = sampling_softmax(mu, var, SamplingSoftmaxConfig(10 ** 4),
                             rng=RngStream(0, 5))
        b = sampling_softmax(mu, var, SamplingSoftmaxConfig(10 ** 5),
                             rng=RngStream(0, 6))
        assert np.linalg.norm(a - b) < 0.01

    def test_type_follows_input(self):
        mu = np.zeros(3)
        var = np.ones(3)
        cfg = SamplingSoftmaxConfig(10)
        as_array = sampling_softmax(mu, var, cfg, rng=RngStream(0, 7))
        assert isinstance(as_array, np.ndarray)
        as_tensor = sampling_softmax(Tensor(mu), Tensor(var), cfg,
                                     rng=RngStream(0, 7))
        assert isinstance(as_tensor, Tensor)
        np.testing.assert_array_equal(as_array, as_tensor.data)

    def test_zero_variance_tensor_round_trip(self):
        out = sampling_softmax(Tensor([1.0, 2.0]), Tensor([0.0, 0.0]))
        assert isinstance(out, Tensor)

    def test_gradients_vs_fd_with_frozen_noise(self):
        r = np.random.default_rng(4)
        mu = r.normal(size=3)
        var = r.uniform(0.5, 2.0, size=3)
        w = r.normal(size=3)
        cfg = SamplingSoftmaxConfig(40)
        noise = RngStream(2, 8).normal((40, 3))

        t_mu = Tensor(mu, requires_grad=True)
        t_var = Tensor(var, requires_grad=True)
        with GradientTape():
            p = sampling_softmax(t_mu, t_var, cfg, noise=noise)
            loss = (p * Tensor(w)).sum()
        grads = backward(loss)

        def value():
            p = sampling_softmax(mu, var, cfg, noise=noise)
            return float(np.dot(p, w))

        want_mu, want_var = fd_grad(value, [mu, var])
        assert rel_err(grads[t_mu].data, want_mu) < 1e-4
        assert rel_err(grads[t_var].data, want_var) < 1e-4

    def test_input_validation(self):
        cfg = SamplingSoftmaxConfig(10)
        with pytest.raises(ValueError, match="shape"):
            sampling_softmax(np.zeros(3), np.ones(4), cfg, rng=RngStream(0, 9))
        with pytest.raises(ValueError, match="non-negative"):
            sampling_softmax(np.zeros(3), -np.ones(3), cfg,
                             rng=RngStream(0, 9))
        with pytest.raises(ValueError, match="rng"):
            sampling_softmax(np.zeros(3), np.ones(3), cfg)
        with pytest.raises(ValueError, match="noise shape"):
            sampling_softmax(np.zeros(3), np.ones(3), cfg,
                             noise=np.zeros((9, 3)))
        with pytest.raises(ValueError, match="n_samples"):
            SamplingSoftmaxConfig(0)


class TestEntropy:
    def test_one_hot_is_zero(self):
        assert entropy(np.array([0.0, 1.0, 0.0])) == 0.0

    def test_uniform_is_log_c(self):
        np.testing.assert_allclose(entropy(np.full(8, 1.0 / 8)), np.log(8.0),
                                   rtol=1e-15)

    def test_worked_example(self):
        p = np.array([0.22, 0.0, 0.11, 0.11, 0.11, 0.22, 0.22, 0.0])
        np.testing.assert_allclose(entropy(p), 1.735, atol=0.02)

    def test_batch_reduces_last_axis(self):
        p = np.stack([np.full(4, 0.25), np.array([1.0, 0.0, 0.0, 0.0])])
        got = entropy(p)
        np.testing.assert_allclose(got, [np.log(4.0), 0.0], rtol=1e-15)

    def test_negative_rejected(self):
        with pytest.raises(ValueError, match="non-negative"):
            entropy(np.array([1.1, -0.1]))


def _random_samples(seed, m=6, b=4, c=8):
    r = np.random.default_rng(seed)
    return PredictionSamples(r.normal(size=(m, b, c)) * 3,
                             r.uniform(0.1, 4.0, size=(m, b, c)))


class TestClassificationUncertainty:
    def test_requires_rng(self):
        with pytest.raises(ValueError, match="rng"):
            classification_uncertainty(_random_samples(0))

    def test_deterministic_given_stream(self):
        s = _random_samples(1)
        a = classification_uncertainty(s, rng=RngStream(3, 0))
        b = classification_uncertainty(s, rng=RngStream(3, 0))
        np.testing.assert_array_equal(a.p_pred, b.p_pred)
        np.testing.assert_array_equal(a.h_epi, b.h_epi)

    def test_zero_variance_collapses_to_softmax(self):
        r = np.random.default_rng(2)
        row = r.normal(size=(3, 8))
        means = np.tile(row, (5, 1, 1))
        s = PredictionSamples(means, np.zeros_like(means))
        out = classification_uncertainty(s, rng=RngStream(0, 1))
        want = softmax(Tensor(row)).data
        np.testing.assert_array_equal(out.p_pred, want)
        np.testing.assert_array_equal(out.p_ale, want)
        np.testing.assert_array_equal(out.p_epi, want)
        np.testing.assert_array_equal(out.h_pred, out.h_ale)
        np.testing.assert_array_equal(out.h_pred, out.h_epi)

    def test_identical_passes_give_softmax_epistemic(self):
        # a deterministic model repeated M times carries no model spread,
        # so the epistemic distribution is the plain softmax of the logits
        r = np.random.default_rng(3)
        row = r.normal(size=(4, 8)) * 2
        means = np.tile(row, (20, 1, 1))
        variances = np.tile(r.uniform(0.5, 2.0, size=(4, 8)), (20, 1, 1))
        s = PredictionSamples(means, variances)
        out = classification_uncertainty(s, rng=RngStream(0, 2))
        np.testing.assert_array_equal(out.epistemic_var,
                                      np.zeros_like(row))
        np.testing.assert_array_equal(out.p_epi, softmax(Tensor(row)).data)
        np.testing.assert_array_equal(out.h_epi,
                                      entropy(softmax(Tensor(row)).data))

    def test_entropies_within_bounds(self):
        s = _random_samples(4)
        out = classification_uncertainty(s, rng=RngStream(0, 3))
        top = np.log(8.0) + 1e-12
        for h in (out.h_pred, out.h_ale, out.h_epi, out.h_pred_mean_probs):
            assert h.shape == (4,)
            assert np.all(h >= 0.0) and np.all(h <= top)

    def test_distributions_normalized(self):
        s = _random_samples(5)
        out = classification_uncertainty(s, rng=RngStream(0, 4))
        for p in (out.p_pred, out.p_ale, out.p_epi):
            np.testing.assert_allclose(p.sum(axis=-1), np.ones(4),
                                       atol=1e-12)

    def test_predictive_uses_summed_variance_and_shared_noise(self):
        s = _random_samples(6)
        cfg = SamplingSoftmaxConfig(64)
        out = classification_uncertainty(s, cfg, rng=RngStream(7, 5))
        mu, ale, epi = disentangle_logits(s)
        noise = RngStream(7, 5).normal((64,) + mu.shape)
        np.testing.assert_array_equal(
            out.p_pred, sampling_softmax(mu, ale + epi, cfg, noise=noise))
        np.testing.assert_array_equal(
            out.p_ale, sampling_softmax(mu, ale, cfg, noise=noise))
        np.testing.assert_array_equal(
            out.p_epi, sampling_softmax(mu, epi, cfg, noise=noise))

    def test_result_type(self):
        out = classification_uncertainty(_random_samples(7),
                                         rng=RngStream(0, 6))
        assert isinstance(out, ClassificationDisentangled)
        assert out.mean_logits.shape == (4, 8)
