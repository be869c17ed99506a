import numpy as np
import pytest

from uqd.layers import (DenseLayer, DropConnectDense, FlipoutDense,
                        GaussianLogitHead, GaussianRegressionHead, McDropout)
from uqd.models import (METHOD_KINDS, Model, build_classification_model,
                        build_model, build_regression_model, load_model,
                        save_model)
from uqd.rng import RngStream


def _forward_det(model, x):
    mu, second = model.forward(x, "deterministic", None)
    return mu.data, second.data


class TestArchitectures:
    def test_baseline_regression_trunk(self):
        m = build_regression_model("baseline", RngStream(0, 1))
        assert [type(l) for l in m.trunk] == [DenseLayer, DenseLayer]
        assert isinstance(m.head, GaussianRegressionHead)
        assert m.trunk[0].weights.shape == (32, 1)
        assert m.trunk[1].weights.shape == (32, 32)

    def test_dropout_order_differs_by_task(self):
        reg = build_regression_model("mc_dropout", RngStream(0, 1))
        cls = build_classification_model("mc_dropout", RngStream(0, 1))
        # regression: dense then dropout; classification: dropout then dense
        assert [type(l) for l in reg.trunk] == [DenseLayer, McDropout,
                                                DenseLayer, McDropout]
        assert [type(l) for l in cls.trunk] == [McDropout, DenseLayer,
                                                McDropout, DenseLayer]
        assert all(l.p == 0.25 for l in reg.trunk if isinstance(l, McDropout))

    def test_dropconnect_and_flipout_trunks(self):
        dc = build_regression_model("mc_dropconnect", RngStream(0, 1))
        assert all(isinstance(l, DropConnectDense) for l in dc.trunk)
        assert all(l.p == 0.10 for l in dc.trunk)
        fo = build_regression_model("flipout", RngStream(0, 1))
        assert all(isinstance(l, FlipoutDense) for l in fo.trunk)

    def test_classification_shapes(self):
        m = build_classification_model("baseline", RngStream(0, 2))
        assert isinstance(m.head, GaussianLogitHead)
        mu, var = _forward_det(m, np.zeros((5, 2)))
        assert mu.shape == (5, 8) and var.shape == (5, 8)
        assert np.all(var > 0.0)

    def test_regression_output_positive_sigma(self):
        m = build_regression_model("baseline", RngStream(0, 3))
        mu, sigma = _forward_det(m, np.linspace(-5, 5, 50)[:, None])
        assert mu.shape == (50, 1)
        assert np.all(sigma > 0.0)

    def test_parameter_count(self):
        m = build_regression_model("baseline", RngStream(0, 4))
        assert len(m.parameters()) == 2 * 2 + 4
        fo = build_regression_model("flipout", RngStream(0, 4))
        assert len(fo.parameters()) == 3 * 2 + 4

    def test_unknown_method_or_task(self):
        with pytest.raises(ValueError, match="method"):
            build_model("regression", "svi", RngStream(0, 0))
        with pytest.raises(ValueError, match="task"):
            build_model("ranking", "baseline", RngStream(0, 0))

    def test_method_kinds_tuple(self):
        assert set(METHOD_KINDS) == {"baseline", "mc_dropout",
                                     "mc_dropconnect", "flipout", "ensemble"}

    def test_stochastic_forward_needs_matching_mode(self):
        m = build_regression_model("mc_dropout", RngStream(0, 5))
        x = np.ones((3, 1))
        det1, _ = _forward_det(m, x)
        det2, _ = _forward_det(m, x)
        np.testing.assert_array_equal(det1, det2)
        sto, _ = m.forward(x, "stochastic", RngStream(0, 6))
        assert np.any(sto.data != det1)


class TestSerialization:
    @pytest.mark.parametrize("task,build", [
        ("regression", build_regression_model),
        ("classification", build_classification_model),
    ])
    @pytest.mark.parametrize("method", ["baseline", "mc_dropout",
                                        "mc_dropconnect", "flipout"])
    def test_round_trip_bit_exact(self, tmp_path, task, build, method):
        model = build(method, RngStream(3, 1))
        path = tmp_path / "m.uqd"
        save_model(model, path)
        loaded = load_model(path, task, method)
        assert loaded.task == task and loaded.method == method
        for a, b in zip(model.parameters(), loaded.parameters()):
            np.testing.assert_array_equal(a.data, b.data)
            assert b.requires_grad
        x = np.random.default_rng(0).normal(
            size=(4, 1 if task == "regression" else 2))
        np.testing.assert_array_equal(_forward_det(model, x)[0],
                                      _forward_det(loaded, x)[0])

    def test_drop_probabilities_survive(self, tmp_path):
        model = build_regression_model("mc_dropout", RngStream(1, 1),
                                       dropout_p=0.4)
        save_model(model, tmp_path / "m.uqd")
        loaded = load_model(tmp_path / "m.uqd", "regression", "mc_dropout")
        assert [l.p for l in loaded.trunk if isinstance(l, McDropout)] \
            == [0.4, 0.4]

    def test_stochastic_equivalence_after_reload(self, tmp_path):
        model = build_regression_model("flipout", RngStream(2, 1))
        save_model(model, tmp_path / "m.uqd")
        loaded = load_model(tmp_path / "m.uqd", "regression", "flipout")
        x = np.ones((3, 1))
        a = model.forward(x, "stochastic", RngStream(9, 9))[0].data
        b = loaded.forward(x, "stochastic", RngStream(9, 9))[0].data
        np.testing.assert_array_equal(a, b)

    def test_bad_magic_rejected(self, tmp_path):
        path = tmp_path / "bad.uqd"
        path.write_bytes(b"NOPE" + b"\x00" * 16)
        with pytest.raises(ValueError, match="magic"):
            load_model(path, "regression", "baseline")

    def test_too_few_records_rejected(self, tmp_path):
        import struct
        path = tmp_path / "empty.uqd"
        path.write_bytes(b"UQD1" + struct.pack("<I", 0))
        with pytest.raises(ValueError, match="head"):
            load_model(path, "regression", "baseline")

    def test_unknown_trunk_layer_rejected(self):
        m = Model(task="regression", method="baseline", trunk=[object()],
                  head=build_regression_model("baseline", RngStream(0, 0)).head)
        with pytest.raises(TypeError):
            m.forward(np.ones((1, 1)), "deterministic")
