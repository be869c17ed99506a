import numpy as np
import pytest

from uqd.rng import RngStream


class TestDeterminism:
    def test_same_pair_same_sequence(self):
        a = RngStream(7, 3).normal((100,))
        b = RngStream(7, 3).normal((100,))
        np.testing.assert_array_equal(a, b)

    def test_distinct_stream_ids_differ(self):
        a = RngStream(7, 3).normal((100,))
        b = RngStream(7, 4).normal((100,))
        assert np.any(a != b)

    def test_distinct_seeds_differ(self):
        a = RngStream(7, 3).normal((100,))
        b = RngStream(8, 3).normal((100,))
        assert np.any(a != b)

    def test_sequence_position_matters(self):
        s = RngStream(0, 0)
        first = s.normal((10,))
        second = s.normal((10,))
        assert np.any(first != second)


class TestDerive:
    def test_derive_is_deterministic(self):
        a = RngStream(1, 2).derive(9).normal((50,))
        b = RngStream(1, 2).derive(9).normal((50,))
        np.testing.assert_array_equal(a, b)

    def test_derive_salts_differ(self):
        parent = RngStream(1, 2)
        a = parent.derive(0).normal((50,))
        b = parent.derive(1).normal((50,))
        assert np.any(a != b)

    def test_same_salt_different_parents_differ(self):
        # pass indices repeat across parents; children must not collide
        a = RngStream(1, 2).derive(5).normal((50,))
        b = RngStream(1, 3).derive(5).normal((50,))
        assert np.any(a != b)

    def test_derive_does_not_disturb_parent(self):
        parent = RngStream(1, 2)
        parent.derive(0)
        with_child = parent.normal((20,))
        np.testing.assert_array_equal(with_child, RngStream(1, 2).normal((20,)))


class TestDrawKinds:
    def test_uniform_range(self):
        u = RngStream(0, 0).uniform((10000,))
        assert u.min() >= 0.0 and u.max() < 1.0

    def test_rademacher_values(self):
        r = RngStream(0, 1).rademacher((10000,))
        assert r.dtype == np.float64
        assert set(np.unique(r)) == {-1.0, 1.0}
        # balanced to ~4 sigma
        assert abs(r.mean()) < 4.0 / np.sqrt(10000)

    def test_integers_bounds(self):
        k = RngStream(0, 2).integers(0, 8, (5000,))
        assert k.min() >= 0 and k.max() <= 7
        assert len(np.unique(k)) == 8

    def test_permutation(self):
        p = RngStream(0, 3).permutation(100)
        np.testing.assert_array_equal(np.sort(p), np.arange(100))

    def test_multinomial_rows_sum(self):
        pvals = np.full((40, 8), 1.0 / 8)
        votes = RngStream(0, 4).multinomial(10, pvals)
        np.testing.assert_array_equal(votes.sum(axis=-1), np.full(40, 10))

    @pytest.mark.parametrize("method", ["normal", "uniform", "rademacher"])
    def test_counter_advances(self, method):
        s = RngStream(0, 5)
        assert s.counter == 0
        getattr(s, method)((3,))
        assert s.counter == 1
