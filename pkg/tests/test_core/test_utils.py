import numpy as np
import pytest

from twistred.utils import complex_pairs, rng_for, run_indexed, stable_key

pytestmark = [pytest.mark.unit]


class TestRng:
    def test_stable_key(self):
        assert stable_key("probe") == stable_key("probe")
        assert stable_key("probe") != stable_key("sample")
        assert 0 <= stable_key("probe") < 2**32

    def test_reproducible(self):
        a = rng_for(3, "scenario", "sample", 4).standard_normal(5)
        b = rng_for(3, "scenario", "sample", 4).standard_normal(5)
        np.testing.assert_array_equal(a, b)

    def test_streams_differ(self):
        a = rng_for(3, "sample", 0).standard_normal(5)
        b = rng_for(3, "sample", 1).standard_normal(5)
        c = rng_for(4, "sample", 0).standard_normal(5)
        assert not np.array_equal(a, b)
        assert not np.array_equal(a, c)


class TestRunIndexed:
    @pytest.mark.parametrize("threads", [1, 4])
    def test_order(self, threads):
        assert run_indexed(lambda i: i * i, 10, threads) == [i * i for i in range(10)]

    def test_threads_reproduce_serial(self):
        def draw(i):
            return float(rng_for(0, "run", i).random())

        assert run_indexed(draw, 16, 1) == run_indexed(draw, 16, 8)

    def test_empty(self):
        assert run_indexed(lambda i: i, 0, 3) == []


def test_complex_pairs():
    assert complex_pairs([1 + 2j, -0.5j]) == [[1.0, 2.0], [0.0, -0.5]]
