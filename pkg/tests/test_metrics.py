"""Distance/similarity primitives against independent summation oracles."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra import numpy as hnp

from oracles import cos_fsum, euclid_fsum
from nnpool.errors import DimMismatch, ZeroVector
from nnpool.metrics import cosine, cosine_to_many, euclidean, euclidean_to_many


class TestEuclidean:
    def test_3_4_5(self):
        assert euclidean([0.0, 0.0], [3.0, 4.0]) == 5.0

    def test_identity(self):
        v = np.array([1.5, -2.25, 8.0])
        assert euclidean(v, v) == 0.0

    def test_high_dim_matches_compensated_oracle(self):
        rng = np.random.default_rng(42)
        for _ in range(20):
            u = rng.normal(size=1024)
            v = rng.normal(size=1024)
            got = euclidean(u, v)
            want = euclid_fsum(u, v)
            assert abs(got - want) <= 1e-9 * max(1.0, abs(want))

    def test_dim_mismatch(self):
        with pytest.raises(DimMismatch):
            euclidean([1.0], [1.0, 2.0])

    def test_to_many_matches_scalar(self):
        rng = np.random.default_rng(1)
        m = rng.normal(size=(17, 9))
        q = rng.normal(size=9)
        many = euclidean_to_many(m, q)
        for i in range(17):
            assert many[i] == euclidean(m[i], q)

    def test_float32_upcast(self):
        m32 = np.array([[0.1, 0.2]], dtype=np.float32)
        q = np.array([0.3, 0.4])
        assert euclidean_to_many(m32, q)[0] == euclidean(m32[0], q)

    @settings(max_examples=60, deadline=None)
    @given(
        hnp.arrays(np.float64, st.integers(1, 32), elements=st.floats(-1e6, 1e6)),
        st.data(),
    )
    def test_symmetry_and_nonnegativity(self, u, data):
        v = data.draw(
            hnp.arrays(np.float64, u.shape[0], elements=st.floats(-1e6, 1e6))
        )
        assert euclidean(u, v) == euclidean(v, u)
        assert euclidean(u, v) >= 0.0


class TestCosine:
    def test_orthogonal(self):
        assert cosine([1.0, 0.0], [0.0, 1.0]) == 0.0

    def test_parallel_scale_invariant(self):
        assert cosine([2.0, 0.0], [5.0, 0.0]) == 1.0

    def test_antiparallel(self):
        assert cosine([1.0, 0.0], [-3.0, 0.0]) == -1.0

    def test_zero_vector(self):
        with pytest.raises(ZeroVector):
            cosine([0.0, 0.0], [1.0, 0.0])
        with pytest.raises(ZeroVector):
            cosine([1.0, 0.0], [0.0, 0.0])

    def test_matches_oracle(self):
        rng = np.random.default_rng(3)
        for _ in range(20):
            u = rng.normal(size=64)
            v = rng.normal(size=64)
            assert cosine(u, v) == pytest.approx(cos_fsum(u, v), abs=1e-12)

    def test_bounded(self):
        rng = np.random.default_rng(4)
        for _ in range(200):
            u = rng.normal(size=8) * 10.0 ** int(rng.integers(-3, 4))
            assert -1.0 <= cosine(u, u * float(rng.uniform(0.1, 9.0))) <= 1.0

    def test_to_many_matches_scalar(self):
        rng = np.random.default_rng(5)
        m = rng.normal(size=(11, 6))
        q = rng.normal(size=6)
        many = cosine_to_many(m, q)
        for i in range(11):
            assert many[i] == pytest.approx(cosine(m[i], q), abs=1e-15)

    def test_to_many_zero_row_rejected(self):
        m = np.array([[1.0, 0.0], [0.0, 0.0]])
        with pytest.raises(ZeroVector):
            cosine_to_many(m, np.array([1.0, 1.0]))
