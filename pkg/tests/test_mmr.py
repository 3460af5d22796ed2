"""Maximal-marginal-relevance selection vs an fsum-based reference."""

import numpy as np
import pytest

from helpers import make_pool
from oracles import cos_fsum, mmr_reference
from nnpool.ann import HnswParams, build_index
from nnpool.errors import DimMismatch, EmptyData, KTooLarge, ZeroVector
from nnpool.retriever import MmrConfig, RetrievalConfig, mmr_select, retrieve


def random_candidates(rng, n, dim, dup_vector=False):
    rows = rng.choice(5 * n, size=n, replace=False).astype(int)
    vecs = rng.normal(size=(n, dim))
    if dup_vector and n >= 2:
        vecs[1] = vecs[0]
    return [(int(r), vecs[i]) for i, r in enumerate(rows)]


class TestMmrSelectExamples:
    def test_first_pick_is_pure_relevance_even_at_lambda_zero(self):
        q = np.array([1.0, 0.0])
        cands = [(0, np.array([0.0, 1.0])), (1, np.array([1.0, 0.1]))]
        assert mmr_select(q, cands, 1, lam=0.0) == [1]

    def test_lambda_zero_prefers_diversity(self):
        # two copies of a query-aligned vector and one off-axis vector:
        # after the aligned pick, lam=0 must jump to the off-axis one
        q = np.array([1.0, 0.0])
        a = np.array([2.0, 0.0])
        b = np.array([1.0, 1.0])
        cands = [(5, a), (9, a.copy()), (2, b)]
        assert mmr_select(q, cands, 3, lam=0.0) == [5, 2, 9]

    def test_lambda_one_is_descending_cosine_with_row_ties(self):
        q = np.array([1.0, 0.0])
        a = np.array([2.0, 0.0])
        b = np.array([1.0, 1.0])
        cands = [(5, a), (9, a.copy()), (2, b)]
        assert mmr_select(q, cands, 3, lam=1.0) == [5, 9, 2]

    def test_duplicate_vector_tie_breaks_to_smaller_row(self):
        rng = np.random.default_rng(0)
        v = rng.normal(size=4)
        cands = [(30, v), (4, v.copy()), (17, rng.normal(size=4))]
        out = mmr_select(rng.normal(size=4), cands, 3, lam=0.5)
        assert out.index(4) < out.index(30)


class TestMmrSelectOracle:
    def test_random_instances_match_reference(self):
        rng = np.random.default_rng(1)
        lams = [0.0, 0.25, 0.5, 0.75, 1.0]
        for trial in range(100):
            n = int(rng.integers(2, 13))
            dim = int(rng.integers(2, 9))
            cands = random_candidates(rng, n, dim, dup_vector=trial % 4 == 0)
            q = rng.normal(size=dim)
            k = int(rng.integers(1, n + 1))
            lam = lams[trial % len(lams)]
            got = mmr_select(q, cands, k, lam)
            want = mmr_reference(
                q, [r for r, _ in cands], [v for _, v in cands], k, lam
            )
            assert got == want, f"trial {trial}: {got} != {want}"

    def test_lambda_one_set_equals_topk_by_cosine(self):
        rng = np.random.default_rng(2)
        for _ in range(25):
            n = int(rng.integers(3, 13))
            cands = random_candidates(rng, n, 5)
            q = rng.normal(size=5)
            k = int(rng.integers(1, n + 1))
            got = mmr_select(q, cands, k, lam=1.0)
            ranked = sorted(cands, key=lambda rv: (-cos_fsum(rv[1], q), rv[0]))
            assert got == [r for r, _ in ranked[:k]]
            # and the sequence itself is descending in cosine
            coss = [cos_fsum(dict(cands)[r], q) for r in got]
            assert all(a >= b - 1e-12 for a, b in zip(coss, coss[1:]))

    def test_scaling_invariance_exact(self):
        rng = np.random.default_rng(3)
        for _ in range(20):
            n = int(rng.integers(2, 13))
            cands = random_candidates(rng, n, 6)
            q = rng.normal(size=6)
            k = int(rng.integers(1, n + 1))
            base = mmr_select(q, cands, k, lam=0.5)
            scaled = [(r, v * 4.0) for r, v in cands]
            assert mmr_select(q * 0.25, scaled, k, lam=0.5) == base
            assert mmr_select(q * 8.0, cands, k, lam=0.25) == mmr_select(
                q, cands, k, lam=0.25
            )


class TestMmrSelectValidation:
    def test_empty_candidates(self):
        with pytest.raises(EmptyData):
            mmr_select(np.ones(2), [], 1, 0.5)

    def test_k_too_large(self):
        cands = [(0, np.ones(2)), (1, np.ones(2) * 2)]
        with pytest.raises(KTooLarge) as e:
            mmr_select(np.ones(2), cands, 3, 0.5)
        assert e.value.k == 3 and e.value.available == 2

    def test_k_zero(self):
        with pytest.raises(ValueError):
            mmr_select(np.ones(2), [(0, np.ones(2))], 0, 0.5)

    def test_lambda_out_of_range(self):
        cands = [(0, np.ones(2))]
        with pytest.raises(ValueError):
            mmr_select(np.ones(2), cands, 1, -0.01)
        with pytest.raises(ValueError):
            mmr_select(np.ones(2), cands, 1, 1.01)

    def test_zero_candidate_names_row(self):
        cands = [(3, np.ones(2)), (11, np.zeros(2))]
        with pytest.raises(ZeroVector) as e:
            mmr_select(np.ones(2), cands, 1, 0.5)
        assert "11" in str(e.value)

    def test_zero_query(self):
        with pytest.raises(ZeroVector):
            mmr_select(np.zeros(2), [(0, np.ones(2))], 1, 0.5)

    def test_dim_mismatch(self):
        with pytest.raises(DimMismatch):
            mmr_select(np.ones(3), [(0, np.ones(2))], 1, 0.5)

    def test_mmr_config_validation(self):
        with pytest.raises(ValueError):
            MmrConfig(lam=1.5)
        with pytest.raises(ValueError):
            MmrConfig(lam=0.5, candidate_multiplier=1)


class TestMmrInsideRetrieve:
    PARAMS = HnswParams()

    def test_single_query_lambda_one_matches_plain_set_on_unit_vectors(self):
        # on unit-norm vectors euclidean order == cosine order, so lam=1 MMR
        # must select exactly the plain nearest-neighbor set
        rng = np.random.default_rng(4)
        pool = make_pool(rng, 120, 6, dup_fraction=0.0)
        pool.vectors[:] = pool.vectors / np.linalg.norm(
            pool.vectors, axis=1, keepdims=True
        )
        idx = build_index(pool.view(), self.PARAMS)
        q = rng.normal(size=(1, 6))
        plain = retrieve(idx, pool, q, RetrievalConfig(total_r=15))
        diverse = retrieve(
            idx, pool, q, RetrievalConfig(total_r=15, mmr=MmrConfig(lam=1.0))
        )
        assert set(diverse.rows()) == set(plain.rows())

    def test_identical_queries_grow_until_satisfied(self):
        rng = np.random.default_rng(5)
        pool = make_pool(rng, 60, 4, dup_fraction=0.0)
        idx = build_index(pool.view(), self.PARAMS)
        q = rng.normal(size=4)
        got = retrieve(
            idx,
            pool,
            np.stack([q, q, q, q]),
            RetrievalConfig(total_r=10, mmr=MmrConfig(lam=0.5)),
        )
        texts = got.texts()
        assert len(texts) == 10
        assert len(set(texts)) == 10

    def test_output_ordered_by_min_distance(self):
        rng = np.random.default_rng(6)
        pool = make_pool(rng, 90, 4)
        idx = build_index(pool.view(), self.PARAMS)
        queries = rng.normal(size=(3, 4))
        got = retrieve(
            idx, pool, queries, RetrievalConfig(total_r=12, mmr=MmrConfig(lam=0.3))
        )
        from nnpool.metrics import euclidean

        keys = [
            (min(euclidean(pool.vectors[it.row], qv) for qv in queries), it.row)
            for it in got.items
        ]
        assert keys == sorted(keys)

    def test_zero_vector_in_pool_surfaces(self):
        rng = np.random.default_rng(7)
        pool = make_pool(rng, 40, 3, dup_fraction=0.0)
        pool.vectors[5] = 0.0
        idx = build_index(pool.view(), self.PARAMS)
        q = pool.vectors[5:6].astype(np.float64) + 0.01
        with pytest.raises(ZeroVector):
            retrieve(
                idx, pool, q, RetrievalConfig(total_r=30, mmr=MmrConfig(lam=0.5))
            )
