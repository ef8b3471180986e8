import itertools

import numpy as np
import pytest

from coupled_eq.encoder import Gf2Encoder
from coupled_eq.ensembles import CoupledEnsembleSpec, DegreeDistribution
from coupled_eq.graphs import SparseParityCheck, peg_construct, sc_ldpc_construct


def graph_from_rows(rows, n):
    edge_vn, edge_cn = [], []
    for c, cols in enumerate(rows):
        for v in cols:
            edge_vn.append(v)
            edge_cn.append(c)
    order = np.lexsort((edge_vn, edge_cn))
    return SparseParityCheck(
        n=n, m_rows=len(rows),
        edge_vn=np.asarray(edge_vn, dtype=np.int32)[order],
        edge_cn=np.asarray(edge_cn, dtype=np.int32)[order])


def test_hand_matrix_matches_exhaustive_null_space():
    rows = [(0, 1, 2, 3), (2, 3, 4, 5), (4, 5, 6, 7), (0, 7)]
    g = graph_from_rows(rows, 8)
    H = np.zeros((4, 8), dtype=np.int64)
    for c, cols in enumerate(rows):
        H[c, list(cols)] = 1
    null = {tuple(w) for w in itertools.product((0, 1), repeat=8)
            if not (H @ w % 2).any()}
    enc = Gf2Encoder(g)
    assert enc.rank == 4
    assert enc.k == 4
    seen = set()
    for u in itertools.product((0, 1), repeat=enc.k):
        v = enc.encode(np.array(u))
        assert tuple(v.tolist()) in null
        seen.add(tuple(v.tolist()))
    assert seen == null


def test_systematic_bits_pass_through():
    g = peg_construct(DegreeDistribution.regular(3, 6), 48)
    enc = Gf2Encoder(g)
    rng = np.random.default_rng(0)
    u = rng.integers(2, size=enc.k).astype(np.uint8)
    v = enc.encode(u)
    np.testing.assert_array_equal(v[enc.info_cols], u)


def test_random_words_satisfy_all_checks():
    g = peg_construct(DegreeDistribution.regular(3, 6), 96)
    enc = Gf2Encoder(g)
    rng = np.random.default_rng(1)
    for _ in range(1000):
        v = enc.encode(rng.integers(2, size=enc.k))
        assert g.check_word(v) == 0


def test_zero_maps_to_zero_and_linearity():
    g = peg_construct(DegreeDistribution.regular(3, 6), 48)
    enc = Gf2Encoder(g)
    np.testing.assert_array_equal(enc.encode(np.zeros(enc.k, dtype=int)), 0)
    rng = np.random.default_rng(2)
    a = rng.integers(2, size=enc.k)
    b = rng.integers(2, size=enc.k)
    va, vb, vab = enc.encode(a), enc.encode(b), enc.encode(a ^ b)
    np.testing.assert_array_equal(vab, va ^ vb)


def test_coupled_graph_encoding():
    spec = CoupledEnsembleSpec(dv=3, dc=6, N=30, L=5, m=1)
    g, _ = sc_ldpc_construct(spec, seed=0)
    enc = Gf2Encoder(g)
    # terminated chain: rate between the coupled value and the block value
    assert 1 - spec.dv / spec.dc * (spec.L + spec.m) / spec.L - 1e-9 <= enc.rate <= 0.5
    rng = np.random.default_rng(3)
    for _ in range(50):
        v = enc.encode(rng.integers(2, size=enc.k))
        assert g.check_word(v) == 0


def test_rank_deficient_matrix_grows_k():
    # duplicate row adds no rank: k = n - rank stays 5 on 8 columns
    rows = [(0, 1, 2), (2, 3, 4), (0, 1, 2), (5, 6, 7)]
    g = graph_from_rows(rows, 8)
    enc = Gf2Encoder(g)
    assert enc.rank == 3
    assert enc.k == 5
    rng = np.random.default_rng(4)
    for _ in range(20):
        assert g.check_word(enc.encode(rng.integers(2, size=5))) == 0


def test_encode_rejects_wrong_length():
    g = peg_construct(DegreeDistribution.regular(3, 6), 24)
    enc = Gf2Encoder(g)
    with pytest.raises(ValueError):
        enc.encode(np.zeros(enc.k + 1, dtype=int))
