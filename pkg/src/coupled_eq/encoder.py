"""Systematic GF(2) encoding from a sparse parity-check matrix.

Rows are packed 64 bits per word. A one-time bucketed Gaussian elimination
brings H to row-echelon form (pivot = lowest set bit per row, so fill-in
stays inside the band of banded matrices); encoding places information bits
on the pivot-free columns and back-substitutes the pivot columns right to
left. The factorization is cached on the encoder object.
"""

import numpy as np


def _pack_rows(graph):
    W = (graph.n + 63) // 64
    rows = np.zeros((graph.m_rows, W), dtype=np.uint64)
    c = graph.edge_cn.astype(np.int64)
    v = graph.edge_vn.astype(np.int64)
    np.bitwise_xor.at(rows, (c, v >> 6), np.uint64(1) << (v & 63).astype(np.uint64))
    return rows


def _lowest_bit(row):
    w = np.flatnonzero(row)
    if not len(w):
        return -1
    j = int(w[0])
    x = int(row[j])
    return (j << 6) + (x & -x).bit_length() - 1


class Gf2Encoder:
    def __init__(self, graph):
        self.n = graph.n
        rows = _pack_rows(graph)
        m_rows, W = rows.shape
        self.W = W

        # bucket rows by pivot (lowest set bit); eliminate collisions
        pivot_row = np.full(self.n, -1, dtype=np.int64)
        lb = [_lowest_bit(rows[r]) for r in range(m_rows)]
        from collections import deque
        pending = deque(r for r in range(m_rows) if lb[r] >= 0)
        while pending:
            r = pending.popleft()
            col = lb[r]
            if col < 0:
                continue
            p = pivot_row[col]
            if p < 0:
                pivot_row[col] = r
                continue
            rows[r] ^= rows[p]
            lb[r] = _lowest_bit(rows[r])
            if lb[r] >= 0:
                pending.append(r)

        self.pivot_cols = np.flatnonzero(pivot_row >= 0).astype(np.int64)
        self.rank = len(self.pivot_cols)
        self.info_cols = np.setdiff1d(np.arange(self.n, dtype=np.int64), self.pivot_cols)
        self.k = self.n - self.rank
        # pivot rows ordered by descending pivot column for back-substitution;
        # store word spans to keep per-row work proportional to the band
        order = self.pivot_cols[::-1]
        self.sub_rows = []
        for col in order:
            row = rows[pivot_row[col]]
            w = np.flatnonzero(row)
            self.sub_rows.append((int(col), int(w[0]), row[w[0]:w[-1] + 1].copy()))

    @property
    def rate(self):
        return self.k / self.n

    def encode(self, u):
        """Codeword v with H v = 0; u fills the systematic (pivot-free) columns."""
        u = np.asarray(u)
        if len(u) != self.k:
            raise ValueError(f"need {self.k} information bits, got {len(u)}")
        vw = np.zeros(self.W, dtype=np.uint64)
        cols = self.info_cols[u.astype(bool)]
        np.bitwise_xor.at(vw, cols >> 6, np.uint64(1) << (cols & 63).astype(np.uint64))
        for col, w0, seg in self.sub_rows:
            par = int(np.bitwise_count(seg & vw[w0:w0 + len(seg)]).sum()) & 1
            # row's pivot bit itself is clear in vw here, so par is the value
            if par:
                vw[col >> 6] ^= np.uint64(1) << np.uint64(col & 63)
        v = np.unpackbits(vw.view(np.uint8), bitorder="little")[: self.n]
        return v.astype(np.uint8)
