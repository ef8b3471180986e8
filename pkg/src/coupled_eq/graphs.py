"""Tanner-graph construction: PEG for irregular block codes, edge-spread
coupling for terminated SC-LDPC chains, alist serialization.

Graphs are immutable once built: edge arrays sorted CN-major with a
per-VN transpose view, plus degree arrays.
"""

from dataclasses import dataclass, field

import numpy as np

from .ensembles import CoupledEnsembleSpec, edge_to_node


@dataclass(frozen=True)
class SparseParityCheck:
    n: int
    m_rows: int
    edge_vn: np.ndarray      # (E,) int32, CN-major order
    edge_cn: np.ndarray      # (E,) int32, nondecreasing
    vn_deg: np.ndarray = field(init=False)
    cn_deg: np.ndarray = field(init=False)

    def __post_init__(self):
        vn_deg = np.bincount(self.edge_vn, minlength=self.n).astype(np.int32)
        cn_deg = np.bincount(self.edge_cn, minlength=self.m_rows).astype(np.int32)
        for name, arr in (("vn_deg", vn_deg), ("cn_deg", cn_deg)):
            arr.flags.writeable = False
            object.__setattr__(self, name, arr)

    @property
    def n_edges(self):
        return len(self.edge_vn)

    def cn_rows(self):
        """Iterate (cn, sorted VN index array) per check node."""
        order = np.argsort(self.edge_cn, kind="stable")
        ecn = self.edge_cn[order]
        evn = self.edge_vn[order]
        starts = np.searchsorted(ecn, np.arange(self.m_rows + 1))
        for c in range(self.m_rows):
            yield c, np.sort(evn[starts[c]:starts[c + 1]])

    def check_word(self, v):
        """Syndrome weight of a candidate word (number of unsatisfied CNs)."""
        v = np.asarray(v)
        par = np.bincount(self.edge_cn, weights=v[self.edge_vn].astype(np.float64),
                          minlength=self.m_rows)
        return int(np.sum(par.astype(np.int64) & 1))


def _make_graph(edge_vn, edge_cn, n, m_rows):
    edge_vn = np.asarray(edge_vn, dtype=np.int32)
    edge_cn = np.asarray(edge_cn, dtype=np.int32)
    order = np.lexsort((edge_vn, edge_cn))
    edge_vn = np.ascontiguousarray(edge_vn[order])
    edge_cn = np.ascontiguousarray(edge_cn[order])
    pairs = edge_cn.astype(np.int64) * n + edge_vn
    if len(np.unique(pairs)) != len(pairs):
        raise ValueError("double edge in constructed graph")
    edge_vn.flags.writeable = False
    edge_cn.flags.writeable = False
    return SparseParityCheck(n=n, m_rows=m_rows, edge_vn=edge_vn, edge_cn=edge_cn)


@dataclass(frozen=True)
class CoupledGraphLayout:
    spec: CoupledEnsembleSpec
    position_of_vn: np.ndarray    # (n,) int32, positions 1..L
    position_of_cn: np.ndarray    # (m_rows,) int32, positions 1..L+m


def _apportion(total, fractions):
    """Largest-remainder split of `total` items among keys by fraction."""
    keys = sorted(fractions)
    quotas = {k: total * fractions[k] for k in keys}
    counts = {k: int(np.floor(quotas[k])) for k in keys}
    short = total - sum(counts.values())
    by_rem = sorted(keys, key=lambda k: (counts[k] - quotas[k], k))
    for k in by_rem[:short]:
        counts[k] += 1
    return {k: c for k, c in counts.items() if c > 0}


def peg_degree_sequences(dd, n):
    """Integer VN/CN degree targets for a PEG graph of length n.

    VN counts apportion the node-perspective distribution of dd.lam; CN
    counts apportion rho's node perspective and are then repaired by +-1
    bumps so both sides carry the same edge total.
    """
    Lnode = edge_to_node(dd.lam)
    vn_counts = _apportion(n, Lnode)
    vn_degs = np.repeat(sorted(vn_counts), [vn_counts[d] for d in sorted(vn_counts)])
    E = int(vn_degs.sum())

    lam_int = sum(f / i for i, f in dd.lam.items())
    rho_int = sum(f / j for j, f in dd.rho.items())
    m_rows = int(round(n * rho_int / lam_int))
    rho_node = {j: (f / j) / rho_int for j, f in dd.rho.items()}
    cn_counts = _apportion(m_rows, rho_node)
    cn_degs = np.repeat(sorted(cn_counts), [cn_counts[d] for d in sorted(cn_counts)])
    cn_degs = cn_degs.astype(np.int64)
    deficit = E - int(cn_degs.sum())
    if abs(deficit) > len(cn_degs):
        raise ValueError(f"infeasible degree sequence: edge deficit {deficit} on {len(cn_degs)} CNs")
    step = 1 if deficit > 0 else -1
    i = 0 if deficit > 0 else len(cn_degs) - 1
    while deficit != 0:
        cn_degs[i] += step
        deficit -= step
        i += step
    if (cn_degs < 1).any():
        raise ValueError("infeasible degree sequence: CN degree dropped below 1")
    return vn_degs.astype(np.int64), cn_degs


def peg_construct(dd, n, seed=0):
    """Progressive edge growth with capacity-limited CNs.

    Deterministic regardless of seed (the greedy rule plus fixed tie-breaks
    leave no random choices); the seed parameter exists for interface
    uniformity with the coupled constructor. VNs are processed in descending
    degree order; each new edge attaches to a non-neighbor CN at maximal BFS
    depth from the VN (unreached CNs count as infinitely deep), ties broken
    by lowest current degree, then lowest index, skipping CNs already at
    their target degree. When only neighbors or depth<=1 CNs have capacity
    left, an existing edge is relocated to open a deeper connection instead
    of accepting a short cycle.
    """
    vn_degs, cn_degs = peg_degree_sequences(dd, n)
    m_rows = len(cn_degs)
    adj_vn = [set() for _ in range(n)]
    adj_cn = [set() for _ in range(m_rows)]
    cur_deg = np.zeros(m_rows, dtype=np.int64)

    edge_vn, edge_cn = [], []

    def connect(v, c):
        adj_vn[v].add(c)
        adj_cn[c].add(v)
        cur_deg[c] += 1
        edge_vn.append(v)
        edge_cn.append(c)

    for v in np.argsort(-vn_degs, kind="stable"):
        v = int(v)
        for _ in range(vn_degs[v]):
            depth = _bfs_cn_depth(v, adj_vn, adj_cn, m_rows)
            open_cn = np.flatnonzero(cur_deg < cn_degs)
            open_cn = open_cn[depth[open_cn] != 0]      # never rejoin a neighbor
            d = depth[open_cn]
            unreached = open_cn[d < 0]
            if len(unreached):
                cand, best = unreached, -1
            elif len(open_cn):
                best = int(d.max())
                cand = open_cn[d == best]
            else:
                cand, best = open_cn, 1
            if len(cand) and (best < 0 or best >= 2):
                c = int(cand[np.lexsort((cand, cur_deg[cand]))[0]])
                connect(v, c)
                continue
            # end game: capacity only remains on neighbors or at depth<=1;
            # relocate an edge (u, c2) -> (u, c) to free a deep CN c2 for v
            moved = _relocate_for(v, depth, adj_vn, adj_cn, cur_deg, cn_degs,
                                  edge_vn, edge_cn)
            if moved is not None:
                connect(v, moved)
            elif len(cand):
                c = int(cand[np.lexsort((cand, cur_deg[cand]))[0]])
                connect(v, c)
            else:
                raise ValueError("PEG ran out of feasible CNs")
    return _make_graph(edge_vn, edge_cn, n, m_rows)


def _relocate_for(v, depth, adj_vn, adj_cn, cur_deg, cn_degs, edge_vn, edge_cn):
    """Free a deep non-neighbor CN of v by moving one of its edges elsewhere.

    Picks c2 not adjacent to v (deepest first), one of its VNs u, and an
    open CN c not adjacent to u; prefers moves that give u no new short
    cycle. Returns c2 after rewiring, or None."""
    m_rows = len(adj_cn)
    order = sorted((c2 for c2 in range(m_rows) if depth[c2] != 0),
                   key=lambda c2: (depth[c2] >= 0, -depth[c2], c2))
    open_cn = [c for c in range(m_rows) if cur_deg[c] < cn_degs[c]]
    fallback = None
    for c2 in order:
        for u in sorted(adj_cn[c2]):
            for c in open_cn:
                if c == c2 or u in adj_cn[c]:
                    continue
                clean = all(len(adj_cn[c] & adj_cn[cc]) == 0
                            for cc in adj_vn[u] if cc != c2)
                if not clean and fallback is None:
                    fallback = (u, c2, c)
                if clean:
                    _move_edge(u, c2, c, adj_vn, adj_cn, cur_deg, edge_vn, edge_cn)
                    return c2
        if fallback is not None:
            break
    if fallback is not None:
        u, c2, c = fallback
        _move_edge(u, c2, c, adj_vn, adj_cn, cur_deg, edge_vn, edge_cn)
        return c2
    return None


def _move_edge(u, c_old, c_new, adj_vn, adj_cn, cur_deg, edge_vn, edge_cn):
    for i in range(len(edge_vn) - 1, -1, -1):
        if edge_vn[i] == u and edge_cn[i] == c_old:
            edge_cn[i] = c_new
            break
    else:
        raise AssertionError("edge to relocate not found")
    adj_vn[u].discard(c_old)
    adj_vn[u].add(c_new)
    adj_cn[c_old].discard(u)
    adj_cn[c_new].add(u)
    cur_deg[c_old] -= 1
    cur_deg[c_new] += 1


def _bfs_cn_depth(v, adj_vn, adj_cn, m_rows):
    """BFS depth of every CN from VN v in the current graph; -1 if unreached."""
    depth = np.full(m_rows, -1, dtype=np.int64)
    seen_vn = {v}
    frontier_cn = set(adj_vn[v])
    d = 0
    while frontier_cn:
        for c in frontier_cn:
            depth[c] = d
        next_vn = set()
        for c in frontier_cn:
            next_vn.update(adj_cn[c])
        next_vn -= seen_vn
        seen_vn |= next_vn
        nxt = set()
        for u in next_vn:
            nxt.update(adj_vn[u])
        frontier_cn = {c for c in nxt if depth[c] < 0}
        d += 1
    return depth


def sc_ldpc_construct(spec, seed=0):
    """Terminated SC-LDPC chain by uniform balanced edge spreading.

    VN index order is position-major (N per position t=1..L); CN positions
    run 1..L+m with M = dv N / dc checks per position before empty boundary
    checks are dropped. Each VN splits its dv edges over offsets 0..m
    (balanced within +-1, remainder offsets dealt per position with fixed
    per-offset totals); each (position, offset) bundle lands on a
    round-robin socket slice at the target CN position via a seeded
    permutation. Double edges are repaired by within-position pair swaps.
    """
    rng = np.random.default_rng(seed)
    dv, dc, N, L, m = spec.dv, spec.dc, spec.N, spec.L, spec.m
    M = spec.M
    n = N * L
    base, rem = divmod(dv, m + 1)

    # per-VN edge count toward each offset 0..m: base everywhere plus rem
    # distinct remainder offsets per VN. Remainder offsets are dealt so that
    # every position realizes the same per-offset totals q_k; identical
    # column sums across positions make every interior CN position receive
    # exactly N dv edges, hence exactly degree dc after round-robin sockets.
    offs = np.full((n, m + 1), base, dtype=np.int32)
    if rem:
        q = np.full(m + 1, (N * rem) // (m + 1), dtype=np.int64)
        extra = (N * rem) % (m + 1)
        if extra:
            q[rng.choice(m + 1, size=extra, replace=False)] += 1
        deal = np.repeat(np.arange(m + 1), q)       # length N*rem
        rows = np.reshape(deal, (rem, N)).T          # row i: offsets i, i+N, ...
        for t in range(L):
            perm = rng.permutation(N)
            offs[t * N + perm[:, None], rows] = base + 1

    # bundle (t, k): VN slots at position t (1..L) aiming at CN position t+k
    edge_vn = []
    edge_cn = []
    for tau in range(1, L + m + 1):
        slots = []
        for k in range(m, -1, -1):
            t = tau - k
            if not 1 <= t <= L:
                continue
            vstart = (t - 1) * N
            counts = offs[vstart:vstart + N, k]
            slots.append((k, np.repeat(np.arange(vstart, vstart + N, dtype=np.int64), counts)))
        total = sum(len(s) for _, s in slots)
        # sockets interleaved round-robin over this position's M CNs so every
        # boundary CN keeps at least one edge whenever total >= M
        sockets = (tau - 1) * M + np.arange(total, dtype=np.int64) % M
        ofs = 0
        for k, vns in sorted(slots):
            sl = sockets[ofs:ofs + len(vns)]
            perm = rng.permutation(len(vns))
            edge_vn.append(vns)
            edge_cn.append(sl[perm])
            ofs += len(vns)
    edge_vn = np.concatenate(edge_vn)
    edge_cn = np.concatenate(edge_cn)
    edge_vn, edge_cn = _repair_double_edges(edge_vn, edge_cn, M, rng)

    # drop CNs that received no edge (possible at extreme boundary positions)
    used = np.zeros((L + m) * M, dtype=bool)
    used[edge_cn] = True
    remap = np.cumsum(used) - 1
    m_rows = int(used.sum())
    graph = _make_graph(edge_vn, remap[edge_cn], n, m_rows)

    pos_vn = (np.arange(n, dtype=np.int32) // N + 1).astype(np.int32)
    pos_cn_full = (np.arange((L + m) * M, dtype=np.int32) // M + 1).astype(np.int32)
    pos_cn = pos_cn_full[used]
    pos_vn.flags.writeable = False
    pos_cn.flags.writeable = False
    layout = CoupledGraphLayout(spec=spec, position_of_vn=pos_vn, position_of_cn=pos_cn)
    _check_layout(graph, layout)
    return graph, layout


def _repair_double_edges(edge_vn, edge_cn, M, rng, max_tries=100):
    # resampling an occupied socket amounts to swapping CN targets with the
    # edge holding it; partners come from the same CN position so the swap
    # cannot move either edge outside its coupling window
    from collections import Counter

    n = int(edge_vn.max()) + 1 if len(edge_vn) else 0
    keys = edge_cn.astype(np.int64) * n + edge_vn
    mult = Counter(keys.tolist())
    # keep the first occurrence of each pair, repair the rest
    seen = set()
    offenders = []
    for i, k in enumerate(keys.tolist()):
        if mult[k] > 1 and k in seen:
            offenders.append(i)
        seen.add(k)
    if offenders:
        pos = edge_cn // M
        order = np.argsort(pos, kind="stable")
        starts = np.searchsorted(pos[order], np.arange(pos.max() + 2))
    for i in offenders:
        peers = order[starts[pos[i]]:starts[pos[i] + 1]]
        fixed = False
        for _ in range(max_tries):
            j = int(peers[rng.integers(len(peers))])
            if j == i:
                continue
            # swap CN targets of edges i and j
            a = int(edge_cn[i]) * n + int(edge_vn[j])
            b = int(edge_cn[j]) * n + int(edge_vn[i])
            if a == b or mult[a] > 0 or mult[b] > 0:
                continue
            mult[int(edge_cn[i]) * n + int(edge_vn[i])] -= 1
            mult[int(edge_cn[j]) * n + int(edge_vn[j])] -= 1
            mult[a] += 1
            mult[b] += 1
            edge_cn[i], edge_cn[j] = edge_cn[j], edge_cn[i]
            fixed = True
            break
        if not fixed:
            raise ValueError("double-edge repair failed")
    return edge_vn, edge_cn


def _check_layout(graph, layout):
    m = layout.spec.m
    tv = layout.position_of_vn[graph.edge_vn]
    tc = layout.position_of_cn[graph.edge_cn]
    off = tc.astype(np.int64) - tv.astype(np.int64)
    if off.min() < 0 or off.max() > m:
        raise AssertionError("edge violates the coupling locality window")
    if (graph.vn_deg != layout.spec.dv).any():
        raise AssertionError("VN degree mismatch")
    interior = (layout.position_of_cn > m) & (layout.position_of_cn <= layout.spec.L)
    if (graph.cn_deg[interior] != layout.spec.dc).any():
        raise AssertionError("interior CN degree mismatch")
    if (graph.cn_deg < 1).any():
        raise AssertionError("zero-degree CN survived construction")


def write_alist(graph, path):
    """Standard alist text serialization (1-based indices, zero padding)."""
    by_vn = [[] for _ in range(graph.n)]
    by_cn = [[] for _ in range(graph.m_rows)]
    for v, c in zip(graph.edge_vn.tolist(), graph.edge_cn.tolist()):
        by_vn[v].append(c + 1)
        by_cn[c].append(v + 1)
    dvmax = int(graph.vn_deg.max())
    dcmax = int(graph.cn_deg.max())
    with open(path, "w") as f:
        f.write(f"{graph.n} {graph.m_rows}\n{dvmax} {dcmax}\n")
        f.write(" ".join(str(d) for d in graph.vn_deg.tolist()) + "\n")
        f.write(" ".join(str(d) for d in graph.cn_deg.tolist()) + "\n")
        for lst in by_vn:
            lst = sorted(lst) + [0] * (dvmax - len(lst))
            f.write(" ".join(map(str, lst)) + "\n")
        for lst in by_cn:
            lst = sorted(lst) + [0] * (dcmax - len(lst))
            f.write(" ".join(map(str, lst)) + "\n")


def read_alist(path):
    with open(path) as f:
        tokens = f.read().split("\n")
    head = tokens[0].split()
    n, m_rows = int(head[0]), int(head[1])
    vn_deg = [int(x) for x in tokens[2].split()]
    edge_vn, edge_cn = [], []
    for v in range(n):
        for c in tokens[4 + v].split():
            c = int(c)
            if c:
                edge_vn.append(v)
                edge_cn.append(c - 1)
    return _make_graph(edge_vn, edge_cn, n, m_rows)


def write_layout(layout, path):
    """Sidecar position maps for a coupled graph."""
    s = layout.spec
    with open(path, "w") as f:
        f.write("coupled-layout 1\n")
        f.write(f"{s.dv} {s.dc} {s.N} {s.L} {s.m}\n")
        f.write(" ".join(map(str, layout.position_of_vn.tolist())) + "\n")
        f.write(" ".join(map(str, layout.position_of_cn.tolist())) + "\n")


def read_layout(path):
    with open(path) as f:
        lines = f.read().splitlines()
    if lines[0].split()[0] != "coupled-layout":
        raise ValueError("not a coupled-layout file")
    dv, dc, N, L, m = map(int, lines[1].split())
    spec = CoupledEnsembleSpec(dv=dv, dc=dc, N=N, L=L, m=m)
    pos_vn = np.array([int(x) for x in lines[2].split()], dtype=np.int32)
    pos_cn = np.array([int(x) for x in lines[3].split()], dtype=np.int32)
    pos_vn.flags.writeable = False
    pos_cn.flags.writeable = False
    return CoupledGraphLayout(spec=spec, position_of_vn=pos_vn, position_of_cn=pos_cn)
