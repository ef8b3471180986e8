"""Time the compiled kernels against the pure-numpy fallback.

Runs the three hot loops (trellis soft-output pass, trellis evidence
pass, one decoder message round) on realistic workloads with both
backends and prints the per-call times and speedups.

Usage: python3 benchmarks/bench_kernels.py [--symbols N] [--repeats K]
"""

import argparse
import time

import numpy as np

from coupled_eq._kernels import fallback
from coupled_eq.channel import standard_channel, transmit
from coupled_eq.ensembles import catalog
from coupled_eq.graphs import peg_construct
from coupled_eq.llrops import LLR_CAP
from coupled_eq.trellis import build_trellis

try:
    from coupled_eq._kernels import _corex
except ImportError:
    _corex = None


def best_of(fn, repeats):
    times = []
    for _ in range(repeats):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return min(times)


def make_cases(n_sym, seed):
    rng = np.random.default_rng(seed)
    cases = []

    for name in ("ch2", "ch3"):
        h = standard_channel(name)
        tr = build_trellis(h)
        bits = rng.integers(0, 2, n_sym, dtype=np.uint8)
        y, _ = transmit(bits, h, 0.6, rng)
        la = np.ascontiguousarray(
            rng.normal(0.0, 4.0, n_sym).clip(-LLR_CAP, LLR_CAP))

        def soft(impl, y=y, la=la, tr=tr):
            impl.bcjr_extrinsic(y, la, 0.36, tr.levels, tr.next_state,
                                tr.prev_state, tr.prev_bit, 0, True, LLR_CAP)

        def evidence(impl, y=y, tr=tr):
            impl.bcjr_forward_logz(y, 0.36, tr.levels, tr.next_state,
                                   tr.prev_state, tr.prev_bit, 0)

        cases.append(("trellis soft pass %s" % name, soft))
        cases.append(("trellis evidence %s" % name, evidence))

    graph = peg_construct(catalog("regular-5-10"), n_sym, seed=0)
    det = np.ascontiguousarray(
        rng.normal(0.0, 4.0, graph.n).clip(-LLR_CAP, LLR_CAP))
    m_cv = np.zeros(graph.n_edges)

    def decode(impl, graph=graph, m_cv=m_cv, det=det):
        impl.bp_iterate(graph.edge_vn, graph.edge_cn, m_cv.copy(), det,
                        graph.m_rows, LLR_CAP)

    cases.append(("decoder round n=%d" % graph.n, decode))
    return cases


def main(argv=None):
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--symbols", type=int, default=20_000,
                        help="symbols per trellis pass / code length")
    parser.add_argument("--repeats", type=int, default=5,
                        help="repetitions, best time kept")
    parser.add_argument("--seed", type=int, default=0)
    args = parser.parse_args(argv)

    if _corex is None:
        print("compiled extension not importable; timing fallback only")
    cases = make_cases(args.symbols, args.seed)

    width = max(len(name) for name, _ in cases)
    header = "%-*s %12s %12s %9s" % (width, "kernel", "fallback", "compiled",
                                     "speedup")
    print(header)
    print("-" * len(header))
    for name, run in cases:
        t_fb = best_of(lambda: run(fallback), args.repeats)
        if _corex is None:
            print("%-*s %10.2f ms %12s %9s" % (width, name, 1e3 * t_fb,
                                               "-", "-"))
            continue
        t_cx = best_of(lambda: run(_corex), args.repeats)
        print("%-*s %10.2f ms %10.2f ms %8.1fx" % (
            width, name, 1e3 * t_fb, 1e3 * t_cx, t_fb / t_cx))


if __name__ == "__main__":
    main()
