import subprocess
import sys

import numpy as np
import pytest

from coupled_eq._kernels import fallback
from coupled_eq.channel import standard_channel
from coupled_eq.ensembles import DegreeDistribution
from coupled_eq.graphs import peg_construct
from coupled_eq.trellis import build_trellis

_corex = pytest.importorskip("coupled_eq._kernels._corex",
                             reason="compiled backend not built")


def _bcjr_args(name, n, seed, final_known=True):
    h = standard_channel(name)
    tr = build_trellis(h)
    rng = np.random.default_rng(seed)
    y = rng.normal(0, 1, size=n + h.memory)
    la = rng.normal(0, 2, size=n)
    return (y, la, 0.8 * 0.8, tr.levels, tr.next_state, tr.prev_state,
            tr.prev_bit, 0, final_known, 50.0)


@pytest.mark.parametrize("name", ["ch1", "ch2", "ch3"])
@pytest.mark.parametrize("final_known", [True, False])
def test_bcjr_backends_agree(name, final_known):
    args = _bcjr_args(name, 200, 3, final_known)
    le_f, ev_f = fallback.bcjr_extrinsic(*args)
    le_c, ev_c = _corex.bcjr_extrinsic(*args)
    np.testing.assert_allclose(le_c, le_f, atol=1e-10)
    np.testing.assert_allclose(ev_c, ev_f, atol=1e-8)


@pytest.mark.parametrize("name", ["ch1", "ch3"])
def test_forward_logz_backends_agree(name):
    y, la, s2, lev, ns, ps, pb, init, fk, cap = _bcjr_args(name, 300, 4)
    zf = fallback.bcjr_forward_logz(y, s2, lev, ns, ps, pb, init)
    zc = _corex.bcjr_forward_logz(y, s2, lev, ns, ps, pb, init)
    assert zc == pytest.approx(zf, abs=1e-8)


def test_bp_backends_agree():
    g = peg_construct(DegreeDistribution.regular(3, 6), 120)
    rng = np.random.default_rng(5)
    det = rng.normal(0, 3, size=g.n)
    m0 = rng.normal(0, 1, size=g.n_edges)
    mf = m0.copy()
    mc = m0.copy()
    for _ in range(10):
        fallback.bp_iterate(g.edge_vn, g.edge_cn, mf, det, g.m_rows, 50.0)
        _corex.bp_iterate(g.edge_vn, g.edge_cn, mc, det, g.m_rows, 50.0)
        np.testing.assert_allclose(mc, mf, atol=1e-10)


def test_force_fallback_env_switch():
    code = ("import coupled_eq; import coupled_eq._kernels as k; "
            "print(k.backend_name(), k.COMPILED)")
    out = subprocess.run(
        [sys.executable, "-c", code],
        capture_output=True, text=True,
        env={"COUPLED_EQ_FORCE_FALLBACK": "1", "PATH": "/usr/bin:/bin"})
    assert out.returncode == 0, out.stderr
    assert out.stdout.split() == ["fallback", "False"]


def test_default_backend_is_compiled():
    import coupled_eq
    assert coupled_eq.backend_name() == "compiled"
    assert coupled_eq.COMPILED
