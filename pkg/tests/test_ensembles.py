import numpy as np
import pytest

from coupled_eq.ensembles import (CODE_CATALOG, CoupledEnsembleSpec,
                                  DegreeDistribution, catalog,
                                  coupled_design_rate, design_rate,
                                  edge_to_node, format_degree_file,
                                  node_to_edge, parse_degree_file, validate)


def test_validate_catalog_entries():
    for name, dd in CODE_CATALOG.items():
        assert validate(dd) == "ok", name


def test_validate_regular():
    assert validate(DegreeDistribution(lam={3: 1.0}, rho={6: 1.0})) == "ok"


def test_validate_reports_bad_sum():
    report = validate(DegreeDistribution(lam={2: 0.5, 3: 0.4}, rho={6: 1.0}))
    assert "lambda sums to 0.9" in report


def test_validate_reports_degree_below_two():
    report = validate(DegreeDistribution(lam={1: 1.0}, rho={6: 1.0}))
    assert "degree 1" in report


def test_design_rate_regular():
    assert design_rate(DegreeDistribution.regular(5, 10)) == pytest.approx(0.5)


def test_design_rate_bcjr_ch1_hand_sums():
    # hand sums over the catalog columns: sum lam_i/i = 0.29026,
    # sum rho_j/j = 0.14516, so R = 1 - 0.14516/0.29026
    dd = catalog("bcjr-ch1")
    lam_int = sum(f / i for i, f in dd.lam.items())
    rho_int = sum(f / j for j, f in dd.rho.items())
    assert lam_int == pytest.approx(0.29026, abs=2e-5)
    assert rho_int == pytest.approx(0.14516, abs=2e-5)
    assert design_rate(dd) == pytest.approx(0.5, abs=0.001)


@pytest.mark.parametrize("name", sorted(CODE_CATALOG))
def test_design_rate_catalog_near_half(name):
    # the lmmse-ch3 numbers work out visibly below the 1/2 design target
    target = 0.4840 if name == "lmmse-ch3" else 0.5
    assert design_rate(catalog(name)) == pytest.approx(target, abs=0.002)


def test_design_rate_rejects_invalid():
    with pytest.raises(ValueError):
        design_rate(DegreeDistribution(lam={2: 0.5}, rho={6: 1.0}))


def test_edge_to_node_single_degree():
    assert edge_to_node({3: 1.0}) == {3: 1.0}


def test_edge_to_node_two_degrees():
    L = edge_to_node({2: 0.5, 4: 0.5})
    assert L[2] == pytest.approx(2 / 3)
    assert L[4] == pytest.approx(1 / 3)


@pytest.mark.parametrize("name", sorted(CODE_CATALOG))
def test_edge_node_round_trip(name):
    lam = catalog(name).lam
    back = node_to_edge(edge_to_node(lam))
    assert sum(edge_to_node(lam).values()) == pytest.approx(1.0, abs=1e-9)
    for i, f in lam.items():
        assert back[i] == pytest.approx(f, abs=1e-9)


def test_edge_to_node_empty_rejected():
    with pytest.raises(ValueError):
        edge_to_node({})


def test_coupled_design_rate_long_chain():
    spec = CoupledEnsembleSpec(dv=6, dc=12, N=10000, L=500, m=6)
    assert coupled_design_rate(spec) == pytest.approx(0.494, abs=5e-4)


def test_coupled_design_rate_uncoupled_limit():
    spec = CoupledEnsembleSpec(dv=4, dc=8, N=16, L=10, m=0)
    assert coupled_design_rate(spec) == pytest.approx(0.5)


def test_coupled_design_rate_small():
    spec = CoupledEnsembleSpec(dv=3, dc=6, N=10, L=50, m=1)
    assert coupled_design_rate(spec) == pytest.approx(1 - 0.5 * 51 / 50)


def test_coupled_design_rate_monotone():
    rates_m = [coupled_design_rate(CoupledEnsembleSpec(3, 6, 10, 50, m))
               for m in range(0, 5)]
    assert all(a > b for a, b in zip(rates_m, rates_m[1:]))
    rates_L = [coupled_design_rate(CoupledEnsembleSpec(3, 6, 10, L, 2))
               for L in (10, 20, 40, 80)]
    assert all(a < b for a, b in zip(rates_L, rates_L[1:]))


def test_coupled_spec_rejects_bad_M():
    with pytest.raises(ValueError):
        CoupledEnsembleSpec(dv=3, dc=7, N=10, L=5, m=1)


def test_coupled_spec_rejects_m_ge_L():
    with pytest.raises(ValueError):
        CoupledEnsembleSpec(dv=3, dc=6, N=10, L=5, m=5)


def test_degree_file_round_trip():
    dd = catalog("lmmse-ch2")
    back = parse_degree_file(format_degree_file(dd))
    assert set(back.lam) == set(dd.lam)
    for i in dd.lam:
        assert back.lam[i] == pytest.approx(dd.lam[i], abs=1e-12)
    for j in dd.rho:
        assert back.rho[j] == pytest.approx(dd.rho[j], abs=1e-12)


def test_degree_file_parses_comments_and_blanks():
    dd = parse_degree_file("# header\nlambda 2 0.5\n\nlambda 3 0.5\nrho 6 1.0\n")
    assert dd.lam == {2: 0.5, 3: 0.5}


def test_degree_file_rejects_garbage():
    with pytest.raises(ValueError):
        parse_degree_file("lambda 2\n")
    with pytest.raises(ValueError):
        parse_degree_file("lambda 2 0.5\nlambda 2 0.5\n")
