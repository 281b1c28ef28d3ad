import math

import numpy as np
import pytest

from diffuniq import fdsolver as FD
from diffuniq.gridfn import GridFunction
from diffuniq.operator import make_operator_1d

INF = math.inf


def test_grid_basics():
    g = FD.Grid1D(-2.0, 2.0, 100)
    assert g.dx == pytest.approx(0.04)
    assert g.centers.size == 100
    assert g.centers[0] == pytest.approx(-2.0 + 0.02)
    with pytest.raises(ValueError):
        FD.Grid1D(0.0, 1.0, 8)  # below the minimum cell count


def test_mass_conserved_reflecting():
    # arbitrary validated drift, V=0: exact telescoping conservation
    op = make_operator_1d("0.5", "-x + sin(x)", "0", (-INF, INF))
    g = FD.Grid1D(-8.0, 8.0, 800)
    s0 = FD.gaussian_state(g, 0.3, 0.2)
    fin, (_, masses) = FD.fp_solve(op, s0, 1.0, 1e-3)
    assert abs(masses[-1] - masses[0]) <= 1e-10
    assert fin.t == pytest.approx(1.0)


def test_constant_killing_exponential():
    op = make_operator_1d("0.5", "0", "1", (-INF, INF))
    g = FD.Grid1D(-8.0, 8.0, 800)
    s0 = FD.gaussian_state(g, 0.0, 0.1)
    _, (_, masses) = FD.fp_solve(op, s0, 1.0, 1e-3)
    assert masses[-1] / masses[0] == pytest.approx(math.exp(-1.0), abs=1e-6)


def test_killing_after_100_steps():
    op = make_operator_1d("0.5", "0", "1", (-INF, INF))
    g = FD.Grid1D(-8.0, 8.0, 800)
    s0 = FD.gaussian_state(g, 0.0, 0.1)
    _, (_, masses) = FD.fp_solve(op, s0, 0.1, 1e-3)
    assert masses[-1] / masses[0] == pytest.approx(math.exp(-0.1), abs=1e-6)


def test_ou_variance_relaxation():
    op = make_operator_1d("0.5", "-x", "0", (-INF, INF))
    g = FD.Grid1D(-8.0, 8.0, 800)
    fin, _ = FD.fp_solve(op, FD.gaussian_state(g, 0.0, 0.1), 1.0, 1e-3)
    x = g.centers
    var = float(np.sum(fin.values * x * x) / np.sum(fin.values))
    pred = 0.5 * (1.0 - math.exp(-2.0)) + 0.1 * math.exp(-2.0)
    assert var == pytest.approx(pred, abs=5e-4)


def test_positivity():
    op = make_operator_1d("0.5", "-x^3", "0", (-INF, INF))
    g = FD.Grid1D(-6.0, 6.0, 600)
    fin, _ = FD.fp_solve(op, FD.gaussian_state(g, 1.0, 0.05), 0.5, 1e-3)
    assert float(fin.values.min()) >= -1e-12 * float(fin.values.max())


def test_absorbing_loses_mass():
    op = make_operator_1d("0.5", "0", "0", (-INF, INF))
    g = FD.Grid1D(-2.0, 2.0, 200)
    s0 = FD.gaussian_state(g, 0.0, 0.5, FD.ABSORBING)
    _, (_, masses) = FD.fp_solve(op, s0, 1.0, 1e-3)
    assert masses[-1] < 0.9 * masses[0]


def test_second_order_spatial_convergence():
    op = make_operator_1d("0.5", "-x", "0", (-INF, INF))
    pred = 0.5 * (1.0 - math.exp(-2.0)) + 0.1 * math.exp(-2.0)
    errs = []
    for m in (100, 200, 400):
        g = FD.Grid1D(-8.0, 8.0, m)
        fin, _ = FD.fp_solve(op, FD.gaussian_state(g, 0.0, 0.1), 1.0, 2.5e-4)
        x = g.centers
        var = float(np.sum(fin.values * x * x) / np.sum(fin.values))
        errs.append(abs(var - pred))
    for e0, e1 in zip(errs, errs[1:]):
        assert e0 / e1 == pytest.approx(4.0, rel=0.30)


def _bump(center=0.0, width=2.0, n=401):
    xs = np.linspace(center - width, center + width, n)
    t = (xs - center) / width
    vals = np.exp(-1.0 / np.maximum(1.0 - t * t, 1e-12)) * (np.abs(t) < 1.0)
    return GridFunction(xs, vals)


def test_duality_self_adjoint_case():
    op = make_operator_1d("0.5", "0", "0", (-INF, INF))
    f = _bump()
    assert FD.duality_check(op, f, f, 0.5, 1e-3) <= 1e-6


def test_duality_ou():
    op = make_operator_1d("0.5", "-x", "0", (-INF, INF))
    d = FD.duality_check(op, _bump(), _bump(0.8, 1.5), 0.5, 1e-3)
    assert d <= 5e-4


def test_duality_shrinks_second_order():
    op = make_operator_1d("0.5", "-x", "0", (-INF, INF))
    f, g = _bump(), _bump(0.8, 1.5)
    d1 = FD.duality_check(op, f, g, 0.5, 5e-4, grid=FD.Grid1D(-8, 8, 400))
    d2 = FD.duality_check(op, f, g, 0.5, 5e-4, grid=FD.Grid1D(-8, 8, 800))
    assert d1 / d2 == pytest.approx(4.0, rel=0.5)


def test_duality_constant_killing_commutes():
    op0 = make_operator_1d("0.5", "-x", "0", (-INF, INF))
    op1 = make_operator_1d("0.5", "-x", "1", (-INF, INF))
    f, g = _bump(), _bump(0.8, 1.5)
    d0 = FD.duality_check(op0, f, g, 0.5, 1e-3)
    d1 = FD.duality_check(op1, f, g, 0.5, 1e-3)
    # V = const multiplies both pairings by e^{-VT}; discrepancy scales along
    assert d1 == pytest.approx(math.exp(-0.5) * d0, rel=1e-3, abs=1e-9)


def test_probe_regular_interval_O1():
    # heat equation truncated at the interval itself: Dirichlet and Neumann
    # walls produce visibly different solutions
    op = make_operator_1d("0.5", "0", "0", (0.0, 1.0))
    u0 = _bump(0.5, 0.35)
    tab = FD.bc_sensitivity_probe(op, u0, 0.3, [0.5], core_radius=0.4,
                                  center=0.5)
    assert tab["sup_differences"][0] > 0.01


def test_probe_brownian_insensitive():
    op = make_operator_1d("0.5", "0", "0", (-INF, INF))
    tab = FD.bc_sensitivity_probe(op, _bump(0.0, 1.5), 1.0, [4.0, 6.0, 8.0])
    assert tab["label"] == "insensitive"
    assert all(r <= 0.25 for r in tab["ratios"])


def test_dump_csv_roundtrip(tmp_path):
    op = make_operator_1d("0.5", "0", "0", (-INF, INF))
    g = FD.Grid1D(-4.0, 4.0, 100)
    fin, (ts, ms) = FD.fp_solve(op, FD.gaussian_state(g, 0.0, 0.2), 0.01, 1e-3)
    path = tmp_path / "trace.csv"
    FD.dump_csv(str(path), ts, ms, fin)
    lines = path.read_text().splitlines()
    assert lines[0] == "t,mass"
    # 17 significant digits round-trips doubles exactly
    t1, m1 = lines[1].split(",")
    assert float(m1) == ms[0]
