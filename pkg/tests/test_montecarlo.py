import math

import numpy as np
import pytest

from diffuniq import expr as E, montecarlo as MC
from diffuniq.operator import make_operator_1d, make_operator_nd

INF = math.inf


def ou(V="0"):
    return make_operator_1d("0.5", "-x", V, (-INF, INF))


ONE = E.parse_expr("1", "x")
IDENT = E.parse_expr("x", "x")


def test_deterministic_given_seed():
    op = ou()
    e1 = MC.feynman_kac(op, IDENT, 0.3, 1.0, 2000, 1e-2, seed=9)
    e2 = MC.feynman_kac(op, IDENT, 0.3, 1.0, 2000, 1e-2, seed=9)
    assert e1.mean == e2.mean and e1.stderr == e2.stderr
    e3 = MC.feynman_kac(op, IDENT, 0.3, 1.0, 2000, 1e-2, seed=10)
    assert e3.mean != e1.mean


def test_batching_invariance():
    op = ou()
    e1 = MC.feynman_kac(op, IDENT, 0.3, 1.0, 1000, 1e-2, seed=4, block=64)
    e2 = MC.feynman_kac(op, IDENT, 0.3, 1.0, 1000, 1e-2, seed=4, block=1000)
    assert e1.mean == e2.mean


def test_single_path_matches_vectorized():
    op = ou()
    out = MC.simulate_path(op, 1.0, 0.3, 1e-2, seed=4, path_index=7)
    est = MC.feynman_kac(op, IDENT, 0.3, 1.0, 100, 1e-2, seed=4, block=25)
    # path 7 of the batch uses the same stream as the standalone simulation
    # (weights are 1 here since V=0)
    xs = [MC.simulate_path(op, 1.0, 0.3, 1e-2, seed=4, path_index=i).terminal
          for i in range(100)]
    assert est.mean == pytest.approx(np.mean(xs), rel=1e-12)
    assert out.terminal == xs[7]


def test_constant_killing():
    op = make_operator_1d("0.5", "0", "1", (-INF, INF))
    est = MC.feynman_kac(op, ONE, 0.5, 0.0, 5000, 1e-3, seed=1)
    assert est.mean == pytest.approx(math.exp(-0.5), abs=1e-9)
    assert est.stderr <= 1e-9  # weight is deterministic for constant V


def test_ou_mean_reversion():
    est = MC.feynman_kac(ou(), IDENT, 1.0, 1.0, 40000, 1e-3, seed=3)
    assert abs(est.mean - math.exp(-1.0)) <= 3.0 * est.stderr + 1e-3


def test_dt_consistency():
    op = ou()
    e1 = MC.feynman_kac(op, IDENT, 0.5, 1.0, 20000, 2e-3, seed=5)
    e2 = MC.feynman_kac(op, IDENT, 0.5, 1.0, 20000, 1e-3, seed=5)
    assert abs(e1.mean - e2.mean) <= 3.0 * (e1.stderr + e2.stderr) + 2e-3


def test_potential_monotonicity_coupled():
    # same seed => identical paths; a larger potential only shrinks weights
    f = E.parse_expr("exp(-x^2)", "x")
    e0 = MC.feynman_kac(ou("0"), f, 0.5, 0.0, 5000, 1e-3, seed=8)
    e1 = MC.feynman_kac(ou("x^2"), f, 0.5, 0.0, 5000, 1e-3, seed=8)
    e2 = MC.feynman_kac(ou("x^2 + 1"), f, 0.5, 0.0, 5000, 1e-3, seed=8)
    assert e0.mean >= e1.mean >= e2.mean
    assert e2.mean == pytest.approx(math.exp(-0.5) * e1.mean, rel=1e-12)


def test_explosion_surrogate():
    # supercritical outward drift: paths cross the surrogate radius and are
    # counted, contributing zero
    op = make_operator_1d("0.5", "x^3", "0", (-INF, INF))
    est = MC.feynman_kac(op, ONE, 1.0, 2.0, 500, 1e-3, seed=2, r_explode=50.0)
    assert est.explosion_fraction > 0.5
    single = MC.simulate_path(op, 2.0, 1.0, 1e-3, seed=2, path_index=0,
                              r_explode=50.0)
    assert single.exploded and single.terminal is None
    assert single.exit_time is not None and 0.0 < single.exit_time <= 1.0


def test_finite_interval_absorption():
    op = make_operator_1d("1", "0", "0", (0.0, 1.0))
    est = MC.feynman_kac(op, ONE, 0.2, 0.5, 4000, 1e-3, seed=6)
    # survival probability of Brownian motion (variance 2t) in (0,1)
    assert 0.0 < est.mean < 0.6
    assert est.explosion_fraction == pytest.approx(1.0 - est.mean, abs=1e-12)


def test_terminal_gridfunction_zero_outside():
    from diffuniq.gridfn import GridFunction
    xs = np.linspace(-1.0, 1.0, 101)
    f = GridFunction(xs, np.ones_like(xs))
    op = ou()
    est = MC.feynman_kac(op, f, 0.5, 0.0, 4000, 1e-3, seed=7)
    assert 0.0 < est.mean < 1.0  # paths outside [-1,1] contribute zero


def test_nd_path_runs():
    op = make_operator_nd(3, ["-x1", "-x2", "-x3"], "0")
    out = MC.simulate_path(op, [1.0, 0.0, 0.0], 0.2, 1e-2, seed=1, path_index=0)
    assert not out.exploded
    assert out.terminal.shape == (3,)
    assert out.weight == 1.0


def test_coupled_radial_domination():
    # beta strictly below the true radial drift: the ND radius dominates the
    # 1D comparison radius on coupled increments, on average and at the end
    op = make_operator_nd(3, ["-x1", "-x2", "-x3"], "0")
    m_strict = MC.coupled_radial_comparison(op, lambda r: -r - 0.3,
                                            [2.0, 0.0, 0.0], 1.0, 1e-3,
                                            seed=12, n_paths=64)
    assert m_strict[:, -1].mean() > 0.1
    # with the exact radial drift as beta the margin is only the O(dt)
    # discretization slack
    m_exact = MC.coupled_radial_comparison(op, lambda r: -r,
                                           [2.0, 0.0, 0.0], 1.0, 1e-3,
                                           seed=12, n_paths=64)
    assert m_exact[:, -1].mean() > -0.02
    assert np.all(m_strict[:, -1] >= m_exact[:, -1] - 1e-9)
