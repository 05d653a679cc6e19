import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy import stats
from scipy.special import expit

from spatial_egt import micro
from spatial_egt.experiments.harness import lumpability_test
from spatial_egt.game import Game, RateFamily, RateRule, ResponseFunction, coordination_params
from spatial_egt.kernels import Kernel
from spatial_egt.meanfield import (
    AggregateState, deviation_harness, jump_rates, lumped_step, ode_rhs, replicator_field,
    simulate_lumped, solve_ode, sup_deviation,
)
from spatial_egt.stability import stationary_homogeneous
from spatial_egt.ide import Dynamic

G3 = Game(np.array([[1.0, 0.2, 0.0], [0.4, 0.8, 0.1], [0.0, 0.3, 1.2]]))
COORD = Game.coordination(20 / 3, 10 / 3)


def test_aggregate_state_from_density():
    s = AggregateState.from_density([1 / 3, 1 / 3, 1 / 3], 100)
    assert s.counts.sum() == 100 and s.eta.sum() == pytest.approx(1.0, abs=1e-15)
    assert sorted(s.counts) == [33, 33, 34]
    with pytest.raises(ValueError):
        AggregateState(np.array([1.5, 2.0]))


def test_pure_state_absorbing_for_imitation():
    st_ = AggregateState(np.array([100, 0]))
    nxt, dt, jump = lumped_step(st_, RateRule.imitative(2.0), COORD, 0)
    assert jump is None and dt == np.inf and np.array_equal(nxt.counts, st_.counts)
    assert jump_rates(st_, RateRule.imitative(np.inf), COORD).sum() == 0.0


def test_imitation_needs_present_strategy():
    st_ = AggregateState(np.array([0, 100]))
    for fam in (RateFamily.COMPARING_NON_INNOVATIVE, RateFamily.TARGETING_NON_INNOVATIVE):
        rule = RateRule(fam, ResponseFunction.regularized(1.0))
        assert jump_rates(st_, rule, COORD)[1, 0] == 0.0


def test_lumped_step_moves_one_agent():
    st_ = AggregateState(np.array([40, 30, 30]))
    nxt, dt, (j, k) = lumped_step(st_, RateRule.logit(), G3, 5)
    assert dt > 0 and j != k
    diff = nxt.counts - st_.counts
    assert diff[j] == -1 and diff[k] == 1 and diff.sum() == 0


def test_first_jump_type_matches_lattice():
    """Chi-square test of the first jump (j -> k) of the lattice vs the lumped chain."""
    n = 30
    counts = np.array([12, 10, 8])
    dom = micro.LatticeDomain.torus(Kernel.uniform(domain_length=float(n)), n, 0.0, float(n))
    sigma0 = np.repeat(np.arange(3), counts)
    rule = RateRule.logit()
    lat = np.zeros((3, 3), dtype=int)
    lum = np.zeros((3, 3), dtype=int)
    ss = np.random.SeedSequence(2024)
    for child in ss.spawn(10 ** 4):
        a, b = child.spawn(2)
        st_ = micro.LatticeState(dom, sigma0.copy(), 3)
        tr = micro.run(st_, rule, G3, 0.2, a)
        if tr.times.size:
            lat[sigma0[tr.sites[0]], tr.strategies[0]] += 1
        _, _, (j, k) = lumped_step(AggregateState(counts), rule, G3, b)
        lum[j, k] += 1
    off = ~np.eye(3, dtype=bool)
    table = np.stack([lat[off], lum[off]])
    assert lat.sum() > 9000
    assert stats.chi2_contingency(table).pvalue > 0.001


def test_replicator_ode_two_strategy():
    par = coordination_params(COORD)
    p = np.linspace(0, 1, 51)
    for kappa in (1.0, 20.0, np.inf):
        rule = RateRule.imitative(kappa)
        got = np.array([ode_rhs([q, 1 - q], rule, COORD)[0] for q in p])
        assert np.allclose(got, par.beta * p * (1 - p) * (p - par.zeta), atol=1e-13)
    assert abs(ode_rhs([par.zeta, 1 - par.zeta], RateRule.imitative(5.0), COORD)[0]) < 1e-15


def test_logit_ode_rest_point():
    par = coordination_params(COORD)
    roots = stationary_homogeneous(Dynamic.REDUCED_LOGIT, par).roots
    for p in roots:
        assert abs(ode_rhs([p, 1 - p], RateRule.logit(), COORD)[0]) < 1e-10
    p = 0.37
    assert ode_rhs([p, 1 - p], RateRule.logit(), COORD)[0] == pytest.approx(expit(par.beta * (p - par.zeta)) - p, abs=1e-15)


@given(st.lists(st.floats(0.01, 1.0), min_size=3, max_size=3), st.floats(0.2, 50))
def test_ode_rhs_sums_to_zero_and_replicator_identity(w, kappa):
    rho = np.array(w) / np.sum(w)
    for rule in (RateRule.logit(), RateRule.metropolis(), RateRule.imitative(kappa)):
        assert abs(ode_rhs(rho, rule, G3).sum()) < 1e-14
    a = ode_rhs(rho, RateRule.imitative(kappa), G3)
    b = ode_rhs(rho, RateRule.imitative(2 * kappa + 1), G3)
    assert np.abs(a - b).max() < 1e-12
    assert np.abs(a - replicator_field(rho, G3)).max() < 1e-12


def test_ode_solution_in_simplex_and_methods_agree():
    rho0 = [0.2, 0.5, 0.3]
    a = solve_ode(rho0, RateRule.metropolis(), G3, 10.0)
    b = solve_ode(rho0, RateRule.metropolis(), G3, 10.0, method="rk4", dt=1e-3)
    t = np.linspace(0, 10, 101)
    ya = a(t)
    assert ya.min() >= -1e-12 and np.abs(ya.sum(axis=0) - 1).max() < 1e-12
    assert np.abs(ya - b(t)).max() < 1e-9


def test_lumped_path_is_valid():
    path = simulate_lumped(AggregateState(np.array([50, 30, 20])), RateRule.logit(), G3, 3.0, 1)
    assert path.times[0] == 0.0 and np.all(np.diff(path.times) > 0) and path.times[-1] <= 3.0
    assert np.all(path.counts.sum(axis=1) == 100) and path.counts.min() >= 0
    assert np.all(np.abs(np.diff(path.counts, axis=0)).sum(axis=1) == 2)


def test_sup_deviation_exact_for_constant_ode():
    game = Game.coordination(5, 5)
    start = AggregateState(np.array([5, 5]))
    ode = solve_ode(start.eta, RateRule.logit(), game, 1.0)
    path = simulate_lumped(start, RateRule.logit(), game, 1.0, 3)
    expected = np.abs(path.eta[path.times <= 1.0] - 0.5).max()
    assert sup_deviation(path, ode, 1.0) == pytest.approx(expected, abs=1e-12)


def test_deviation_eps_beyond_diameter():
    tab = deviation_harness(RateRule.logit(), Game.coordination(5, 5), [0.9, 0.1], [8, 16], 1.0, 2.5, 100, 0)
    assert all(r.exceedance == 0.0 for r in tab.rows)


def test_deviation_shrinks_with_size():
    tab = deviation_harness(RateRule.logit(), Game.coordination(5, 5), [0.9, 0.1], [16, 32, 64], 2.0, 0.05, 500, 7)
    fr = [r.exceedance for r in tab.rows]
    assert fr[0] > fr[1] > fr[2]
    assert tab.rows[-1].mean_sup_deviation < 0.5 * tab.rows[0].mean_sup_deviation
    assert tab.slope < 0


def test_deviation_deterministic(tmp_path):
    args = (RateRule.logit(), Game.coordination(5, 5), [0.9, 0.1], [8, 16], 1.0, 0.1, 100, 3)
    deviation_harness(*args).to_csv(tmp_path / "a.csv")
    deviation_harness(*args).to_csv(tmp_path / "b.csv")
    assert (tmp_path / "a.csv").read_bytes() == (tmp_path / "b.csv").read_bytes()


@pytest.mark.parametrize("t_end", [0.5, 1.0, 2.0])
def test_lumpability_in_law(t_end):
    res = lumpability_test(Game.coordination(2, 1), RateRule.logit(), 50, [0.3, 0.7], t_end, 500, 11, 4)
    assert res.pvalue > 0.01
