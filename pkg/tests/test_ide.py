import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy.special import expit

from spatial_egt.game import ConfigurationError, Game, RateRule, coordination_params
from spatial_egt.grid import DensityField, Grid
from spatial_egt.ide import (
    Dynamic, IdeSystem, InstabilityError, IntegrationLog, integrate, integrate_glauber,
    random_initial, reduced_F, rhs,
)
from spatial_egt.kernels import Kernel
from spatial_egt.meanfield import ode_rhs, solve_ode

G3 = Game(np.array([[1.0, 0.2, 0.0], [0.4, 0.8, 0.1], [0.0, 0.3, 1.2]]))
COORD = Game.coordination(20 / 3, 10 / 3)


def cos_field(grid, base=0.5, amp=0.3, mode=1):
    x = grid.coords()[0]
    return DensityField.from_p(grid, base + amp * np.cos(mode * x))


@pytest.mark.parametrize("dyn,rule", [(Dynamic.LOGIT, None), (Dynamic.IMITATIVE_REPLICATOR, None),
                                      (Dynamic.GENERAL, RateRule.metropolis())])
def test_constant_field_gives_mean_field_rhs(dyn, rule):
    g = Grid.periodic(64)
    sys_ = IdeSystem(G3, Kernel.gaussian(2.0), g, dyn, rule, kappa=3.0)
    rho = np.array([0.2, 0.5, 0.3])
    d = rhs(sys_, DensityField.constant(g, rho))
    mf = ode_rhs(rho, sys_.rule, G3)
    assert np.abs(d - mf[:, None]).max() < 1e-14


def test_replicator_reduced_rest_at_zeta():
    g = Grid.periodic(128)
    for kappa in (1.0, 20.0, np.inf):
        sys_ = IdeSystem(COORD, Kernel.gaussian(2.0), g, Dynamic.REDUCED_REPLICATOR, kappa=kappa)
        assert np.abs(rhs(sys_, DensityField.constant(g, [1 / 3, 2 / 3]))).max() < 1e-15


def test_logit_reduced_formula_and_rest_point():
    g = Grid.periodic(128)
    game = Game.coordination(5, 5)
    sys_ = IdeSystem(game, Kernel.gaussian(2.0), g, Dynamic.REDUCED_LOGIT)
    assert np.abs(rhs(sys_, DensityField.constant(g, [0.5, 0.5]))).max() < 1e-15
    f = cos_field(g)
    r = sys_.convolve(f.values[:1])[0]
    assert np.allclose(rhs(sys_, f)[0], expit(10 * (r - 0.5)) - f.values[0], atol=1e-15)


def test_reduced_F_identities():
    par = coordination_params(COORD)
    for kappa in (1.0, 20.0, np.inf):
        assert reduced_F(Dynamic.REDUCED_REPLICATOR, par.zeta, par.zeta, par, kappa) == pytest.approx(0, abs=1e-15)
    r = np.linspace(0, 1, 101)
    s = expit(par.beta * (r - par.zeta))
    assert np.abs(reduced_F(Dynamic.REDUCED_LOGIT, r, s, par)).max() < 1e-15


def test_reduced_F_direct_value():
    par = coordination_params(COORD)
    r, s, b, z, k = 0.6, 0.4, 10.0, 1 / 3, 20.0
    F = lambda x: math.log(math.exp(k * x) + 1) / k
    expected = (1 - s) * r * F(b * (r - z)) - s * (1 - r) * F(b * (z - r))
    assert float(reduced_F(Dynamic.REDUCED_REPLICATOR, r, s, par, k)) == pytest.approx(expected, rel=1e-13)


def test_reduced_replicator_equals_general_imitative():
    g = Grid.periodic(128)
    f = cos_field(g, 0.45, 0.4)
    for kappa in (2.0, np.inf):
        red = IdeSystem(COORD, Kernel.gaussian(2.0), g, Dynamic.REDUCED_REPLICATOR, kappa=kappa)
        gen = IdeSystem(COORD, Kernel.gaussian(2.0), g, Dynamic.GENERAL, RateRule.imitative(kappa))
        assert np.abs(rhs(red, f) - rhs(gen, f)).max() < 1e-13


def test_reduced_logit_equals_general_logit():
    g = Grid.periodic(128)
    f = cos_field(g, 0.45, 0.4)
    red = IdeSystem(COORD, Kernel.gaussian(2.0), g, Dynamic.REDUCED_LOGIT)
    gen = IdeSystem(COORD, Kernel.gaussian(2.0), g, Dynamic.LOGIT)
    assert np.abs(rhs(red, f) - rhs(gen, f)).max() < 1e-14


def test_biological_replicator_formula():
    g = Grid.periodic(64)
    sys_ = IdeSystem(G3, Kernel.gaussian(2.0), g, Dynamic.BIOLOGICAL_REPLICATOR)
    x = g.coords()[0]
    raw = np.stack([1 + 0.5 * np.cos(x), 1 + 0.5 * np.sin(x), np.ones_like(x)])
    f = DensityField(g, raw / raw.sum(axis=0))
    conv = sys_.convolve(f.values)
    pay = np.einsum("il,lx->ix", G3.payoff, conv)
    expected = f.values * (pay - (f.values * pay).sum(axis=0))
    assert np.abs(rhs(sys_, f) - expected).max() < 1e-15


def test_reduced_requires_coordination_game():
    with pytest.raises(ConfigurationError):
        IdeSystem(G3, Kernel.gaussian(2.0), Grid.periodic(64), Dynamic.REDUCED_LOGIT)
    with pytest.raises(ConfigurationError):
        IdeSystem(COORD, Kernel.gaussian(2.0), Grid.periodic(64), Dynamic.GENERAL)


@pytest.mark.parametrize("dyn", [Dynamic.LOGIT, Dynamic.IMITATIVE_REPLICATOR, Dynamic.BIOLOGICAL_REPLICATOR])
def test_homogeneous_solution_matches_ode(dyn):
    g = Grid.periodic(32)
    sys_ = IdeSystem(G3, Kernel.gaussian(2.0), g, dyn, kappa=5.0)
    rho0 = np.array([0.2, 0.5, 0.3])
    snaps = integrate(sys_, DensityField.constant(g, rho0), 10.0, dt=0.01, snapshot_times=[2.5, 5.0])
    if dyn is Dynamic.BIOLOGICAL_REPLICATOR:
        from scipy.integrate import solve_ivp

        rf = lambda t, y: y * (G3.payoff @ y - y @ G3.payoff @ y)
        ode = solve_ivp(rf, (0, 10), rho0, method="DOP853", rtol=1e-12, atol=1e-13, dense_output=True).sol
    else:
        ode = solve_ode(rho0, sys_.rule, G3, 10.0)
    for s in snaps:
        assert np.abs(s.values - ode(s.time)[:, None]).max() < 1e-8
        assert np.ptp(s.values, axis=1).max() < 1e-14


def test_simplex_conserved_general_dynamics():
    g = Grid.periodic(64)
    sys_ = IdeSystem(G3, Kernel.gaussian(2.0), g, Dynamic.IMITATIVE_REPLICATOR, kappa=4.0)
    x = g.coords()[0]
    raw = np.stack([1 + 0.8 * np.cos(x), 1 + 0.8 * np.sin(2 * x), np.full_like(x, 1.0)])
    f0 = DensityField(g, raw / raw.sum(axis=0))
    assert np.abs(rhs(sys_, f0).sum(axis=0)).max() < 1e-14
    log = IntegrationLog()
    out = integrate(sys_, f0, 5.0, snapshot_times=[1, 2, 3, 4], log_out=log)
    for s in out:
        assert np.abs(s.values.sum(axis=0) - 1).max() <= 1e-9 * max(s.time, 1.0)
    assert log.max_drift <= 5e-9


def test_uniform_kernel_average_follows_ode():
    g = Grid.periodic(64)
    sys_ = IdeSystem(G3, Kernel.uniform(), g, Dynamic.LOGIT)
    x = g.coords()[0]
    raw = np.stack([1 + 0.8 * np.cos(x), 1 + 0.8 * np.sin(2 * x), np.full_like(x, 1.0)])
    f0 = DensityField(g, raw / raw.sum(axis=0))
    ode = solve_ode(f0.spatial_average(), RateRule.logit(), G3, 5.0)
    for s in integrate(sys_, f0, 5.0, dt=0.01, snapshot_times=[1, 2, 3]):
        assert np.abs(s.spatial_average() - ode(s.time)).max() < 1e-8


def test_comparison_principle_reduced_logit():
    g = Grid.periodic(128)
    sys_ = IdeSystem(COORD, Kernel.gaussian(2.0), g, Dynamic.REDUCED_LOGIT)
    x = g.coords()[0]
    lo = DensityField.from_p(g, 0.3 + 0.2 * np.cos(x))
    hi = DensityField.from_p(g, 0.32 + 0.2 * np.cos(x) + 0.1 * (np.sin(3 * x) > 0))
    times = [0.5, 1, 2, 3, 4, 5]
    for a, b in zip(integrate(sys_, lo, 5.0, snapshot_times=times), integrate(sys_, hi, 5.0, snapshot_times=times)):
        assert np.all(a.values[0] <= b.values[0] + 1e-14)


@given(st.integers(0, 2 ** 31), st.sampled_from(list(Dynamic)))
def test_fft_and_direct_rhs_agree(seed, dyn):
    g = Grid.periodic(48)
    game = COORD
    rule = RateRule.metropolis() if dyn is Dynamic.GENERAL else None
    f = random_initial(g, 0.2, 0.6, seed)
    a = IdeSystem(game, Kernel.gaussian(3.0), g, dyn, rule, kappa=7.0, convolution="fft")
    b = IdeSystem(game, Kernel.gaussian(3.0), g, dyn, rule, kappa=7.0, convolution="direct")
    assert np.abs(rhs(a, f) - rhs(b, f)).max() < 1e-10


def test_translation_equivariance():
    g = Grid.periodic(128)
    sys_ = IdeSystem(COORD, Kernel.gaussian(2.0), g, Dynamic.REDUCED_REPLICATOR, kappa=20.0)
    f0 = random_initial(g, 0.2, 0.4, 3)
    shifted = DensityField(g, np.roll(f0.values, 1, axis=1))
    a = integrate(sys_, f0, 2.0)[-1].values
    b = integrate(sys_, shifted, 2.0)[-1].values
    assert np.abs(np.roll(a, 1, axis=1) - b).max() < 1e-13


def test_glauber_form_agrees():
    g = Grid.periodic(128)
    sys_ = IdeSystem(Game.coordination(3, 3), Kernel.gaussian(2.0), g, Dynamic.REDUCED_LOGIT)
    f0 = random_initial(g, 0.3, 0.4, 5)
    p = integrate(sys_, f0, 3.0, dt=0.01)[-1].values[0]
    u = integrate_glauber(sys_, 2 * f0.values[0] - 1, 3.0, 0.01)
    assert np.abs((2 * p - 1) - u).max() < 1e-8


def test_fixed_boundary_nodes_frozen():
    g = Grid((256,), (-3.0,), (3.0,), "fixed", ((-1.0, 1.0),))
    x = g.coords()[0]
    p = np.where(x >= 1, 1.0, np.where(x <= -1, 0.0, (x >= 0).astype(float)))
    f0 = DensityField.from_p(g, p)
    for dyn in (Dynamic.REDUCED_LOGIT, Dynamic.REDUCED_REPLICATOR):
        sys_ = IdeSystem(COORD, Kernel.gaussian(2.0), g, dyn)
        frozen = ~g.active_mask()
        for s in integrate(sys_, f0, 2.0, snapshot_times=[0.5, 1.0]):
            assert np.array_equal(s.values[:, frozen], f0.values[:, frozen])


def test_instability_error_on_huge_step():
    g = Grid.periodic(64)
    sys_ = IdeSystem(COORD, Kernel.gaussian(2.0), g, Dynamic.REDUCED_LOGIT)
    with pytest.raises(InstabilityError, match="step 1"):
        integrate(sys_, cos_field(g, 0.5, 0.45), 50.0, dt=50.0)


def test_integrate_rejects_foreign_grid():
    sys_ = IdeSystem(COORD, Kernel.gaussian(2.0), Grid.periodic(64), Dynamic.REDUCED_LOGIT)
    with pytest.raises(ConfigurationError):
        integrate(sys_, cos_field(Grid.periodic(32)), 1.0)


def test_fig2_pattern_develops():
    g = Grid.periodic(64, dim=2)
    game = Game.coordination(2 / 3, 1 / 3)
    sys_ = IdeSystem(game, Kernel.gaussian(15.0, dim=2), g, Dynamic.REDUCED_REPLICATOR, kappa=20.0)
    x, y = g.coords()
    f0 = random_initial(g, 1 / 3, np.cos(x) * np.cos(y), 2)
    p = integrate(sys_, f0, 22.0, dt=0.0175)[-1].values[0]
    assert p.min() < 1 / 3 < p.max()
    assert np.ptp(p) > 0.5
