import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy.special import expit

from spatial_egt.game import CoordinationParams, ResponseFunction
from spatial_egt.grid import Grid
from spatial_egt.ide import Dynamic, reduced_F
from spatial_egt.kernels import Kernel, fourier_coeffs, grid_discretize
from spatial_egt.stability import (
    NotStationaryError, critical_beta, derivatives, dispersion, homogeneous_F,
    linear_ide_solution, pde_coefficients, phase_csv, phase_diagram, stationary_homogeneous,
)

REP, LOG = Dynamic.REDUCED_REPLICATOR, Dynamic.REDUCED_LOGIT


def root_count_oracle(beta, zeta, n=200001):
    p = np.linspace(0.0, 1.0, n)
    v = expit(beta * (p - zeta)) - p
    return int(np.sum(np.sign(v[1:]) != np.sign(v[:-1])))


def beta_c_oracle(zeta):
    lo, hi = 0.5, 50.0
    for _ in range(60):
        mid = 0.5 * (lo + hi)
        if root_count_oracle(mid, zeta) >= 3:
            hi = mid
        else:
            lo = mid
    return 0.5 * (lo + hi)


@given(st.floats(0.05, 0.95), st.floats(0.1, 30), st.sampled_from([0.5, 5.0, 20.0, np.inf]))
def test_replicator_roots_always_three(zeta, beta, kappa):
    rep = stationary_homogeneous(REP, CoordinationParams(zeta, beta), kappa)
    assert np.allclose(rep.roots, [0.0, zeta, 1.0], atol=1e-12)
    assert rep.residuals.max() <= 1e-10


def test_logit_single_root_below_critical():
    rep = stationary_homogeneous(LOG, CoordinationParams(0.5, 2.0))
    assert len(rep) == 1 and rep.roots[0] == pytest.approx(0.5, abs=1e-12)


def test_logit_three_symmetric_roots_above_critical():
    rep = stationary_homogeneous(LOG, CoordinationParams(0.5, 8.0))
    assert len(rep) == 3
    assert rep.roots[0] + rep.roots[2] == pytest.approx(1.0, abs=1e-11)
    assert rep.roots[1] == pytest.approx(0.5, abs=1e-12)
    assert rep.residuals.max() <= 1e-10


def test_critical_beta_half():
    assert critical_beta(0.5) == pytest.approx(4.0, abs=1e-8)


@pytest.mark.parametrize("zeta", [1 / 3, 0.2, 0.45])
def test_critical_beta_against_root_count_oracle(zeta):
    bc = critical_beta(zeta)
    assert bc > 4.0
    assert bc == pytest.approx(beta_c_oracle(zeta), rel=1e-4)


def test_critical_beta_one_third_value():
    assert critical_beta(1 / 3) == pytest.approx(9.33892, abs=1e-5)


@pytest.mark.parametrize("zeta", [0.5, 1 / 3])
def test_root_count_changes_at_critical_beta(zeta):
    bc = critical_beta(zeta)
    assert len(stationary_homogeneous(LOG, CoordinationParams(zeta, bc - 1e-3))) == 1
    assert len(stationary_homogeneous(LOG, CoordinationParams(zeta, bc + 1e-3))) == 3


def test_degenerate_root_flagged_at_critical_beta():
    rep = stationary_homogeneous(LOG, CoordinationParams(1 / 3, critical_beta(1 / 3)))
    assert rep.degenerate.any()


def gaussian_jhat(b=20.0):
    return Kernel.gaussian(b)


@pytest.mark.parametrize("kappa", [1.0, 20.0, np.inf])
def test_replicator_pure_states_stable(kappa):
    par = CoordinationParams(1 / 3, 3.0)
    for p0 in (0.0, 1.0):
        tab = dispersion(REP, p0, par, kappa, gaussian_jhat(), K=20)
        assert tab.stable


def test_replicator_mixed_state_kappa_limit():
    par = CoordinationParams(1 / 3, 3.0)
    J = gaussian_jhat()
    target = 3.0 * (1 / 3) * (2 / 3) * J.transform(np.arange(-5, 6))
    gaps = [np.abs(dispersion(REP, 1 / 3, par, k, J, K=5).lam - target).max() for k in (10, 100, 1000, np.inf)]
    assert all(a > b for a, b in zip(gaps, gaps[1:]))
    assert gaps[-1] < 1e-14


def test_logit_unique_root_stable_for_positive_kernel():
    par = CoordinationParams(1 / 3, 5.0)
    (p0,) = stationary_homogeneous(LOG, par).roots
    g = Grid.periodic(256)
    tab = dispersion(LOG, p0, par, np.inf, fourier_coeffs(grid_discretize(Kernel.gaussian(2.0), g), g))
    assert tab.stable and not tab.outside_hypothesis


def test_logit_ball_kernel_marked_outside_hypothesis():
    par = CoordinationParams(1 / 3, 5.0)
    (p0,) = stationary_homogeneous(LOG, par).roots
    g = Grid.periodic(256)
    tab = dispersion(LOG, p0, par, np.inf, fourier_coeffs(grid_discretize(Kernel.ball(1.0), g), g))
    assert tab.outside_hypothesis and tab.notes


def test_dispersion_rejects_non_root():
    with pytest.raises(NotStationaryError):
        dispersion(REP, 0.5, CoordinationParams(1 / 3, 3.0), 20.0, gaussian_jhat(), K=5)


def test_dispersion_symmetric_in_k():
    tab = dispersion(REP, 1 / 3, CoordinationParams(1 / 3, 3.0), 20.0, gaussian_jhat(), K=20)
    k = tab.modes[:, 0]
    lam = dict(zip(k, tab.lam))
    assert all(lam[j] == lam[-j] for j in range(21))


def test_dispersion_monotone_in_jhat():
    rng = np.random.default_rng(1)
    for _ in range(20):
        par = CoordinationParams(rng.uniform(0.1, 0.9), rng.uniform(0.5, 20))
        kappa = rng.uniform(0.5, 40)
        tab = dispersion(REP, par.zeta, par, kappa, gaussian_jhat(rng.uniform(1, 30)), K=15)
        assert tab.M > 0
        order = np.argsort(tab.jhat)
        assert np.all(np.diff(tab.lam[order]) >= 0)


def test_logit_below_replicator_growth():
    rng = np.random.default_rng(2)
    for _ in range(30):
        par = CoordinationParams(rng.uniform(0.1, 0.9), rng.uniform(0.5, 30))
        J = gaussian_jhat(rng.uniform(1, 30))
        lam_r = dispersion(REP, par.zeta, par, np.inf, J, K=10).lam
        for p0 in stationary_homogeneous(LOG, par).roots:
            assert np.all(dispersion(LOG, p0, par, np.inf, J, K=10).lam < lam_r)


def test_derivatives_match_finite_differences():
    rng = np.random.default_rng(3)
    h = 1e-6
    for _ in range(50):
        par = CoordinationParams(rng.uniform(0.05, 0.95), rng.uniform(0.5, 20))
        kappa = rng.uniform(0.5, 40)
        for dyn in (REP, LOG):
            for p0 in stationary_homogeneous(dyn, par, kappa).roots:
                M, N = derivatives(dyn, p0, par, kappa)
                Mfd = (reduced_F(dyn, p0 + h, p0, par, kappa) - reduced_F(dyn, p0 - h, p0, par, kappa)) / (2 * h)
                Nfd = (reduced_F(dyn, p0, p0 + h, par, kappa) - reduced_F(dyn, p0, p0 - h, par, kappa)) / (2 * h)
                assert abs(M - Mfd) < 1e-6 and abs(N - Nfd) < 1e-6


def test_table_one_values_at_pure_states():
    par = CoordinationParams(1 / 3, 3.0)
    F = ResponseFunction.regularized(20.0)
    J = gaussian_jhat()
    jh = J.transform(np.arange(-4, 5))
    assert np.allclose(dispersion(REP, 0.0, par, 20.0, J, K=4).lam, F(-1.0) * jh - F(1.0), atol=1e-15)
    assert np.allclose(dispersion(REP, 1.0, par, 20.0, J, K=4).lam, F(-2.0) * jh - F(2.0), atol=1e-15)


def test_linear_solution_single_mode_and_identity():
    g = Grid.periodic(128)
    jh = fourier_coeffs(grid_discretize(Kernel.gaussian(2.0), g), g)
    x = g.coords()[0]
    M, N = 0.7, -0.2
    for k in (1, 3):
        lam = M * jh.at(k)[0] + N
        out = linear_ide_solution(M, N, jh, np.cos(k * x), 1.3)
        assert np.abs(out - np.exp(lam * 1.3) * np.cos(k * x)).max() < 1e-12
    g0 = np.random.default_rng(0).normal(size=128)
    assert np.abs(linear_ide_solution(M, N, jh, g0, 0.0) - g0).max() < 1e-13


def test_pde_coefficients():
    par = CoordinationParams(1 / 3, 10.0)
    rep = pde_coefficients(REP, par, 5.0, Kernel.gaussian(2.0), 0.1)
    assert rep.reaction(1 / 3) == pytest.approx(0.0, abs=1e-15)
    assert rep.J2 == pytest.approx(0.25, rel=1e-9)
    f = 0.6
    F = ResponseFunction.regularized(5.0)
    expected = 0.5 * 0.01 * 0.25 * (10 * f * (1 - f) + (1 - f) * F(10 * (f - 1 / 3)) + f * F(10 * (1 / 3 - f)))
    # the replicator factor is exact only at kappa = inf; compare against dF/dr at (f, f)
    M, _ = derivatives(REP, f, par, 5.0)
    assert rep.diffusion(f) == pytest.approx(0.5 * 0.01 * 0.25 * M, rel=1e-12)
    rep_inf = pde_coefficients(REP, par, np.inf, Kernel.gaussian(2.0), 0.1)
    F = ResponseFunction.regularized(np.inf)
    expected = 0.5 * 0.01 * 0.25 * (10 * f * (1 - f) + (1 - f) * F(10 * (f - 1 / 3)) + f * F(10 * (1 / 3 - f)))
    assert rep_inf.diffusion(f) == pytest.approx(expected, rel=1e-12)
    lg = pde_coefficients(LOG, CoordinationParams(1 / 3, 200.0), np.inf, Kernel.gaussian(2.0), 0.1)
    assert lg.diffusion(0.0) < 1e-20 and lg.diffusion(1.0) < 1e-20
    assert lg.diffusion(1 / 3) == pytest.approx(0.5 * 0.01 * 0.25 * 200 * 0.25, rel=1e-12)


def test_uniform_second_moment_for_pde():
    lg = pde_coefficients(LOG, CoordinationParams(0.5, 1.0), np.inf, Kernel.uniform(domain_length=1.0), 1.0)
    assert lg.J2 == pytest.approx(1 / 12, abs=1e-14)


def test_phase_diagram(tmp_path):
    rows = phase_diagram(LOG, [2.0, 12.0], [0.5], np.inf, gaussian_jhat(2.0), K=8)
    assert [r.beta for r in rows] == [2.0, 12.0, 12.0, 12.0]
    assert rows[0].max_growth < 0
    assert rows[2].max_growth > 0 and rows[2].p0 == pytest.approx(0.5)
    phase_csv(rows, tmp_path / "phase.csv")
    assert (tmp_path / "phase.csv").read_text().splitlines()[0] == "beta,zeta,p0,max_lambda,argmax_k"


def test_homogeneous_F_replicator_cubic():
    par = CoordinationParams(0.3, 4.0)
    p = np.linspace(0, 1, 41)
    for kappa in (1.0, np.inf):
        assert np.allclose(homogeneous_F(REP, p, par, kappa), 4 * p * (1 - p) * (p - 0.3), atol=1e-14)
