import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy import integrate

from spatial_egt.grid import Grid
from spatial_egt.kernels import (
    Kernel, KernelError, ResolutionError, effective_radius, fourier_coeffs, grid_discretize,
    kac_discretize,
)


def test_uniform_kac_weights_equal():
    for n in (7, 32, 101):
        Wd = kac_discretize(Kernel.uniform(), 1.0 / n, sites_per_axis=n)
        assert np.allclose(Wd.weights, 1.0 / n, atol=0, rtol=1e-14)
        assert Wd.total == pytest.approx(1.0, abs=1e-14)


def test_gaussian_2d_kac_mass():
    J = Kernel.gaussian(15.0, dim=2)
    Wd = kac_discretize(J, 1 / 64)
    assert 0.999 <= Wd.raw_sum <= 1.001
    # quadrature oracle: mass of J inside the truncation disc
    r = Wd.truncation_radius
    inside = integrate.quad(lambda s: 2 * np.pi * s * J(s), 0, r)[0]
    assert inside >= 0.999
    assert Wd.total == pytest.approx(1.0, abs=1e-13)
    assert Wd.is_symmetric()


def test_ball_weights_vanish_outside_radius():
    R, gamma = 0.5, 1 / 40
    Wd = kac_discretize(Kernel.ball(R), gamma)
    z = np.arange(Wd.weights.size) - Wd.center[0]
    assert np.all(Wd.weights[np.abs(z) >= R / gamma] == 0)
    assert np.all(Wd.weights[np.abs(z) < R / gamma] > 0)


def test_kac_rejects_support_wider_than_half_torus():
    with pytest.raises(KernelError):
        kac_discretize(Kernel.ball(3.0), 1 / 8, sites_per_axis=16)


def test_kac_rejects_bad_gamma():
    with pytest.raises(KernelError):
        kac_discretize(Kernel.gaussian(2.0), 1.5)


def test_grid_gaussian_symmetric_normalized():
    Wd = grid_discretize(Kernel.gaussian(2.0), Grid.periodic(256))
    assert Wd.total == pytest.approx(1.0, abs=1e-14)
    assert Wd.is_symmetric()


def test_grid_uniform_each_weight():
    Wd = grid_discretize(Kernel.uniform(), Grid.periodic(64))
    assert np.allclose(Wd.weights, 1 / 64, rtol=1e-14)


def test_gaussian_effective_support():
    J = Kernel.gaussian(20.0)
    r = effective_radius(J)
    assert r == pytest.approx(np.sqrt(np.log(1e9) / 20), rel=1e-12)
    assert r == pytest.approx(1.0, abs=0.02)
    assert J(r) / J(0) == pytest.approx(1e-9, rel=1e-9)


def test_grid_resolution_error():
    with pytest.raises(ResolutionError):
        grid_discretize(Kernel.gaussian(200.0), Grid.periodic(16))


def test_grid_rejects_dimension_mismatch():
    with pytest.raises(KernelError):
        grid_discretize(Kernel.gaussian(2.0, dim=2), Grid.periodic(64))


def test_uniform_fourier_single_mode():
    g = Grid.periodic(64)
    c = fourier_coeffs(grid_discretize(Kernel.uniform(), g), g).values
    assert c[0] == pytest.approx(1.0, abs=1e-12)
    assert np.abs(c[1:]).max() < 1e-10


@pytest.mark.parametrize("J", [Kernel.gaussian(2.0), Kernel.gaussian(20.0), Kernel.ball(0.7)],
                         ids=["g2", "g20", "ball"])
def test_fourier_normalization_symmetry_bound(J):
    g = Grid.periodic(128)
    c = fourier_coeffs(grid_discretize(J, g), g)
    assert c.values[0] == pytest.approx(1.0, abs=1e-10)
    assert np.abs(c.values[1:]).max() < 1.0
    k = np.arange(1, 64)
    assert np.allclose(c.at(k), c.at(-k), atol=1e-14)


def test_gaussian_fourier_decreasing_and_matches_quadrature():
    g = Grid.periodic(512)
    J = Kernel.gaussian(20.0)
    c = fourier_coeffs(grid_discretize(J, g), g)
    v = c.at(np.arange(9))
    assert np.all(v > 0) and np.all(np.diff(v) < 0)
    # harmonic k on [-pi, pi] is exp(i k x); quadrature of J against cos(k x)
    for k in range(9):
        q = integrate.quad(lambda x: J(x) * np.cos(k * x), -np.pi, np.pi, limit=200)[0]
        assert v[k] == pytest.approx(q / integrate.quad(J, -np.pi, np.pi)[0], abs=1e-10)


def test_fourier_round_trip():
    g = Grid.periodic(96)
    Wd = grid_discretize(Kernel.gaussian(5.0), g)
    c = fourier_coeffs(Wd, g)
    back = np.fft.ifft(c.values).real
    assert np.abs(back - Wd.circular(g.shape)).max() < 1e-10


def test_fourier_requires_periodic():
    g = Grid((64,), (-3,), (3,), "fixed", ((-1, 1),))
    with pytest.raises(KernelError):
        fourier_coeffs(grid_discretize(Kernel.gaussian(2.0), g), g)


@given(st.integers(0, 10 ** 6))
def test_convolution_theorem(seed):
    g = Grid.periodic(64)
    Wd = grid_discretize(Kernel.gaussian(3.0), g)
    f = np.random.default_rng(seed).random(64)
    fft = np.fft.ifft(np.fft.fft(f) * np.fft.fft(Wd.circular(g.shape))).real
    w = Wd.circular(g.shape)
    direct = np.array([sum(w[j] * f[(i - j) % 64] for j in range(64)) for i in range(64)])
    assert np.abs(fft - direct).max() <= 1e-8 * np.abs(direct).max()


def test_kac_and_grid_weights_agree():
    J = Kernel.gaussian(2.0)
    errs = []
    for n in (64, 128, 256):
        g = Grid.periodic(n)
        h = g.spacing[0]
        gw = grid_discretize(J, g).circular(g.shape)
        kw = kac_discretize(J, h, sites_per_axis=n).circular(g.shape)
        errs.append(np.abs(gw - kw).max() / h)
    # both are J(z h) h up to normalization; the per-unit-length gap shrinks like h^2
    assert errs[0] < 1e-6
    assert all(e1 >= e2 for e1, e2 in zip(errs, errs[1:])) or max(errs) < 1e-12


def test_second_moment_uniform_unit_interval():
    assert Kernel.uniform(domain_length=1.0).second_moment() == pytest.approx(1 / 12, abs=1e-14)


def test_second_moment_gaussian():
    for b in (0.5, 2.0, 15.0):
        assert Kernel.gaussian(b).second_moment() == pytest.approx(1 / (2 * b), rel=1e-9)
        assert Kernel.gaussian(b, dim=2).second_moment() == pytest.approx(1 / b, rel=1e-9)


def test_continuous_transform_gaussian():
    J = Kernel.gaussian(20.0)
    for k in range(4):
        q = integrate.quad(lambda x: J(x) * np.cos(2 * np.pi * k * x), -5, 5, limit=200)[0]
        assert J.transform(k) == pytest.approx(q, abs=1e-12)
