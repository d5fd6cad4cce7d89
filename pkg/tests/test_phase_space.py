import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from akmeter.errors import AliasingDetected, GridMismatch
from akmeter.grid import DensityMatrix1D, GridSpec1D, to_momentum_rep, wavefunction
from akmeter.phase_space import (
    CoherentStateParams,
    PhaseSpaceDist,
    coherent_amplitudes,
    coherent_wavefunction,
    convolve2d,
    gaussian_kernel,
    husimi,
    purity_from_wigner,
    smeared_wigner,
    wigner_bound_violation,
    wigner_of_density,
    wigner_of_pure,
)

from conftest import gaussian, smooth_random_state


def gaussian_dist(grid, mx, mp, sx, sp):
    x, p = grid.x[:, None], grid.p[None, :]
    v = np.exp(-((x - mx) ** 2) / (2 * sx**2) - ((p - mp) ** 2) / (2 * sp**2)) / (2 * math.pi * sx * sp)
    return PhaseSpaceDist.on_grid(grid, v)


def direct_wigner(f, x0, p0, hbar=1.0):
    """Quadrature of the lag integral of the continuous amplitude ``f`` at one point."""
    y = np.linspace(-20, 20, 8001)
    integrand = np.exp(1j * p0 * y / hbar) * f(x0 - y / 2) * np.conj(f(x0 + y / 2))
    return float(np.trapezoid(integrand, y).real / (2 * math.pi * hbar))


def test_coherent_wigner_peak(grid):
    w = wigner_of_pure(gaussian(grid))
    assert w.values.max() == pytest.approx(1 / math.pi, abs=1e-4)
    assert w.mass() == pytest.approx(1.0, abs=1e-6)


def test_displaced_wigner_peak(grid):
    w = wigner_of_pure(gaussian(grid, 1.0, 2.0, 3.0))
    i, j = np.unravel_index(np.argmax(w.values), w.values.shape)
    assert grid.x[i] == pytest.approx(2.0, abs=grid.dx)
    assert grid.p[j] == pytest.approx(3.0, abs=grid.dp)


def test_wigner_matches_quadrature():
    g = GridSpec1D.centered(256, 0.0625)
    def f(x):
        return coherent_amplitudes(x, 0.4, -0.6, 0.9, 1.0) + 0.5 * coherent_amplitudes(x, -1.5, 1.0, 0.7, 1.0)

    w = wigner_of_pure(wavefunction(g, f(g.x)))
    norm = np.sum(np.abs(f(g.x)) ** 2) * g.dx
    for i, j in [(128, 128), (134, 124), (120, 131), (110, 140)]:
        assert w.values[i, j] == pytest.approx(direct_wigner(f, g.x[i], g.p[j]) / norm, abs=1e-6)


def test_cat_fringes(grid):
    a = 3.0
    amps = coherent_amplitudes(grid.x, a, 0, 1, 1) + coherent_amplitudes(grid.x, -a, 0, 1, 1)
    w = wigner_of_pure(wavefunction(grid, amps))
    centre = w.values[grid.n // 2]
    assert centre.min() < -0.1
    assert wigner_bound_violation(w) <= 1e-6


@given(st.integers(0, 2**32 - 1))
def test_wigner_marginals_and_bound(seed):
    g = GridSpec1D.centered(128, 0.25)
    psi = smooth_random_state(g, np.random.default_rng(seed))
    w = wigner_of_pure(psi)
    assert np.abs(w.marginal_x() - np.abs(psi.amps) ** 2).sum() * g.dx < 1e-6
    assert np.abs(w.marginal_p() - np.abs(to_momentum_rep(psi).amps) ** 2).sum() * g.dp < 1e-6
    assert wigner_bound_violation(w) <= 1e-6
    assert purity_from_wigner(w) == pytest.approx(1.0, abs=1e-4)


def test_density_wigner_matches_pure(grid):
    psi = gaussian(grid, 1.3, 0.5, -1.0)
    a = wigner_of_pure(psi)
    b = wigner_of_density(DensityMatrix1D.from_pure(psi))
    assert a.linf_distance(b) < 1e-8


def test_mixture_has_no_fringes(grid):
    a = DensityMatrix1D.from_pure(gaussian(grid, 1.0, 3.0))
    b = DensityMatrix1D.from_pure(gaussian(grid, 1.0, -3.0))
    mix = DensityMatrix1D(grid, 0.5 * (a.elems + b.elems))
    w = wigner_of_density(mix)
    assert w.values.min() > -1e-9
    ref = 0.5 * (wigner_of_pure(gaussian(grid, 1.0, 3.0)).values + wigner_of_pure(gaussian(grid, 1.0, -3.0)).values)
    assert np.abs(w.values - ref).max() < 1e-10


def test_thermal_mixture_broadens(grid):
    # a Gaussian mixture over displacements is the Wigner function convolved with that Gaussian
    shifts = np.arange(-12, 13) * grid.dx
    weights = np.exp(-(shifts**2) / (2 * 0.5**2))
    weights /= weights.sum()
    elems = sum(wt * DensityMatrix1D.from_pure(gaussian(grid, 1.0, s)).elems for wt, s in zip(weights, shifts))
    w = wigner_of_density(DensityMatrix1D(grid, elems))
    m = w.moments()
    var_shift = float((weights * shifts**2).sum())
    assert m["std_x"] ** 2 == pytest.approx(0.5 + var_shift, abs=1e-8)
    assert m["std_p"] ** 2 == pytest.approx(0.5, abs=1e-8)


def test_husimi_of_matching_coherent(grid):
    q = husimi(gaussian(grid, 1.0, 0.5, -0.5), 1.0)
    m = q.moments()
    assert m["std_x"] ** 2 == pytest.approx(1.0, abs=1e-6)
    assert m["std_p"] ** 2 == pytest.approx(1.0, abs=1e-6)
    assert q.mass() == pytest.approx(1.0, abs=1e-6)


@given(st.integers(0, 2**32 - 1), st.sampled_from([0.7, 1.0, 1.6]))
def test_husimi_dual_route(seed, lam):
    g = GridSpec1D.centered(128, 0.25)
    psi = smooth_random_state(g, np.random.default_rng(seed))
    a = husimi(psi, lam)
    b = husimi(psi, lam, method="overlap")
    assert a.linf_distance(b) < 1e-6
    assert a.values.min() >= -1e-9


def test_husimi_narrow_kernel_tracks_position(grid):
    psi = gaussian(grid, 2.0)
    q = husimi(psi, 0.2)
    assert np.abs(q.marginal_x() - np.abs(psi.amps) ** 2).max() < 0.01


def test_smeared_wigner_eta_zero_is_husimi(grid):
    psi = gaussian(grid, 1.5, 0.3)
    assert smeared_wigner(psi, 1.0, 0.0).l1_distance(husimi(psi, 1.0)) < 1e-8


def test_smeared_wigner_variance(grid):
    eta = math.log(2)
    s = smeared_wigner(gaussian(grid), 1.0, eta)
    assert s.moments()["std_x"] ** 2 == pytest.approx(0.5 * (1 + math.cosh(eta)), abs=1e-6)
    assert s.mass() == pytest.approx(1.0, abs=1e-6)


def test_smeared_wigner_monotone(grid):
    psi = gaussian(grid)
    v = [smeared_wigner(psi, 1.0, eta).moments()["std_x"] for eta in (0.0, 0.5, 1.0, 1.5)]
    assert all(b > a for a, b in zip(v, v[1:]))


def test_smeared_wigner_rejects_negative_eta(grid):
    with pytest.raises(ValueError):
        smeared_wigner(gaussian(grid), 1.0, -0.1)


def test_convolution_gaussians(grid):
    a = gaussian_dist(grid, 1.0, -0.5, 0.8, 0.9)
    b = gaussian_dist(GridSpec1D.centered(grid.n, grid.dx), 0.0, 0.0, 0.6, 0.7)
    b = PhaseSpaceDist(b.x_axis, b.p_axis, b.values / b.mass())
    c = convolve2d(a, b)
    ref = gaussian_dist(grid, 1.0, -0.5, math.hypot(0.8, 0.6), math.hypot(0.9, 0.7))
    assert np.abs(c.values - ref.values).max() < 1e-5


def test_convolution_near_delta(grid):
    a = gaussian_dist(grid, 0.0, 0.0, 1.0, 1.0)
    delta = np.zeros((grid.n, grid.n))
    delta[grid.n // 2, grid.n // 2] = 1 / (grid.dx * grid.dp)
    k = PhaseSpaceDist(GridSpec1D.centered(grid.n, grid.dx), grid.momentum_grid(), delta)
    assert np.abs(convolve2d(a, k).values - a.values).max() < 1e-4


@given(st.integers(0, 2**32 - 1))
def test_convolution_mass(seed):
    g = GridSpec1D.centered(64, 0.5)
    rng = np.random.default_rng(seed)
    va = np.zeros((64, 64))
    va[24:40, 24:40] = rng.random((16, 16))
    a = PhaseSpaceDist.on_grid(g, va)
    kv = np.zeros((64, 64))
    kv[28:36, 28:36] = rng.random((8, 8))
    k = PhaseSpaceDist.on_grid(g, kv)
    k = PhaseSpaceDist(k.x_axis, k.p_axis, k.values / k.mass())
    assert convolve2d(a, k).mass() == pytest.approx(a.mass() * k.mass(), rel=1e-9)


def test_convolution_aliasing(grid):
    a = gaussian_dist(grid, 14.0, 0.0, 0.5, 0.5)
    k = gaussian_kernel(grid, 1.0)
    k = PhaseSpaceDist(k.x_axis, k.p_axis, np.roll(k.values, 40, axis=0))
    with pytest.raises(AliasingDetected):
        convolve2d(a, k)


def test_convolution_grid_mismatch(grid):
    a = gaussian_dist(grid, 0, 0, 1, 1)
    b = gaussian_dist(GridSpec1D.centered(256, 0.1), 0, 0, 1, 1)
    with pytest.raises(GridMismatch):
        convolve2d(a, b, check_kernel=False)


def test_coherent_wavefunction(grid):
    w = coherent_wavefunction(CoherentStateParams(0, 0, 1), grid)
    assert np.abs(w.amps.imag).max() < 1e-14
    assert np.allclose(w.amps, w.amps[::-1][np.r_[grid.n - 1, : grid.n - 1]])
    w = coherent_wavefunction(CoherentStateParams(2, 0, 1), grid)
    assert grid.x[np.argmax(np.abs(w.amps))] == pytest.approx(2.0)
    w = coherent_wavefunction(CoherentStateParams(0, 3, 1), grid)
    assert grid.p[np.argmax(np.abs(to_momentum_rep(w).amps))] == pytest.approx(3.0, abs=grid.dp)
    assert w.norm == pytest.approx(1.0, abs=1e-9)


def test_coherent_params_validation():
    with pytest.raises(ValueError):
        CoherentStateParams(0, 0, 0)
