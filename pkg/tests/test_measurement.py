import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from akmeter.apparatus import (
    apparatus_grid,
    apparatus_grid_like,
    factorize,
    make_completely_optimal,
    make_minimally_disturbing,
    make_predictively_optimal,
    make_retrodictively_optimal,
    random_gaussian_mixture,
)
from akmeter.errors import EmptyRegion, GridMismatch, NotPredictivelyOptimal
from akmeter.grid import GridSpec1D, trace_distance, wavefunction
from akmeter.measurement import (
    OutcomeRegion,
    anti_husimi_on_region,
    chi_square_test,
    coherent_fidelity,
    conditional_state_factorized,
    conditional_state_general,
    density_from_anti_husimi,
    final_wigner_from_outcomes,
    joint_final_state,
    outcome_distribution_convolution,
    outcome_distribution_direct,
    pointer_variances,
    predictive_resolution,
    reduced_epsilon_density,
    region_probability,
    sample_outcomes,
    sample_outcomes_array,
    snap_to_lattice,
)
from akmeter.phase_space import coherent_amplitudes, husimi, smeared_wigner, wigner_of_density

from conftest import gaussian, smooth_random_state

G = GridSpec1D.centered(256, 0.125)
AG = apparatus_grid_like(G)
SMALL = GridSpec1D.centered(64, 0.25)
SMALL_AG = apparatus_grid_like(SMALL)


def factor(lam, ax=AG.axes[0], centre=0.0):
    return wavefunction(ax, np.exp(-((ax.x - centre) ** 2) / (2 * lam**2)))


def test_direct_route_mass_and_positivity():
    psi = gaussian(G, 1.0, 0.5, -0.5)
    rho = outcome_distribution_direct(psi, make_predictively_optimal(1.0, factor(1.2), AG))
    assert rho.mass() == pytest.approx(1.0, abs=1e-6)
    assert rho.values.min() >= -1e-9


def test_complete_optimal_coherent_saturates():
    rho = outcome_distribution_direct(gaussian(G), make_completely_optimal(1, 1, AG))
    sx, sp = pointer_variances(rho)
    assert sx**2 == pytest.approx(1.0, abs=1e-6)
    assert sx * sp == pytest.approx(1.0, abs=1e-6)


def test_squeezed_input_exceeds_bound():
    g = GridSpec1D.centered(256, 0.125)
    rho = outcome_distribution_convolution(gaussian(g, 2.0), make_completely_optimal(1, 1, apparatus_grid_like(g)))
    sx, sp = pointer_variances(rho)
    assert sx * sp > 1.0 + 0.1


@given(st.integers(0, 2**32 - 1))
def test_dual_route_random_pairs(seed):
    rng = np.random.default_rng(seed)
    g = GridSpec1D.centered(128, 0.25)
    psi = smooth_random_state(g, rng, terms=2)
    ap = random_gaussian_mixture(rng, apparatus_grid_like(g))
    a = outcome_distribution_direct(psi, ap)
    b = outcome_distribution_convolution(psi, ap)
    assert a.l1_distance(b) < 1e-6
    sx, sp = pointer_variances(b)
    assert sx * sp >= 1.0 - 1e-6


def test_retro_optimal_is_husimi():
    psi = gaussian(G, 1.3, 0.5, 0.3)
    for phi_f in (factor(0.8, AG.axes[1]), wavefunction(AG.axes[1], np.exp(-((AG.axes[1].x - 1.2) ** 2)) + np.exp(-((AG.axes[1].x + 1.2) ** 2)))):
        rho = outcome_distribution_convolution(psi, make_retrodictively_optimal(1.0, phi_f, AG))
        assert rho.l1_distance(husimi(psi, 1.0)) < 1e-6


def test_min_disturbing_is_smeared_wigner():
    psi = gaussian(G, 1.0, 0.3)
    eta = math.log(2)
    ap = make_minimally_disturbing(1.0, eta, AG)
    rho = outcome_distribution_convolution(psi, ap)
    assert rho.l1_distance(smeared_wigner(psi, 1.0, eta)) < 1e-6


def test_narrow_apparatus_tracks_wigner_marginal():
    g = GridSpec1D.centered(512, 0.0625)
    psi = gaussian(g, 2.0)
    ap = make_completely_optimal(0.25, 0.25, apparatus_grid_like(g))
    rho = outcome_distribution_convolution(psi, ap)
    assert np.abs(rho.marginal_x() - np.abs(psi.amps) ** 2).max() < 0.01


def test_grid_mismatch():
    with pytest.raises(GridMismatch):
        outcome_distribution_direct(gaussian(G), make_completely_optimal(1, 1, apparatus_grid(8.0, 64)))


def test_reduced_epsilon_density():
    r = reduced_epsilon_density(make_completely_optimal(1, 1, AG))
    assert r.trace == pytest.approx(1.0, abs=1e-8)
    assert r.purity() == pytest.approx(1.0, abs=1e-6)
    r = reduced_epsilon_density(make_minimally_disturbing(1, 0.5, AG))
    # Gaussian purity: sech(eta) for this correlated state
    assert r.purity() == pytest.approx(1 / math.cosh(0.5), abs=1e-6)


def test_joint_state_norm_and_marginal():
    psi = gaussian(SMALL, 1.0, 0.5, 0.5)
    ap = make_predictively_optimal(1.0, factor(1.2, SMALL_AG.axes[0]), SMALL_AG)
    joint = joint_final_state(psi, ap)
    assert joint.norm == pytest.approx(1.0, abs=1e-6)
    assert joint.outcome_distribution().l1_distance(outcome_distribution_direct(psi, ap)) < 1e-6


def test_joint_state_localisation():
    psi = gaussian(SMALL, 0.5, 2.0)
    ap = make_completely_optimal(0.5, 1.0, SMALL_AG)
    d = joint_final_state(psi, ap).outcome_distribution()
    assert d.moments()["mean_x"] == pytest.approx(2.0, abs=1e-6)
    psi = gaussian(SMALL, 1.5, 0.0, 1.5)
    d = joint_final_state(psi, ap).outcome_distribution()
    assert d.moments()["mean_p"] == pytest.approx(1.5, abs=1e-6)


def test_region_validation():
    with pytest.raises(ValueError):
        OutcomeRegion(1.0, 0.0, 0.0, 1.0)
    rho = outcome_distribution_direct(gaussian(G), make_completely_optimal(1, 1, AG))
    with pytest.raises(EmptyRegion):
        region_probability(rho, OutcomeRegion(100.0, 101.0, 0.0, 1.0))


def test_predictive_preparation_fidelity():
    psi = gaussian(G, 1.5, 0.3, -0.2)
    ap = make_predictively_optimal(1.0, factor(1.2), AG)
    rho = outcome_distribution_direct(psi, ap)
    mx, mp = snap_to_lattice(rho, 1.0, -1.0)
    cond = conditional_state_factorized(psi, ap, OutcomeRegion.around(mx, mp, 0.05, 0.05), rho)
    cond.validate()
    assert coherent_fidelity(cond, mx, mp, 1.0) >= 0.99


def test_whole_grid_conditioning():
    psi = gaussian(G, 1.0)
    ap = make_predictively_optimal(1.0, factor(0.9), AG)
    rho = outcome_distribution_direct(psi, ap)
    cond = conditional_state_factorized(psi, ap, OutcomeRegion.everything(rho), rho)
    assert cond.trace == pytest.approx(1.0, abs=1e-6)


def test_empty_region_far_away():
    psi = gaussian(G, 1.0)
    ap = make_predictively_optimal(1.0, factor(0.9), AG)
    rho = outcome_distribution_direct(psi, ap)
    with pytest.raises(EmptyRegion):
        conditional_state_factorized(psi, ap, OutcomeRegion.around(7.5, 7.5, 0.2, 0.2), rho)


def test_conditional_routes_agree():
    psi = gaussian(SMALL, 1.0, 0.5)
    ap = make_predictively_optimal(1.0, factor(1.2, SMALL_AG.axes[0]), SMALL_AG)
    joint = joint_final_state(psi, ap)
    region = OutcomeRegion(-0.6, 1.2, -0.8, 0.9)
    a = conditional_state_factorized(psi, ap, region)
    b = conditional_state_general(joint, region)
    assert trace_distance(a, b) < 1e-6


def test_conditional_general_nonfactorized():
    psi = gaussian(SMALL, 1.0)
    ap = make_minimally_disturbing(1.0, 0.3, SMALL_AG)
    joint = joint_final_state(psi, ap)
    cond = conditional_state_general(joint, OutcomeRegion(-1.0, 1.0, -1.0, 1.0))
    cond.validate()
    full = conditional_state_general(joint, OutcomeRegion.everything(joint.outcome_distribution()))
    assert full.trace == pytest.approx(1.0, abs=1e-6)


def test_final_wigner_routes():
    psi = gaussian(G, 1.2, 0.4)
    ap = make_predictively_optimal(1.0, factor(1.1), AG)
    rho = outcome_distribution_direct(psi, ap)
    _, phi_f = factorize(ap)
    for region in (OutcomeRegion(-0.5, 0.8, -0.6, 0.6), OutcomeRegion.everything(rho)):
        cond = conditional_state_factorized(psi, ap, region, rho)
        assert final_wigner_from_outcomes(rho, phi_f, region).l1_distance(wigner_of_density(cond)) < 1e-5


def test_anti_husimi_reconstruction():
    psi = gaussian(G, 1.2, 0.4)
    ap = make_predictively_optimal(1.0, factor(1.1), AG)
    rho = outcome_distribution_direct(psi, ap)
    region = OutcomeRegion(-0.5, 0.8, -0.6, 0.6)
    p = anti_husimi_on_region(rho, region, ap)
    assert p.values.min() >= 0
    assert p.mass() == pytest.approx(1.0, abs=1e-12)
    recon = density_from_anti_husimi(p, predictive_resolution(ap), G)
    assert trace_distance(recon, conditional_state_factorized(psi, ap, region, rho)) < 1e-5


def test_anti_husimi_needs_predictive_optimality():
    ap = make_retrodictively_optimal(1.0, wavefunction(AG.axes[1], np.exp(-((AG.axes[1].x - 1) ** 2)) + np.exp(-((AG.axes[1].x + 1) ** 2))), AG)
    rho = outcome_distribution_direct(gaussian(G), ap)
    with pytest.raises(NotPredictivelyOptimal):
        anti_husimi_on_region(rho, OutcomeRegion(-1, 1, -1, 1), ap)


def test_sampling_determinism_and_variance():
    rho = outcome_distribution_direct(gaussian(G), make_completely_optimal(1, 1, AG))
    a = sample_outcomes_array(rho, 100_000, 42)
    b = sample_outcomes_array(rho, 100_000, 42)
    assert a.tobytes() == b.tobytes()
    assert not np.array_equal(a, sample_outcomes_array(rho, 100_000, 43))
    sx, sp = pointer_variances(rho)
    # jitter adds dx^2 / 12 of variance per axis
    assert a[:, 0].var() == pytest.approx(sx**2 + G.dx**2 / 12, rel=0.03)
    assert a[:, 1].var() == pytest.approx(sp**2 + rho.p_axis.dx**2 / 12, rel=0.03)
    stat, dof, p = chi_square_test(a, rho)
    assert p > 0.001
    assert dof > 100


def test_sampling_prefix_stable():
    rho = outcome_distribution_direct(gaussian(G), make_completely_optimal(1, 1, AG))
    a = sample_outcomes_array(rho, 70_000, 9)
    b = sample_outcomes_array(rho, 140_000, 9)
    assert np.array_equal(a, b[:70_000])


def test_sample_records():
    rho = outcome_distribution_direct(gaussian(G), make_completely_optimal(1, 1, AG))
    s = sample_outcomes(rho, 5, 3)
    assert [x.index for x in s] == list(range(5))
    assert all(x.seed == 3 for x in s)
    assert all(rho.x[0] - G.dx <= x.mu_x <= rho.x[-1] + G.dx for x in s)


def test_chi_square_rejects_wrong_distribution():
    rho = outcome_distribution_direct(gaussian(G), make_completely_optimal(1, 1, AG))
    other = outcome_distribution_direct(gaussian(G, 1.0, 0.3), make_completely_optimal(1, 1, AG))
    _, _, p = chi_square_test(sample_outcomes_array(other, 100_000, 1), rho)
    assert p < 1e-6
