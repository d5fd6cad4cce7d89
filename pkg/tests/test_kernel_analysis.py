import math

import numpy as np
import pytest

from akmeter.apparatus import AXIS_NAMES, error_report, make_completely_optimal, make_retrodictively_optimal
from akmeter.errors import FormViolation, GridMismatch
from akmeter.grid import GridSpec1D, GridSpec2D, wavefunction
from akmeter.kernel_analysis import (
    balanced_kernel_axis,
    detect_convolution_form,
    extract_kernel_ak,
    marginal_kernel_p_fourier,
    marginal_kernels,
    prugovecki_sigmas,
    rms_from_marginal,
    unitarity_residue,
    violating_kernel,
)
from akmeter.measurement import joint_final_state

AX = balanced_kernel_axis(32)
G2 = GridSpec2D((AX, AX), AXIS_NAMES)


@pytest.fixture(scope="module")
def ak():
    ap = make_completely_optimal(1.0, 1.0, G2)
    k = extract_kernel_ak(ap)
    return ap, k, marginal_kernels(k)


def test_balanced_axis():
    assert AX.dx == pytest.approx(AX.dp)


def test_unitarity(ak):
    _, k, _ = ak
    off, diag = unitarity_residue(k)
    assert off < 1e-4
    assert diag < 1e-4


def test_kernel_matches_joint_state():
    # periodic wrap and zero padding differ only by the lattice-edge tails
    ax = balanced_kernel_axis(64)
    ap = make_completely_optimal(1.0, 1.0, GridSpec2D((ax, ax), AXIS_NAMES))
    psi = wavefunction(ax, np.exp(-((ax.x - 0.4) ** 2) / 2))
    ref = joint_final_state(psi, ap).amps
    assert np.abs(extract_kernel_ak(ap).apply(psi) - ref).max() < 1e-6


def test_kernel_grid_mismatch(ak):
    _, k, fs = ak
    psi = wavefunction(GridSpec1D.centered(32, 0.3), np.exp(-(GridSpec1D.centered(32, 0.3).x ** 2)))
    with pytest.raises(GridMismatch):
        k.apply(psi)
    with pytest.raises(GridMismatch):
        rms_from_marginal(fs[0], psi)


def test_marginal_delta_normalisation(ak):
    _, _, (fx, fp) = ak
    assert fx.delta_residue() < 1e-6
    assert fp.delta_residue() < 1e-6


def test_fp_routes_agree(ak):
    _, k, (_, fp) = ak
    assert np.abs(fp.values - marginal_kernel_p_fourier(k).values).max() < 1e-10


def test_convolution_form_and_sigmas(ak):
    ap, _, (fx, fp) = ak
    cx, cp = detect_convolution_form(fx), detect_convolution_form(fp)
    assert cx.residual < 1e-6
    assert cp.residual < 1e-6
    assert cx.mass() == pytest.approx(1.0, abs=1e-9)
    sx, sp = prugovecki_sigmas(cx, cp)
    r = error_report(ap)
    assert sx == pytest.approx(1 / math.sqrt(2), abs=1e-6)
    assert sx == pytest.approx(r.dei_x, abs=1e-6)
    assert sp == pytest.approx(r.dei_p, abs=1e-6)


def test_rms_equivalence_and_state_independence(ak):
    ap, _, (fx, fp) = ak
    r = error_report(ap)
    states = [
        wavefunction(AX, np.exp(-((AX.x - 0.3) ** 2) / 2)),
        wavefunction(AX, np.exp(-(AX.x**2) / (2 * 0.9**2) + 0.4j * AX.x)),
    ]
    vx = [rms_from_marginal(fx, s) for s in states]
    vp = [rms_from_marginal(fp, s) for s in states]
    assert vx[0] == pytest.approx(r.dei_x, abs=1e-4)
    assert vp[0] == pytest.approx(r.dei_p, abs=1e-4)
    assert vx[1] == pytest.approx(vx[0], abs=1e-6)
    assert vp[1] == pytest.approx(vp[0], abs=1e-6)


def test_shifted_family_sigma_below_rms():
    ax = balanced_kernel_axis(64)
    g2 = GridSpec2D((ax, ax), AXIS_NAMES)
    phi_f = wavefunction(ax, np.exp(-(ax.x**2) / (2 * 0.8**2)))
    # eps_Xi Gaussian displaced by 0.5: the pointer is biased
    base = make_retrodictively_optimal(1.0, phi_f, g2)
    amps = np.roll(base.amps, int(round(0.5 / ax.dx)), axis=0)
    from akmeter.apparatus import ApparatusState

    ap = ApparatusState.from_amplitudes(g2, amps)
    fx, fp = marginal_kernels(extract_kernel_ak(ap))
    cx, cp = detect_convolution_form(fx), detect_convolution_form(fp)
    sx, _ = prugovecki_sigmas(cx, cp)
    r = error_report(ap)
    assert abs(cx.mean()) > 0.4
    assert sx < r.dei_x - 0.1
    assert sx**2 == pytest.approx(r.dei_x**2 - r.mean_eps_xi**2, abs=1e-6)


def test_violating_kernel(ak):
    _, k, _ = ak
    bad = violating_kernel(k)
    off, diag = unitarity_residue(bad)
    assert off < 1e-4 and diag < 1e-4
    fx, fp = marginal_kernels(bad)
    cx = detect_convolution_form(fx)
    assert cx.residual > 0.1
    with pytest.raises(FormViolation):
        prugovecki_sigmas(cx, detect_convolution_form(fp))


def test_extract_needs_matching_axes():
    a = balanced_kernel_axis(32)
    b = GridSpec1D.centered(32, a.dx * 1.1)
    with pytest.raises(GridMismatch):
        extract_kernel_ak(make_completely_optimal(1.0, 1.0, GridSpec2D((a, b), AXIS_NAMES)))
