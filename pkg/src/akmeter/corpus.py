"""Built-in scenario corpus used by ``akmeter verify`` and ``akmeter kernels``."""
from __future__ import annotations

import numpy as np

from .apparatus import (
    AXIS_NAMES,
    apparatus_grid,
    error_report,
    make_completely_optimal,
    make_minimally_disturbing,
    make_predictively_optimal,
    make_retrodictively_optimal,
    random_gaussian_mixture,
)
from .grid import GridSpec2D, wavefunction
from .kernel_analysis import (
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
from .report import INEQUALITY_TOL, Verdict
from .scenario import parse_scenario

GRID = {"n": 256, "dx": 0.125}

SYSTEMS = {
    "coherent": {"kind": "coherent", "mu_x": 0.0, "mu_p": 0.0, "lambda": 1.0},
    "squeezed_wide": {"kind": "squeezed", "mu_x": 0.5, "mu_p": -0.5, "lambda": 2.0, "chirp": 0.1},
    "squeezed_narrow": {"kind": "squeezed", "mu_x": -0.5, "mu_p": 1.0, "lambda": 0.5, "chirp": 0.0},
    "cat": {"kind": "cat", "separation": 5.0, "lambda": 1.0, "phase": 0.0},
    "cubic_phase": {"kind": "cubic_phase", "lambda": 1.0, "kappa": 0.05},
}

APPARATUS = {
    "retro_opt": {"kind": "retro_opt", "lambda_i": 1.0, "phi_f": {"kind": "bimodal", "lambda": 0.7, "separation": 3.0}},
    "pred_opt": {"kind": "pred_opt", "lambda_f": 1.0, "phi_i": {"kind": "gaussian", "lambda": 1.5, "center": 0.0}},
    "complete_opt": {"kind": "complete_opt", "lambda_i": 1.0, "lambda_f": 1.0},
    "min_disturb": {"kind": "min_disturb", "lambda": 1.0, "eta": 1.0},
}


def corpus_scenarios(hbar: float = 1.0, grid_n: int | None = None) -> list:
    grid = dict(GRID)
    if grid_n is not None:
        grid["n"] = grid_n
    out = []
    for sname, sys_spec in SYSTEMS.items():
        for aname, ap_spec in APPARATUS.items():
            data = {"name": f"{sname}/{aname}", "hbar": hbar, "grid": grid, "system": sys_spec, "apparatus": ap_spec}
            out.append(parse_scenario(data))
    return out


def random_relation_verdicts(count: int = 50, seed: int = 7, hbar: float = 1.0) -> list:
    """Error and error-disturbance relations on random Gaussian-mixture apparatus states."""
    rng = np.random.default_rng(seed)
    grid = apparatus_grid(8.0, hbar=hbar)
    out = []
    for k in range(count):
        r = error_report(random_gaussian_mixture(rng, grid), strict=False)
        for name, product in r.products().items():
            if name != "disturbance":
                out.append(Verdict.at_least(f"random_{k:02d}_{name}", product, hbar / 2, INEQUALITY_TOL))
    return out


def kernel_family_states(n: int = 64, hbar: float = 1.0) -> dict:
    """The four families on a balanced periodic kernel lattice."""
    ax = balanced_kernel_axis(n, hbar)
    g2 = GridSpec2D((ax, ax), AXIS_NAMES)

    def gauss(lam):
        return wavefunction(ax, np.exp(-(ax.x**2) / (2 * lam**2)))

    return {
        "retro_opt": make_retrodictively_optimal(1.0, gauss(0.7), g2),
        "pred_opt": make_predictively_optimal(1.0, gauss(1.4), g2),
        "complete_opt": make_completely_optimal(1.0, 1.0, g2),
        "min_disturb": make_minimally_disturbing(1.0, 0.5, g2),
    }


def kernel_verdicts(n: int = 64, hbar: float = 1.0) -> list:
    """Kernel-level checks on the four families plus a kernel built to break convolution form."""
    out = []
    ax = balanced_kernel_axis(n, hbar)
    psis = [
        wavefunction(ax, np.exp(-((ax.x - 0.5) ** 2) / 2)),
        wavefunction(ax, np.exp(-(ax.x**2) / (2 * 0.8**2) + 0.5j * ax.x / hbar)),
    ]
    for name, ap in kernel_family_states(n, hbar).items():
        r = error_report(ap)
        k = extract_kernel_ak(ap)
        off, diag = unitarity_residue(k)
        out.append(Verdict.at_most(f"{name}_unitarity_offdiag", off, 1e-4))
        out.append(Verdict.at_most(f"{name}_unitarity_diag", diag, 1e-4))
        fx, fp = marginal_kernels(k)
        out.append(Verdict.at_most(f"{name}_fp_routes", float(np.abs(fp.values - marginal_kernel_p_fourier(k).values).max()), 1e-5))
        cx, cp = detect_convolution_form(fx), detect_convolution_form(fp)
        out.append(Verdict.at_most(f"{name}_form_residual_x", cx.residual, 1e-6))
        out.append(Verdict.at_most(f"{name}_form_residual_p", cp.residual, 1e-6))
        sx, sp = prugovecki_sigmas(cx, cp)
        if abs(cx.mean()) < 1e-9 and abs(cp.mean()) < 1e-9:
            out.append(Verdict.equal(f"{name}_sigma_x", sx, r.dei_x, 1e-6))
            out.append(Verdict.equal(f"{name}_sigma_p", sp, r.dei_p, 1e-6))
        vals = [(rms_from_marginal(fx, psi), rms_from_marginal(fp, psi)) for psi in psis]
        out.append(Verdict.equal(f"{name}_rms_x", vals[0][0], r.dei_x, 1e-4))
        out.append(Verdict.equal(f"{name}_rms_p", vals[0][1], r.dei_p, 1e-4))
        out.append(Verdict.equal(f"{name}_rms_x_psi_independent", vals[1][0], vals[0][0], 1e-6))
        out.append(Verdict.equal(f"{name}_rms_p_psi_independent", vals[1][1], vals[0][1], 1e-6))
    k = violating_kernel(extract_kernel_ak(kernel_family_states(n, hbar)["complete_opt"]))
    fx, _ = marginal_kernels(k)
    out.append(Verdict.at_least("violating_kernel_detected", detect_convolution_form(fx).residual, 0.1))
    return out

