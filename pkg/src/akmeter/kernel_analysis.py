"""Measurement-kernel view of the Arthurs-Kelly process.

Everything here runs on a small periodic lattice (default 32 points per
axis) and exists to cross-check the operator-level results.  The apparatus
lattice doubles as the kernel lattice: ``x``, ``mu_X`` and ``x'`` share it,
``mu_P`` lives on its conjugate, and apparatus indices are taken modulo
``n`` so that the discretised kernel is exactly unitary.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .apparatus import ApparatusState
from .errors import FormViolation, GridMismatch
from .grid import GridSpec1D, WaveFunction1D, fourier_forward

DEFAULT_KERNEL_N = 32
FORM_TOL = 1e-3


def balanced_kernel_axis(n: int = DEFAULT_KERNEL_N, hbar: float = 1.0) -> GridSpec1D:
    """Centred lattice whose position and momentum extents coincide (``dx = dp``)."""
    return GridSpec1D.centered(n, math.sqrt(2 * math.pi * hbar / n), hbar)


@dataclass(frozen=True, eq=False)
class MeasurementKernel:
    """``K[x, mu_X, mu_P, x']`` with ``Psi = sum_x' K psi(x') dx'``."""

    axis: GridSpec1D
    values: np.ndarray

    @property
    def n(self) -> int:
        return self.axis.n

    @property
    def p_axis(self) -> GridSpec1D:
        return self.axis.momentum_grid()

    def apply(self, psi: WaveFunction1D) -> np.ndarray:
        if not psi.grid.same_lattice(self.axis):
            raise GridMismatch("state and kernel lattices differ")
        return self.values @ psi.amps * self.axis.dx

    def momentum_kernel(self) -> np.ndarray:
        """``K~[x, mu_X, mu_P, p'] = h^-1/2 sum_x' K e^{i p' x'/hbar} dx'``, so that ``Psi = sum_p' K~ psi~(p') dp'``."""
        return np.conj(fourier_forward(np.conj(self.values), self.axis, axis=3))


def _wrap(idx: np.ndarray, n: int) -> np.ndarray:
    return np.mod(idx, n)


def _centred_displacement(n: int) -> np.ndarray:
    """Lattice displacements ``0..n-1`` mapped to ``[-n/2, n/2)`` steps."""
    u = np.arange(n)
    return np.where(u >= n // 2, u - n, u)


def extract_kernel_ak(ap: ApparatusState) -> MeasurementKernel:
    """``K(x, mu_X, mu_P; x') = h^-1/2 e^{i mu_P (x - x')/hbar} phi(mu_X - x', mu_X - x)``.

    Both apparatus axes must be the same centred lattice, which is then used
    for ``x``, ``mu_X`` and ``x'``.
    """
    ga, gb = ap.grid.axes
    if not ga.same_lattice(gb):
        raise GridMismatch("kernel extraction needs identical eps_Xi and eps_Xf lattices")
    n = ga.n
    c = ga.lattice_offset()  # lattice point k sits at (k + c) dx on every axis
    k = np.arange(n)
    # mu_X - x' = (i - j) dx is apparatus index i - j - c, taken modulo n
    ia = _wrap(k[:, None] - k[None, :] - c, n)  # [mu_X, x']
    ib = ia  # same table for [mu_X, x]
    phi_ikj = ap.amps[ia[:, None, :], ib[:, :, None]]  # [mu_X, x, x']
    x = ga.x
    p = ga.p
    ph = np.exp(1j * p[None, :, None] * (x[:, None, None] - x[None, None, :]) / ga.hbar)  # [x, mu_P, x']
    vals = ph[:, None, :, :] * np.transpose(phi_ikj, (1, 0, 2))[:, :, None, :] / math.sqrt(ga.h)
    return MeasurementKernel(ga, vals)


def violating_kernel(k: MeasurementKernel) -> MeasurementKernel:
    """``K V`` with the unitary ``V = (1 + i R)/sqrt 2``, ``R`` the lattice parity.

    Still unitary, but its marginal kernels couple ``x'`` to ``-x'`` and so are
    not of convolution form.
    """
    n = k.n
    par = _wrap(-np.arange(n) - 2 * k.axis.lattice_offset(), n)
    vals = (k.values + 1j * k.values[..., par]) / math.sqrt(2)
    return MeasurementKernel(k.axis, vals)


def unitarity_matrix(k: MeasurementKernel) -> np.ndarray:
    """``U[x1, x2] = sum K(.; x1) K*(.; x2) dx dmu_X dmu_P``, ideally ``I/dx``."""
    g = k.axis
    flat = k.values.reshape(-1, k.n)
    return flat.T @ flat.conj() * (g.dx * g.dx * g.dp)


def unitarity_residue(k: MeasurementKernel) -> tuple[float, float]:
    """(max off-diagonal |U|*dx, max |U_jj*dx - 1|)."""
    u = unitarity_matrix(k) * k.axis.dx
    off = u - np.diag(np.diag(u))
    return float(np.abs(off).max()), float(np.abs(np.diag(u) - 1).max())


@dataclass(frozen=True, eq=False)
class MarginalKernel:
    """``f[mu, 1, 2]``; ``kind`` 'x' (mu_X against positions) or 'p' (mu_P against momenta)."""

    kind: str
    axis: GridSpec1D  # lattice of mu and of the two state indices
    values: np.ndarray

    def delta_residue(self) -> float:
        """Deviation of ``sum_mu f dmu`` from ``I/d``, scaled by the spacing ``d``."""
        d = self.axis.dx
        s = self.values.sum(axis=0) * d * d
        return float(np.abs(s - np.eye(self.axis.n)).max())


def _contract(vals: np.ndarray, keep: int) -> np.ndarray:
    """``sum vals[..., 1] vals*[..., 2]`` over every index except ``keep`` (0-2) and the last."""
    n = vals.shape[-1]
    moved = np.moveaxis(vals, keep, 0).reshape(n, -1, n)
    return np.matmul(moved.transpose(0, 2, 1), moved.conj())


def marginal_kernels(k: MeasurementKernel) -> tuple[MarginalKernel, MarginalKernel]:
    """``f_X`` from ``K`` and ``f_P`` from the momentum-representation kernel ``K~``."""
    g = k.axis
    fx = _contract(k.values, 1) * (g.dx * g.dp)
    fp = _contract(k.momentum_kernel(), 2) * (g.dx * g.dx)
    return MarginalKernel("x", g, fx), MarginalKernel("p", g.momentum_grid(), fp)


def marginal_kernel_p_fourier(k: MeasurementKernel) -> MarginalKernel:
    """``f_P`` via the position-basis mu_P kernel, transformed on both state indices."""
    g = k.axis
    fpx = _contract(k.values, 2) * (g.dx * g.dx)
    # <x1|p1> on index 1 (kernel e^{+i p x}), <p2|x2> on index 2 (e^{-i p x})
    t = np.conj(fourier_forward(np.conj(fpx), g, axis=1))
    t = fourier_forward(t, g, axis=2)
    return MarginalKernel("p", g.momentum_grid(), t)


@dataclass(frozen=True, eq=False)
class ConvolutionForm:
    """``chi0`` over centred lattice displacements and the deviation from convolution form."""

    kind: str
    displacement: np.ndarray
    chi0: np.ndarray
    spacing: float
    residual: float

    def mass(self) -> float:
        return float(self.chi0.sum() * self.spacing)

    def mean(self) -> float:
        return float((self.displacement * self.chi0).sum() * self.spacing)

    def second_moment(self) -> float:
        return float((self.displacement**2 * self.chi0).sum() * self.spacing)


def detect_convolution_form(f: MarginalKernel) -> ConvolutionForm:
    """Fit ``f(mu; 1, 2) = chi0(mu - 1) delta(1 - 2)``.

    ``chi0`` is read from the diagonal, averaged over entries with equal
    (periodic) displacement.  The residual is the larger of the off-diagonal
    mass fraction and the relative spread of the diagonal about that average.
    """
    n = f.axis.n
    d = f.axis.dx
    v = f.values
    total = np.abs(v).sum()
    diag = np.einsum("ijj->ij", v)
    off = (total - np.abs(diag).sum()) / total if total > 0 else 0.0
    mu = np.arange(n)[:, None]
    j = np.arange(n)[None, :]
    u = _wrap(mu - j, n)
    scaled = (diag * d).real
    chi = np.bincount(u.ravel(), weights=scaled.ravel(), minlength=n) / n
    spread = np.abs(scaled - chi[u]).sum() / max(np.abs(scaled).sum(), 1e-300)
    imag = np.abs(diag.imag).sum() / max(np.abs(diag).sum(), 1e-300)
    disp = _centred_displacement(n)
    order = np.argsort(disp)
    return ConvolutionForm(f.kind, disp[order] * d, chi[order], d, float(max(off, spread, imag)))


def prugovecki_sigmas(cx: ConvolutionForm, cp: ConvolutionForm, tol: float = FORM_TOL) -> tuple[float, float]:
    """Standard deviations of ``chi_X0`` and ``chi_P0``."""
    out = []
    for c in (cx, cp):
        if c.residual > tol:
            raise FormViolation(f"{c.kind}-marginal residual {c.residual:.2e} exceeds {tol:.0e}")
        m = c.mass()
        mean = c.mean() / m
        out.append(math.sqrt(max(c.second_moment() / m - mean**2, 0.0)))
    return out[0], out[1]


def rms_from_marginal(f: MarginalKernel, psi: WaveFunction1D) -> float:
    """``sqrt( sum (mu - 1)(mu - 2) f(mu; 1, 2) <1|psi><psi|2> )`` with periodic displacements.

    For ``kind='p'`` the state enters in momentum representation.
    """
    g = f.axis
    if f.kind == "x":
        if not psi.grid.same_lattice(g):
            raise GridMismatch("state and kernel lattices differ")
        amps = psi.amps
    else:
        if not psi.grid.momentum_grid().same_lattice(g):
            raise GridMismatch("state and kernel lattices differ")
        amps = fourier_forward(psi.amps, psi.grid)
    n = g.n
    disp = _centred_displacement(n)[_wrap(np.arange(n)[:, None] - np.arange(n)[None, :], n)] * g.dx  # [mu, 1]
    w = disp * amps[None, :]
    val = np.einsum("ij,ijk,ik->", w, f.values, w.conj(), optimize=True) * g.dx**3
    return math.sqrt(max(val.real, 0.0))
