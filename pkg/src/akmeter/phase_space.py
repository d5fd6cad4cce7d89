"""Wigner and Husimi functions with their Cartwright smearing, plus the
zero-padded 2-D convolution engine behind them.

All distributions are normalised so that ``sum(values) * dx * dp`` is the
total probability.  The momentum lattice of a distribution built from a
:class:`~akmeter.grid.GridSpec1D` is that grid's conjugate lattice.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.signal import fftconvolve

from . import _backend
from .errors import AliasingDetected, BoundaryLeak, GridMismatch, NotHermitian
from .grid import (
    DensityMatrix1D,
    GridSpec1D,
    WaveFunction1D,
    check_boundary,
    fourier_forward,
    upsample2,
)

ALIAS_TOL = 1e-8


@dataclass(frozen=True, eq=False)
class PhaseSpaceDist:
    """Real function on the lattice ``x_axis.x`` times ``p_axis.x``.

    ``p_axis`` is a GridSpec1D used purely as a lattice description; its
    ``x_min``/``dx`` are the first momentum sample and the momentum spacing.
    """

    x_axis: GridSpec1D
    p_axis: GridSpec1D
    values: np.ndarray
    kind: str = "generic"

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        if v.shape != (self.x_axis.n, self.p_axis.n):
            raise GridMismatch(f"values shape {v.shape} does not match lattice")
        object.__setattr__(self, "values", v)

    @classmethod
    def on_grid(cls, grid: GridSpec1D, values, kind: str = "generic") -> "PhaseSpaceDist":
        return cls(grid, grid.momentum_grid(), values, kind)

    @property
    def x(self) -> np.ndarray:
        return self.x_axis.x

    @property
    def p(self) -> np.ndarray:
        return self.p_axis.x

    @property
    def cell(self) -> float:
        return self.x_axis.dx * self.p_axis.dx

    @property
    def hbar(self) -> float:
        return self.x_axis.hbar

    def mass(self) -> float:
        return float(self.values.sum() * self.cell)

    def marginal_x(self) -> np.ndarray:
        return self.values.sum(axis=1) * self.p_axis.dx

    def marginal_p(self) -> np.ndarray:
        return self.values.sum(axis=0) * self.x_axis.dx

    def moments(self) -> dict:
        """Means and standard deviations of both marginals."""
        mx, mp = self.marginal_x(), self.marginal_p()
        m = self.mass()
        ex = float((self.x * mx).sum() * self.x_axis.dx / m)
        ep = float((self.p * mp).sum() * self.p_axis.dx / m)
        vx = float(((self.x - ex) ** 2 * mx).sum() * self.x_axis.dx / m)
        vp = float(((self.p - ep) ** 2 * mp).sum() * self.p_axis.dx / m)
        return {"mean_x": ex, "mean_p": ep, "std_x": math.sqrt(vx), "std_p": math.sqrt(vp)}

    def same_lattice(self, other: "PhaseSpaceDist") -> bool:
        return self.x_axis.same_lattice(other.x_axis) and self.p_axis.same_lattice(other.p_axis)

    def l1_distance(self, other: "PhaseSpaceDist") -> float:
        if not self.same_lattice(other):
            raise GridMismatch("distributions live on different lattices")
        return float(np.abs(self.values - other.values).sum() * self.cell)

    def linf_distance(self, other: "PhaseSpaceDist") -> float:
        if not self.same_lattice(other):
            raise GridMismatch("distributions live on different lattices")
        return float(np.abs(self.values - other.values).max())

    def reflected(self) -> "PhaseSpaceDist":
        """f(-x, -p), on the mirrored lattice."""
        xa, pa = self.x_axis, self.p_axis
        return PhaseSpaceDist(
            GridSpec1D(-xa.x_max, xa.n, xa.dx, xa.hbar),
            GridSpec1D(-pa.x_max, pa.n, pa.dx, pa.hbar),
            self.values[::-1, ::-1],
            self.kind,
        )

    def momentum_reflected(self) -> "PhaseSpaceDist":
        """f(x, -p), on the mirrored momentum lattice."""
        pa = self.p_axis
        return PhaseSpaceDist(
            self.x_axis, GridSpec1D(-pa.x_max, pa.n, pa.dx, pa.hbar), self.values[:, ::-1], self.kind
        )


@dataclass(frozen=True)
class CoherentStateParams:
    mu_x: float
    mu_p: float
    lam: float

    def __post_init__(self):
        if not self.lam > 0:
            raise ValueError("lambda must be positive")


# ---------------------------------------------------------------------------
# states


def coherent_amplitudes(x: np.ndarray, mu_x: float, mu_p: float, lam: float, hbar: float) -> np.ndarray:
    return (math.pi * lam**2) ** -0.25 * np.exp(
        -((x - mu_x) ** 2) / (2 * lam**2) + 1j * mu_p * x / hbar - 0.5j * mu_p * mu_x / hbar
    )


def coherent_wavefunction(params: CoherentStateParams, grid: GridSpec1D) -> WaveFunction1D:
    amps = coherent_amplitudes(grid.x, params.mu_x, params.mu_p, params.lam, grid.hbar)
    check_boundary(amps)
    w = WaveFunction1D(grid, amps)
    return WaveFunction1D(grid, amps / w.norm)


# ---------------------------------------------------------------------------
# Wigner functions


def _wigner_from_lags(c: np.ndarray, grid: GridSpec1D) -> np.ndarray:
    # W(x_k, p_j) = (dx/h) sum_r exp(2 pi i (j - n/2) r / n) c[k, r]
    n = grid.n
    alt = 1 - 2 * (np.arange(n) % 2)
    w = np.fft.ifft(c * alt[None, :], axis=1) * n * (grid.dx / grid.h)
    imag = np.abs(w.imag).max()
    if imag > 1e-8 * max(np.abs(w.real).max(), 1e-300):
        raise NotHermitian(f"Wigner transform has imaginary residue {imag:.2e}")
    return w.real


def wigner_of_pure(psi: WaveFunction1D) -> PhaseSpaceDist:
    """``W(x,p) = (1/h) int dy exp(i p y/hbar) psi(x - y/2) psi*(x + y/2)``.

    Half-step samples come from band-limited interpolation, so the lag
    integral is an exact Riemann sum over the full lattice.
    """
    if psi.rep != "x":
        raise ValueError("wigner_of_pure expects a position-representation state")
    check_boundary(psi.amps)
    psi2 = upsample2(psi.amps)
    c = _backend.wigner_lag_fold_pure(np.ascontiguousarray(psi2), psi.grid.n)
    return PhaseSpaceDist.on_grid(psi.grid, _wigner_from_lags(c, psi.grid), "wigner")


def wigner_of_density(rho: DensityMatrix1D) -> PhaseSpaceDist:
    """Wigner function of a density matrix, same conventions as :func:`wigner_of_pure`."""
    if rho.hermiticity_error() > 1e-9:
        raise NotHermitian(f"density matrix is not Hermitian ({rho.hermiticity_error():.2e})")
    check_boundary(rho.elems)
    rho2 = upsample2(upsample2(rho.elems, axis=0), axis=1)
    c = _backend.wigner_lag_fold_density(np.ascontiguousarray(rho2), rho.grid.n)
    return PhaseSpaceDist.on_grid(rho.grid, _wigner_from_lags(c, rho.grid), "wigner")


# ---------------------------------------------------------------------------
# convolution engine


def _lattice_shift(target: GridSpec1D, origin: float, name: str) -> int:
    q = (target.x_min - origin) / target.dx
    k = int(round(q))
    if abs(q - k) > 1e-6:
        raise GridMismatch(f"{name} lattices are not commensurate (offset {q} steps)")
    return k


def convolve2d(
    a: PhaseSpaceDist,
    b: PhaseSpaceDist,
    target: PhaseSpaceDist | None = None,
    check_kernel: bool = True,
    alias_tol: float = ALIAS_TOL,
) -> PhaseSpaceDist:
    """Linear convolution ``(a * b)(x, p) = int a(x - u, p - v) b(u, v) du dv``.

    ``b`` is the kernel and must integrate to one when ``check_kernel`` is set.
    The result is placed on ``target``'s lattice (default: ``a``'s).  Zero
    padding makes the convolution linear; any mass falling outside the
    target lattice beyond ``alias_tol`` (relative) raises AliasingDetected.
    """
    for ax in ("x_axis", "p_axis"):
        ga, gb = getattr(a, ax), getattr(b, ax)
        if not math.isclose(ga.dx, gb.dx, rel_tol=1e-9):
            raise GridMismatch(f"{ax} spacings differ: {ga.dx} vs {gb.dx}")
    if check_kernel and abs(b.mass() - 1.0) > 1e-6:
        raise ValueError(f"kernel integrates to {b.mass():.9f}, expected 1")
    tgt = target if target is not None else a
    full = fftconvolve(a.values, b.values, mode="full") * b.cell
    ox = _lattice_shift(tgt.x_axis, a.x_axis.x_min + b.x_axis.x_min, "x")
    op = _lattice_shift(tgt.p_axis, a.p_axis.x_min + b.p_axis.x_min, "p")
    nx, np_ = tgt.x_axis.n, tgt.p_axis.n
    out = np.zeros((nx, np_))
    sx0, sx1 = max(ox, 0), min(ox + nx, full.shape[0])
    sp0, sp1 = max(op, 0), min(op + np_, full.shape[1])
    if sx1 > sx0 and sp1 > sp0:
        out[sx0 - ox:sx1 - ox, sp0 - op:sp1 - op] = full[sx0:sx1, sp0:sp1]
    total = np.abs(full).sum()
    lost = total - np.abs(out).sum()
    if total > 0 and lost > alias_tol * total:
        raise AliasingDetected(f"{lost / total:.2e} of the convolution mass falls outside the target lattice")
    return PhaseSpaceDist(tgt.x_axis, tgt.p_axis, out, a.kind)


def gaussian_kernel(grid: GridSpec1D, lam: float, spread: float = 1.0) -> PhaseSpaceDist:
    """``(2/(h s)) exp(-((u/lam)^2 + (lam v/hbar)^2) / s)`` on the centred lattice of ``grid``.

    ``spread = 1`` is the Husimi kernel, ``spread = cosh(eta)`` the Cartwright one.
    """
    xg = GridSpec1D.centered(grid.n, grid.dx, grid.hbar)
    pg = grid.momentum_grid()
    u = xg.x[:, None]
    v = pg.x[None, :]
    vals = 2.0 / (grid.h * spread) * np.exp(-((u / lam) ** 2 + (lam * v / grid.hbar) ** 2) / spread)
    k = PhaseSpaceDist(xg, pg, vals, "kernel")
    if abs(k.mass() - 1.0) > 1e-9:
        raise BoundaryLeak(f"Gaussian kernel truncated by the lattice (mass {k.mass():.3e})")
    return k


def husimi(psi: WaveFunction1D, lambda_i: float, method: str = "convolution") -> PhaseSpaceDist:
    """Husimi function ``Q_lambda``; ``method`` is 'convolution' (Gaussian-smoothed
    Wigner) or 'overlap' (``|<mu_x, mu_p, lambda|psi>|^2 / h``)."""
    if not lambda_i > 0:
        raise ValueError("lambda_i must be positive")
    if method == "convolution":
        w = wigner_of_pure(psi)
        q = convolve2d(w, gaussian_kernel(psi.grid, lambda_i))
    elif method == "overlap":
        check_boundary(psi.amps)
        g = psi.grid
        mu = g.x
        win = (math.pi * lambda_i**2) ** -0.25 * np.exp(-((g.x[None, :] - mu[:, None]) ** 2) / (2 * lambda_i**2))
        amp = fourier_forward(win * psi.amps[None, :], g, axis=1)
        q = PhaseSpaceDist.on_grid(g, np.abs(amp) ** 2)
    else:
        raise ValueError(f"unknown method {method!r}")
    return PhaseSpaceDist(q.x_axis, q.p_axis, q.values, "husimi")


def smeared_wigner(psi: WaveFunction1D, lam: float, eta: float) -> PhaseSpaceDist:
    """Wigner function smoothed by the Gaussian kernel broadened by ``cosh(eta)``."""
    if eta < 0:
        raise ValueError("eta must be non-negative")
    w = wigner_of_pure(psi)
    s = convolve2d(w, gaussian_kernel(psi.grid, lam, math.cosh(eta)))
    return PhaseSpaceDist(s.x_axis, s.p_axis, s.values, "smeared_wigner")


def wigner_bound_violation(w: PhaseSpaceDist) -> float:
    """How far ``max |W|`` exceeds ``1/(pi hbar)`` (negative when inside the bound)."""
    return float(np.abs(w.values).max() - 1.0 / (math.pi * w.hbar))


def purity_from_wigner(w: PhaseSpaceDist) -> float:
    return float(w.x_axis.h * (w.values**2).sum() * w.cell)
