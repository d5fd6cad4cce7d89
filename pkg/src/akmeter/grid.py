"""Sampled wavefunctions on uniform lattices, with the Fourier transforms
between position-like and momentum-like representations.

Conventions
-----------
A :class:`GridSpec1D` with ``n`` points starting at ``x_min`` carries the
conjugate lattice ``p_j = (j - n/2) * dp`` with ``dp = 2*pi*hbar / (n*dx)``.
The momentum lattice is always centred on zero and monotonically ordered.

The transform is ``psi~(p) = h^(-1/2) sum_k dx exp(-i p x_k / hbar) psi(x_k)``
with ``h = 2*pi*hbar``; it is unitary with respect to Riemann-sum norms.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import BoundaryLeak, GridMismatch, ZeroNorm

BOUNDARY_TOL = 1e-8
_EDGE = 2


def _is_pow2(n: int) -> bool:
    return n > 0 and (n & (n - 1)) == 0


@dataclass(frozen=True)
class GridSpec1D:
    """Uniform sampling lattice ``x_k = x_min + k*dx`` for ``k < n``."""

    x_min: float
    n: int
    dx: float
    hbar: float = 1.0

    def __post_init__(self):
        if not _is_pow2(int(self.n)) or int(self.n) != self.n:
            raise ValueError(f"n must be a power of two, got {self.n}")
        if not self.dx > 0:
            raise ValueError(f"dx must be positive, got {self.dx}")
        if not self.hbar > 0:
            raise ValueError(f"hbar must be positive, got {self.hbar}")

    @classmethod
    def centered(cls, n: int, dx: float, hbar: float = 1.0) -> "GridSpec1D":
        return cls(-(n // 2) * dx, n, dx, hbar)

    @classmethod
    def covering(cls, half_width: float, n: int, hbar: float = 1.0) -> "GridSpec1D":
        """Centred grid whose points span ``[-half_width, half_width)``."""
        return cls.centered(n, 2.0 * half_width / n, hbar)

    @property
    def h(self) -> float:
        return 2.0 * math.pi * self.hbar

    @property
    def x(self) -> np.ndarray:
        return self.x_min + self.dx * np.arange(self.n)

    @property
    def x_max(self) -> float:
        return self.x_min + (self.n - 1) * self.dx

    @property
    def dp(self) -> float:
        return self.h / (self.n * self.dx)

    @property
    def p(self) -> np.ndarray:
        return (np.arange(self.n) - self.n // 2) * self.dp

    def momentum_grid(self) -> "GridSpec1D":
        """The conjugate lattice, itself expressed as a GridSpec1D."""
        return GridSpec1D(-(self.n // 2) * self.dp, self.n, self.dp, self.hbar)

    def lattice_offset(self) -> int:
        """``x_min / dx`` as an integer; raises if the lattice is not a subset of dx*Z."""
        q = self.x_min / self.dx
        k = int(round(q))
        if abs(q - k) > 1e-9 * max(1.0, abs(q)):
            raise GridMismatch(f"x_min={self.x_min} is not a multiple of dx={self.dx}")
        return k

    def same_lattice(self, other: "GridSpec1D") -> bool:
        return (
            self.n == other.n
            and math.isclose(self.dx, other.dx, rel_tol=1e-12)
            and math.isclose(self.x_min, other.x_min, rel_tol=1e-12, abs_tol=1e-12 * self.dx)
            and math.isclose(self.hbar, other.hbar, rel_tol=1e-12)
        )


@dataclass(frozen=True)
class GridSpec2D:
    axes: tuple[GridSpec1D, GridSpec1D]
    names: tuple[str, str] = ("x1", "x2")

    def __post_init__(self):
        if len(self.axes) != 2:
            raise ValueError("GridSpec2D needs exactly two axes")
        if not math.isclose(self.axes[0].hbar, self.axes[1].hbar, rel_tol=1e-12):
            raise GridMismatch("both axes must share hbar")

    @property
    def hbar(self) -> float:
        return self.axes[0].hbar

    @property
    def shape(self) -> tuple[int, int]:
        return (self.axes[0].n, self.axes[1].n)

    @property
    def cell(self) -> float:
        return self.axes[0].dx * self.axes[1].dx


def check_boundary(amps: np.ndarray, axis: int | None = None, tol: float = BOUNDARY_TOL) -> None:
    """Raise BoundaryLeak unless |amps| on the outer two samples is below tol * max|amps|."""
    a = np.abs(np.asarray(amps))
    peak = a.max() if a.size else 0.0
    if peak == 0.0:
        return
    axes = range(a.ndim) if axis is None else [axis]
    for ax in axes:
        edge = np.concatenate(
            [np.take(a, range(_EDGE), axis=ax).ravel(), np.take(a, range(-_EDGE, 0), axis=ax).ravel()]
        )
        worst = edge.max()
        if worst >= tol * peak:
            raise BoundaryLeak(
                f"edge amplitude {worst / peak:.3e} (relative) on axis {ax} exceeds {tol:.0e}; enlarge the grid"
            )


# ---------------------------------------------------------------------------
# Fourier transforms on arbitrary axes of ndarrays


def _phase_shape(ndim: int, axis: int, n: int) -> tuple[int, ...]:
    shape = [1] * ndim
    shape[axis] = n
    return tuple(shape)


def fourier_forward(amps: np.ndarray, grid: GridSpec1D, axis: int = -1) -> np.ndarray:
    """Position -> momentum along ``axis`` (kernel ``exp(-i p x / hbar)``)."""
    amps = np.asarray(amps, dtype=complex)
    axis = axis % amps.ndim
    n = grid.n
    shape = _phase_shape(amps.ndim, axis, n)
    alt = (1 - 2 * (np.arange(n) % 2)).reshape(shape)
    ph = np.exp(-1j * grid.p * grid.x_min / grid.hbar).reshape(shape)
    out = np.fft.fft(amps * alt, axis=axis)
    return out * ph * (grid.dx / math.sqrt(grid.h))


def fourier_inverse(amps_p: np.ndarray, grid: GridSpec1D, axis: int = -1) -> np.ndarray:
    """Momentum -> position along ``axis``; exact inverse of :func:`fourier_forward`."""
    amps_p = np.asarray(amps_p, dtype=complex)
    axis = axis % amps_p.ndim
    n = grid.n
    shape = _phase_shape(amps_p.ndim, axis, n)
    alt = (1 - 2 * (np.arange(n) % 2)).reshape(shape)
    ph = np.exp(1j * grid.p * grid.x_min / grid.hbar).reshape(shape)
    out = np.fft.ifft(amps_p * ph, axis=axis)
    return out * alt * (n * grid.dp / math.sqrt(grid.h))


def upsample2(amps: np.ndarray, axis: int = -1) -> np.ndarray:
    """Band-limited interpolation onto the half-step lattice (2n points).

    Even output indices reproduce the input; odd ones sit half a step to the right.
    """
    amps = np.asarray(amps, dtype=complex)
    axis = axis % amps.ndim
    n = amps.shape[axis]
    f = np.fft.fft(amps, axis=axis)
    shape = list(amps.shape)
    shape[axis] = 2 * n
    g = np.zeros(shape, dtype=complex)
    half = n // 2

    def sl(a, b):
        s = [slice(None)] * amps.ndim
        s[axis] = slice(a, b)
        return tuple(s)

    g[sl(0, half)] = f[sl(0, half)]
    g[sl(2 * n - half + 1, 2 * n)] = f[sl(half + 1, n)]
    nyq = f[sl(half, half + 1)] / 2
    g[sl(half, half + 1)] = nyq
    g[sl(2 * n - half, 2 * n - half + 1)] = nyq
    return np.fft.ifft(g, axis=axis) * 2


# ---------------------------------------------------------------------------
# Wavefunctions


@dataclass(frozen=True, eq=False)
class WaveFunction1D:
    """Sampled amplitudes on ``grid``.  ``rep`` is 'x' (position samples) or 'p'.

    ``grid`` always describes the position lattice; in momentum representation the
    samples live on ``grid.p``.
    """

    grid: GridSpec1D
    amps: np.ndarray
    rep: str = "x"

    def __post_init__(self):
        a = np.asarray(self.amps, dtype=complex)
        if a.shape != (self.grid.n,):
            raise GridMismatch(f"amps shape {a.shape} does not match grid n={self.grid.n}")
        if self.rep not in ("x", "p"):
            raise ValueError("rep must be 'x' or 'p'")
        object.__setattr__(self, "amps", a)

    @property
    def axis(self) -> np.ndarray:
        return self.grid.x if self.rep == "x" else self.grid.p

    @property
    def spacing(self) -> float:
        return self.grid.dx if self.rep == "x" else self.grid.dp

    @property
    def norm(self) -> float:
        return float(np.sqrt(np.sum(np.abs(self.amps) ** 2) * self.spacing))

    def density(self) -> np.ndarray:
        return np.abs(self.amps) ** 2

    def check_boundary(self) -> None:
        check_boundary(self.amps)


@dataclass(frozen=True, eq=False)
class WaveFunction2D:
    grid: GridSpec2D
    amps: np.ndarray
    reps: tuple[str, str] = ("x", "x")

    def __post_init__(self):
        a = np.asarray(self.amps, dtype=complex)
        if a.shape != self.grid.shape:
            raise GridMismatch(f"amps shape {a.shape} does not match grid {self.grid.shape}")
        object.__setattr__(self, "amps", a)

    def spacing(self, axis: int) -> float:
        g = self.grid.axes[axis]
        return g.dx if self.reps[axis] == "x" else g.dp

    def axis_values(self, axis: int) -> np.ndarray:
        g = self.grid.axes[axis]
        return g.x if self.reps[axis] == "x" else g.p

    @property
    def cell(self) -> float:
        return self.spacing(0) * self.spacing(1)

    @property
    def norm(self) -> float:
        return float(np.sqrt(np.sum(np.abs(self.amps) ** 2) * self.cell))

    def check_boundary(self) -> None:
        check_boundary(self.amps)


@dataclass(frozen=True, eq=False)
class DensityMatrix1D:
    """Matrix elements <x_j|rho|x_k> on ``grid``; trace is ``sum(diag) * dx``."""

    grid: GridSpec1D
    elems: np.ndarray = field(repr=False)

    def __post_init__(self):
        e = np.asarray(self.elems, dtype=complex)
        if e.shape != (self.grid.n, self.grid.n):
            raise GridMismatch(f"elems shape {e.shape} does not match grid n={self.grid.n}")
        object.__setattr__(self, "elems", e)

    @classmethod
    def from_pure(cls, w: WaveFunction1D) -> "DensityMatrix1D":
        if w.rep != "x":
            raise GridMismatch("density matrices are built from position-representation states")
        return cls(w.grid, np.outer(w.amps, w.amps.conj()))

    @property
    def trace(self) -> float:
        return float(np.real(np.trace(self.elems)) * self.grid.dx)

    def operator(self) -> np.ndarray:
        """The matrix of rho as a finite-dimensional operator (elements times dx)."""
        return self.elems * self.grid.dx

    def eigenvalues(self) -> np.ndarray:
        op = self.operator()
        return np.linalg.eigvalsh(0.5 * (op + op.conj().T))

    def purity(self) -> float:
        op = self.operator()
        return float(np.real(np.sum(op * op.T)))

    def hermiticity_error(self) -> float:
        e = self.elems
        scale = max(np.abs(e).max(), 1e-300)
        return float(np.abs(e - e.conj().T).max() / scale)

    def expectation(self, w: WaveFunction1D) -> float:
        """<w|rho|w> for a normalised position-representation state."""
        v = w.amps
        return float(np.real(v.conj() @ self.elems @ v) * self.grid.dx**2)

    def validate(self, herm_tol: float = 1e-9, trace_tol: float = 1e-6, eig_tol: float = 1e-8) -> None:
        from .errors import NotHermitian

        if self.hermiticity_error() > herm_tol:
            raise NotHermitian(f"hermiticity error {self.hermiticity_error():.2e}")
        if abs(self.trace - 1.0) > trace_tol:
            raise ValueError(f"trace {self.trace} differs from 1")
        if self.eigenvalues().min() < -eig_tol:
            raise ValueError(f"negative eigenvalue {self.eigenvalues().min():.2e}")


def trace_distance(a: DensityMatrix1D, b: DensityMatrix1D) -> float:
    if not a.grid.same_lattice(b.grid):
        raise GridMismatch("density matrices live on different lattices")
    d = a.operator() - b.operator()
    d = 0.5 * (d + d.conj().T)
    return float(0.5 * np.abs(np.linalg.eigvalsh(d)).sum())


# ---------------------------------------------------------------------------
# Operations


def normalize(w):
    """Return ``w`` rescaled to unit Riemann norm (works for 1-D and 2-D states)."""
    nrm = w.norm
    if not nrm > 1e-300:
        raise ZeroNorm("cannot normalise a state with zero norm")
    if isinstance(w, WaveFunction1D):
        return WaveFunction1D(w.grid, w.amps / nrm, w.rep)
    return WaveFunction2D(w.grid, w.amps / nrm, w.reps)


def wavefunction(grid: GridSpec1D, amps, normalise: bool = True) -> WaveFunction1D:
    w = WaveFunction1D(grid, np.asarray(amps, dtype=complex))
    return normalize(w) if normalise else w


def to_momentum_rep(w: WaveFunction1D) -> WaveFunction1D:
    if w.rep != "x":
        raise ValueError("state is already in momentum representation")
    check_boundary(w.amps)
    return WaveFunction1D(w.grid, fourier_forward(w.amps, w.grid), "p")


def to_position_rep(w: WaveFunction1D) -> WaveFunction1D:
    if w.rep != "p":
        raise ValueError("state is already in position representation")
    check_boundary(w.amps)
    return WaveFunction1D(w.grid, fourier_inverse(w.amps, w.grid), "x")


def _sample_weights(w) -> tuple[np.ndarray, float]:
    if isinstance(w, WaveFunction1D):
        return np.abs(w.amps) ** 2, w.spacing
    return np.abs(w.amps) ** 2, w.cell


def expect_multiplicative(w, f) -> float:
    """Riemann quadrature of ``sum f |w|^2 dV``; ``f`` is sampled on the lattice of ``w``."""
    dens, vol = _sample_weights(w)
    f = np.asarray(f)
    if f.shape != dens.shape:
        raise GridMismatch(f"function shape {f.shape} does not match state shape {dens.shape}")
    val = np.sum(f * dens) * vol
    if np.iscomplexobj(val):
        val = val.real
    return float(val)


def apply_momentum(amps: np.ndarray, grid: GridSpec1D, axis: int = -1, power: int = 1) -> np.ndarray:
    """Apply ``(-i hbar d/dx)^power`` along ``axis`` spectrally."""
    amps = np.asarray(amps, dtype=complex)
    axis = axis % amps.ndim
    shape = _phase_shape(amps.ndim, axis, grid.n)
    spec = fourier_forward(amps, grid, axis) * (grid.p.reshape(shape) ** power)
    return fourier_inverse(spec, grid, axis)


def partial_derivative_expectation(w, axis: int = 0, order: int = 1) -> float:
    """``<w| (-i hbar d/d axis)^order |w>`` evaluated in the diagonal (Fourier) basis."""
    if order not in (1, 2):
        raise ValueError("order must be 1 or 2")
    if isinstance(w, WaveFunction1D):
        grid, axis = w.grid, 0
        if w.rep != "x":
            raise ValueError("expects a position-representation state")
    else:
        grid = w.grid.axes[axis]
        if w.reps[axis] != "x":
            raise ValueError("expects a position-representation axis")
    check_boundary(w.amps, axis=axis)
    spec = fourier_forward(w.amps, grid, axis)
    shape = _phase_shape(w.amps.ndim, axis, grid.n)
    cell = grid.dp if isinstance(w, WaveFunction1D) else grid.dp * w.grid.axes[1 - axis].dx
    val = np.sum(np.abs(spec) ** 2 * grid.p.reshape(shape) ** order) * cell
    return float(val)


def finite_difference_derivative(amps: np.ndarray, dx: float, axis: int = -1) -> np.ndarray:
    """Fourth-order central difference, zero-padded at the edges."""
    a = np.asarray(amps, dtype=complex)
    p = [(0, 0)] * a.ndim
    p[axis % a.ndim] = (2, 2)
    b = np.pad(a, p)
    n = a.shape[axis]

    def s(k):
        return np.take(b, range(2 + k, 2 + k + n), axis=axis)

    return (-s(2) + 8 * s(1) - 8 * s(-1) + s(-2)) / (12.0 * dx)
