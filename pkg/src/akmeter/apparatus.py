"""Initial apparatus states on the (eps_Xi, eps_Xf) lattice and the six rms
error/disturbance figures they determine.

The error operators act on apparatus wavefunctions ``phi(a, b)`` with
``a = eps_Xi`` and ``b = eps_Xf``:

* ``eps_Xi``, ``eps_Xf`` multiply by ``a`` and ``b``;
* ``eps_Pi = +i hbar d/da`` and ``eps_Pf = -i hbar d/db`` (the conjugate
  momenta of ``a`` and ``b`` are ``-eps_Pi`` and ``+eps_Pf``);
* ``delta_X = eps_Xi - eps_Xf``, ``delta_P = eps_Pi - eps_Pf``;
* ``eps_X``, ``eps_P`` are the averages of the retrodictive and predictive pairs.

With these rules ``[eps_Xi, eps_Pi] = -i hbar`` and ``[eps_Xf, eps_Pf] = +i hbar``.
"""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass

import numpy as np

from .errors import BoundaryLeak, GridMismatch, InequalityViolation, InterpolationError, NotFactorized
from .grid import (
    GridSpec1D,
    GridSpec2D,
    WaveFunction1D,
    WaveFunction2D,
    apply_momentum,
    check_boundary,
    fourier_forward,
    normalize,
    upsample2,
)

AXIS_NAMES = ("eps_xi", "eps_xf")
DEFAULT_N = 128
RELATION_SLACK = 1e-9


@dataclass(frozen=True, eq=False)
class ApparatusState:
    wf: WaveFunction2D

    def __post_init__(self):
        if self.wf.reps != ("x", "x"):
            raise ValueError("apparatus states are stored in the (eps_Xi, eps_Xf) representation")
        if abs(self.wf.norm - 1.0) > 1e-9:
            raise ValueError(f"apparatus state is not normalised (norm {self.wf.norm})")
        check_boundary(self.wf.amps)

    @property
    def grid(self) -> GridSpec2D:
        return self.wf.grid

    @property
    def amps(self) -> np.ndarray:
        return self.wf.amps

    @property
    def hbar(self) -> float:
        return self.grid.hbar

    @classmethod
    def from_amplitudes(cls, grid: GridSpec2D, amps) -> "ApparatusState":
        return cls(normalize(WaveFunction2D(grid, amps)))


def apparatus_grid(half_width: float, n: int = DEFAULT_N, hbar: float = 1.0) -> GridSpec2D:
    ax = GridSpec1D.covering(half_width, n, hbar)
    return GridSpec2D((ax, ax), AXIS_NAMES)


def apparatus_grid_like(system: GridSpec1D) -> GridSpec2D:
    """Apparatus lattice sharing ``system``'s spacing and size, centred on zero."""
    ax = GridSpec1D.centered(system.n, system.dx, system.hbar)
    return GridSpec2D((ax, ax), AXIS_NAMES)


def default_half_width(*, lambda_i=0.0, lambda_f=0.0, lam=0.0, eta=0.0) -> float:
    return max(8 * lambda_i, 8 * lambda_f, 8 * lam * math.exp(eta / 2))


def _gaussian(x: np.ndarray, lam: float) -> np.ndarray:
    return (math.pi * lam**2) ** -0.25 * np.exp(-(x**2) / (2 * lam**2))


def _factor_on_axis(phi: WaveFunction1D, axis: GridSpec1D, name: str) -> np.ndarray:
    if phi.rep != "x":
        raise ValueError(f"{name} must be in position representation")
    if not phi.grid.same_lattice(axis):
        raise GridMismatch(f"{name} lattice does not match the apparatus {name} axis")
    return phi.amps


def make_retrodictively_optimal(lambda_i: float, phi_f: WaveFunction1D, grid: GridSpec2D | None = None) -> ApparatusState:
    """Gaussian of width ``lambda_i`` in eps_Xi times an arbitrary ``phi_f(eps_Xf)``."""
    if not lambda_i > 0:
        raise ValueError("lambda_i must be positive")
    if grid is None:
        grid = GridSpec2D((phi_f.grid, phi_f.grid), AXIS_NAMES)
    a = _gaussian(grid.axes[0].x, lambda_i)
    b = _factor_on_axis(phi_f, grid.axes[1], "phi_f")
    return ApparatusState.from_amplitudes(grid, np.outer(a, b))


def make_predictively_optimal(lambda_f: float, phi_i: WaveFunction1D, grid: GridSpec2D | None = None) -> ApparatusState:
    """Arbitrary ``phi_i(eps_Xi)`` times a Gaussian of width ``lambda_f`` in eps_Xf."""
    if not lambda_f > 0:
        raise ValueError("lambda_f must be positive")
    if grid is None:
        grid = GridSpec2D((phi_i.grid, phi_i.grid), AXIS_NAMES)
    a = _factor_on_axis(phi_i, grid.axes[0], "phi_i")
    b = _gaussian(grid.axes[1].x, lambda_f)
    return ApparatusState.from_amplitudes(grid, np.outer(a, b))


def make_completely_optimal(lambda_i: float, lambda_f: float, grid: GridSpec2D | None = None, hbar: float = 1.0) -> ApparatusState:
    if not (lambda_i > 0 and lambda_f > 0):
        raise ValueError("lambda_i and lambda_f must be positive")
    if grid is None:
        grid = apparatus_grid(default_half_width(lambda_i=lambda_i, lambda_f=lambda_f), hbar=hbar)
    a = _gaussian(grid.axes[0].x, lambda_i)
    b = _gaussian(grid.axes[1].x, lambda_f)
    return ApparatusState.from_amplitudes(grid, np.outer(a, b))


def minimally_disturbing_amplitudes(a: np.ndarray, b: np.ndarray, lam: float, eta: float) -> np.ndarray:
    ch, sh = math.cosh(eta), math.sinh(eta)
    A, B = a[:, None], b[None, :]
    return np.exp(-(ch * A**2 - 2 * sh * A * B + ch * B**2) / (2 * lam**2)) / (math.sqrt(math.pi) * lam)


def make_minimally_disturbing(lam: float, eta: float, grid: GridSpec2D | None = None, hbar: float = 1.0) -> ApparatusState:
    """Correlated Gaussian minimising the error product for disturbance product ``hbar e^-eta``.

    Raises BoundaryLeak when the (widening) state does not fit ``grid``; the
    grid is never enlarged automatically.
    """
    if not lam > 0:
        raise ValueError("lambda must be positive")
    if eta < 0:
        raise ValueError("eta must be non-negative")
    if grid is None:
        grid = apparatus_grid(default_half_width(lam=lam, eta=eta), hbar=hbar)
    amps = minimally_disturbing_amplitudes(grid.axes[0].x, grid.axes[1].x, lam, eta)
    return ApparatusState.from_amplitudes(grid, amps)


def factorize(ap: ApparatusState, tol: float = 1e-6) -> tuple[WaveFunction1D, WaveFunction1D]:
    """Split a product state into ``(phi_i, phi_f)``; NotFactorized if it has Schmidt rank > 1."""
    u, s, vh = np.linalg.svd(ap.amps)
    if s[0] == 0 or (len(s) > 1 and s[1] / s[0] > tol):
        raise NotFactorized(f"Schmidt ratio {s[1] / s[0]:.2e} exceeds {tol:.0e}")
    gi, gf = ap.grid.axes
    phi_i = normalize(WaveFunction1D(gi, u[:, 0] * s[0]))
    phi_f = normalize(WaveFunction1D(gf, vh[0].copy()))
    return phi_i, phi_f


def is_factorized(ap: ApparatusState, tol: float = 1e-6) -> bool:
    try:
        factorize(ap, tol)
    except NotFactorized:
        return False
    return True


# ---------------------------------------------------------------------------
# error operators


class ErrorOperators:
    """Action of the error/disturbance operators on apparatus amplitudes ``phi[a, b]``."""

    def __init__(self, grid: GridSpec2D):
        self.grid = grid
        self._a = grid.axes[0].x[:, None]
        self._b = grid.axes[1].x[None, :]

    def eps_xi(self, f):
        return self._a * f

    def eps_xf(self, f):
        return self._b * f

    def eps_pi(self, f):
        return -apply_momentum(f, self.grid.axes[0], axis=0)

    def eps_pf(self, f):
        return apply_momentum(f, self.grid.axes[1], axis=1)

    def delta_x(self, f):
        return self.eps_xi(f) - self.eps_xf(f)

    def delta_p(self, f):
        return self.eps_pi(f) - self.eps_pf(f)

    def eps_x(self, f):
        return 0.5 * (self.eps_xi(f) + self.eps_xf(f))

    def eps_p(self, f):
        return 0.5 * (self.eps_pi(f) + self.eps_pf(f))

    def commutator(self, first: str, second: str, f):
        A, B = getattr(self, first), getattr(self, second)
        return A(B(f)) - B(A(f))


# the commutator table as multiples of i*hbar
COMMUTATOR_TABLE = {
    ("eps_xi", "eps_pi"): -1,
    ("eps_xf", "eps_pf"): +1,
    ("eps_xi", "delta_p"): -1,
    ("eps_xf", "delta_p"): -1,
    ("delta_x", "eps_pi"): -1,
    ("delta_x", "eps_pf"): -1,
    ("eps_x", "delta_p"): -1,
    ("delta_x", "eps_p"): -1,
    ("eps_xi", "eps_pf"): 0,
    ("eps_xf", "eps_pi"): 0,
    ("eps_xi", "eps_xf"): 0,
    ("eps_pi", "eps_pf"): 0,
    ("delta_x", "delta_p"): 0,
    ("eps_x", "eps_p"): 0,
    ("eps_x", "delta_x"): 0,
    ("eps_p", "delta_p"): 0,
}


# ---------------------------------------------------------------------------
# error report


@dataclass(frozen=True)
class ErrorReport:
    dei_x: float
    dei_p: float
    def_x: float
    def_p: float
    dd_x: float
    dd_p: float
    cross_term_x: float
    cross_term_p: float
    mean_eps_xi: float
    mean_eps_pi: float
    mean_eps_xf: float
    mean_eps_pf: float
    eps_x_sq: float
    eps_p_sq: float
    hbar: float

    def products(self) -> dict:
        return {
            "retrodictive": self.dei_x * self.dei_p,
            "predictive": self.def_x * self.def_p,
            "dei_x_dd_p": self.dei_x * self.dd_p,
            "def_x_dd_p": self.def_x * self.dd_p,
            "dei_p_dd_x": self.dei_p * self.dd_x,
            "def_p_dd_x": self.def_p * self.dd_x,
            "disturbance": self.dd_x * self.dd_p,
        }

    def relation_margins(self) -> dict:
        """Signed margins ``product - hbar/2`` of the two error and four error-disturbance relations."""
        half = 0.5 * self.hbar
        pr = self.products()
        return {k: v - half for k, v in pr.items() if k != "disturbance"}

    def as_dict(self) -> dict:
        return asdict(self)


def error_report(ap: ApparatusState, strict: bool = True) -> ErrorReport:
    """Six rms figures as root second moments about zero, plus means and cross terms.

    Position-type moments are quadratures in the (eps_Xi, eps_Xf) representation;
    momentum-type moments use the 2-D Fourier representation, where
    ``eps_Pi = -k_a`` and ``eps_Pf = +k_b``.  Raises InequalityViolation if a
    relation fails by more than 1e-9 and ``strict`` is set.
    """
    wf = ap.wf
    ga, gb = ap.grid.axes
    a = ga.x[:, None]
    b = gb.x[None, :]
    dens = np.abs(wf.amps) ** 2
    cell = ga.dx * gb.dx
    ex2i = float((a**2 * dens).sum() * cell)
    ex2f = float((b**2 * dens).sum() * cell)
    dx2 = float(((a - b) ** 2 * dens).sum() * cell)
    mxi = float((a * dens).sum() * cell)
    mxf = float((b * dens).sum() * cell)

    spec = fourier_forward(fourier_forward(wf.amps, ga, axis=0), gb, axis=1)
    check_boundary(spec)
    ka = ga.p[:, None]
    kb = gb.p[None, :]
    sdens = np.abs(spec) ** 2
    pcell = ga.dp * gb.dp
    ep2i = float((ka**2 * sdens).sum() * pcell)
    ep2f = float((kb**2 * sdens).sum() * pcell)
    dp2 = float(((ka + kb) ** 2 * sdens).sum() * pcell)
    mpi = float((-ka * sdens).sum() * pcell)
    mpf = float((kb * sdens).sum() * pcell)
    epx2 = float(((a + b) ** 2 * dens).sum() * cell / 4)
    epp2 = float(((kb - ka) ** 2 * sdens).sum() * pcell / 4)

    rep = ErrorReport(
        dei_x=math.sqrt(ex2i),
        dei_p=math.sqrt(ep2i),
        def_x=math.sqrt(ex2f),
        def_p=math.sqrt(ep2f),
        dd_x=math.sqrt(dx2),
        dd_p=math.sqrt(dp2),
        cross_term_x=float(((a + b) * (a - b) * dens).sum() * cell / 2),
        cross_term_p=float(((kb - ka) * (-ka - kb) * sdens).sum() * pcell / 2),
        mean_eps_xi=mxi,
        mean_eps_pi=mpi,
        mean_eps_xf=mxf,
        mean_eps_pf=mpf,
        eps_x_sq=epx2,
        eps_p_sq=epp2,
        hbar=ap.hbar,
    )
    if strict:
        bad = {k: m for k, m in rep.relation_margins().items() if m < -RELATION_SLACK}
        if bad:
            raise InequalityViolation(f"error relations violated: {bad}")
    return rep


# ---------------------------------------------------------------------------
# (mu_X, pi_P) representation


def to_muX_piP_rep(ap: ApparatusState, tol: float = 1e-8) -> WaveFunction2D:
    """Change variables to ``mu_X = (a + b)/2``, ``pi_P = a - b`` (unit Jacobian).

    Samples off the original lattice come from band-limited interpolation onto
    the half-step lattice.  The result lives on a ``2n x 2n`` lattice with
    spacing ``dx/2`` in mu_X and ``dx`` in pi_P.
    """
    ga, gb = ap.grid.axes
    if ga.n != gb.n or not math.isclose(ga.dx, gb.dx, rel_tol=1e-12):
        raise GridMismatch("both apparatus axes must share size and spacing")
    oa, ob = ga.lattice_offset(), gb.lattice_offset()
    n, dx = ga.n, ga.dx
    fine = upsample2(upsample2(ap.amps, axis=0), axis=1)
    mu_ax = GridSpec1D.centered(2 * n, dx / 2, ap.hbar)
    pi_ax = GridSpec1D.centered(2 * n, dx, ap.hbar)
    i = np.arange(2 * n)[:, None] - n  # mu_X = i * dx/2
    j = np.arange(2 * n)[None, :] - n  # pi_P = j * dx
    # a = (i + j) dx/2 and b = (i - j) dx/2 index the half-step lattices directly
    ia = i + j - 2 * oa
    ib = i - j - 2 * ob
    ok = (ia >= 0) & (ia < 2 * n) & (ib >= 0) & (ib < 2 * n)
    out = np.where(ok, fine[np.clip(ia, 0, 2 * n - 1), np.clip(ib, 0, 2 * n - 1)], 0.0)
    grid = GridSpec2D((mu_ax, pi_ax), ("mu_x", "pi_p"))
    w = WaveFunction2D(grid, out)
    if abs(w.norm - 1.0) > tol:
        raise InterpolationError(f"norm after resampling is {w.norm:.12f}")
    return w


def to_muX_muP_rep(ap: ApparatusState) -> WaveFunction2D:
    """Fourier transform of the pi_P axis of :func:`to_muX_piP_rep` onto mu_P."""
    w = to_muX_piP_rep(ap)
    pi_ax = w.grid.axes[1]
    # <mu_P|pi_P> = h^(-1/2) exp(+i mu_P pi_P / hbar): the inverse transform
    amps = np.conj(fourier_forward(np.conj(w.amps), pi_ax, axis=1))
    mu_p_ax = pi_ax.momentum_grid()
    return WaveFunction2D(GridSpec2D((w.grid.axes[0], mu_p_ax), ("mu_x", "mu_p")), amps)



def random_gaussian_mixture(rng: np.random.Generator, grid: GridSpec2D, components: int = 3) -> ApparatusState:
    """Superposition of randomly placed 2-D Gaussians with random shapes and momentum kicks."""
    a = grid.axes[0].x[:, None]
    b = grid.axes[1].x[None, :]
    half = min(grid.axes[0].n * grid.axes[0].dx, grid.axes[1].n * grid.axes[1].dx) / 2
    amps = np.zeros(grid.shape, dtype=complex)
    for _ in range(components):
        ca, cb = rng.uniform(-0.15, 0.15, size=2) * half
        sa, sb = rng.uniform(0.05, 0.1, size=2) * half
        rot = rng.uniform(0, math.pi)
        ka, kb = rng.uniform(-2.0, 2.0, size=2) / grid.hbar
        u = (a - ca) * math.cos(rot) + (b - cb) * math.sin(rot)
        v = -(a - ca) * math.sin(rot) + (b - cb) * math.cos(rot)
        weight = rng.normal() + 1j * rng.normal()
        amps += weight * np.exp(-0.5 * (u / sa) ** 2 - 0.5 * (v / sb) ** 2 + 1j * (ka * a + kb * b))
    return ApparatusState.from_amplitudes(grid, amps)
