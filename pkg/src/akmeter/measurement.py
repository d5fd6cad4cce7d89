"""The Arthurs-Kelly measurement engine.

Pointer readings ``(mu_X, mu_P)`` live on the system lattice in mu_X and on
its conjugate lattice in mu_P, so every outcome distribution here is a
:class:`PhaseSpaceDist` on ``PhaseSpaceDist.on_grid(psi.grid)``.  Apparatus
axes must share the system's size and spacing and sit on the same ``dx``
lattice (integer offsets), which makes every ``mu_X - x`` an exact lattice
difference.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import stats

from . import _backend
from .apparatus import ApparatusState, factorize
from .errors import EmptyRegion, GridMismatch, NotPredictivelyOptimal
from .grid import DensityMatrix1D, GridSpec1D, WaveFunction1D, check_boundary, fourier_forward
from .phase_space import PhaseSpaceDist, coherent_amplitudes, convolve2d, wigner_of_density, wigner_of_pure

P_R_MIN = 1e-12


# ---------------------------------------------------------------------------
# lattice plumbing


def _axis_offset(system: GridSpec1D, axis: GridSpec1D, name: str) -> int:
    if axis.n != system.n or not math.isclose(axis.dx, system.dx, rel_tol=1e-12):
        raise GridMismatch(f"apparatus {name} axis must match the system lattice size and spacing")
    if not math.isclose(axis.hbar, system.hbar, rel_tol=1e-12):
        raise GridMismatch("apparatus and system disagree on hbar")
    return axis.lattice_offset()


def _offsets(psi: WaveFunction1D, ap: ApparatusState) -> tuple[int, int]:
    if psi.rep != "x":
        raise ValueError("system state must be in position representation")
    psi.grid.lattice_offset()
    ga, gb = ap.grid.axes
    return _axis_offset(psi.grid, ga, "eps_Xi"), _axis_offset(psi.grid, gb, "eps_Xf")


def _gather(vec: np.ndarray, idx: np.ndarray) -> np.ndarray:
    """``vec[idx]`` with zeros where ``idx`` falls outside the array."""
    ok = (idx >= 0) & (idx < vec.shape[0])
    return np.where(ok, vec[np.clip(idx, 0, vec.shape[0] - 1)], 0.0)


def _alternating(n: int) -> np.ndarray:
    return 1 - 2 * (np.arange(n) % 2)


def _phase_sum(lags: np.ndarray, grid: GridSpec1D) -> np.ndarray:
    # sum_d lags[..., d] exp(i mu_P d dx / hbar) on the conjugate lattice (d folded mod n)
    n = grid.n
    return np.fft.ifft(lags * _alternating(n), axis=-1) * n


# ---------------------------------------------------------------------------
# joint final state


@dataclass(frozen=True, eq=False)
class JointFinalState:
    """``Psi(x, mu_X, mu_P)`` sampled on system x mu_X x mu_P lattices."""

    x_axis: GridSpec1D
    mu_x_axis: GridSpec1D
    mu_p_axis: GridSpec1D
    amps: np.ndarray

    @property
    def cell(self) -> float:
        return self.x_axis.dx * self.mu_x_axis.dx * self.mu_p_axis.dx

    @property
    def norm(self) -> float:
        return float(np.sqrt(np.sum(np.abs(self.amps) ** 2) * self.cell))

    def outcome_distribution(self) -> PhaseSpaceDist:
        vals = np.sum(np.abs(self.amps) ** 2, axis=0) * self.x_axis.dx
        return PhaseSpaceDist(self.mu_x_axis, self.mu_p_axis, vals, "outcome")


def joint_final_state(psi: WaveFunction1D, ap: ApparatusState) -> JointFinalState:
    """``Psi(x, mu_X, mu_P) = h^-1/2 sum_x' dx' e^{i mu_P (x - x')/hbar} phi(mu_X - x', mu_X - x) psi(x')``.

    Memory grows as n^3; meant for modest lattices (n = 64).
    """
    oa, ob = _offsets(psi, ap)
    g = psi.grid
    n = g.n
    phi = ap.amps
    k = np.arange(n)
    out = np.empty((n, n, n), dtype=complex)
    boost = np.exp(1j * np.outer(g.x, g.p) / g.hbar)  # e^{i mu_P x / hbar}
    for i in range(n):
        ia = i - k - oa  # eps_Xi index as a function of x'
        ib = i - k - ob  # eps_Xf index as a function of x
        oka = (ia >= 0) & (ia < n)
        okb = (ib >= 0) & (ib < n)
        block = np.zeros((n, n), dtype=complex)  # [x, x']
        block[np.ix_(okb, oka)] = phi[np.ix_(ia[oka], ib[okb])].T
        out[:, i, :] = fourier_forward(block * psi.amps[None, :], g, axis=1) * boost
    return JointFinalState(g, g, g.momentum_grid(), out)


# ---------------------------------------------------------------------------
# outcome distributions


def reduced_epsilon_density(ap: ApparatusState) -> DensityMatrix1D:
    """Partial trace over eps_Xf: ``rho_eps(a, a') = sum_b phi(a, b) phi*(a', b) db``."""
    phi = ap.amps
    db = ap.grid.axes[1].dx
    return DensityMatrix1D(ap.grid.axes[0], phi @ phi.conj().T * db)


def reduced_predictive_density(ap: ApparatusState) -> DensityMatrix1D:
    """Partial trace over eps_Xi, leaving the eps_Xf factor."""
    phi = ap.amps
    da = ap.grid.axes[0].dx
    return DensityMatrix1D(ap.grid.axes[1], phi.T @ phi.conj() * da)


def outcome_distribution_direct(psi: WaveFunction1D, ap: ApparatusState) -> PhaseSpaceDist:
    """Outcome density as a double sum of reduced apparatus matrix elements against psi.

    ``rho(mu_X, mu_P) = dx^2/h sum_{x', x''} e^{i mu_P (x'' - x')/hbar}
    rho_eps(mu_X - x', mu_X - x'') psi(x') psi*(x'')``.
    """
    oa, _ = _offsets(psi, ap)
    check_boundary(psi.amps)
    g = psi.grid
    rho_eps = reduced_epsilon_density(ap).elems
    lags = _backend.direct_lag_sums(np.ascontiguousarray(rho_eps), np.ascontiguousarray(psi.amps, dtype=complex), -oa)
    vals = _phase_sum(lags, g) * (g.dx**2 / g.h)
    return PhaseSpaceDist.on_grid(g, vals.real, "outcome")


def epsilon_wigner_kernel(ap: ApparatusState) -> PhaseSpaceDist:
    """``W_eps_i`` as a convolution kernel: the Wigner function of the reduced
    eps_Xi state with its momentum argument reversed (eps_Pi is minus the
    momentum conjugate to eps_Xi)."""
    return wigner_of_density(reduced_epsilon_density(ap)).momentum_reflected()


def outcome_distribution_convolution(psi: WaveFunction1D, ap: ApparatusState) -> PhaseSpaceDist:
    """Outcome density as the initial-state Wigner function smoothed by ``W_eps_i``."""
    _offsets(psi, ap)
    w = wigner_of_pure(psi)
    rho = convolve2d(w, epsilon_wigner_kernel(ap))
    return PhaseSpaceDist(rho.x_axis, rho.p_axis, rho.values, "outcome")


def pointer_variances(rho: PhaseSpaceDist) -> tuple[float, float]:
    """Standard deviations of the mu_X and mu_P marginals."""
    m = rho.moments()
    return m["std_x"], m["std_p"]


# ---------------------------------------------------------------------------
# regions and conditional states


@dataclass(frozen=True)
class OutcomeRegion:
    """Half-open box ``[x_lo, x_hi) x [p_lo, p_hi)``; a cell belongs to it when its centre does."""

    x_lo: float
    x_hi: float
    p_lo: float
    p_hi: float

    def __post_init__(self):
        if not (self.x_lo < self.x_hi and self.p_lo < self.p_hi):
            raise ValueError("region bounds must satisfy lo < hi on both axes")

    @classmethod
    def around(cls, mu_x: float, mu_p: float, width_x: float, width_p: float) -> "OutcomeRegion":
        return cls(mu_x - width_x / 2, mu_x + width_x / 2, mu_p - width_p / 2, mu_p + width_p / 2)

    @classmethod
    def everything(cls, dist: PhaseSpaceDist) -> "OutcomeRegion":
        hx, hp = dist.x_axis.dx, dist.p_axis.dx
        return cls(dist.x[0] - hx, dist.x[-1] + hx, dist.p[0] - hp, dist.p[-1] + hp)

    def mask(self, x: np.ndarray, p: np.ndarray) -> np.ndarray:
        mx = (x >= self.x_lo) & (x < self.x_hi)
        mp = (p >= self.p_lo) & (p < self.p_hi)
        if not (mx.any() and mp.any()):
            raise EmptyRegion(f"region {self} contains no lattice cell centre")
        return mx[:, None] & mp[None, :]

    def mask_for(self, dist: PhaseSpaceDist) -> np.ndarray:
        return self.mask(dist.x, dist.p)


def snap_to_lattice(dist: PhaseSpaceDist, mu_x: float, mu_p: float) -> tuple[float, float]:
    """Nearest cell centre of ``dist``'s lattice."""
    i = int(np.argmin(np.abs(dist.x - mu_x)))
    j = int(np.argmin(np.abs(dist.p - mu_p)))
    return float(dist.x[i]), float(dist.p[j])


def region_probability(rho: PhaseSpaceDist, region: OutcomeRegion) -> float:
    return float(rho.values[region.mask_for(rho)].sum() * rho.cell)


def _restricted(rho: PhaseSpaceDist, region: OutcomeRegion) -> tuple[np.ndarray, float]:
    mask = region.mask_for(rho)
    vals = np.where(mask, rho.values, 0.0)
    p_r = float(vals.sum() * rho.cell)
    if p_r < P_R_MIN:
        raise EmptyRegion(f"region probability {p_r:.3e} is below {P_R_MIN:.0e}")
    return vals, p_r


def conditional_state_factorized(
    psi: WaveFunction1D, ap: ApparatusState, region: OutcomeRegion, rho: PhaseSpaceDist | None = None
) -> DensityMatrix1D:
    """Post-measurement system state given the record fell in ``region``.

    For ``phi = phi_i(a) phi_f(b)``:
    ``rho_f(x, x') = (1/p_R) int_R e^{i mu_P (x - x')/hbar} phi_f(mu_X - x) phi_f*(mu_X - x') rho(mu) dmu``.
    ``rho`` defaults to the direct-route outcome density.
    """
    _, ob = _offsets(psi, ap)
    _, phi_f = factorize(ap)
    if rho is None:
        rho = outcome_distribution_direct(psi, ap)
    vals, p_r = _restricted(rho, region)
    g = psi.grid
    n = g.n
    k = np.arange(n)
    d = k[:, None] - k[None, :]  # x - x' in lattice steps
    # exp(i mu_P d dx / hbar) for d in (-n, n): sum over mu_P rows via a dense phase table
    ph = np.exp(1j * np.outer(rho.p, np.arange(-n + 1, n)) * g.dx / g.hbar)
    out = np.zeros((n, n), dtype=complex)
    for i in np.nonzero(vals.any(axis=1))[0]:
        m = vals[i] @ ph  # indexed by d + n - 1
        f = _gather(phi_f.amps, i - k - ob)
        out += m[d + n - 1] * np.outer(f, f.conj())
    out *= rho.cell / p_r
    return DensityMatrix1D(g, out)


def conditional_state_general(joint: JointFinalState, region: OutcomeRegion) -> DensityMatrix1D:
    """Partial trace of the joint final state over the pointer cells in ``region``."""
    mask = region.mask(joint.mu_x_axis.x, joint.mu_p_axis.x)
    sel = joint.amps[:, mask]  # [x, cells]
    dmu = joint.mu_x_axis.dx * joint.mu_p_axis.dx
    p_r = float(np.sum(np.abs(sel) ** 2) * joint.x_axis.dx * dmu)
    if p_r < P_R_MIN:
        raise EmptyRegion(f"region probability {p_r:.3e} is below {P_R_MIN:.0e}")
    return DensityMatrix1D(joint.x_axis, sel @ sel.conj().T * dmu / p_r)


def final_wigner_from_outcomes(rho: PhaseSpaceDist, phi_f: WaveFunction1D, region: OutcomeRegion) -> PhaseSpaceDist:
    """``W_sy,f(x, p) = (1/p_R) int_R W_eps_f(mu_X - x, mu_P - p) rho(mu) dmu``.

    ``W_eps_f`` is the Wigner function of the predictive factor ``phi_f``.
    """
    if phi_f.grid.n != rho.x_axis.n:
        raise GridMismatch("phi_f must live on a lattice of the same size as the outcome grid")
    vals, p_r = _restricted(rho, region)
    kern = wigner_of_pure(phi_f).reflected()
    src = PhaseSpaceDist(rho.x_axis, rho.p_axis, vals / p_r, "outcome")
    w = convolve2d(src, kern)
    return PhaseSpaceDist(w.x_axis, w.p_axis, w.values, "wigner")


def anti_husimi_on_region(rho: PhaseSpaceDist, region: OutcomeRegion, ap: ApparatusState | None = None) -> PhaseSpaceDist:
    """``P = rho / p_R`` on ``region`` and zero elsewhere.

    When ``ap`` is given it must be predictively optimal, otherwise
    NotPredictivelyOptimal is raised.
    """
    if ap is not None:
        predictive_resolution(ap)
    vals, p_r = _restricted(rho, region)
    return PhaseSpaceDist(rho.x_axis, rho.p_axis, vals / p_r, "anti_husimi")


def predictive_resolution(ap: ApparatusState, tol: float = 1e-6) -> float:
    """``lambda_f`` of a predictively optimal apparatus; NotPredictivelyOptimal otherwise."""
    try:
        _, phi_f = factorize(ap)
    except Exception as exc:  # NotFactorized
        raise NotPredictivelyOptimal(str(exc)) from exc
    b = phi_f.grid.x
    amps = phi_f.amps
    # remove the global phase before comparing with a real Gaussian
    amps = amps * np.exp(-1j * np.angle(amps[np.argmax(np.abs(amps))]))
    lam = math.sqrt(2 * float(np.sum(b**2 * np.abs(amps) ** 2) * phi_f.spacing))
    ref = (math.pi * lam**2) ** -0.25 * np.exp(-(b**2) / (2 * lam**2))
    err = math.sqrt(float(np.sum(np.abs(amps - ref) ** 2) * phi_f.spacing))
    if err > tol:
        raise NotPredictivelyOptimal(f"eps_Xf factor differs from a centred Gaussian by {err:.2e}")
    return lam


def density_from_anti_husimi(p: PhaseSpaceDist, lambda_f: float, grid: GridSpec1D) -> DensityMatrix1D:
    """``int P(mu) |mu_X, mu_P, lambda_f><mu_X, mu_P, lambda_f| dmu`` on ``grid``."""
    out = np.zeros((grid.n, grid.n), dtype=complex)
    rows = np.nonzero(p.values.any(axis=1))[0]
    for i in rows:
        cols = np.nonzero(p.values[i])[0]
        c = np.stack([coherent_amplitudes(grid.x, p.x[i], p.p[j], lambda_f, grid.hbar) for j in cols], axis=1)
        out += (c * (p.values[i, cols] * p.cell)) @ c.conj().T
    return DensityMatrix1D(grid, out)


def coherent_fidelity(rho: DensityMatrix1D, mu_x: float, mu_p: float, lam: float) -> float:
    """``<mu_x, mu_p, lam| rho |mu_x, mu_p, lam>``."""
    g = rho.grid
    c = coherent_amplitudes(g.x, mu_x, mu_p, lam, g.hbar)
    return float((c.conj() @ rho.elems @ c).real * g.dx**2)


# ---------------------------------------------------------------------------
# sampling

SAMPLE_CHUNK = 1 << 16


@dataclass(frozen=True)
class MeasurementOutcomeSample:
    mu_x: float
    mu_p: float
    seed: int
    index: int


def _cell_cdf(rho: PhaseSpaceDist) -> np.ndarray:
    w = np.clip(rho.values, 0.0, None).ravel()
    cdf = np.cumsum(w)
    return cdf / cdf[-1]


def sample_outcomes_array(rho: PhaseSpaceDist, count: int, seed: int) -> np.ndarray:
    """``(count, 2)`` array of ``(mu_X, mu_P)`` draws from ``rho``.

    Inverse CDF over the flattened lattice, then uniform jitter inside the
    chosen cell.  Chunk ``c`` of 65536 draws uses the Philox stream keyed by
    ``seed`` and jumped ``c`` times, so draws depend only on (seed, index).
    """
    if count <= 0:
        raise ValueError("count must be positive")
    cdf = _cell_cdf(rho)
    npx = rho.p_axis.n
    out = np.empty((count, 2))
    base = np.random.Philox(key=int(seed) & ((1 << 64) - 1))
    for c, start in enumerate(range(0, count, SAMPLE_CHUNK)):
        m = min(SAMPLE_CHUNK, count - start)
        rng = np.random.Generator(base.jumped(c))
        draws = rng.random((m, 3))  # row-wise, so a shorter chunk is a prefix of a longer one
        u = draws[:, 0]
        jit = draws[:, 1:] - 0.5
        idx = np.minimum(np.searchsorted(cdf, u, side="right"), cdf.size - 1)
        ix, ip = np.divmod(idx, npx)
        out[start:start + m, 0] = rho.x[ix] + jit[:, 0] * rho.x_axis.dx
        out[start:start + m, 1] = rho.p[ip] + jit[:, 1] * rho.p_axis.dx
    return out


def sample_outcomes(rho: PhaseSpaceDist, count: int, seed: int) -> list[MeasurementOutcomeSample]:
    arr = sample_outcomes_array(rho, count, seed)
    return [MeasurementOutcomeSample(float(a), float(b), int(seed), i) for i, (a, b) in enumerate(arr)]


def _quantile_edges(marginal: np.ndarray, bins: int) -> np.ndarray:
    # cell-aligned edges (cell indices) splitting the marginal into ~equal-mass groups
    cdf = np.cumsum(np.clip(marginal, 0, None))
    cdf /= cdf[-1]
    cuts = np.searchsorted(cdf, np.arange(1, bins) / bins, side="left") + 1
    return np.unique(np.concatenate([[0], cuts, [marginal.size]]))


def chi_square_test(samples: np.ndarray, rho: PhaseSpaceDist, bins: int = 16, min_expected: float = 5.0) -> tuple[float, int, float]:
    """Pearson goodness of fit of ``samples`` against ``rho`` on a ``bins x bins`` grid.

    Bin edges follow the marginal quantiles but are snapped to cell
    boundaries, so expected counts are exact lattice sums.  Bins expecting
    fewer than ``min_expected`` draws are pooled.  Returns (statistic, dof, p-value).
    """
    n = samples.shape[0]
    ex = _quantile_edges(rho.marginal_x(), bins)
    ep = _quantile_edges(rho.marginal_p(), bins)
    w = np.clip(rho.values, 0, None)
    w = w / w.sum()
    expected = np.add.reduceat(np.add.reduceat(w, ex[:-1], axis=0), ep[:-1], axis=1) * n
    ix = np.rint((samples[:, 0] - rho.x[0]) / rho.x_axis.dx).astype(int)
    ip = np.rint((samples[:, 1] - rho.p[0]) / rho.p_axis.dx).astype(int)
    bx = np.searchsorted(ex, ix, side="right") - 1
    bp = np.searchsorted(ep, ip, side="right") - 1
    observed = np.zeros_like(expected)
    np.add.at(observed, (bx, bp), 1)
    e, o = expected.ravel(), observed.ravel()
    small = e < min_expected
    if small.any():
        pooled_e, pooled_o = e[small].sum(), o[small].sum()
        e, o = e[~small], o[~small]
        if pooled_e > 0:
            e, o = np.append(e, pooled_e), np.append(o, pooled_o)
    stat = float(np.sum((o - e) ** 2 / e))
    dof = e.size - 1
    return stat, dof, float(stats.chi2.sf(stat, dof))
