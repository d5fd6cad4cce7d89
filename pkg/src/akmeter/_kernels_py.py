"""Reference numpy implementations of the lattice hot loops.

The compiled module ``_ckernels`` exposes the same three functions with
identical signatures and results; ``_backend`` picks one at import time.
"""
import numpy as np


def _lag_fold(rows: np.ndarray, n: int) -> np.ndarray:
    # rows[..., m + n] holds lag m in [-n, n); fold lags modulo n
    return rows[..., :n] + rows[..., n:]


def wigner_lag_fold_pure(psi2: np.ndarray, n: int) -> np.ndarray:
    """c[k, r] = sum over m = r (mod n) of psi2[2k - m] * conj(psi2[2k + m])."""
    psi2 = np.ascontiguousarray(psi2, dtype=complex)
    k = np.arange(n)[:, None]
    m = np.arange(-n, n)[None, :]
    i1 = 2 * k - m
    i2 = 2 * k + m
    size = psi2.shape[0]
    ok = (i1 >= 0) & (i1 < size) & (i2 >= 0) & (i2 < size)
    c = psi2[np.clip(i1, 0, size - 1)] * np.conj(psi2[np.clip(i2, 0, size - 1)])
    c[~ok] = 0.0
    return _lag_fold(c, n)


def wigner_lag_fold_density(rho2: np.ndarray, n: int) -> np.ndarray:
    """c[k, r] = sum over m = r (mod n) of rho2[2k - m, 2k + m]."""
    rho2 = np.ascontiguousarray(rho2, dtype=complex)
    k = np.arange(n)[:, None]
    m = np.arange(-n, n)[None, :]
    i1 = 2 * k - m
    i2 = 2 * k + m
    size = rho2.shape[0]
    ok = (i1 >= 0) & (i1 < size) & (i2 >= 0) & (i2 < size)
    c = rho2[np.clip(i1, 0, size - 1), np.clip(i2, 0, size - 1)]
    c[~ok] = 0.0
    return _lag_fold(c, n)


def direct_lag_sums(rho_eps: np.ndarray, psi: np.ndarray, s0: int) -> np.ndarray:
    """A[i, r] = sum_j sum_{d = r (mod n)} rho_eps[i-j+s0, i-j-d+s0] psi[j] conj(psi[j+d]).

    Indices of ``rho_eps`` outside its bounds contribute zero.
    """
    rho_eps = np.ascontiguousarray(rho_eps, dtype=complex)
    psi = np.ascontiguousarray(psi, dtype=complex)
    n = psi.shape[0]
    na = rho_eps.shape[0]
    pad = np.zeros((na + 2 * n, na + 2 * n), dtype=complex)
    pad[n:n + na, n:n + na] = rho_eps
    pp = np.outer(psi, psi.conj())
    j = np.arange(n)
    lag_index = (j[None, :] - j[:, None] + n - 1).ravel()
    out = np.zeros((n, n), dtype=complex)
    for i in range(n):
        idx = i + s0 + n - j
        if idx.max() < 0 or idx.min() >= pad.shape[0]:
            continue
        idx = np.clip(idx, 0, pad.shape[0] - 1)
        block = (pad[np.ix_(idx, idx)] * pp).ravel()
        lags = np.bincount(lag_index, weights=block.real, minlength=2 * n - 1) + 1j * np.bincount(
            lag_index, weights=block.imag, minlength=2 * n - 1
        )
        # lags[d + n - 1] for d in (-n, n)
        out[i, 0] = lags[n - 1]
        out[i, 1:] = lags[n:] + lags[: n - 1]
    return out
