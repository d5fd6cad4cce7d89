"""Time the compiled lattice kernels against the numpy fallback.

    python3 benchmarks/bench_kernels.py --n 128 256 --repeat 5
"""
import argparse
import timeit

import numpy as np

from akmeter import _backend
from akmeter.apparatus import apparatus_grid_like, make_completely_optimal
from akmeter.grid import GridSpec1D
from akmeter.measurement import outcome_distribution_convolution, outcome_distribution_direct
from akmeter.phase_space import coherent_wavefunction, CoherentStateParams


def best(fn, repeat: int) -> float:
    return min(timeit.repeat(fn, number=1, repeat=repeat))


def bench_kernels(n: int, repeat: int) -> None:
    rng = np.random.default_rng(0)
    psi2 = rng.normal(size=2 * n) + 1j * rng.normal(size=2 * n)
    rho2 = rng.normal(size=(2 * n, 2 * n)) + 1j * rng.normal(size=(2 * n, 2 * n))
    rho = rho2[:n, :n].copy()
    psi = psi2[:n].copy()
    cases = {
        "wigner_lag_fold_pure": lambda k: k.wigner_lag_fold_pure(psi2, n),
        "wigner_lag_fold_density": lambda k: k.wigner_lag_fold_density(rho2, n),
        "direct_lag_sums": lambda k: k.direct_lag_sums(rho, psi, -n // 2),
    }
    names = ["python"]
    try:
        _backend.get_kernels("cython")
        names.insert(0, "cython")
    except ImportError:
        pass
    for case, fn in cases.items():
        times = {b: best(lambda: fn(_backend.get_kernels(b)), repeat) for b in names}
        speed = f"  x{times['python'] / times['cython']:.1f}" if "cython" in times else ""
        cols = "  ".join(f"{b} {t * 1e3:8.2f} ms" for b, t in times.items())
        print(f"n={n:4d}  {case:24s} {cols}{speed}")


def bench_routes(n: int, repeat: int) -> None:
    g = GridSpec1D.centered(n, 32.0 / n)
    psi = coherent_wavefunction(CoherentStateParams(0.0, 0.0, 1.0), g)
    ap = make_completely_optimal(1.0, 1.0, apparatus_grid_like(g))
    td = best(lambda: outcome_distribution_direct(psi, ap), repeat)
    tc = best(lambda: outcome_distribution_convolution(psi, ap), repeat)
    print(f"n={n:4d}  outcome density           direct {td * 1e3:8.2f} ms  convolution {tc * 1e3:8.2f} ms  [{_backend.BACKEND}]")


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--n", type=int, nargs="+", default=[64, 128, 256])
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args()
    for n in args.n:
        bench_kernels(n, args.repeat)
    for n in args.n:
        bench_routes(n, args.repeat)


if __name__ == "__main__":
    main()
