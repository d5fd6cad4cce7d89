import math

import numpy as np
import pytest
from hypothesis import settings

from akmeter.grid import GridSpec1D, wavefunction
from akmeter.phase_space import coherent_amplitudes

settings.register_profile("akmeter", deadline=None, max_examples=25, derandomize=True)
settings.load_profile("akmeter")


@pytest.fixture
def grid():
    return GridSpec1D.centered(256, 0.125)


@pytest.fixture
def small_grid():
    return GridSpec1D.centered(128, 0.125)


def gaussian(grid, lam=1.0, x0=0.0, p0=0.0):
    return wavefunction(grid, coherent_amplitudes(grid.x, x0, p0, lam, grid.hbar))


def smooth_random_state(grid, rng, terms=3):
    """Sum of a few random Gaussian packets well inside the lattice."""
    half = grid.n * grid.dx / 2
    amps = np.zeros(grid.n, dtype=complex)
    for _ in range(terms):
        x0 = rng.uniform(-0.2, 0.2) * half
        lam = rng.uniform(0.6, 1.4)
        p0 = rng.uniform(-1.5, 1.5)
        amps += (rng.normal() + 1j * rng.normal()) * coherent_amplitudes(grid.x, x0, p0, lam, grid.hbar)
    return wavefunction(grid, amps)


def l1(a, b):
    return a.l1_distance(b)


SQRT_HALF = 1 / math.sqrt(2)


ACCEPTANCE_LINES: list = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)
