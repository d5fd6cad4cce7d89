"""Scenario files: a small TOML schema describing one measurement run.

Example::

    name = "complete-optimal coherent"
    hbar = 1.0                      # the only physical default (1.0)

    [grid]
    n = 256                         # optional, default 256
    dx = 0.125

    [system]
    kind = "coherent"               # coherent | squeezed | cat | cubic_phase | file
    mu_x = 0.0
    mu_p = 0.0
    lambda = 1.0

    [apparatus]
    kind = "complete_opt"           # retro_opt | pred_opt | complete_opt | min_disturb | file
    lambda_i = 1.0
    lambda_f = 1.0

    [region]                        # optional
    mu_x = 1.0
    mu_p = -1.0
    width_x = 0.05
    width_p = 0.05
    snap = true                     # move the centre to the nearest cell centre

    [sampling]                      # optional
    count = 100000
    seed = 42

System parameters by kind:

* ``coherent``: ``mu_x``, ``mu_p``, ``lambda``
* ``squeezed``: ``mu_x``, ``mu_p``, ``lambda``, ``chirp`` (quadratic phase ``chirp * x^2 / hbar``)
* ``cat``: ``separation`` (the packets sit at +-separation/2), ``lambda``, ``phase``
* ``cubic_phase``: ``lambda``, ``kappa`` (phase ``kappa * x^3 / hbar``)
* ``file``: ``path`` to a ``.npy`` complex vector or a CSV with ``re,im`` columns

Apparatus parameters by kind:

* ``retro_opt``: ``lambda_i`` and an ``[apparatus.phi_f]`` factor table
* ``pred_opt``: ``lambda_f`` and an ``[apparatus.phi_i]`` factor table
* ``complete_opt``: ``lambda_i``, ``lambda_f``
* ``min_disturb``: ``lambda``, ``eta``
* ``file``: ``path`` to a ``.npy`` complex (n, n) array

Factor tables take ``kind = "gaussian"`` (``lambda``, ``center``) or
``kind = "bimodal"`` (``lambda``, ``separation``) or ``kind = "file"``.
The apparatus lattice copies the system lattice, centred on zero.
"""
from __future__ import annotations

import math
import sys
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from .apparatus import (
    ApparatusState,
    apparatus_grid_like,
    make_completely_optimal,
    make_minimally_disturbing,
    make_predictively_optimal,
    make_retrodictively_optimal,
)
from .errors import ScenarioError
from .grid import GridSpec1D, WaveFunction1D, wavefunction
from .measurement import OutcomeRegion, snap_to_lattice
from .phase_space import PhaseSpaceDist, coherent_amplitudes

SYSTEM_KINDS = ("coherent", "squeezed", "cat", "cubic_phase", "file")
APPARATUS_KINDS = ("retro_opt", "pred_opt", "complete_opt", "min_disturb", "file")
FACTOR_KINDS = ("gaussian", "bimodal", "file")
DEFAULT_N = 256


@dataclass
class Scenario:
    name: str
    hbar: float
    n: int
    dx: float
    system: dict
    apparatus: dict
    region: dict | None = None
    sampling: dict | None = None
    base_dir: Path = field(default_factory=Path.cwd)

    @property
    def grid(self) -> GridSpec1D:
        return GridSpec1D.centered(self.n, self.dx, self.hbar)


def _require(table: dict, key: str, where: str, positive: bool = False, nonneg: bool = False) -> float:
    if key not in table:
        raise ScenarioError(f"[{where}] is missing required key {key!r}")
    try:
        val = float(table[key])
    except (TypeError, ValueError) as exc:
        raise ScenarioError(f"[{where}] {key} must be a number") from exc
    if positive and not val > 0:
        raise ScenarioError(f"[{where}] {key} must be positive, got {val}")
    if nonneg and val < 0:
        raise ScenarioError(f"[{where}] {key} must be non-negative, got {val}")
    return val


_SYSTEM_KEYS = {
    "coherent": {"mu_x": {}, "mu_p": {}, "lambda": {"positive": True}},
    "squeezed": {"mu_x": {}, "mu_p": {}, "lambda": {"positive": True}, "chirp": {}},
    "cat": {"separation": {"positive": True}, "lambda": {"positive": True}, "phase": {}},
    "cubic_phase": {"lambda": {"positive": True}, "kappa": {}},
}
_APPARATUS_KEYS = {
    "retro_opt": {"lambda_i": {"positive": True}},
    "pred_opt": {"lambda_f": {"positive": True}},
    "complete_opt": {"lambda_i": {"positive": True}, "lambda_f": {"positive": True}},
    "min_disturb": {"lambda": {"positive": True}, "eta": {"nonneg": True}},
}
_FACTOR_KEYS = {
    "gaussian": {"lambda": {"positive": True}, "center": {}},
    "bimodal": {"lambda": {"positive": True}, "separation": {"positive": True}},
}


def _check_kind(table: dict, kinds: tuple, where: str) -> str:
    kind = table.get("kind")
    if kind not in kinds:
        raise ScenarioError(f"[{where}] kind must be one of {', '.join(kinds)}; got {kind!r}")
    return kind


def _check_params(table: dict, spec: dict, where: str) -> None:
    for key, opts in spec.items():
        _require(table, key, where, **opts)


def _check_file(table: dict, where: str) -> None:
    if not isinstance(table.get("path"), str):
        raise ScenarioError(f"[{where}] kind 'file' needs a string 'path'")


def parse_scenario(data: dict, base_dir: Path | None = None, name: str = "scenario") -> Scenario:
    """Validate a decoded TOML document and return a Scenario."""
    hbar = float(data.get("hbar", 1.0))
    if not hbar > 0:
        raise ScenarioError("hbar must be positive")
    grid = data.get("grid")
    if not isinstance(grid, dict):
        raise ScenarioError("missing [grid] table")
    dx = _require(grid, "dx", "grid", positive=True)
    n = int(grid.get("n", DEFAULT_N))
    if n <= 0 or n & (n - 1):
        raise ScenarioError(f"[grid] n must be a power of two, got {n}")

    system = data.get("system")
    if not isinstance(system, dict):
        raise ScenarioError("missing [system] table")
    kind = _check_kind(system, SYSTEM_KINDS, "system")
    if kind == "file":
        _check_file(system, "system")
    else:
        _check_params(system, _SYSTEM_KEYS[kind], "system")

    ap = data.get("apparatus")
    if not isinstance(ap, dict):
        raise ScenarioError("missing [apparatus] table")
    kind = _check_kind(ap, APPARATUS_KINDS, "apparatus")
    if kind == "file":
        _check_file(ap, "apparatus")
    else:
        _check_params(ap, _APPARATUS_KEYS[kind], "apparatus")
    for fac, owner in (("phi_f", "retro_opt"), ("phi_i", "pred_opt")):
        if kind == owner:
            sub = ap.get(fac)
            if not isinstance(sub, dict):
                raise ScenarioError(f"[apparatus] kind {owner!r} needs an [apparatus.{fac}] table")
            fk = _check_kind(sub, FACTOR_KINDS, f"apparatus.{fac}")
            if fk == "file":
                _check_file(sub, f"apparatus.{fac}")
            else:
                _check_params(sub, _FACTOR_KEYS[fk], f"apparatus.{fac}")

    region = data.get("region")
    if region is not None:
        if all(k in region for k in ("x_lo", "x_hi", "p_lo", "p_hi")):
            for k in ("x_lo", "x_hi", "p_lo", "p_hi"):
                _require(region, k, "region")
        else:
            for k in ("mu_x", "mu_p"):
                _require(region, k, "region")
            for k in ("width_x", "width_p"):
                _require(region, k, "region", positive=True)
        if not isinstance(region.get("snap", False), bool):
            raise ScenarioError("[region] snap must be true or false")

    sampling = data.get("sampling")
    if sampling is not None:
        count = int(_require(sampling, "count", "sampling", positive=True))
        seed = int(sampling.get("seed", 0))
        if not 0 <= seed < 2**64:
            raise ScenarioError("[sampling] seed must be an unsigned 64-bit integer")
        sampling = {"count": count, "seed": seed}

    return Scenario(
        name=str(data.get("name", name)),
        hbar=hbar,
        n=n,
        dx=dx,
        system=dict(system),
        apparatus=dict(ap),
        region=dict(region) if region is not None else None,
        sampling=sampling,
        base_dir=base_dir or Path.cwd(),
    )


def load_scenario(path: str | Path) -> Scenario:
    path = Path(path)
    try:
        with open(path, "rb") as fh:
            data = tomllib.load(fh)
    except OSError as exc:
        raise ScenarioError(f"cannot read scenario {path}: {exc}") from exc
    except tomllib.TOMLDecodeError as exc:
        raise ScenarioError(f"{path}: {exc}") from exc
    return parse_scenario(data, path.parent, path.stem)


def with_overrides(s: Scenario, *, hbar: float | None = None, grid_n: int | None = None, seed: int | None = None) -> Scenario:
    """Copy of ``s`` with CLI overrides applied."""
    out = Scenario(**{**s.__dict__})
    if hbar is not None:
        if not hbar > 0:
            raise ScenarioError("--hbar must be positive")
        out.hbar = float(hbar)
    if grid_n is not None:
        if grid_n <= 0 or grid_n & (grid_n - 1):
            raise ScenarioError("--grid-n must be a power of two")
        out.n = int(grid_n)
    if seed is not None:
        if not 0 <= seed < 2**64:
            raise ScenarioError("--seed must be an unsigned 64-bit integer")
        out.sampling = {**(out.sampling or {"count": 100000}), "seed": int(seed)}
    return out


# ---------------------------------------------------------------------------
# building states


def _load_vector(path: Path, shape: tuple) -> np.ndarray:
    if path.suffix == ".npy":
        arr = np.load(path)
    else:
        tab = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
        arr = tab[:, 0] + 1j * tab[:, 1]
        arr = arr.reshape(shape) if arr.size == math.prod(shape) else arr
    arr = np.asarray(arr, dtype=complex)
    if arr.shape != shape:
        raise ScenarioError(f"{path}: expected shape {shape}, got {arr.shape}")
    return arr


def build_system(s: Scenario) -> WaveFunction1D:
    g = s.grid
    p = s.system
    x = g.x
    kind = p["kind"]
    if kind == "coherent":
        amps = coherent_amplitudes(x, float(p["mu_x"]), float(p["mu_p"]), float(p["lambda"]), g.hbar)
    elif kind == "squeezed":
        lam = float(p["lambda"])
        amps = coherent_amplitudes(x, float(p["mu_x"]), float(p["mu_p"]), lam, g.hbar)
        amps = amps * np.exp(1j * float(p["chirp"]) * (x - float(p["mu_x"])) ** 2 / g.hbar)
    elif kind == "cat":
        a = float(p["separation"]) / 2
        lam = float(p["lambda"])
        amps = coherent_amplitudes(x, a, 0.0, lam, g.hbar) + np.exp(1j * float(p["phase"])) * coherent_amplitudes(
            x, -a, 0.0, lam, g.hbar
        )
    elif kind == "cubic_phase":
        lam = float(p["lambda"])
        amps = np.exp(-(x**2) / (2 * lam**2) + 1j * float(p["kappa"]) * x**3 / g.hbar)
    else:
        amps = _load_vector(s.base_dir / p["path"], (g.n,))
    return wavefunction(g, amps)


def _build_factor(s: Scenario, table: dict, axis: GridSpec1D) -> WaveFunction1D:
    kind = table["kind"]
    x = axis.x
    if kind == "gaussian":
        lam = float(table["lambda"])
        amps = np.exp(-((x - float(table["center"])) ** 2) / (2 * lam**2))
    elif kind == "bimodal":
        lam = float(table["lambda"])
        a = float(table["separation"]) / 2
        amps = np.exp(-((x - a) ** 2) / (2 * lam**2)) + np.exp(-((x + a) ** 2) / (2 * lam**2))
    else:
        amps = _load_vector(s.base_dir / table["path"], (axis.n,))
    return wavefunction(axis, amps)


def build_apparatus(s: Scenario) -> ApparatusState:
    g = apparatus_grid_like(s.grid)
    p = s.apparatus
    kind = p["kind"]
    if kind == "retro_opt":
        return make_retrodictively_optimal(float(p["lambda_i"]), _build_factor(s, p["phi_f"], g.axes[1]), g)
    if kind == "pred_opt":
        return make_predictively_optimal(float(p["lambda_f"]), _build_factor(s, p["phi_i"], g.axes[0]), g)
    if kind == "complete_opt":
        return make_completely_optimal(float(p["lambda_i"]), float(p["lambda_f"]), g)
    if kind == "min_disturb":
        return make_minimally_disturbing(float(p["lambda"]), float(p["eta"]), g)
    return ApparatusState.from_amplitudes(g, _load_vector(s.base_dir / p["path"], g.shape))


def region_centre(s: Scenario, dist: PhaseSpaceDist | None = None) -> tuple[float, float] | None:
    """Requested region centre, moved to the nearest cell centre of ``dist`` when ``snap`` is set."""
    r = s.region
    if r is None or "x_lo" in r:
        return None
    mx, mp = float(r["mu_x"]), float(r["mu_p"])
    if r.get("snap", False) and dist is not None:
        mx, mp = snap_to_lattice(dist, mx, mp)
    return mx, mp


def build_region(s: Scenario, dist: PhaseSpaceDist | None = None) -> OutcomeRegion | None:
    r = s.region
    if r is None:
        return None
    if "x_lo" in r:
        return OutcomeRegion(float(r["x_lo"]), float(r["x_hi"]), float(r["p_lo"]), float(r["p_hi"]))
    mx, mp = region_centre(s, dist)
    return OutcomeRegion.around(mx, mp, float(r["width_x"]), float(r["width_p"]))
