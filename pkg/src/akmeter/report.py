"""Scenario runner and its output files; every check becomes a signed verdict."""
from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from .apparatus import ApparatusState, error_report, factorize, is_factorized
from .errors import AKMeterError, NotPredictivelyOptimal
from .grid import WaveFunction1D, trace_distance
from .measurement import (
    coherent_fidelity,
    conditional_state_factorized,
    density_from_anti_husimi,
    anti_husimi_on_region,
    final_wigner_from_outcomes,
    outcome_distribution_convolution,
    outcome_distribution_direct,
    pointer_variances,
    predictive_resolution,
    sample_outcomes_array,
)
from .phase_space import PhaseSpaceDist, husimi, smeared_wigner, wigner_of_density, wigner_of_pure
from .scenario import Scenario, build_apparatus, build_region, build_system, region_centre

INEQUALITY_TOL = 1e-9
POINTER_TOL = 1e-6
DUAL_ROUTE_TOL = 1e-6
IDENTITY_TOL = 1e-6
CROSS_TOL = 1e-8
FIDELITY_FLOOR = 0.99
STATE_ROUTE_TOL = 1e-5


@dataclass
class Verdict:
    """One check with a signed margin.

    Inequalities (``value >= bound`` or ``value <= bound``) carry the raw
    amount by which they hold and pass when ``margin >= -tolerance``.
    Identities carry ``tolerance - |value - bound|`` and pass when it is
    non-negative.
    """

    name: str
    kind: str
    value: float
    bound: float
    tolerance: float
    margin: float
    passed: bool

    @classmethod
    def at_least(cls, name: str, value: float, bound: float, tol: float = 0.0) -> "Verdict":
        margin = float(value - bound)
        return cls(name, "at_least", float(value), float(bound), tol, margin, bool(margin >= -tol))

    @classmethod
    def at_most(cls, name: str, value: float, bound: float, tol: float = 0.0) -> "Verdict":
        margin = float(bound - value)
        return cls(name, "at_most", float(value), float(bound), tol, margin, bool(margin >= -tol))

    @classmethod
    def equal(cls, name: str, value: float, target: float, tol: float) -> "Verdict":
        margin = float(tol - abs(value - target))
        return cls(name, "identity", float(value), float(target), tol, margin, bool(margin >= 0))


@dataclass
class MeasurementReport:
    scenario: str
    hbar: float
    grid: dict
    errors: dict
    pointer: dict
    verdicts: list = field(default_factory=list)
    routes: dict = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return all(v.passed for v in self.verdicts)

    def failures(self) -> list:
        return [v for v in self.verdicts if not v.passed]

    def verdict(self, name: str) -> Verdict:
        for v in self.verdicts:
            if v.name == name:
                return v
        raise KeyError(name)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["passed"] = self.passed
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "MeasurementReport":
        d = dict(d)
        d.pop("passed", None)
        d["verdicts"] = [Verdict(**v) for v in d["verdicts"]]
        return cls(**d)

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, indent=2, allow_nan=False) + "\n"

    @classmethod
    def from_json(cls, text: str) -> "MeasurementReport":
        return cls.from_dict(json.loads(text))


@dataclass
class RunArtifacts:
    """Report plus the arrays written alongside it."""

    report: MeasurementReport
    rho: PhaseSpaceDist
    wigner_initial: PhaseSpaceDist
    wigner_final: PhaseSpaceDist | None = None
    samples: np.ndarray | None = None


def _error_verdicts(r, hbar: float) -> list:
    half = hbar / 2
    out = [
        Verdict.at_least("retrodictive_errors", r.dei_x * r.dei_p, half, INEQUALITY_TOL),
        Verdict.at_least("predictive_errors", r.def_x * r.def_p, half, INEQUALITY_TOL),
        Verdict.at_least("error_disturbance_dei_x_dd_p", r.dei_x * r.dd_p, half, INEQUALITY_TOL),
        Verdict.at_least("error_disturbance_def_x_dd_p", r.def_x * r.dd_p, half, INEQUALITY_TOL),
        Verdict.at_least("error_disturbance_dei_p_dd_x", r.dei_p * r.dd_x, half, INEQUALITY_TOL),
        Verdict.at_least("error_disturbance_def_p_dd_x", r.def_p * r.dd_x, half, INEQUALITY_TOL),
    ]
    # variance decomposition into average error and disturbance pieces
    out.append(Verdict.equal("decomposition_dei_x", r.dei_x**2, r.eps_x_sq + r.dd_x**2 / 4 + r.cross_term_x, CROSS_TOL))
    out.append(Verdict.equal("decomposition_def_x", r.def_x**2, r.eps_x_sq + r.dd_x**2 / 4 - r.cross_term_x, CROSS_TOL))
    return out


def _family_verdicts(s: Scenario, r, hbar: float) -> list:
    p = s.apparatus
    kind = p["kind"]
    out = []
    dd = r.dd_x * r.dd_p
    if kind in ("retro_opt", "pred_opt", "complete_opt"):
        out.append(Verdict.at_least("disturbance_product", dd, hbar, INEQUALITY_TOL))
    if kind == "retro_opt":
        li = float(p["lambda_i"])
        out.append(Verdict.equal("retrodictive_saturation", r.dei_x * r.dei_p, hbar / 2, IDENTITY_TOL))
        out.append(Verdict.equal("retro_disturbance_x", r.dd_x**2, li**2 / 2 + r.def_x**2, IDENTITY_TOL))
        out.append(Verdict.equal("retro_disturbance_p", r.dd_p**2, hbar**2 / (2 * li**2) + r.def_p**2, IDENTITY_TOL))
    if kind == "pred_opt":
        out.append(Verdict.equal("predictive_saturation", r.def_x * r.def_p, hbar / 2, IDENTITY_TOL))
    if kind == "complete_opt":
        li, lf = float(p["lambda_i"]), float(p["lambda_f"])
        formula = hbar / 2 * math.sqrt(2 + lf**2 / li**2 + li**2 / lf**2)
        out.append(Verdict.equal("complete_disturbance_formula", dd, formula, IDENTITY_TOL))
    if kind == "min_disturb":
        eta = float(p["eta"])
        out.append(Verdict.equal("min_disturbance_product", dd, hbar * math.exp(-eta), IDENTITY_TOL))
        out.append(Verdict.equal("min_disturb_error_product", r.dei_x * r.dei_p, hbar / 2 * math.cosh(eta), IDENTITY_TOL))
        out.append(Verdict.equal("min_disturb_cross_term", r.cross_term_x, 0.0, CROSS_TOL))
    # the cosh floor holds whenever retrodictive and predictive errors coincide
    if math.isclose(r.dei_x, r.def_x, rel_tol=1e-9) and math.isclose(r.dei_p, r.def_p, rel_tol=1e-9) and 0 < dd <= hbar:
        eta_eff = -math.log(dd / hbar)
        out.append(Verdict.at_least("cosh_error_floor", r.dei_x * r.dei_p, hbar / 2 * math.cosh(eta_eff), INEQUALITY_TOL))
    return out


def _identity_verdicts(s: Scenario, psi: WaveFunction1D, ap: ApparatusState, rho: PhaseSpaceDist, routes: dict) -> list:
    p = s.apparatus
    kind = p["kind"]
    out = []
    if kind in ("retro_opt", "complete_opt"):
        q = husimi(psi, float(p["lambda_i"]))
        gap = rho.l1_distance(q)
        routes["husimi_l1"] = gap
        out.append(Verdict.at_most("husimi_identity", gap, IDENTITY_TOL))
    if kind == "min_disturb":
        sw = smeared_wigner(psi, float(p["lambda"]), float(p["eta"]))
        gap = rho.l1_distance(sw)
        routes["smeared_wigner_l1"] = gap
        out.append(Verdict.at_most("smeared_wigner_identity", gap, IDENTITY_TOL))
    return out


def _region_checks(s: Scenario, psi, ap, rho, routes) -> tuple[list, PhaseSpaceDist | None]:
    region = build_region(s, rho)
    if region is None or not is_factorized(ap):
        return [], None
    out = []
    cond = conditional_state_factorized(psi, ap, region, rho)
    _, phi_f = factorize(ap)
    w_final = final_wigner_from_outcomes(rho, phi_f, region)
    gap = w_final.l1_distance(wigner_of_density(cond))
    routes["final_wigner_l1"] = gap
    out.append(Verdict.at_most("final_wigner_routes", gap, STATE_ROUTE_TOL))
    try:
        lam_f = predictive_resolution(ap)
    except NotPredictivelyOptimal:
        return out, w_final
    centre = region_centre(s, rho)
    if centre is not None:
        fid = coherent_fidelity(cond, centre[0], centre[1], lam_f)
        routes["coherent_fidelity"] = fid
        out.append(Verdict.at_least("coherent_preparation_fidelity", fid, FIDELITY_FLOOR))
    pr = anti_husimi_on_region(rho, region, ap)
    td = trace_distance(cond, density_from_anti_husimi(pr, lam_f, psi.grid))
    routes["anti_husimi_trace_distance"] = td
    out.append(Verdict.at_most("anti_husimi_reconstruction", td, STATE_ROUTE_TOL))
    return out, w_final


def run_scenario(s: Scenario, with_samples: bool = True) -> RunArtifacts:
    """Build the states and evaluate every applicable check on both outcome routes."""
    try:
        return _run(s, with_samples)
    except AKMeterError as exc:
        raise type(exc)(f"scenario {s.name!r}: {exc}") from exc


def _run(s: Scenario, with_samples: bool) -> RunArtifacts:
    hbar = s.hbar
    psi = build_system(s)
    ap = build_apparatus(s)
    r = error_report(ap, strict=False)
    rho_d = outcome_distribution_direct(psi, ap)
    rho_c = outcome_distribution_convolution(psi, ap)
    routes = {"rho_direct_vs_convolution_l1": rho_d.l1_distance(rho_c), "rho_mass": rho_c.mass()}
    sx, sp = pointer_variances(rho_c)
    verdicts = [
        Verdict.at_least("arthurs_kelly", sx * sp, hbar, POINTER_TOL),
        Verdict.at_most("rho_dual_route", routes["rho_direct_vs_convolution_l1"], DUAL_ROUTE_TOL),
        Verdict.equal("rho_mass", routes["rho_mass"], 1.0, IDENTITY_TOL),
        Verdict.at_least("rho_nonnegative", float(rho_c.values.min()), 0.0, 1e-9),
    ]
    verdicts += _error_verdicts(r, hbar)
    verdicts += _family_verdicts(s, r, hbar)
    verdicts += _identity_verdicts(s, psi, ap, rho_c, routes)
    extra, w_final = _region_checks(s, psi, ap, rho_c, routes)
    verdicts += extra

    report = MeasurementReport(
        scenario=s.name,
        hbar=hbar,
        grid={"n": s.n, "dx": s.dx},
        errors=r.as_dict(),
        pointer={"dmu_x": sx, "dmu_p": sp, "product": sx * sp},
        verdicts=verdicts,
        routes=routes,
    )
    samples = None
    if with_samples and s.sampling is not None:
        samples = sample_outcomes_array(rho_c, s.sampling["count"], s.sampling["seed"])
    return RunArtifacts(report, rho_c, wigner_of_pure(psi), w_final, samples)


# ---------------------------------------------------------------------------
# output


def write_distribution(dist: PhaseSpaceDist, path: Path, fmt: str = "csv") -> None:
    """Row-major over mu_X then mu_P; 17 significant digits so values round-trip exactly."""
    X, P = np.meshgrid(dist.x, dist.p, indexing="ij")
    if fmt == "csv":
        table = np.column_stack([X.ravel(), P.ravel(), dist.values.ravel()])
        np.savetxt(path, table, fmt="%.17g", delimiter=",", header="mu_x,mu_p,density", comments="")
    elif fmt == "json":
        payload = {"mu_x": X.ravel().tolist(), "mu_p": P.ravel().tolist(), "density": dist.values.ravel().tolist()}
        path.write_text(json.dumps(payload, sort_keys=True) + "\n")
    else:
        raise ValueError(f"unknown format {fmt!r}")


def read_distribution_csv(path: Path) -> np.ndarray:
    return np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)


def write_samples(samples: np.ndarray, path: Path, fmt: str = "csv") -> None:
    if fmt == "csv":
        np.savetxt(path, samples, fmt="%.17g", delimiter=",", header="mu_x,mu_p", comments="")
    else:
        payload = {"mu_x": samples[:, 0].tolist(), "mu_p": samples[:, 1].tolist()}
        path.write_text(json.dumps(payload, sort_keys=True) + "\n")


def emit(artifacts: RunArtifacts, fmt: str, out_dir: str | Path) -> list[Path]:
    """Write ``report.json`` plus the distributions (CSV or JSON) into ``out_dir``."""
    if fmt not in ("csv", "json"):
        raise ValueError(f"unknown format {fmt!r}")
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    written = []
    rp = out / "report.json"
    rp.write_text(artifacts.report.to_json())
    written.append(rp)
    ext = "." + fmt
    for name, dist in (("rho", artifacts.rho), ("wigner_initial", artifacts.wigner_initial), ("wigner_final", artifacts.wigner_final)):
        if dist is not None:
            path = out / (name + ext)
            write_distribution(dist, path, fmt)
            written.append(path)
    if artifacts.samples is not None:
        path = out / ("samples" + ext)
        write_samples(artifacts.samples, path, fmt)
        written.append(path)
    return written
