"""Command-line entry point: ``akmeter {run,sample,verify,kernels}``.

Exit status is 0 only when every verdict passes; 1 lists the failures on
stderr; 2 signals a usage or scenario error.
"""
from __future__ import annotations

import argparse
import json
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

from .errors import AKMeterError
from .measurement import sample_outcomes_array
from .report import emit, run_scenario, write_samples
from .scenario import ScenarioError, load_scenario, with_overrides


def _u64(text: str) -> int:
    val = int(text, 0)
    if not 0 <= val < 2**64:
        raise argparse.ArgumentTypeError("seed must be an unsigned 64-bit integer")
    return val


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="akmeter", description="Simulate Arthurs-Kelly joint position/momentum measurements.")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, scenario_required=True):
        p.add_argument("--scenario", type=Path, required=scenario_required, help="scenario TOML file")
        p.add_argument("--out", type=Path, default=None, help="output directory")
        p.add_argument("--format", choices=("csv", "json"), default="csv", help="format for distribution files")
        p.add_argument("--seed", type=_u64, default=None, help="override the sampling seed")
        p.add_argument("--hbar", type=float, default=None, help="override hbar")
        p.add_argument("--grid-n", type=int, default=None, help="override the number of grid points")

    common(sub.add_parser("run", help="run a scenario and write the report and distributions"))
    p = sub.add_parser("sample", help="draw Monte-Carlo measurement outcomes")
    common(p)
    p.add_argument("--count", type=int, default=None, help="override the sample count")
    common(sub.add_parser("verify", help="run the built-in inequality corpus"), scenario_required=False)
    common(sub.add_parser("kernels", help="run the kernel-level checks"), scenario_required=False)
    return parser


def _threads() -> int:
    env = os.environ.get("AKMETER_THREADS")
    cap = os.cpu_count() or 1
    if env:
        try:
            return max(1, min(int(env), cap))
        except ValueError:
            pass
    return cap


def _report_failures(names_and_verdicts) -> int:
    bad = [(name, v) for name, v in names_and_verdicts if not v.passed]
    for name, v in bad:
        print(f"FAIL {name}: {v.name} value={v.value:.12g} bound={v.bound:.12g} margin={v.margin:.3e}", file=sys.stderr)
    return 1 if bad else 0


def _load(args):
    s = load_scenario(args.scenario)
    return with_overrides(s, hbar=args.hbar, grid_n=args.grid_n, seed=args.seed)


def cmd_run(args) -> int:
    s = _load(args)
    art = run_scenario(s)
    if args.out is not None:
        emit(art, args.format, args.out)
    rep = art.report
    print(f"{rep.scenario}: {sum(v.passed for v in rep.verdicts)}/{len(rep.verdicts)} verdicts pass")
    return _report_failures((rep.scenario, v) for v in rep.verdicts)


def cmd_sample(args) -> int:
    s = _load(args)
    if s.sampling is None and args.count is None:
        raise ScenarioError("no [sampling] table and no --count given")
    sampling = dict(s.sampling or {"seed": 0})
    if args.count is not None:
        if args.count <= 0:
            raise ScenarioError("--count must be positive")
        sampling["count"] = args.count
    art = run_scenario(s, with_samples=False)
    samples = sample_outcomes_array(art.rho, sampling["count"], sampling["seed"])
    out = args.out or Path(".")
    out.mkdir(parents=True, exist_ok=True)
    write_samples(samples, out / f"samples.{args.format}", args.format)
    print(f"wrote {samples.shape[0]} samples to {out / f'samples.{args.format}'}")
    return 0


def _run_one(scenario):
    return run_scenario(scenario, with_samples=False).report


def cmd_verify(args) -> int:
    from .corpus import corpus_scenarios, random_relation_verdicts

    hbar = args.hbar if args.hbar is not None else 1.0
    scenarios = corpus_scenarios(hbar=hbar, grid_n=args.grid_n)
    workers = _threads()
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            reports = list(pool.map(_run_one, scenarios))
    else:
        reports = [_run_one(s) for s in scenarios]
    random = random_relation_verdicts(hbar=hbar)
    pairs = [(r.scenario, v) for r in reports for v in r.verdicts] + [("random_states", v) for v in random]
    if args.out is not None:
        args.out.mkdir(parents=True, exist_ok=True)
        payload = {
            "scenarios": [r.to_dict() for r in reports],
            "random_states": [v.__dict__ for v in random],
        }
        (args.out / "verify.json").write_text(json.dumps(payload, sort_keys=True, indent=2) + "\n")
    print(f"verify: {sum(v.passed for _, v in pairs)}/{len(pairs)} verdicts pass over {len(reports)} scenarios and {len(random) // 6} random states")
    return _report_failures(pairs)


def cmd_kernels(args) -> int:
    from .corpus import kernel_verdicts

    n = args.grid_n if args.grid_n is not None else 64
    hbar = args.hbar if args.hbar is not None else 1.0
    verdicts = kernel_verdicts(n=n, hbar=hbar)
    if args.out is not None:
        args.out.mkdir(parents=True, exist_ok=True)
        (args.out / "kernels.json").write_text(json.dumps([v.__dict__ for v in verdicts], sort_keys=True, indent=2) + "\n")
    print(f"kernels: {sum(v.passed for v in verdicts)}/{len(verdicts)} verdicts pass")
    return _report_failures(("kernels", v) for v in verdicts)


COMMANDS = {"run": cmd_run, "sample": cmd_sample, "verify": cmd_verify, "kernels": cmd_kernels}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return COMMANDS[args.command](args)
    except AKMeterError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
