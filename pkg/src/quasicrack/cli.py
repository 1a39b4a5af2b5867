"""Command line entry point: ``quasicrack run|audit|oracle|lemma``."""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import replace
from pathlib import Path

from . import __version__
from .audit import audit_trace
from .config import ConfigError, load_spec
from .equilibrium import SolverError
from .evolution import (
    CandidateLimitError,
    EvolutionAborted,
    InitialStateError,
    incremental_step,
    run_evolution,
)
from .lattice import LatticeError
from .lemma import lemma_config_from_dict, lemma_experiment
from .problem import build_problem
from .traceio import TraceFormatError, output_lock, read_trace, write_trace
from .validation import validate_problem


def _err(msg: str) -> None:
    print(f"quasicrack: {msg}", file=sys.stderr)


def _spec_with_overrides(args):
    spec = load_spec(args.config)
    if args.dt is not None or args.T is not None:
        tm = spec.time
        spec.time = replace(
            tm,
            dt=tm.dt if args.dt is None else args.dt,
            T=tm.T if args.T is None else args.T,
            times=None,
        )
    if args.strategy is not None:
        spec.strategy = replace(spec.strategy, name=args.strategy)
    if args.seed is not None:
        spec.seed = args.seed
    if getattr(args, "out", None):
        spec.output = replace(spec.output, directory=str(args.out))
    return spec


def cmd_run(args) -> int:
    spec = _spec_with_overrides(args)
    problem = build_problem(spec)
    report = validate_problem(problem)
    if not report.ok:
        _err("problem validation failed")
        print(report.summary(), file=sys.stderr)
        return 2
    out = Path(spec.output.directory)
    with output_lock(out):
        try:
            trace = run_evolution(problem, validate=False)
        except InitialStateError as exc:
            _err(str(exc))
            return 2
        except EvolutionAborted as exc:
            write_trace(out, problem, exc.trace, report)
            _err(f"run aborted, partial trace written to {out}: {exc}")
            return 1
        write_trace(out, problem, trace, report)
    tc = trace.first_crack_time()
    print(f"{len(trace)} steps written to {out}; first crack at t={tc!r}")
    if report.waivers:
        print(f"waivers in effect: {', '.join(report.waivers)}")
    return 0


def cmd_audit(args) -> int:
    trace_dir = args.trace_dir or args.out
    if trace_dir is None:
        _err("audit needs a trace directory")
        return 2
    problem, trace = read_trace(trace_dir)
    report = audit_trace(trace, problem)
    (Path(trace_dir) / "audit.json").write_text(report.to_json(), encoding="utf-8")
    print(report.summary())
    return 0 if report.passed else 1


def cmd_oracle(args) -> int:
    spec = _spec_with_overrides(args)
    problem = build_problem(spec)
    times = problem.times
    if not 1 <= args.step < len(times):
        _err(f"--step must lie in [1, {len(times) - 1}]")
        return 2
    trace = run_evolution(replace_grid(problem, times[: args.step]), validate=True)
    prev = trace.steps[-1]
    t = float(times[args.step])
    ex = incremental_step(t, prev.crack, problem, "exhaustive", prev.u)
    gr = incremental_step(t, prev.crack, problem, "greedy", prev.u)
    margin = gr.energy.total - ex.energy.total
    print(f"t={t!r}")
    print(f"exhaustive {ex.energy.total!r} crack={list(ex.crack.ids)}")
    print(f"greedy     {gr.energy.total!r} crack={list(gr.crack.ids)}")
    print(f"margin     {margin!r}")
    return 0


def replace_grid(problem, times):
    """Copy of ``problem`` on a truncated time grid (shares the cache)."""
    from .problem import TimeGrid

    return replace(problem, grid=TimeGrid(tuple(float(v) for v in times)), _solver=None)


def cmd_lemma(args) -> int:
    try:
        data = json.loads(Path(args.config).read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{args.config}:{exc.lineno}: {exc.msg}") from None
    seq, law, names = lemma_config_from_dict(data)
    report = lemma_experiment(seq, law, names)
    text = report.to_csv()
    if args.out:
        out = Path(args.out)
        with output_lock(out):
            (out / "lemma.csv").write_text(text, encoding="utf-8")
        print(f"{len(report.rows)} rows written to {out / 'lemma.csv'}")
    else:
        sys.stdout.write(text)
    print(f"note: {report.note}", file=sys.stderr)
    if report.hypothesis_fails:
        print("note: energies do not converge along the sequence (hypothesis fails)", file=sys.stderr)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="quasicrack", description=__doc__)
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    def overrides(p):
        p.add_argument("--config", required=True, help="JSON problem configuration")
        p.add_argument("--dt", type=float, help="uniform time step (replaces the grid)")
        p.add_argument("--T", type=float, help="final time (replaces the grid)")
        p.add_argument("--strategy", choices=("exhaustive", "greedy"))
        p.add_argument("--seed", type=int)

    p = sub.add_parser("run", help="run a quasistatic evolution and write the trace")
    overrides(p)
    p.add_argument("--out", help="output directory (default: output.directory)")
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("audit", help="audit a trace directory")
    p.add_argument("trace_dir", nargs="?", help="trace directory")
    p.add_argument("--out", help="trace directory (alternative to the positional)")
    p.set_defaults(func=cmd_audit)

    p = sub.add_parser("oracle", help="compare exhaustive and greedy at one step")
    overrides(p)
    p.add_argument("--step", type=int, required=True, help="grid index of the step")
    p.set_defaults(func=cmd_oracle)

    p = sub.add_parser("lemma", help="oscillating-sequence experiment")
    p.add_argument("--config", required=True, help="JSON lemma configuration")
    p.add_argument("--out", help="directory for lemma.csv (default: stdout)")
    p.set_defaults(func=cmd_lemma)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (ConfigError, LatticeError, TraceFormatError) as exc:
        _err(str(exc))
        return 2
    except (SolverError, CandidateLimitError, ValueError, RuntimeError, OSError) as exc:
        _err(str(exc))
        return 1


if __name__ == "__main__":
    sys.exit(main())
