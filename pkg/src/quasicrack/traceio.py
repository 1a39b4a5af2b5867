"""Trace files: CSV, per-step crack and displacement snapshots, manifest.

Layout of an output directory::

    trace.csv           one row per grid time
    cracks/step_NNNNN.txt   crack snapshot (see lattice.format_crack_snapshot)
    fields/step_NNNNN.txt   one displacement value per node
    manifest.json       config echo, version, spacing, waivers, tolerances

Every float is written with 17 significant digits so files round-trip
bit-exactly.
"""

from __future__ import annotations

import contextlib
import json
import os
from pathlib import Path

import numpy as np

from . import __version__
from .config import spec_from_dict
from .energy import EnergyBreakdown
from .evolution import TIE_TOL, EvolutionTrace, StepRecord
from .lattice import LatticeError, parse_crack_snapshot, format_crack_snapshot
from .problem import build_problem

TRACE_COLUMNS = (
    "i", "t", "E_bulk", "E_surf", "F_work", "E_total",
    "n_broken", "strategy", "candidates_evaluated", "cum_work",
)


class TraceFormatError(ValueError):
    pass


def g17(v: float) -> str:
    return format(float(v), ".17g")


@contextlib.contextmanager
def output_lock(out: Path):
    out.mkdir(parents=True, exist_ok=True)
    lock = out / ".lock"
    try:
        fd = os.open(lock, os.O_CREAT | os.O_EXCL | os.O_WRONLY)
    except FileExistsError:
        raise RuntimeError(f"output directory {out} is locked by another run ({lock})") from None
    try:
        os.write(fd, str(os.getpid()).encode())
        os.close(fd)
        yield
    finally:
        lock.unlink(missing_ok=True)


def trace_csv(trace: EvolutionTrace) -> str:
    lines = [",".join(TRACE_COLUMNS)]
    for s in trace.steps:
        e = s.energy
        cols = [
            str(s.index), g17(s.t), g17(e.bulk), g17(e.surface), g17(e.force_work), g17(e.total),
            str(len(s.crack)), s.strategy, str(s.candidates_evaluated), g17(s.cum_work),
        ]
        lines.append(",".join(cols))
    return "\n".join(lines) + "\n"


def manifest(problem, trace: EvolutionTrace, validation=None) -> dict:
    spec = problem.spec
    doc = {
        "artifact": "quasicrack",
        "version": __version__,
        "config": spec.to_dict() if spec is not None else None,
        "lattice_spacing": list(problem.lattice.spacing),
        "waivers": {
            "coercivity_waiver": problem.validation.coercivity_waiver,
            "used": list(validation.waivers) if validation is not None else [],
        },
        "tolerances": {
            "tie_tol_relative": TIE_TOL,
            "solver_gradient_tol": problem.solver.tol,
            "stability_tol": problem.audit.stability_tol,
            "balance_factor": problem.audit.balance_factor,
            "jump_threshold": problem.audit.jump_threshold,
        },
        "strategy": {
            "name": problem.strategy.name,
            "exhaustive_limit": problem.strategy.exhaustive_limit,
            "greedy_fallback": problem.strategy.greedy_fallback,
            "tie_rule": problem.strategy.tie_rule,
            "candidates": list(problem.candidates),
        },
        "time_grid": {"steps": len(problem.times), "max_step": problem.grid.max_step},
        "complete": trace.complete,
        "error": trace.error,
    }
    if validation is not None:
        doc["validation"] = [
            {"check": c.check_id, "status": c.status, "margin": c.margin} for c in validation.checks
        ]
    return doc


def write_trace(out, problem, trace: EvolutionTrace, validation=None) -> Path:
    out = Path(out)
    (out / "cracks").mkdir(parents=True, exist_ok=True)
    (out / "fields").mkdir(parents=True, exist_ok=True)
    (out / "trace.csv").write_text(trace_csv(trace), encoding="utf-8")
    for s in trace.steps:
        name = f"step_{s.index:05d}.txt"
        (out / "cracks" / name).write_text(format_crack_snapshot(s.crack, problem.lattice), encoding="utf-8")
        (out / "fields" / name).write_text("".join(g17(v) + "\n" for v in s.u), encoding="utf-8")
    doc = manifest(problem, trace, validation)
    (out / "manifest.json").write_text(json.dumps(doc, indent=2) + "\n", encoding="utf-8")
    return out


def _read(path: Path) -> str:
    try:
        return path.read_text(encoding="utf-8")
    except OSError as exc:
        raise TraceFormatError(f"{path}: {exc.strerror or exc}") from None


def read_trace(out):
    """Load ``(problem, trace)`` back from an output directory."""
    out = Path(out)
    mpath = out / "manifest.json"
    try:
        doc = json.loads(_read(mpath))
    except json.JSONDecodeError as exc:
        raise TraceFormatError(f"{mpath}:{exc.lineno}: {exc.msg}") from None
    try:
        problem = build_problem(spec_from_dict(doc["config"]))
    except (KeyError, TypeError, ValueError) as exc:
        raise TraceFormatError(f"{mpath}: unusable config echo ({exc})") from None

    cpath = out / "trace.csv"
    lines = _read(cpath).splitlines()
    if not lines or tuple(lines[0].split(",")) != TRACE_COLUMNS:
        raise TraceFormatError(f"{cpath}:1: unexpected header")
    trace = EvolutionTrace(complete=bool(doc.get("complete", True)), error=doc.get("error"))
    prev_cum = 0.0
    for lineno, line in enumerate(lines[1:], start=2):
        parts = line.split(",")
        if len(parts) != len(TRACE_COLUMNS):
            raise TraceFormatError(f"{cpath}:{lineno}: expected {len(TRACE_COLUMNS)} columns")
        try:
            i = int(parts[0])
            t, eb, es, fw, et = (float(v) for v in parts[1:6])
            n_broken = int(parts[6])
            strategy = parts[7]
            evaluated = int(parts[8])
            cum = float(parts[9])
        except ValueError as exc:
            raise TraceFormatError(f"{cpath}:{lineno}: {exc}") from None
        name = f"step_{i:05d}.txt"
        crack_path = out / "cracks" / name
        try:
            crack = parse_crack_snapshot(_read(crack_path), problem.lattice, str(crack_path))
        except LatticeError as exc:
            raise TraceFormatError(str(exc)) from None
        if len(crack) != n_broken:
            raise TraceFormatError(f"{cpath}:{lineno}: n_broken={n_broken} but {crack_path} lists {len(crack)}")
        field_path = out / "fields" / name
        vals = []
        for k, row in enumerate(_read(field_path).splitlines(), start=1):
            try:
                vals.append(float(row))
            except ValueError:
                raise TraceFormatError(f"{field_path}:{k}: not a number: {row!r}") from None
        if len(vals) != problem.lattice.n_nodes:
            raise TraceFormatError(f"{field_path}: {len(vals)} values for {problem.lattice.n_nodes} nodes")
        u = np.array(vals)
        trace.steps.append(
            StepRecord(
                i, t, crack, u, EnergyBreakdown(eb, es, fw, et), strategy,
                strategy != "exhaustive" and strategy != "initial", evaluated,
                cum - prev_cum, cum, None,
            )
        )
        prev_cum = cum
    if not trace.steps:
        raise TraceFormatError(f"{cpath}: no steps")
    return problem, trace
