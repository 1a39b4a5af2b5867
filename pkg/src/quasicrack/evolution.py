"""Time-discrete quasistatic crack growth.

At each grid time the driver solves the incremental problem

    minimise  E(t_i)(u, G)  over admissible (u, G) with  G >= G_{i-1}

over supersets of the previous crack drawn from a candidate bond set,
then records the state.  Between grid times the evolution is piecewise
constant and left-closed.

Selection among near-equal minima is deterministic: every candidate
within ``tie_tol`` of the minimum energy competes on (number of broken
bonds, sorted ids), smallest first.  At an exact tie the evolution
therefore keeps the smaller crack.
"""

from __future__ import annotations

import bisect
from dataclasses import dataclass, field
from typing import NamedTuple, Optional

import numpy as np

from .energy import EnergyBreakdown, step_work, surface_energy, total_energy
from .equilibrium import SolverError
from .lattice import CrackSet, crack_contains
from .problem import TimeGrid

TIE_TOL = 1e-12

__all__ = [
    "TimeGrid",
    "StepRecord",
    "EvolutionTrace",
    "StepResult",
    "incremental_step",
    "run_evolution",
    "interpolate",
]


class CandidateLimitError(ValueError):
    pass


class InitialStateError(ValueError):
    pass


class EvolutionAborted(RuntimeError):
    def __init__(self, message: str, trace: "EvolutionTrace"):
        super().__init__(message)
        self.trace = trace


def tie_tolerance(energy: float) -> float:
    return TIE_TOL * (1.0 + abs(energy))


def select_minimum(evaluated: dict) -> tuple:
    """Pick from ``{frozenset ids: energy}`` by the tie rule."""
    e_min = min(evaluated.values())
    tol = tie_tolerance(e_min)
    near = [s for s, e in evaluated.items() if e <= e_min + tol]
    return min(near, key=lambda s: (len(s), tuple(sorted(s))))


@dataclass
class StepRecord:
    index: int
    t: float
    crack: CrackSet
    u: np.ndarray
    energy: EnergyBreakdown
    strategy: str = "initial"
    heuristic: bool = False
    candidates_evaluated: int = 0
    work: float = 0.0
    cum_work: float = 0.0
    baseline: Optional[EnergyBreakdown] = None


@dataclass
class EvolutionTrace:
    steps: list = field(default_factory=list)
    complete: bool = True
    error: Optional[str] = None

    def __len__(self) -> int:
        return len(self.steps)

    def __getitem__(self, i) -> StepRecord:
        return self.steps[i]

    @property
    def times(self) -> np.ndarray:
        return np.array([s.t for s in self.steps])

    @property
    def max_step(self) -> float:
        t = self.times
        return float(np.max(np.diff(t))) if len(t) > 1 else 0.0

    def broken_counts(self) -> list:
        return [len(s.crack) for s in self.steps]

    def first_crack_time(self) -> Optional[float]:
        base = len(self.steps[0].crack)
        for s in self.steps:
            if len(s.crack) > base:
                return s.t
        return None


class StepResult(NamedTuple):
    u: np.ndarray
    crack: CrackSet
    energy: EnergyBreakdown
    baseline: EnergyBreakdown
    strategy: str
    heuristic: bool
    candidates_evaluated: int


class _Evaluator:
    """Total energy of ``prev + extra`` at fixed time, counted and memoised."""

    def __init__(self, t, prev: CrackSet, problem, warm_start):
        self.t, self.prev, self.problem, self.warm = t, prev, problem, warm_start
        self.count = 0
        self.energies: dict = {}

    def crack(self, extra) -> CrackSet:
        return self.prev.with_bonds(extra)

    def surface(self, extra) -> float:
        return surface_energy(self.problem.lattice, self.problem.toughness, self.crack(extra))

    def elastic(self, extra) -> float:
        self.count += 1
        u, rep = self.problem.cache.solve(self.t, self.crack(extra), self.problem, self.warm)
        return rep.energy

    def total(self, extra) -> float:
        key = frozenset(extra)
        if key not in self.energies:
            self.energies[key] = self.elastic(key) + self.surface(key)
        return self.energies[key]


def _exhaustive(ev: _Evaluator, free: list) -> frozenset:
    """Depth-first enumeration of subsets of ``free`` with bound pruning.

    Lower bound for every subset containing ``S``: the elastic energy with
    all of ``free`` broken (elastic energy only decreases as the crack
    grows) plus the surface energy of ``S`` (which only increases).
    """
    floor = ev.elastic(free)
    incumbent = ev.total(())
    k_prev = ev.surface(())
    # per-bond surface increments; surface energy is additive over bonds
    inc = {b: ev.surface((b,)) - k_prev for b in free}

    def visit(chosen: tuple, surf: float, start: int):
        nonlocal incumbent
        for j in range(start, len(free)):
            b = free[j]
            s_new = surf + inc[b]
            if floor + k_prev + s_new > incumbent + 2.0 * tie_tolerance(incumbent):
                continue
            child = chosen + (b,)
            e = ev.total(child)
            incumbent = min(incumbent, e)
            visit(child, s_new, j + 1)

    visit((), 0.0, 0)
    return select_minimum(ev.energies)


def _greedy(ev: _Evaluator, free: list) -> frozenset:
    current: tuple = ()
    e_cur = ev.total(current)
    remaining = list(free)
    while remaining:
        trials = [(ev.total(current + (b,)), b) for b in remaining]
        e_best = min(e for e, _ in trials)
        b_best = min(b for e, b in trials if e <= e_best + tie_tolerance(e_best))
        if not e_best < e_cur - tie_tolerance(e_cur):
            break
        current = current + (b_best,)
        e_cur = ev.total(current)
        remaining.remove(b_best)
    return frozenset(current)


def incremental_step(
    t: float,
    prev: CrackSet,
    problem,
    strategy: Optional[str] = None,
    warm_start=None,
) -> StepResult:
    """Solve the incremental minimum problem at time ``t`` above ``prev``."""
    cfg = problem.strategy
    name = strategy or cfg.name
    free = [b for b in problem.candidates if b not in prev]
    ev = _Evaluator(t, prev, problem, warm_start)
    label, heuristic = name, False
    if name == "exhaustive":
        count = 2 ** len(free)
        if count > cfg.exhaustive_limit:
            if not cfg.greedy_fallback:
                raise CandidateLimitError(
                    f"exhaustive search needs {count} crack sets (limit {cfg.exhaustive_limit})"
                )
            label, heuristic = "greedy-fallback", True
            extra = _greedy(ev, free)
        else:
            extra = _exhaustive(ev, free)
    elif name == "greedy":
        heuristic = True
        extra = _greedy(ev, free)
    else:
        raise ValueError(f"unknown strategy {name!r}")

    crack = ev.crack(extra)
    u, _ = problem.cache.solve(t, crack, problem, warm_start)
    u0, _ = problem.cache.solve(t, prev, problem, warm_start)
    return StepResult(
        u=u,
        crack=crack,
        energy=total_energy(t, u, crack, problem),
        baseline=total_energy(t, u0, prev, problem),
        strategy=label,
        heuristic=heuristic,
        candidates_evaluated=ev.count,
    )


def run_evolution(problem, validate: bool = True, initial_u=None) -> EvolutionTrace:
    """Discrete quasistatic evolution over the problem's time grid.

    Refuses to start when validation fails or when the initial state is not
    globally stable at ``t = 0``.  A failing step raises
    :class:`EvolutionAborted` carrying the partial trace.
    """
    from .audit import check_global_stability
    from .validation import validate_problem

    if validate:
        report = validate_problem(problem)
        if not report.ok:
            names = ", ".join(c.check_id for c in report.failures)
            raise ValueError(f"problem validation failed: {names}")

    times = problem.times
    crack = problem.initial_crack
    t0 = float(times[0])
    if initial_u is None:
        u, _ = problem.cache.solve(t0, crack, problem)
    else:
        u = np.asarray(initial_u, dtype=float)
    energy = total_energy(t0, u, crack, problem)
    stab = check_global_stability(t0, u, crack, problem)
    if not stab.passed:
        raise InitialStateError(
            f"initial state is not globally stable (margin {stab.worst_margin:.3e})"
        )
    trace = EvolutionTrace()
    trace.steps.append(StepRecord(0, t0, crack, u, energy, "initial", False, 0, 0.0, 0.0, energy))

    for i in range(1, len(times)):
        t = float(times[i])
        prev = trace.steps[-1]
        try:
            res = incremental_step(t, prev.crack, problem, warm_start=prev.u)
        except (SolverError, CandidateLimitError) as exc:
            trace.complete = False
            trace.error = f"step {i} (t={t!r}): {exc}"
            raise EvolutionAborted(trace.error, trace) from exc
        work = step_work(problem, prev.t, prev.u, prev.crack, t, res.u)
        trace.steps.append(
            StepRecord(
                i, t, res.crack, res.u, res.energy, res.strategy, res.heuristic,
                res.candidates_evaluated, work, prev.cum_work + work, res.baseline,
            )
        )
        problem.cache.clear()  # solves are keyed by time; old times are never revisited
    return trace


def interpolate(trace: EvolutionTrace, t: float) -> StepRecord:
    """State of the last grid time ``<= t`` (piecewise constant, left-closed)."""
    times = [s.t for s in trace.steps]
    if not times or t < times[0] or t > times[-1]:
        raise ValueError(f"t={t} outside the trace interval [{times[0]}, {times[-1]}]")
    return trace.steps[bisect.bisect_right(times, t) - 1]


def is_nested(trace: EvolutionTrace) -> bool:
    return all(
        crack_contains(a.crack, b.crack) for a, b in zip(trace.steps, trace.steps[1:])
    )
