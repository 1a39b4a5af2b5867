"""Checks of global stability, irreversibility and energy balance on a trace."""

from __future__ import annotations

import itertools
import json
from dataclasses import asdict, dataclass, field
from typing import Optional

import numpy as np

from .energy import EnergyBreakdown, power_of_loading, force_work, surface_energy, total_energy
from .equilibrium import EquilibriumCache
from .lattice import crack_contains


# ---------------------------------------------------------------------------
# (a) global stability
# ---------------------------------------------------------------------------


@dataclass
class StabilityReport:
    t: float
    passed: bool
    state_energy: float
    worst_margin: float
    worst_competitor: tuple
    best_strict_energy: Optional[float]
    best_strict_competitor: Optional[tuple]
    competitors_evaluated: int
    policy: str
    tolerance: float


def _competitors(crack, problem, policy: str, rng):
    free = [b for b in problem.candidates if b not in crack]
    if policy == "exhaustive" and 2 ** len(free) <= problem.strategy.exhaustive_limit:
        for r in range(len(free) + 1):
            for combo in itertools.combinations(free, r):
                yield combo
        return
    yield ()
    everything = [b for b in range(problem.lattice.n_bonds) if b not in crack]
    for b in everything:
        yield (b,)
    for _ in range(problem.audit.random_competitors):
        mask = rng.random(len(free)) < rng.uniform(0.05, 0.5)
        yield tuple(b for b, m in zip(free, mask) if m)


def check_global_stability(
    t: float,
    u,
    crack,
    problem,
    policy: Optional[str] = None,
    cache: Optional[EquilibriumCache] = None,
    rng=None,
) -> StabilityReport:
    """Compare the state against minimal-energy pairs on larger cracks.

    ``policy`` "exhaustive" enumerates every superset inside the candidate
    set when the count is within the exhaustive limit; otherwise (or with
    "sampled") all single-bond extensions plus seeded random supersets are
    tried.  The margin of a competitor is ``E(state) - E(competitor)``.
    """
    policy = policy or problem.audit.competitor_policy
    cache = EquilibriumCache() if cache is None else cache
    rng = np.random.default_rng(problem.seed) if rng is None else rng
    tol = problem.audit.stability_tol
    state = total_energy(t, u, crack, problem).total
    worst, worst_set = -np.inf, ()
    best_strict, best_strict_set = None, None
    seen = set()
    effective = policy
    free_count = len([b for b in problem.candidates if b not in crack])
    if policy == "exhaustive" and 2**free_count > problem.strategy.exhaustive_limit:
        effective = "sampled"
    for extra in _competitors(crack, problem, effective, rng):
        key = frozenset(extra)
        if key in seen:
            continue
        seen.add(key)
        comp = crack.with_bonds(extra)
        _, rep = cache.solve(t, comp, problem, u)
        e = rep.energy + surface_energy(problem.lattice, problem.toughness, comp)
        margin = state - e
        if margin > worst:
            worst, worst_set = margin, comp.ids
        if extra and (best_strict is None or e < best_strict):
            best_strict, best_strict_set = e, comp.ids
    return StabilityReport(
        t=float(t),
        passed=bool(worst <= tol),
        state_energy=state,
        worst_margin=float(worst),
        worst_competitor=worst_set,
        best_strict_energy=best_strict,
        best_strict_competitor=best_strict_set,
        competitors_evaluated=len(seen),
        policy=effective,
        tolerance=tol,
    )


# ---------------------------------------------------------------------------
# (b) irreversibility
# ---------------------------------------------------------------------------


def check_irreversibility(trace) -> bool:
    return all(crack_contains(a.crack, b.crack) for a, b in zip(trace.steps, trace.steps[1:]))


# ---------------------------------------------------------------------------
# (c) energy balance
# ---------------------------------------------------------------------------


@dataclass
class WindowBalance:
    i1: int
    i2: int
    t1: float
    t2: float
    lhs: float
    rhs: float

    @property
    def margin(self) -> float:
        return self.lhs - self.rhs

    @property
    def residual(self) -> float:
        return abs(self.lhs - self.rhs)

    @property
    def normalized(self) -> float:
        return self.residual / (1.0 + abs(self.rhs))


@dataclass
class BalanceReport:
    whole_run: WindowBalance
    steps: list
    windows: list
    max_step: float
    energy_scale: float
    tolerance: float

    @property
    def passed(self) -> bool:
        return self.whole_run.residual <= self.tolerance

    @property
    def step_margins(self) -> np.ndarray:
        return np.array([w.margin for w in self.steps])


def _powers(trace, problem) -> np.ndarray:
    return np.array([power_of_loading(s.t, s.u, s.crack, problem) for s in trace.steps])


def _window(trace, problem, powers, i1, i2) -> WindowBalance:
    a, b = trace.steps[i1], trace.steps[i2]
    lat = problem.lattice
    lhs = (b.energy.bulk - a.energy.bulk) + surface_energy(
        lat, problem.toughness, b.crack.difference(a.crack)
    )
    times = np.array([s.t for s in trace.steps[i1 : i2 + 1]])
    riemann = float(np.sum(powers[i1:i2] * np.diff(times))) if i2 > i1 else 0.0
    rhs = riemann
    if problem.load.kind != "none":
        rhs += force_work(problem.load, b.t, b.u, lat) - force_work(problem.load, a.t, a.u, lat)
    return WindowBalance(i1, i2, a.t, b.t, lhs, rhs)


def energy_balance_report(trace, problem, windows=None) -> BalanceReport:
    """Stored-energy increment plus dissipation against external work.

    Time integrals are left-endpoint Riemann sums on the trace grid, the
    rule consistent with the piecewise-constant interpolation.  Windows are
    given as ``(t1, t2)`` pairs and snapped to grid indices.
    """
    powers = _powers(trace, problem)
    n = len(trace.steps)
    whole = _window(trace, problem, powers, 0, n - 1)
    steps = [_window(trace, problem, powers, i - 1, i) for i in range(1, n)]
    times = [s.t for s in trace.steps]
    extra = []
    for t1, t2 in windows or ():
        i1 = int(np.argmin(np.abs(np.array(times) - t1)))
        i2 = int(np.argmin(np.abs(np.array(times) - t2)))
        extra.append(_window(trace, problem, powers, i1, i2))
    scale = max(1.0, max(abs(s.energy.total) for s in trace.steps))
    dt = trace.max_step
    return BalanceReport(
        whole_run=whole,
        steps=steps,
        windows=extra,
        max_step=dt,
        energy_scale=scale,
        tolerance=problem.audit.balance_factor * dt * scale,
    )


# ---------------------------------------------------------------------------
# jumps of W and K, continuity of E
# ---------------------------------------------------------------------------


@dataclass
class Jump:
    index: int
    t: float
    d_bulk: float
    d_surface: float
    d_total: float


@dataclass
class JumpReport:
    jumps: list
    max_consecutive_total_jump: float
    max_consecutive_index: int
    scale: float
    threshold: float


def _baseline(trace, i, problem) -> EnergyBreakdown:
    rec = trace.steps[i]
    if rec.baseline is not None:
        return rec.baseline
    prev = trace.steps[i - 1]
    u, _ = problem.cache.solve(rec.t, prev.crack, problem, prev.u)
    return total_energy(rec.t, u, prev.crack, problem)


def detect_energy_jumps(trace, threshold: float, problem=None) -> JumpReport:
    """Steps where bulk or surface energy jump at a fixed time.

    The jump at step ``i`` compares the recorded state with the equilibrium
    on the previous crack at the same time ``t_i``, which isolates crack
    growth from smooth loading.  A jump is reported when ``|dW|`` or
    ``|dK|`` exceeds ``threshold`` times the largest ``|E|`` on the trace.
    """
    scale = max(abs(s.energy.total) for s in trace.steps) or 1.0
    jumps = []
    for i in range(1, len(trace.steps)):
        rec = trace.steps[i]
        if rec.crack.bonds == trace.steps[i - 1].crack.bonds:
            continue
        if rec.baseline is None and problem is None:
            raise ValueError("trace lacks baseline energies; pass the problem to recompute them")
        base = _baseline(trace, i, problem)
        d_w = rec.energy.bulk - base.bulk
        d_k = rec.energy.surface - base.surface
        if abs(d_w) > threshold * scale or abs(d_k) > threshold * scale:
            jumps.append(Jump(i, rec.t, d_w, d_k, rec.energy.total - base.total))
    totals = np.array([s.energy.total for s in trace.steps])
    diffs = np.abs(np.diff(totals)) if len(totals) > 1 else np.zeros(1)
    k = int(np.argmax(diffs))
    return JumpReport(jumps, float(diffs[k]), k + 1, float(scale), float(threshold))


# ---------------------------------------------------------------------------
# combined audit
# ---------------------------------------------------------------------------


@dataclass
class AuditRecord:
    check: str
    status: str
    value: Optional[float] = None
    tolerance: Optional[float] = None
    detail: str = ""


@dataclass
class AuditReport:
    records: list = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(r.status != "FAIL" for r in self.records)

    def to_json(self) -> str:
        doc = {"passed": self.passed, "records": [asdict(r) for r in self.records]}
        return json.dumps(doc, indent=2) + "\n"

    def summary(self) -> str:
        lines = [f"{r.status:4s}  {r.check}  {r.detail}".rstrip() for r in self.records]
        fails = sum(r.status == "FAIL" for r in self.records)
        lines.append(f"{len(self.records)} checks, {fails} failed")
        return "\n".join(lines)


def audit_trace(trace, problem, policy: Optional[str] = None) -> AuditReport:
    report = AuditReport()
    add = report.records.append

    for s in trace.steps:
        try:
            total_energy(s.t, s.u, s.crack, problem)
            add(AuditRecord(f"admissible[{s.index}]", "PASS"))
        except ValueError as exc:
            add(AuditRecord(f"admissible[{s.index}]", "FAIL", detail=str(exc)))

    ok = check_irreversibility(trace)
    add(AuditRecord("irreversibility", "PASS" if ok else "FAIL"))

    cache = EquilibriumCache()
    rng = np.random.default_rng(problem.seed)
    worst = -np.inf
    for s in trace.steps:
        st = check_global_stability(s.t, s.u, s.crack, problem, policy, cache, rng)
        worst = max(worst, st.worst_margin)
        add(AuditRecord(
            f"stability[{s.index}]", "PASS" if st.passed else "FAIL", st.worst_margin, st.tolerance,
            f"t={s.t!r} policy={st.policy} competitors={st.competitors_evaluated}",
        ))
        cache.clear()

    bal = energy_balance_report(trace, problem)
    w = bal.whole_run
    add(AuditRecord(
        "energy_balance", "PASS" if bal.passed else "FAIL", w.residual, bal.tolerance,
        f"lhs={w.lhs!r} rhs={w.rhs!r} normalized={w.normalized:.3e}",
    ))
    cum = np.array([s.cum_work for s in trace.steps])
    recomputed = np.concatenate([[0.0], np.cumsum([b.rhs for b in bal.steps])])
    gap = float(np.max(np.abs(cum - recomputed))) if len(cum) else 0.0
    tol = 1e-9 * bal.energy_scale
    add(AuditRecord("cum_work_consistency", "PASS" if gap <= tol else "FAIL", gap, tol))

    jr = detect_energy_jumps(trace, problem.audit.jump_threshold, problem)
    add(AuditRecord(
        "energy_jumps", "INFO", float(len(jr.jumps)), None,
        f"jumps at steps {[j.index for j in jr.jumps]}; "
        f"max |dE_total| between steps {jr.max_consecutive_total_jump:.3e}",
    ))
    return report
