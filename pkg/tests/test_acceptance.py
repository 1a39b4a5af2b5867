"""Acceptance criteria 1-8.

Each test records one or more parts through ``conftest.record``; the
terminal summary prints one pass/fail line per criterion.
"""

import json
import math
import time
from dataclasses import replace
from fractions import Fraction

import numpy as np
import pytest

from conftest import CONFIGS, record
from quasicrack.audit import (
    check_global_stability,
    check_irreversibility,
    detect_energy_jumps,
    energy_balance_report,
)
from quasicrack.cli import main
from quasicrack.config import GeometrySection, LoadSection, StrategySection, ToughnessSection, canonical_spec
from quasicrack.energy import dF_dt, force_work, pair_dF, pair_dW, strain_energy
from quasicrack.equilibrium import EquilibriumCache
from quasicrack.evolution import incremental_step, run_evolution
from quasicrack.laws import BulkLaw, LoadLaw
from quasicrack.lattice import build_lattice
from quasicrack.lemma import lemma_config_from_dict, lemma_experiment
from quasicrack.problem import build_problem

import oracles

KAPPAS = (0.5, 1.0, 2.0)
DTS = (0.02, 0.01, 0.005)
_TRACES: dict = {}


def canonical_run(kappa=1.0, dt=0.01, T=2.5):
    key = (kappa, dt, T)
    if key not in _TRACES:
        problem = build_problem(canonical_spec(kappa, dt, T))
        start = time.perf_counter()
        trace = run_evolution(problem)
        _TRACES[key] = (problem, trace, time.perf_counter() - start)
    return _TRACES[key]


def crack_step(trace):
    return next(i for i, s in enumerate(trace.steps) if len(s.crack))


# -- 1 ---------------------------------------------------------------------------


@pytest.mark.parametrize("kappa", KAPPAS)
def test_criterion_1_griffith_initiation(kappa):
    problem, trace, elapsed = canonical_run(kappa)
    t_star = math.sqrt(2 * kappa * 1.0 / 1.0)
    tc = trace.first_crack_time()
    window = t_star < tc <= t_star + 0.01
    exact = oracles.canonical_first_crack(Fraction(kappa), Fraction(1, 100), Fraction(5, 2))
    # brute-force enumeration of every crack subset at every step
    mismatches = 0
    for prev, cur in zip(trace.steps, trace.steps[1:]):
        e, s, _ = oracles.brute_force_step(problem, cur.t, prev.crack)
        if s != cur.crack.bonds or abs(e - cur.energy.total) > 1e-12:
            mismatches += 1
    ok = window and abs(tc - float(exact)) <= 1e-12 and mismatches == 0 and elapsed < 1.0
    record(1, f"kappa={kappa}", ok,
           f"t*={t_star:.6f} t_crack={tc!r} oracle={float(exact)!r} step mismatches={mismatches} runtime={elapsed:.2f}s")
    assert window
    assert abs(tc - float(exact)) <= 1e-12
    assert mismatches == 0
    assert elapsed < 1.0


# -- 2 ---------------------------------------------------------------------------


def _grid_problem(cells, corridor, seed, load):
    spec = canonical_spec()
    spec.geometry = GeometrySection(2, [1.0, 1.0], list(cells), ["left", "right"])
    spec.boundary = replace(spec.boundary, offset=-0.5, gradient=[1.0, 0.0])
    spec.toughness = ToughnessSection(base=0.15, spatial="random", seed=seed, low=0.5, high=1.5, resolution=4)
    spec.load = LoadSection(kind=load, stiffness=0.5, rate=0.2)
    spec.strategy = StrategySection(corridor=corridor)
    return build_problem(spec)


CASES_2D = [
    ((3, 3), [0.3, 0.7, 0.0, 1.0], 1, "none"),
    ((3, 3), [0.3, 0.7, 0.0, 1.0], 2, "tracking"),
    ((4, 3), [0.3, 0.55, 0.0, 1.0], 3, "none"),
    ((3, 4), [0.3, 0.7, 0.2, 1.0], 4, "tracking"),
    ((4, 4), [0.4, 0.6, 0.0, 1.0], 5, "none"),
]


def test_criterion_2_exhaustive_oracle_equivalence():
    start = time.perf_counter()
    levels = (0.4, 0.8, 1.2, 1.6, 2.0)
    compared = worst = 0.0
    mismatches = []
    for cells, corridor, seed, load in CASES_2D:
        problem = _grid_problem(cells, corridor, seed, load)
        assert len(problem.candidates) <= 12
        prev = problem.lattice.empty_crack()
        for t in levels:
            res = incremental_step(t, prev, problem)
            e, s, _ = oracles.brute_force_step(problem, t, prev)
            compared += 1
            worst = max(worst, abs(res.energy.total - e))
            if res.crack.bonds != s or abs(res.energy.total - e) > 1e-12:
                mismatches.append((cells, seed, t))
            prev = res.crack
    elapsed = time.perf_counter() - start
    ok = not mismatches and elapsed < 60
    record(2, "2D exhaustive vs enumeration", ok,
           f"{int(compared)} steps, worst |dE|={worst:.1e}, mismatches={mismatches}, runtime={elapsed:.1f}s")
    assert not mismatches
    assert elapsed < 60


# -- 3 ---------------------------------------------------------------------------


def _stability_sweep(problem, trace):
    cache = EquilibriumCache()
    worst = -np.inf
    for s in trace.steps:
        rep = check_global_stability(s.t, s.u, s.crack, problem, "exhaustive", cache)
        assert rep.policy == "exhaustive"
        worst = max(worst, rep.worst_margin)
        cache.clear()
    return worst


@pytest.mark.parametrize("kappa", KAPPAS)
def test_criterion_3_canonical_runs(kappa):
    problem, trace, _ = canonical_run(kappa)
    irreversible = check_irreversibility(trace)
    worst = _stability_sweep(problem, trace)
    ok = irreversible and worst <= 1e-9
    record(3, f"canonical kappa={kappa}", ok, f"irreversible={irreversible} worst margin={worst:.2e}")
    assert irreversible and worst <= 1e-9


@pytest.mark.parametrize("seed", [1, 2, 3])
def test_criterion_3_random_toughness_runs(seed):
    spec = canonical_spec(dt=0.1, T=2.0)
    spec.geometry = GeometrySection(2, [1.0, 1.0], [3, 3], ["left", "right"])
    spec.boundary = replace(spec.boundary, gradient=[1.0, 0.0])
    spec.toughness = ToughnessSection(base=0.3, spatial="random", seed=seed, resolution=3)
    spec.strategy = StrategySection(corridor=[0.3, 0.7, 0.0, 1.0])
    problem = build_problem(spec)
    trace = run_evolution(problem)
    irreversible = check_irreversibility(trace)
    worst = _stability_sweep(problem, trace)
    grew = trace.broken_counts()[-1] > 0
    ok = irreversible and worst <= 1e-9
    record(3, f"random toughness seed={seed}", ok,
           f"irreversible={irreversible} worst margin={worst:.2e} cracked={grew}")
    assert irreversible and worst <= 1e-9


# -- 4 ---------------------------------------------------------------------------


def _whole_run_residuals():
    out = {}
    for dt in DTS:
        problem, trace, _ = canonical_run(1.0, dt, 2.0)
        out[dt] = energy_balance_report(trace, problem).whole_run.residual
    return out


def test_criterion_4_residual_bound():
    res = _whole_run_residuals()
    ok = all(r <= 10 * dt for dt, r in res.items())
    # exact rational oracle for the same runs
    exact = {}
    for dt in DTS:
        lhs, rhs, _ = oracles.canonical_balance(Fraction(1), Fraction(dt).limit_denominator(1000), Fraction(2))
        exact[dt] = float(abs(lhs - rhs))
    agree = all(abs(res[dt] - exact[dt]) <= 1e-12 for dt in DTS)
    record(4, "residual <= 10 dt", ok and agree,
           " ".join(f"dt={dt}: {res[dt]:.6g} (oracle {exact[dt]:.6g})" for dt in DTS))
    assert ok and agree


def test_criterion_4_first_order_scaling():
    res = _whole_run_residuals()
    ratios = [res[b] / res[a] for a, b in zip(DTS, DTS[1:])]
    ok = all(0.3 <= r <= 0.7 for r in ratios)
    record(4, "halving ratio in [0.3, 0.7]", ok, "ratios " + ", ".join(f"{r:.3f}" for r in ratios))
    assert ok, f"residual ratios {ratios} outside [0.3, 0.7]"


def test_criterion_4_precrack_window():
    problem, trace, _ = canonical_run(1.0, 0.01, 2.0)
    rep = energy_balance_report(trace, problem, windows=[(0.0, 1.4)])
    (w,) = rep.windows
    oracle_rhs = oracles.left_sum_of_t(Fraction(7, 5), Fraction(1, 100))
    oracle_gap = float(Fraction(49, 50) - oracle_rhs)
    ok = abs(w.residual - oracle_gap) <= 1e-12 and abs(w.rhs - float(oracle_rhs)) <= 1e-12
    record(4, "pre-crack window", ok, f"lhs={w.lhs!r} rhs={w.rhs!r} residual={w.residual!r} oracle={oracle_gap!r}")
    assert ok


# -- 5 ---------------------------------------------------------------------------


def _jumps():
    out = {}
    for dt in DTS:
        problem, trace, _ = canonical_run(1.0, dt, 2.0)
        (j,) = detect_energy_jumps(trace, 0.1, problem).jumps
        out[dt] = (j, trace.steps[j.index].t)
    return out


def test_criterion_5_jump_sizes():
    parts = []
    for dt, (j, tc) in _jumps().items():
        dk = j.d_surface == 1.0
        dw = abs(j.d_bulk + 0.5 * tc**2) <= 1e-12
        de = abs(j.d_total) <= dt * tc * 1.5
        parts.append(dk and dw and de)
        record(5, f"dt={dt}", dk and dw and de,
               f"t_crack={tc!r} dK={j.d_surface!r} dW={j.d_bulk!r} dE={j.d_total!r} bound={dt * tc * 1.5:.4g}")
    assert all(parts)


def test_criterion_5_continuity_rate():
    jumps = _jumps()
    sizes = [abs(jumps[dt][0].d_total) for dt in DTS]
    ratios = [b / a for a, b in zip(sizes, sizes[1:])]
    ok = all(0.3 <= r <= 0.7 for r in ratios)
    record(5, "|dE| decreasing linearly in dt", ok,
           "sizes " + ", ".join(f"{s:.6g}" for s in sizes) + "; ratios " + ", ".join(f"{r:.3f}" for r in ratios))
    assert ok, f"|dE_total| at the crack step {sizes} does not halve with dt"


# -- 6 ---------------------------------------------------------------------------


def test_criterion_6_lemma_lab():
    start = time.perf_counter()
    seq, law, names = lemma_config_from_dict(json.loads((CONFIGS / "lemma_flatwell.json").read_text()))
    flat = lemma_experiment(seq, law, names)
    seq_c, law_c, names_c = lemma_config_from_dict(json.loads((CONFIGS / "lemma_convex.json").read_text()))
    convex = lemma_experiment(seq_c, law_c, names_c)
    elapsed = time.perf_counter() - start
    flat_ok = all(
        r.energy_gap == 0.0 and r.pairing_gap_max <= 1e-12 and r.meas_dev[0.5] == 1.0 for r in flat.rows
    )
    meas = convex.rows[-1].meas_dev[0.1]
    ok = flat_ok and meas < 0.01 and elapsed < 10
    record(6, "flat-well and strictly convex", ok,
           f"flat-well ok={flat_ok}; convex meas_dev_0.1 at k={convex.rows[-1].k}: {meas:.4g}; runtime={elapsed:.2f}s")
    assert flat_ok and meas < 0.01 and elapsed < 10


# -- 7 ---------------------------------------------------------------------------


def test_criterion_7_derivative_consistency():
    rng = np.random.default_rng(2024)
    lat = build_lattice(GeometrySection(2, [1.0, 1.0], [4, 4], ["left", "right"]))
    eps, rtol = 1e-5, 1e-5
    worst = {}

    def rel(a, b):
        return abs(a - b) / (1.0 + abs(a))

    for law in (BulkLaw("quadratic", 1.2), BulkLaw("p-power", 0.8, 3.0), BulkLaw("flat-well", 1.5, 2.0)):
        w = 0.0
        for _ in range(100):
            phi = rng.normal(scale=2.0, size=lat.n_interior)
            psi = rng.normal(size=lat.n_interior)
            fd = (strain_energy(lat, law, phi + eps * psi) - strain_energy(lat, law, phi - eps * psi)) / (2 * eps)
            w = max(w, rel(pair_dW(phi, psi, law, lat), fd))
            xi = float(rng.uniform(-3, 3))
            mu = np.array([law.stiffness])
            s = float(law.strain_stress(np.array([xi]), mu)[0])
            fd_s = float((law.strain_density(np.array([xi + eps]), mu) - law.strain_density(np.array([xi - eps]), mu))[0]) / (2 * eps)
            w = max(w, rel(s, fd_s))
        worst[f"bulk {law.family}"] = w
    for load in (LoadLaw("none"), LoadLaw("tracking", 1.3, 0.7), LoadLaw("dead", force=-0.4)):
        w = 0.0
        for _ in range(100):
            t = float(rng.uniform(0, 2))
            u = rng.normal(size=lat.n_nodes)
            v = rng.normal(size=lat.n_nodes)
            fd_u = (force_work(load, t, u + eps * v, lat) - force_work(load, t, u - eps * v, lat)) / (2 * eps)
            fd_t = (force_work(load, t + eps, u, lat) - force_work(load, t - eps, u, lat)) / (2 * eps)
            w = max(w, rel(pair_dF(t, u, v, load, lat), fd_u), rel(dF_dt(t, u, load, lat), fd_t))
        worst[f"load {load.kind}"] = w
    ok = all(v <= rtol for v in worst.values())
    record(7, "100 random states per family", ok, ", ".join(f"{k}: {v:.1e}" for k, v in worst.items()))
    assert ok


# -- 8 ---------------------------------------------------------------------------


@pytest.mark.parametrize("name", ["canonical_1d.json", "shear_2d.json"])
def test_criterion_8_determinism(tmp_path, name):
    cfg = str(CONFIGS / name)
    assert main(["run", "--config", cfg, "--out", str(tmp_path / "a")]) == 0
    assert main(["run", "--config", cfg, "--out", str(tmp_path / "b")]) == 0
    a = (tmp_path / "a" / "trace.csv").read_bytes()
    b = (tmp_path / "b" / "trace.csv").read_bytes()
    same_snapshots = all(
        (tmp_path / "a" / "cracks" / p.name).read_bytes() == p.read_bytes()
        for p in (tmp_path / "b" / "cracks").iterdir()
    )
    ok = a == b and same_snapshots
    record(8, name, ok, f"{len(a)} bytes, identical={a == b}, snapshots identical={same_snapshots}")
    assert ok
