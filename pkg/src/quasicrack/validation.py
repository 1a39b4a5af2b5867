"""Sampling checks of the material and loading laws of a problem.

Each check reports its worst sample and a margin (positive means the
inequality holds with room to spare).  Coercivity of the loads is the
only waivable check: with every fragment held by an intact anchor and
``F = 0`` the incremental problems are well posed regardless.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any

import numpy as np

from .lattice import DIRICHLET


@dataclass
class CheckResult:
    check_id: str
    passed: bool
    worst: Any = None
    margin: float = 0.0
    message: str = ""
    waivable: bool = False
    waived: bool = False

    @property
    def status(self) -> str:
        if self.passed:
            return "PASS"
        return "WAIVED" if self.waived else "FAIL"


@dataclass
class ValidationReport:
    checks: list = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return all(c.passed or c.waived for c in self.checks)

    @property
    def failures(self) -> list:
        return [c for c in self.checks if not (c.passed or c.waived)]

    @property
    def waivers(self) -> list:
        return [c.check_id for c in self.checks if c.waived]

    def __getitem__(self, check_id: str) -> CheckResult:
        for c in self.checks:
            if c.check_id == check_id:
                return c
        raise KeyError(check_id)

    def summary(self) -> str:
        lines = []
        for c in self.checks:
            line = f"{c.status:6s} {c.check_id}  margin={c.margin:.3e}"
            if c.message:
                line += f"  {c.message}"
            lines.append(line)
        return "\n".join(lines)


def _worst(margins: np.ndarray, samples) -> tuple[float, Any]:
    i = int(np.argmin(margins))
    return float(margins[i]), samples[i]


def _fd_check(analytic, f, x, step, rtol):
    fd = (f(x + step) - f(x - step)) / (2.0 * step)
    err = np.abs(analytic - fd) - rtol * (1.0 + np.abs(analytic))
    return -err


def validate_problem(problem) -> ValidationReport:
    """Run every law check of ``problem``; see :class:`ValidationReport`."""
    lat = problem.lattice
    cfg = problem.validation
    rng = np.random.default_rng(problem.seed)
    times = problem.times
    report = ValidationReport()
    add = report.checks.append

    # -- bulk law -----------------------------------------------------------
    bulk = problem.bulk
    p = bulk.p
    add(CheckResult("bulk.exponent", p > 1.0, worst=p, margin=p - 1.0,
                    message="" if p > 1.0 else "p must exceed 1"))
    mu_lo = bulk.stiffness * bulk.modulation.bounds()[0]
    add(CheckResult("bulk.stiffness", mu_lo > 0.0, worst=mu_lo, margin=mu_lo,
                    message="" if mu_lo > 0 else "stiffness must be positive"))

    xi = np.linspace(cfg.u_min, cfg.u_max, cfg.u_points)
    mids = lat.bond_midpoint
    mu = bulk.stiffness_at(mids)
    XI, MU = np.meshgrid(xi, mu)
    W = bulk.strain_density(XI, MU)
    c1, c2, c3 = bulk.growth_constants()
    r = np.abs(XI) ** p
    slack = np.minimum(W - (c1 * r - c2), c3 * (r + 1.0) - W).ravel()
    margin, worst = _worst(slack, XI.ravel())
    add(CheckResult("bulk.growth", margin >= -1e-12 * (1 + np.max(np.abs(W))), worst=worst, margin=margin))
    add(CheckResult("bulk.zero_at_rest", bool(np.all(bulk.strain_density(np.zeros_like(mu), mu) == 0.0)),
                    worst=0.0, margin=0.0))

    n = cfg.derivative_samples
    xs = rng.uniform(-3.0, 3.0, n)
    ms = bulk.stiffness_at(mids[rng.integers(0, len(mids), n)])
    step = 1e-6 * (1.0 + np.abs(xs))
    slack = _fd_check(bulk.strain_stress(xs, ms), lambda s: bulk.strain_density(s, ms), xs, step, cfg.fd_rtol)
    margin, worst = _worst(slack, xs)
    add(CheckResult("bulk.stress_consistency", margin >= 0.0, worst=worst, margin=margin))

    # -- loads --------------------------------------------------------------
    load = problem.load
    add(CheckResult("load.exponent", load.q > 1.0, worst=load.q, margin=load.q - 1.0,
                    message="" if load.q > 1.0 else "q must exceed 1"))
    waive = cfg.coercivity_waiver
    ok = load.alpha > 0.0
    add(CheckResult("load.alpha_positive", ok, worst=load.alpha, margin=load.alpha,
                    message="" if ok else "alpha must be positive", waivable=True, waived=(not ok) and waive))

    tails = 10.0 ** np.arange(1, cfg.tail_decades + 1)
    us = np.concatenate([np.linspace(cfg.u_min, cfg.u_max, cfg.u_points), tails, -tails])
    T_, U_ = np.meshgrid(times, us)
    mid_pts = lat.bond_midpoint
    worst_margin, worst_sample = np.inf, None
    for x in mid_pts:
        F = load.density(T_, x, U_)
        slack = -F - (load.alpha * np.abs(U_) ** load.q - load.beta)
        slack = slack / (1.0 + np.abs(F) + load.alpha * np.abs(U_) ** load.q)
        i = int(np.argmin(slack))
        if slack.flat[i] < worst_margin:
            worst_margin = float(slack.flat[i])
            worst_sample = (float(T_.flat[i]), tuple(float(v) for v in x), float(U_.flat[i]))
    ok = worst_margin >= -1e-12
    add(CheckResult("load.coercivity", ok, worst=worst_sample, margin=worst_margin,
                    message="" if ok else "-F >= alpha|u|^q - beta violated",
                    waivable=True, waived=(not ok) and waive))

    ts = rng.choice(times, n)
    uu = rng.uniform(cfg.u_min, cfg.u_max, n)
    xx = lat.coords[rng.integers(0, lat.n_nodes, n)]
    su = 1e-5 * (1.0 + np.abs(uu))
    st = 1e-5 * (1.0 + np.abs(ts))
    slack_u = _fd_check(load.d_u(ts, xx, uu), lambda v: load.density(ts, xx, v), uu, su, cfg.fd_rtol)
    slack_t = _fd_check(load.d_t(ts, xx, uu), lambda s: load.density(s, xx, uu), ts, st, cfg.fd_rtol)
    slack = np.minimum(slack_u, slack_t)
    margin, worst = _worst(slack, list(zip(ts, uu)))
    add(CheckResult("load.derivatives", margin >= 0.0, worst=worst, margin=margin))

    # -- toughness ----------------------------------------------------------
    kap = problem.toughness
    if lat.dim == 1:
        ring = np.array([[1.0], [-1.0]])
    else:
        ang = np.linspace(0.0, np.pi, 16, endpoint=False)
        ring = np.column_stack([np.cos(ang), np.sin(ang)])
    normals = np.unique(np.vstack([lat.seg_normal, ring]), axis=0)
    pts = lat.seg_midpoint
    K = np.array([kap(pts, np.repeat(nu[None, :], len(pts), axis=0)) for nu in normals])
    K_flip = np.array([kap(pts, np.repeat(-nu[None, :], len(pts), axis=0)) for nu in normals])
    gap = np.abs(K - K_flip) - 1e-12 * (1.0 + np.abs(K))
    i = int(np.argmax(gap))
    ni, pi = np.unravel_index(i, gap.shape)
    add(CheckResult("toughness.evenness", bool(gap.flat[i] <= 0.0),
                    worst=(tuple(pts[pi]), tuple(normals[ni])), margin=float(-gap.flat[i]),
                    message="" if gap.flat[i] <= 0 else "kappa(x, nu) != kappa(x, -nu)"))

    k_lo, k_hi = kap.bounds()
    k_lo = float(np.min(K)) if k_lo is None else k_lo
    add(CheckResult("toughness.kappa_min_positive", k_lo > 0.0, worst=k_lo, margin=k_lo,
                    message="" if k_lo > 0 else "kappa_min must be positive"))
    margin_lo = float(np.min(K)) - k_lo
    margin_hi = np.inf if k_hi is None else k_hi - float(np.max(K))
    margin = min(margin_lo, margin_hi)
    add(CheckResult("toughness.bounds", margin >= -1e-12, worst=(float(np.min(K)), float(np.max(K))),
                    margin=margin))

    # -- boundary program ---------------------------------------------------
    prog = problem.boundary
    dnodes = lat.coords[lat.labels == DIRICHLET]
    L = prog.lipschitz_constant(dnodes)
    if len(times) > 1:
        w = np.array([prog.value(t, dnodes) for t in times])
        slopes = np.max(np.abs(np.diff(w, axis=0)), axis=1) / np.diff(times)
        margin = float(L * (1 + 1e-12) + 1e-15 - np.max(slopes))
        worst = float(times[int(np.argmax(slopes))])
    else:
        margin, worst = float("inf"), None
    add(CheckResult("boundary.lipschitz", margin >= 0.0, worst=worst, margin=margin))

    probe = times[np.linspace(0, len(times) - 1, min(len(times), 25)).astype(int)]
    worst_margin, worst_t = np.inf, None
    for t in probe:
        dt = 1e-5 * (1.0 + abs(t))
        fd = (prog.value(t + dt, dnodes) - prog.value(t - dt, dnodes)) / (2 * dt)
        exact = prog.rate(t, dnodes)
        m = float(np.min(cfg.fd_rtol * (1.0 + np.abs(exact)) - np.abs(exact - fd)))
        if m < worst_margin:
            worst_margin, worst_t = m, float(t)
    add(CheckResult("boundary.rate_consistency", worst_margin >= 0.0, worst=worst_t, margin=worst_margin))
    return report
