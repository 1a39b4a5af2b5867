"""Elastic equilibrium at fixed time and crack.

Minimises ``W(grad u) - F(t)(u)`` over displacements that match ``w(t)`` on
every node whose anchor bond is intact.  Quadratic bulk energies give a
symmetric positive definite linear system; the other convex families are
handled by gradient descent with a Barzilai-Borwein trial step and
backtracking (sufficient-decrease parameter 1e-4, halving).

A fragment that is cut off from every intact anchor has no proper minimum
unless the loads pin it.  Under ``F = 0`` such a fragment is pinned at its
warm-start value (one node, the lowest id) and reported; under a nonzero
dead load the energy is unbounded below and the solve is refused.
"""

from __future__ import annotations

import math
import threading
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg
import scipy.sparse as sp
from scipy.sparse.csgraph import connected_components
from scipy.sparse.linalg import cg

from .energy import bulk_energy, force_work
from .lattice import CrackSet, apply_boundary

DENSE_LIMIT = 600
ARMIJO = 1e-4


class SolverError(RuntimeError):
    def __init__(self, message: str, best=None):
        super().__init__(message)
        self.best = best


class UnboundedEnergyError(SolverError):
    pass


@dataclass
class SolveReport:
    iterations: int
    gradient_norm: float
    energy: float
    pinned: list = field(default_factory=list)
    method: str = "direct"


class EquilibriumSolver:
    """Per-problem assembly data reused across crack candidates."""

    def __init__(self, problem, tol: float = 1e-10, max_iter: int = 100_000):
        self.problem = problem
        self.tol = tol
        self.max_iter = max_iter
        lat = problem.lattice
        self.lattice = lat
        self.mu = problem.bulk.stiffness_at(lat.bond_midpoint)
        self.vol = lat.bond_volume
        self.h = lat.bond_length
        self.spring = self.mu * self.vol / self.h**2
        self.a = lat.bond_nodes[:, 0]
        self.b = lat.bond_nodes[:, 1]

    # -- fragments -----------------------------------------------------------

    def _constraints(self, t, crack, warm_start):
        lat, load = self.lattice, self.problem.load
        n = lat.n_nodes
        u = np.zeros(n) if warm_start is None else np.array(warm_start, dtype=float)
        u = apply_boundary(u, t, crack, self.problem.boundary, lat)
        intact = lat.intact_interior(crack)
        fixed = np.zeros(n, dtype=bool)
        fixed[lat.anchor_node[lat.intact_anchor(crack)]] = True

        a, b = self.a[intact], self.b[intact]
        graph = sp.coo_matrix((np.ones(a.size), (a, b)), shape=(n, n))
        ncomp, comp = connected_components(graph, directed=False)
        anchored = np.zeros(ncomp, dtype=bool)
        anchored[comp[fixed]] = True
        pinned = []
        for c in np.flatnonzero(~anchored):
            if load.curvature > 0:
                continue
            if load.constant_force != 0.0:
                raise UnboundedEnergyError(
                    "energy unbounded: a fragment without intact anchors carries a dead load",
                    best=u,
                )
            node = int(np.flatnonzero(comp == c)[0])
            pinned.append(node)
            fixed[node] = True
        return u, intact, fixed, pinned

    # -- energy and gradient -------------------------------------------------

    def _energy_grad(self, t, u, intact):
        lat, law, load = self.lattice, self.problem.bulk, self.problem.load
        a, b, h = self.a[intact], self.b[intact], self.h[intact]
        s = (u[b] - u[a]) / h
        e_bulk = math.fsum(law.strain_density(s, self.mu[intact]) * self.vol[intact])
        flux = law.strain_stress(s, self.mu[intact]) * self.vol[intact] / h
        n = lat.n_nodes
        g = np.bincount(b, weights=flux, minlength=n) - np.bincount(a, weights=flux, minlength=n)
        e = e_bulk
        if load.kind != "none":
            e -= math.fsum(load.density(t, lat.coords, u) * lat.node_volume)
            g -= load.d_u(t, lat.coords, u) * lat.node_volume
        return e, g

    def _residual_norm(self, g, free, energy):
        if not free.size:
            return 0.0
        return float(np.max(np.abs(g[free]) / self.lattice.node_volume[free])) / (
            1.0 + abs(energy) / self.lattice.volume
        )

    # -- solvers -------------------------------------------------------------

    def _solve_linear(self, t, u, intact, fixed):
        lat, load = self.lattice, self.problem.load
        n = lat.n_nodes
        free = np.flatnonzero(~fixed)
        if not free.size:
            return u, 0, "direct"
        a, b, k = self.a[intact], self.b[intact], self.spring[intact]
        rows = np.concatenate([a, b, a, b])
        cols = np.concatenate([a, b, b, a])
        vals = np.concatenate([k, k, -k, -k])
        c = load.curvature * lat.node_volume
        if load.kind == "tracking":
            rhs_full = c * load.rate * t
        elif load.kind == "dead":
            rhs_full = load.force * lat.node_volume
        else:
            rhs_full = np.zeros(n)
        known = np.flatnonzero(fixed)
        if n <= DENSE_LIMIT:
            H = np.zeros((n, n))
            np.add.at(H, (rows, cols), vals)
            H[np.diag_indices(n)] += c
            rhs = rhs_full[free] - H[np.ix_(free, known)] @ u[known]
            u[free] = scipy.linalg.solve(H[np.ix_(free, free)], rhs, assume_a="pos")
            return u, 1, "direct"
        H = (sp.coo_matrix((vals, (rows, cols)), shape=(n, n)) + sp.diags(c)).tocsr()
        rhs = rhs_full[free] - H[free][:, known] @ u[known]
        A = H[free][:, free]
        iters = [0]

        def count(_):
            iters[0] += 1

        # relative residual 1e-12 first; tighten when the energy-scaled
        # gradient norm is still above tolerance (fine lattices, small cells)
        for rtol in (1e-12, 1e-14, 1e-16):
            x, info = cg(A, rhs, x0=u[free], rtol=rtol, atol=0.0, maxiter=10 * free.size, callback=count)
            u[free] = x
            energy, g = self._energy_grad(t, u, intact)
            if self._residual_norm(g, free, energy) <= self.tol:
                return u, iters[0], "cg"
        raise SolverError(f"conjugate gradients did not reach tolerance (info={info})", best=u)

    def _solve_descent(self, t, u, intact, fixed):
        free = np.flatnonzero(~fixed)
        energy, g = self._energy_grad(t, u, intact)
        if not free.size:
            return u, 0, "descent"
        alpha = 1.0
        prev_x = prev_g = None
        best_u, best_e = u.copy(), energy
        for it in range(1, self.max_iter + 1):
            if self._residual_norm(g, free, energy) <= self.tol:
                return u, it - 1, "descent"
            gf = g[free]
            if prev_x is not None:
                s = u[free] - prev_x
                y = gf - prev_g
                sy = float(s @ y)
                alpha = float(s @ s) / sy if sy > 0 else 2.0 * alpha
            slope = -float(gf @ gf)
            slack = 1e-14 * (1.0 + abs(energy))
            for _ in range(80):
                trial = u.copy()
                trial[free] = u[free] - alpha * gf
                e_new, g_new = self._energy_grad(t, trial, intact)
                if e_new <= energy + ARMIJO * alpha * slope + slack:
                    break
                alpha *= 0.5
            else:
                raise SolverError("line search failed to find sufficient decrease", best=best_u)
            prev_x, prev_g = u[free].copy(), gf.copy()
            u, energy, g = trial, e_new, g_new
            if energy < best_e:
                best_u, best_e = u.copy(), energy
        raise SolverError(
            f"gradient descent did not converge in {self.max_iter} iterations", best=best_u
        )

    def solve(self, t: float, crack: CrackSet, warm_start=None):
        u, intact, fixed, pinned = self._constraints(t, crack, warm_start)
        if self.problem.bulk.family == "quadratic":
            u, iters, method = self._solve_linear(t, u, intact, fixed)
        else:
            u, iters, method = self._solve_descent(t, u, intact, fixed)
        e, g = self._energy_grad(t, u, intact)
        free = np.flatnonzero(~fixed)
        energy = bulk_energy(self.lattice, self.problem.bulk, u, crack) - force_work(
            self.problem.load, t, u, self.lattice
        )
        u.setflags(write=False)
        return u, SolveReport(iters, self._residual_norm(g, free, e), energy, pinned, method)


def minimize_displacement(t: float, crack: CrackSet, problem, warm_start=None):
    """Equilibrium displacement at fixed ``(t, crack)`` and its :class:`SolveReport`."""
    return problem.solver.solve(t, crack, warm_start)


class EquilibriumCache:
    """Memo of equilibrium solves keyed by ``(t, broken bond ids)``.

    Reads are lock-free; inserts are serialised.  The first stored result
    for a key wins, so concurrent solvers agree.
    """

    def __init__(self):
        self._store: dict = {}
        self._lock = threading.Lock()
        self.hits = 0
        self.misses = 0

    def __len__(self) -> int:
        return len(self._store)

    def solve(self, t: float, crack: CrackSet, problem, warm_start=None):
        key = (float(t), crack.bonds)
        got = self._store.get(key)
        if got is not None:
            self.hits += 1
            return got
        self.misses += 1
        result = minimize_displacement(t, crack, problem, warm_start)
        with self._lock:
            return self._store.setdefault(key, result)

    def clear(self) -> None:
        with self._lock:
            self._store.clear()


def elastic_energy_of_crack(t: float, crack: CrackSet, problem, cache=None, warm_start=None) -> float:
    """Minimum of ``W - F(t)`` over displacements admissible for ``crack``."""
    cache = problem.cache if cache is None else cache
    return cache.solve(t, crack, problem, warm_start)[1].energy
