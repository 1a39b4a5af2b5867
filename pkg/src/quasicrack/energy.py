"""Energy functionals of a lattice configuration and their differentials.

All reductions use ``math.fsum`` so totals are correctly rounded and do
not depend on summation order.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .lattice import AdmissiblePair, CrackSet, Lattice, bond_strains

CSV_COLUMNS = ("E_bulk", "E_surf", "F_work", "E_total")


class AdmissibilityError(ValueError):
    pass


@dataclass(frozen=True)
class EnergyBreakdown:
    bulk: float
    surface: float
    force_work: float
    total: float

    @classmethod
    def of(cls, bulk: float, surface: float, force_work: float) -> "EnergyBreakdown":
        return cls(bulk, surface, force_work, bulk + surface - force_work)

    def as_row(self) -> tuple:
        return (self.bulk, self.surface, self.force_work, self.total)


def strain_energy(lattice: Lattice, law, strains, crack: Optional[CrackSet] = None) -> float:
    """Bulk functional of a bond-strain field; broken bonds contribute nothing."""
    mu = law.stiffness_at(lattice.bond_midpoint)
    dens = law.strain_density(strains, mu) * lattice.bond_volume
    if crack is not None:
        dens = dens[lattice.intact_interior(crack)]
    return math.fsum(dens)


def bulk_energy(lattice: Lattice, law, u, crack: CrackSet) -> float:
    return strain_energy(lattice, law, bond_strains(lattice, u), crack)


def surface_energy(lattice: Lattice, toughness, crack: CrackSet) -> float:
    if not len(crack):
        return 0.0
    ids = np.array(crack.ids)
    kappa = toughness(lattice.seg_midpoint[ids], lattice.seg_normal[ids])
    return math.fsum(kappa * lattice.seg_area[ids])


def force_work(law, t: float, u, lattice: Lattice) -> float:
    """Node quadrature of ``F(t, x, u(x))`` with dual-cell volumes."""
    if law.kind == "none":
        return 0.0
    vals = law.density(t, lattice.coords, np.asarray(u, dtype=float))
    return math.fsum(vals * lattice.node_volume)


def total_energy(t: float, u, crack: CrackSet, problem) -> EnergyBreakdown:
    """Bulk, surface and load terms of the total energy at time ``t``.

    Raises :class:`AdmissibilityError` naming the violated constraint when
    ``(u, crack)`` is not admissible for ``w(t)``.
    """
    lattice = problem.lattice
    why = AdmissiblePair(np.asarray(u), crack, t).violation(lattice, problem.boundary)
    if why is not None:
        raise AdmissibilityError(why)
    return EnergyBreakdown.of(
        bulk_energy(lattice, problem.bulk, u, crack),
        surface_energy(lattice, problem.toughness, crack),
        force_work(problem.load, t, u, lattice),
    )


def pair_dW(phi, psi, law, lattice: Lattice, crack: Optional[CrackSet] = None) -> float:
    """``<dW(phi), psi>``: bond-volume weighted stress of ``phi`` against ``psi``."""
    mu = law.stiffness_at(lattice.bond_midpoint)
    terms = law.strain_stress(phi, mu) * np.asarray(psi, dtype=float) * lattice.bond_volume
    if crack is not None:
        terms = terms[lattice.intact_interior(crack)]
    return math.fsum(terms)


def pair_dF(t: float, u, v, law, lattice: Lattice) -> float:
    """``<dF(t)(u), v>`` by node quadrature."""
    terms = law.d_u(t, lattice.coords, np.asarray(u, dtype=float)) * np.asarray(v, dtype=float)
    return math.fsum(terms * lattice.node_volume)


def dF_dt(t: float, u, law, lattice: Lattice) -> float:
    """Partial time derivative of the load work at fixed ``u``."""
    terms = law.d_t(t, lattice.coords, np.asarray(u, dtype=float))
    return math.fsum(terms * lattice.node_volume)


def power_of_loading(t: float, u, crack: CrackSet, problem) -> float:
    """Integrand of the external work at time ``t`` for state ``(u, crack)``.

    ``<dW(grad u), grad w_dot> - <dF(t)(u), w_dot> - F_dot(t)(u)`` with
    ``w_dot`` the interior extension of the boundary rate.
    """
    lattice = problem.lattice
    w_dot = problem.boundary.rate(t, lattice.coords)
    stress_part = pair_dW(
        bond_strains(lattice, u), bond_strains(lattice, w_dot), problem.bulk, lattice, crack
    )
    if problem.load.kind == "none":
        return stress_part
    return (
        stress_part
        - pair_dF(t, u, w_dot, problem.load, lattice)
        - dF_dt(t, u, problem.load, lattice)
    )


def step_work(problem, t0: float, u0, crack0: CrackSet, t1: float, u1) -> float:
    """External work over ``[t0, t1]``: left-endpoint rule for the time
    integrals plus the exact increment of the load work."""
    dt = t1 - t0
    work = dt * power_of_loading(t0, u0, crack0, problem)
    if problem.load.kind != "none":
        lattice = problem.lattice
        work += force_work(problem.load, t1, u1, lattice) - force_work(problem.load, t0, u0, lattice)
    return work
