"""Assembly of a runnable problem from its declarative configuration."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

from fractions import Fraction

import numpy as np

from . import laws
from .config import (
    AuditSection,
    ConfigError,
    ProblemSpec,
    StrategySection,
    ValidationSection,
)
from .equilibrium import EquilibriumCache, EquilibriumSolver
from .lattice import CrackSet, Lattice, build_lattice, crack_set, ids_in_box


@dataclass(frozen=True)
class TimeGrid:
    """Strictly increasing load times starting at 0."""

    times: tuple

    def __post_init__(self):
        t = np.asarray(self.times, dtype=float)
        if t.size == 0 or t[0] != 0.0:
            raise ValueError("time grid must start at t = 0")
        if np.any(np.diff(t) <= 0):
            raise ValueError("time grid must be strictly increasing")

    @classmethod
    def uniform(cls, dt: float, T: float) -> "TimeGrid":
        if dt <= 0 or T < 0:
            raise ValueError("need dt > 0 and T >= 0")
        # times are the correctly rounded values of i * dt taken in exact
        # decimal arithmetic on the shortest repr of dt (0.01 -> 1/100),
        # so t_201 is 2.01 rather than 2.0100000000000002
        step = Fraction(repr(float(dt)))
        n = int(np.floor(Fraction(repr(float(T))) / step + Fraction(1, 10**9)))
        return cls(tuple(float(i * step) for i in range(n + 1)))

    @property
    def array(self) -> np.ndarray:
        return np.asarray(self.times, dtype=float)

    @property
    def max_step(self) -> float:
        return float(np.max(np.diff(self.array))) if len(self.times) > 1 else 0.0

    def __len__(self) -> int:
        return len(self.times)


@dataclass(eq=False)
class Problem:
    lattice: Lattice
    bulk: laws.BulkLaw
    toughness: laws.ToughnessLaw
    load: laws.LoadLaw
    boundary: laws.BoundaryProgram
    grid: TimeGrid
    strategy: StrategySection = field(default_factory=StrategySection)
    audit: AuditSection = field(default_factory=AuditSection)
    validation: ValidationSection = field(default_factory=ValidationSection)
    candidates: Optional[tuple] = None
    initial_crack: Optional[CrackSet] = None
    seed: int = 0
    spec: Optional[ProblemSpec] = None
    cache: EquilibriumCache = field(default_factory=EquilibriumCache, repr=False)
    _solver: Optional[EquilibriumSolver] = field(default=None, repr=False)

    def __post_init__(self):
        if self.candidates is None:
            self.candidates = tuple(range(self.lattice.n_bonds))
        if self.initial_crack is None:
            self.initial_crack = self.lattice.empty_crack()

    @property
    def solver(self) -> EquilibriumSolver:
        if self._solver is None:
            self._solver = EquilibriumSolver(self)
        return self._solver

    @property
    def times(self) -> np.ndarray:
        return self.grid.array

    @property
    def coercivity_waiver(self) -> bool:
        return self.validation.coercivity_waiver


def _spatial(kind, sec, extents, where):
    if kind == "uniform":
        return laws.UniformField()
    if kind == "step":
        return laws.StepField(sec.split, sec.left_factor, sec.right_factor, sec.axis)
    if kind == "random" and hasattr(sec, "seed"):
        return laws.RandomCellField(sec.seed, sec.low, sec.high, tuple(extents), sec.resolution)
    raise ConfigError(f"{where}: unknown spatial field {kind!r}")


def _candidates(lattice: Lattice, strategy: StrategySection) -> tuple:
    cand = strategy.candidates
    if strategy.corridor is not None:
        if len(strategy.corridor) != 2 * lattice.dim:
            raise ConfigError("strategy.corridor needs two bounds per dimension")
        ids = ids_in_box(lattice, strategy.corridor)
    elif cand == "all":
        ids = list(range(lattice.n_bonds))
    elif cand == "interior":
        ids = list(range(lattice.n_interior))
    elif isinstance(cand, list):
        ids = [int(b) for b in cand]
        crack_set(lattice, ids)  # validates ids
    else:
        raise ConfigError(f"strategy.candidates: unknown selector {cand!r}")
    return tuple(sorted(set(ids)))


def build_problem(spec: ProblemSpec) -> Problem:
    lattice = build_lattice(spec.geometry)
    extents = lattice.extents

    b = spec.bulk
    if b.family not in laws.BULK_FAMILIES:
        raise ConfigError(f"bulk.family: unknown family {b.family!r}")
    bulk = laws.BulkLaw(b.family, b.stiffness, b.exponent, _spatial(b.modulation, b, extents, "bulk"))

    k = spec.toughness
    if k.anisotropy == "isotropic":
        aniso = laws.Isotropic()
    elif k.anisotropy == "quadratic":
        aniso = laws.QuadraticAnisotropy(k.anisotropy_strength, tuple(k.anisotropy_axis))
    else:
        raise ConfigError(f"toughness.anisotropy: unknown family {k.anisotropy!r}")
    toughness = laws.ToughnessLaw(
        k.base, _spatial(k.spatial, k, extents, "toughness"), aniso, k.kappa_min, k.kappa_max
    )

    ld = spec.load
    if ld.kind not in laws.LOAD_KINDS:
        raise ConfigError(f"load.kind: unknown kind {ld.kind!r}")
    load = laws.LoadLaw(ld.kind, ld.stiffness, ld.rate, ld.force, ld.alpha, ld.beta, ld.q)

    bd = spec.boundary
    if bd.profile not in laws.BOUNDARY_PROFILES:
        raise ConfigError(f"boundary.profile: unknown profile {bd.profile!r}")
    if bd.extension != "linear":
        raise ConfigError(f"boundary.extension: only 'linear' is supported, got {bd.extension!r}")
    boundary = laws.BoundaryProgram(
        bd.offset, tuple(bd.gradient), bd.profile, bd.scale, bd.frequency, bd.lipschitz
    )

    tm = spec.time
    grid = TimeGrid(tuple(float(v) for v in tm.times)) if tm.times else TimeGrid.uniform(tm.dt, tm.T)

    st = spec.strategy
    if st.name not in ("exhaustive", "greedy"):
        raise ConfigError(f"strategy.name: unknown strategy {st.name!r}")
    if st.tie_rule != "fewest-then-lexicographic":
        raise ConfigError("strategy.tie_rule: only 'fewest-then-lexicographic' is supported")
    if spec.audit.competitor_policy not in ("exhaustive", "sampled"):
        raise ConfigError(f"audit.competitor_policy: unknown policy {spec.audit.competitor_policy!r}")

    return Problem(
        lattice=lattice,
        bulk=bulk,
        toughness=toughness,
        load=load,
        boundary=boundary,
        grid=grid,
        strategy=st,
        audit=spec.audit,
        validation=spec.validation,
        candidates=_candidates(lattice, st),
        initial_crack=crack_set(lattice, spec.initial.crack),
        seed=spec.seed,
        spec=spec,
    )
