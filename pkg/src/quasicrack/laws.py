"""Material and loading laws.

Closed-form families selected by tag:

* bulk energy density ``W(x, xi)`` (quadratic, p-power, flat-well),
* toughness ``kappa(x, nu)`` with spatial and orientation factors,
* body-force potential ``F(t, x, u)`` with its partial derivatives,
* Dirichlet boundary program ``w(t, x)`` with its time derivative.

Kinematics are scalar (antiplane), so a gradient is a vector of length
``dim`` and, on bonds, a single axial strain.  Every law evaluates on
numpy arrays; points ``x`` have shape ``(m, dim)``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np

BULK_FAMILIES = ("quadratic", "p-power", "flat-well")
LOAD_KINDS = ("none", "tracking", "dead")
BOUNDARY_PROFILES = ("linear", "sine")


def _points(x) -> np.ndarray:
    # scalar -> one 1D point; 1-D array -> one point; 2-D -> (m, dim)
    x = np.asarray(x, dtype=float)
    if x.ndim == 0:
        return x.reshape(1, 1)
    if x.ndim == 1:
        return x.reshape(1, -1)
    return x


# ---------------------------------------------------------------------------
# Spatial factor fields
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class UniformField:
    value: float = 1.0

    def __call__(self, x: np.ndarray) -> np.ndarray:
        return np.full(_points(x).shape[0], self.value)

    def bounds(self) -> tuple[float, float]:
        return self.value, self.value


@dataclass(frozen=True)
class StepField:
    """Piecewise-constant factor: ``left`` where ``x[axis] < split``, else ``right``."""

    split: float
    left: float
    right: float
    axis: int = 0

    def __call__(self, x: np.ndarray) -> np.ndarray:
        coord = _points(x)[:, self.axis]
        return np.where(coord < self.split, self.left, self.right)

    def bounds(self) -> tuple[float, float]:
        return min(self.left, self.right), max(self.left, self.right)


@dataclass(frozen=True)
class RandomCellField:
    """Seeded i.i.d. uniform factors on a regular grid of cells over a box."""

    seed: int
    low: float
    high: float
    extents: tuple[float, ...]
    resolution: int = 8
    values: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        rng = np.random.default_rng(self.seed)
        shape = (self.resolution,) * len(self.extents)
        object.__setattr__(self, "values", rng.uniform(self.low, self.high, size=shape))

    def __call__(self, x: np.ndarray) -> np.ndarray:
        pts = _points(x)
        idx = []
        for axis, extent in enumerate(self.extents):
            cell = np.floor(pts[:, axis] / extent * self.resolution).astype(int)
            idx.append(np.clip(cell, 0, self.resolution - 1))
        return self.values[tuple(idx)]

    def bounds(self) -> tuple[float, float]:
        return self.low, self.high


# ---------------------------------------------------------------------------
# Bulk energy
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class BulkLaw:
    """Convex bulk density of one of the built-in families.

    quadratic:  ``W = mu/2 |xi|^2``
    p-power:    ``W = mu/p |xi|^p``
    flat-well:  ``W = mu (|xi| - 1)_+^p``  (zero on the unit ball)
    """

    family: str = "quadratic"
    stiffness: float = 1.0
    exponent: float = 2.0
    modulation: object = UniformField()

    @property
    def p(self) -> float:
        return 2.0 if self.family == "quadratic" else float(self.exponent)

    def stiffness_at(self, x) -> np.ndarray:
        return self.stiffness * self.modulation(x)

    def _profile(self, r: np.ndarray, mu: np.ndarray) -> np.ndarray:
        if self.family == "quadratic":
            return 0.5 * mu * r * r
        if self.family == "p-power":
            return mu * r**self.p / self.p
        if self.family == "flat-well":
            return mu * np.maximum(r - 1.0, 0.0) ** self.p
        raise ValueError(f"unknown bulk family {self.family!r}")

    def _profile_slope_over_r(self, r: np.ndarray, mu: np.ndarray) -> np.ndarray:
        # phi'(r)/r, finite at r = 0 for every family with p > 1
        if self.family == "quadratic":
            return mu * np.ones_like(r)
        if self.family == "p-power":
            with np.errstate(divide="ignore", invalid="ignore"):
                out = mu * r ** (self.p - 2.0)
            return np.where(r > 0, out, 0.0)
        if self.family == "flat-well":
            excess = np.maximum(r - 1.0, 0.0)
            with np.errstate(divide="ignore", invalid="ignore"):
                out = mu * self.p * excess ** (self.p - 1.0) / r
            return np.where(r > 1.0, out, 0.0)
        raise ValueError(f"unknown bulk family {self.family!r}")

    def strain_density(self, strain, mu) -> np.ndarray:
        """Density for scalar (bond-axial) strains with per-bond stiffness ``mu``."""
        s = np.asarray(strain, dtype=float)
        return self._profile(np.abs(s), np.asarray(mu, dtype=float))

    def strain_stress(self, strain, mu) -> np.ndarray:
        s = np.asarray(strain, dtype=float)
        return self._profile_slope_over_r(np.abs(s), np.asarray(mu, dtype=float)) * s

    def growth_constants(self) -> tuple[float, float, float]:
        """``(c1, c2, c3)`` with ``c1|xi|^p - c2 <= W <= c3 (|xi|^p + 1)``."""
        lo, hi = self.modulation.bounds()
        mu_lo, mu_hi = self.stiffness * lo, self.stiffness * hi
        if self.family == "quadratic":
            return 0.5 * mu_lo, 0.0, 0.5 * mu_hi
        if self.family == "p-power":
            return mu_lo / self.p, 0.0, mu_hi / self.p
        # (|xi|-1)_+^p >= 2^(1-p) |xi|^p - 1 by convexity of r -> r^p
        return mu_lo * 2.0 ** (1.0 - self.p), mu_hi, mu_hi


def bulk_density(law: BulkLaw, x, xi) -> float:
    """Bulk energy density ``W(x, xi)`` at a single point."""
    xi = np.atleast_1d(np.asarray(xi, dtype=float))
    mu = law.stiffness_at(np.atleast_2d(np.asarray(x, dtype=float)))[0]
    return float(law._profile(np.array(np.linalg.norm(xi)), np.array(mu)))


def bulk_stress(law: BulkLaw, x, xi):
    """``dW/dxi`` at a single point; scalar in, scalar out."""
    arr = np.asarray(xi, dtype=float)
    xi1 = np.atleast_1d(arr)
    mu = law.stiffness_at(np.atleast_2d(np.asarray(x, dtype=float)))[0]
    r = np.array(np.linalg.norm(xi1))
    out = law._profile_slope_over_r(r, np.array(mu)) * xi1
    return float(out[0]) if arr.ndim == 0 else out


# ---------------------------------------------------------------------------
# Toughness
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Isotropic:
    def __call__(self, nu: np.ndarray) -> np.ndarray:
        return np.ones(np.atleast_2d(nu).shape[0])

    def bounds(self) -> tuple[float, float]:
        return 1.0, 1.0


@dataclass(frozen=True)
class QuadraticAnisotropy:
    """Orientation factor ``1 + strength (nu . axis)^2`` (even in ``nu``)."""

    strength: float = 1.0
    axis: tuple[float, ...] = (1.0, 0.0)

    def __call__(self, nu: np.ndarray) -> np.ndarray:
        nu = np.atleast_2d(nu)
        axis = np.asarray(self.axis, dtype=float)[: nu.shape[1]]
        axis = axis / np.linalg.norm(axis)
        return 1.0 + self.strength * (nu @ axis) ** 2

    def bounds(self) -> tuple[float, float]:
        return (1.0, 1.0 + self.strength) if self.strength >= 0 else (1.0 + self.strength, 1.0)


@dataclass(frozen=True)
class ToughnessLaw:
    """``kappa(x, nu) = base * spatial(x) * anisotropy(nu)``.

    ``anisotropy`` may be any callable of unit normals of shape ``(m, dim)``;
    the built-in ones are even.  ``kappa_min``/``kappa_max`` default to the
    analytic bounds of the built-in factors.
    """

    base: float = 1.0
    spatial: object = UniformField()
    anisotropy: Callable = Isotropic()
    kappa_min: Optional[float] = None
    kappa_max: Optional[float] = None

    def __call__(self, x, nu) -> np.ndarray:
        return self.base * self.spatial(x) * self.anisotropy(np.atleast_2d(nu))

    def bounds(self) -> tuple[Optional[float], Optional[float]]:
        lo, hi = self.kappa_min, self.kappa_max
        if hasattr(self.anisotropy, "bounds"):
            s_lo, s_hi = self.spatial.bounds()
            a_lo, a_hi = self.anisotropy.bounds()
            products = [self.base * s * a for s in (s_lo, s_hi) for a in (a_lo, a_hi)]
            lo = min(products) if lo is None else lo
            hi = max(products) if hi is None else hi
        return lo, hi


# ---------------------------------------------------------------------------
# Body forces
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class LoadLaw:
    """Body-force potential ``F(t, x, u)`` (work density of the loads).

    none:      ``F = 0``
    tracking:  ``F = -c/2 (u - r t)^2``  (attractive spring towards ``r t``)
    dead:      ``F = g u``
    """

    kind: str = "none"
    stiffness: float = 1.0
    rate: float = 1.0
    force: float = 0.0
    alpha: float = 0.0
    beta: float = 0.0
    q: float = 2.0

    def density(self, t, x, u) -> np.ndarray:
        u = np.asarray(u, dtype=float)
        if self.kind == "none":
            return np.zeros_like(u)
        if self.kind == "tracking":
            return -0.5 * self.stiffness * (u - self.rate * t) ** 2
        if self.kind == "dead":
            return self.force * u
        raise ValueError(f"unknown load kind {self.kind!r}")

    def d_u(self, t, x, u) -> np.ndarray:
        u = np.asarray(u, dtype=float)
        if self.kind == "none":
            return np.zeros_like(u)
        if self.kind == "tracking":
            return -self.stiffness * (u - self.rate * t)
        if self.kind == "dead":
            return np.full_like(u, self.force)
        raise ValueError(f"unknown load kind {self.kind!r}")

    def d_t(self, t, x, u) -> np.ndarray:
        u = np.asarray(u, dtype=float)
        if self.kind == "tracking":
            return self.stiffness * self.rate * (u - self.rate * t)
        return np.zeros_like(u)

    @property
    def curvature(self) -> float:
        """``-d2F/du2``; positive when every fragment has a proper minimum."""
        return self.stiffness if self.kind == "tracking" else 0.0

    @property
    def constant_force(self) -> float:
        return self.force if self.kind == "dead" else 0.0


# ---------------------------------------------------------------------------
# Boundary program
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class BoundaryProgram:
    """Affine-in-space boundary deformation ``w(t, x) = s(t) (offset + gradient . x)``.

    The same formula is the interior extension of ``w`` (linear blend).
    ``s(t) = scale * t`` (linear) or ``scale * sin(frequency * t)`` (sine).
    """

    offset: float = 0.0
    gradient: Sequence[float] = (1.0,)
    profile: str = "linear"
    scale: float = 1.0
    frequency: float = 1.0
    lipschitz: Optional[float] = None

    def amplitude(self, t: float) -> float:
        if self.profile == "linear":
            return self.scale * t
        if self.profile == "sine":
            return self.scale * np.sin(self.frequency * t)
        raise ValueError(f"unknown boundary profile {self.profile!r}")

    def amplitude_rate(self, t: float) -> float:
        if self.profile == "linear":
            return self.scale
        if self.profile == "sine":
            return self.scale * self.frequency * np.cos(self.frequency * t)
        raise ValueError(f"unknown boundary profile {self.profile!r}")

    def shape(self, x) -> np.ndarray:
        pts = _points(x)
        g = np.zeros(pts.shape[1])
        given = np.asarray(self.gradient, dtype=float)[: pts.shape[1]]
        g[: given.size] = given
        return self.offset + pts @ g

    def value(self, t: float, x) -> np.ndarray:
        return self.amplitude(t) * self.shape(x)

    def rate(self, t: float, x) -> np.ndarray:
        return self.amplitude_rate(t) * self.shape(x)

    def lipschitz_constant(self, x) -> float:
        """Declared constant, or ``max|s'| * max|shape|`` over the given points."""
        if self.lipschitz is not None:
            return float(self.lipschitz)
        peak = float(np.max(np.abs(self.shape(x)))) if np.size(x) else 0.0
        rate = abs(self.scale) * (self.frequency if self.profile == "sine" else 1.0)
        return rate * peak
