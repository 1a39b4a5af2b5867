"""Oscillating sequences and weak convergence of stresses in 1D.

Fields live on a uniform 1D lattice over (0, 1).  Gradients are constant
per cell, so bulk energies and stresses are piecewise constant and every
pairing with a test function is integrated exactly through the test
function's antiderivative.

Weak convergence is only probed against a finite dictionary of test
functions; a small pairing gap on the dictionary does not certify it.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .config import BulkSection, ConfigError, _section
from .laws import BulkLaw, UniformField

WEAK_NOTE = (
    "weak convergence assessed on a finite test dictionary only; "
    "it is not finitely certifiable"
)

# name -> antiderivative on [0, 1]
DICTIONARY: dict[str, Callable[[np.ndarray], np.ndarray]] = {
    "1": lambda x: x,
    "x": lambda x: 0.5 * x**2,
    "x2": lambda x: x**3 / 3.0,
    "sin": lambda x: -np.cos(np.pi * x) / np.pi,
    "cos": lambda x: np.sin(np.pi * x) / np.pi,
    "sign": lambda x: np.abs(x - 0.5),
}


@dataclass
class SequenceSpec:
    """Sequence ``u_k = u + v_k`` on (0, 1).

    profile "sawtooth": ``v_k`` is a zero-mean triangle wave of period
    ``1/k`` with slopes exactly +-1, so ``|v_k| <= 1/(4k)``.
    profile "perturbation": ``v_k`` is one tent centred at 1/2 with slopes
    +-``slope`` whose energy for ``W = |xi|^2/2`` is
    ``eps_k = eps_scale / k**eps_power``.
    """

    profile: str = "sawtooth"
    base_slope: float = 0.0
    ks: list = field(default_factory=lambda: [1, 2, 4, 8, 16, 32, 64])
    cells: int = 4096
    eps_scale: float = 1.0
    eps_power: float = 1.0
    slope: float = 1.0

    def eps(self, k: int) -> float:
        return self.eps_scale / float(k) ** self.eps_power


@dataclass
class LemmaRow:
    k: int
    energy_gap: float
    pairing_gap_max: float
    pairing_gaps: dict
    meas_dev: dict  # delta -> measure


@dataclass
class LemmaReport:
    rows: list
    energy_limit: float
    note: str = WEAK_NOTE

    @property
    def hypothesis_fails(self) -> bool:
        """True when the energies of the sequence do not approach the limit."""
        gaps = [r.energy_gap for r in self.rows]
        if gaps[-1] <= 1e-12:
            return False
        return len(gaps) < 2 or gaps[-1] >= 0.5 * gaps[0]

    def to_csv(self) -> str:
        lines = ["k,energy_gap,pairing_gap_max,meas_dev_0.1,meas_dev_0.5"]
        for r in self.rows:
            vals = (r.energy_gap, r.pairing_gap_max, r.meas_dev[0.1], r.meas_dev[0.5])
            lines.append(f"{r.k}," + ",".join(format(v, ".17g") for v in vals))
        return "\n".join(lines) + "\n"


def grid(spec: SequenceSpec) -> np.ndarray:
    return np.linspace(0.0, 1.0, spec.cells + 1)


def _check_resolution(spec: SequenceSpec, k: int) -> None:
    if k < 1:
        raise ConfigError(f"k must be >= 1, got {k}")
    if spec.cells < 64 * k:
        raise ConfigError(f"{spec.cells} cells cannot resolve k={k} (need >= {64 * k})")
    if spec.cells % (2 * k):
        raise ConfigError(f"cells={spec.cells} must be a multiple of 2k={2 * k} so kinks sit on nodes")


def build_sequence(spec: SequenceSpec, k: int) -> np.ndarray:
    """Nodal values of ``u_k`` on the lab lattice."""
    _check_resolution(spec, k)
    x = grid(spec)
    base = spec.base_slope * x
    if spec.profile == "sawtooth":
        i = np.arange(spec.cells + 1)
        period = spec.cells // k  # nodes per period
        s = (i % period) / period
        return base + (0.25 - np.abs(s - 0.5)) / k
    if spec.profile == "perturbation":
        eps = spec.eps(k)
        if eps == 0.0:
            return base
        # tent of slopes +-g over support m: energy g^2 m / 2 = eps
        g = spec.slope
        m = 2.0 * eps / g**2
        if m > 1.0:
            raise ConfigError(f"perturbation support {m} exceeds the unit interval at k={k}")
        return base + np.maximum(0.0, g * (0.5 * m - np.abs(x - 0.5)))
    raise ConfigError(f"unknown profile {spec.profile!r}")


def cell_gradients(u: np.ndarray) -> np.ndarray:
    h = 1.0 / (len(u) - 1)
    return np.diff(u) / h


def lemma_experiment(spec: SequenceSpec, law: BulkLaw, dictionary=("1", "x", "x2", "sin", "cos", "sign")) -> LemmaReport:
    """Energy gaps, stress pairing gaps and gradient measure deviations per ``k``."""
    x = grid(spec)
    h = 1.0 / spec.cells
    mu = law.stiffness_at(0.5 * (x[1:] + x[:-1]).reshape(-1, 1))
    weights = {name: np.diff(DICTIONARY[name](x)) for name in dictionary}

    grad_lim = np.full(spec.cells, spec.base_slope)
    energy_lim = math.fsum(law.strain_density(grad_lim, mu) * h)
    sigma_lim = law.strain_stress(grad_lim, mu)

    rows = []
    for k in spec.ks:
        grad = cell_gradients(build_sequence(spec, k))
        energy = math.fsum(law.strain_density(grad, mu) * h)
        dsig = law.strain_stress(grad, mu) - sigma_lim
        pairings = {name: abs(math.fsum(dsig * w)) for name, w in weights.items()}
        dev = np.abs(grad - grad_lim)
        meas = {d: math.fsum(np.where(dev > d, h, 0.0)) for d in (0.1, 0.5)}
        rows.append(LemmaRow(k, abs(energy - energy_lim), max(pairings.values()), pairings, meas))
    return LemmaReport(rows, energy_lim)


def flat_well_law() -> BulkLaw:
    """``W = (|xi| - 1)_+^2``: convex, not strictly convex, zero on [-1, 1]."""
    return BulkLaw("flat-well", 1.0, 2.0, UniformField())


def lemma_config_from_dict(data: dict):
    """Parse ``{"sequence": {...}, "bulk": {...}, "dictionary": [...]}``.

    Returns ``(SequenceSpec, BulkLaw, dictionary names)``.  Unknown keys and
    unknown dictionary members are errors.
    """
    if not isinstance(data, dict):
        raise ConfigError("lemma configuration must be a JSON object")
    unknown = sorted(set(data) - {"sequence", "bulk", "dictionary"})
    if unknown:
        raise ConfigError(f"unknown top-level key(s): {', '.join(unknown)}")
    seq = _section("sequence", SequenceSpec, data.get("sequence", {}))
    if seq.profile not in ("sawtooth", "perturbation"):
        raise ConfigError(f"sequence.profile: unknown profile {seq.profile!r}")
    b = _section("bulk", BulkSection, data.get("bulk", {}))
    if b.modulation != "uniform":
        raise ConfigError("bulk.modulation: the lemma lab supports only 'uniform'")
    law = BulkLaw(b.family, b.stiffness, b.exponent, UniformField())
    names = data.get("dictionary", list(DICTIONARY))
    if not isinstance(names, list) or not names:
        raise ConfigError("dictionary must be a non-empty list of names")
    bad = [n for n in names if n not in DICTIONARY]
    if bad:
        raise ConfigError(f"dictionary: unknown test function(s) {bad}; known: {sorted(DICTIONARY)}")
    for k in seq.ks:
        _check_resolution(seq, int(k))
    return seq, law, tuple(names)
