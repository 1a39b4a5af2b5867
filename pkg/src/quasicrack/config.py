"""Declarative problem configuration.

A configuration is a JSON document with one object per named section.
Every key is checked against the section schema: a misspelt key is an
error, never a silently ignored default.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path
from typing import Any, Optional, Union, get_args, get_origin, get_type_hints


class ConfigError(ValueError):
    pass


@dataclass
class GeometrySection:
    dimension: int = 1
    extents: list = field(default_factory=lambda: [1.0])
    cells: list = field(default_factory=lambda: [4])
    dirichlet_edges: list = field(default_factory=lambda: ["left", "right"])


@dataclass
class BulkSection:
    family: str = "quadratic"
    stiffness: float = 1.0
    exponent: float = 2.0
    modulation: str = "uniform"  # uniform | step
    split: float = 0.5
    axis: int = 0
    left_factor: float = 1.0
    right_factor: float = 1.0


@dataclass
class ToughnessSection:
    base: float = 1.0
    spatial: str = "uniform"  # uniform | step | random
    split: float = 0.5
    axis: int = 0
    left_factor: float = 1.0
    right_factor: float = 1.0
    seed: int = 0
    low: float = 0.5
    high: float = 1.5
    resolution: int = 8
    anisotropy: str = "isotropic"  # isotropic | quadratic
    anisotropy_strength: float = 1.0
    anisotropy_axis: list = field(default_factory=lambda: [1.0, 0.0])
    kappa_min: Optional[float] = None
    kappa_max: Optional[float] = None


@dataclass
class LoadSection:
    kind: str = "none"  # none | tracking | dead
    stiffness: float = 1.0
    rate: float = 1.0
    force: float = 0.0
    alpha: float = 0.0
    beta: float = 0.0
    q: float = 2.0


@dataclass
class BoundarySection:
    offset: float = 0.0
    gradient: list = field(default_factory=lambda: [1.0])
    profile: str = "linear"  # linear | sine
    scale: float = 1.0
    frequency: float = 1.0
    lipschitz: Optional[float] = None
    extension: str = "linear"


@dataclass
class TimeSection:
    dt: float = 0.01
    T: float = 2.0
    times: Optional[list] = None


@dataclass
class StrategySection:
    name: str = "exhaustive"  # exhaustive | greedy
    exhaustive_limit: int = 2**20
    greedy_fallback: bool = False
    candidates: Union[str, list] = "all"  # all | interior | explicit bond ids
    corridor: Optional[list] = None  # [x0, x1] or [x0, x1, y0, y1]
    tie_rule: str = "fewest-then-lexicographic"


@dataclass
class AuditSection:
    stability_tol: float = 1e-9
    balance_factor: float = 10.0
    jump_threshold: float = 0.1
    competitor_policy: str = "exhaustive"  # exhaustive | sampled
    random_competitors: int = 64


@dataclass
class ValidationSection:
    coercivity_waiver: bool = False
    u_min: float = -10.0
    u_max: float = 10.0
    u_points: int = 41
    tail_decades: int = 12
    derivative_samples: int = 100
    fd_rtol: float = 1e-6


@dataclass
class InitialSection:
    crack: list = field(default_factory=list)


@dataclass
class OutputSection:
    directory: str = "out"


_SECTIONS = {
    "geometry": GeometrySection,
    "bulk": BulkSection,
    "toughness": ToughnessSection,
    "load": LoadSection,
    "boundary": BoundarySection,
    "time": TimeSection,
    "strategy": StrategySection,
    "audit": AuditSection,
    "validation": ValidationSection,
    "initial": InitialSection,
    "output": OutputSection,
}


@dataclass
class ProblemSpec:
    geometry: GeometrySection = field(default_factory=GeometrySection)
    bulk: BulkSection = field(default_factory=BulkSection)
    toughness: ToughnessSection = field(default_factory=ToughnessSection)
    load: LoadSection = field(default_factory=LoadSection)
    boundary: BoundarySection = field(default_factory=BoundarySection)
    time: TimeSection = field(default_factory=TimeSection)
    strategy: StrategySection = field(default_factory=StrategySection)
    audit: AuditSection = field(default_factory=AuditSection)
    validation: ValidationSection = field(default_factory=ValidationSection)
    initial: InitialSection = field(default_factory=InitialSection)
    output: OutputSection = field(default_factory=OutputSection)
    seed: int = 0

    def to_dict(self) -> dict:
        return asdict(self)

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=False) + "\n"


def _coerce(where: str, value: Any, hint: Any) -> Any:
    if get_origin(hint) is Union:
        options = get_args(hint)
        if value is None and type(None) in options:
            return None
        for option in options:
            if option is type(None):
                continue
            try:
                return _coerce(where, value, option)
            except ConfigError:
                pass
        raise ConfigError(f"{where}: unexpected value {value!r}")
    if hint is bool:
        if not isinstance(value, bool):
            raise ConfigError(f"{where}: expected true/false, got {value!r}")
        return value
    if isinstance(value, bool):
        raise ConfigError(f"{where}: unexpected boolean")
    if hint is int:
        if not isinstance(value, (int, float)) or int(value) != value:
            raise ConfigError(f"{where}: expected an integer, got {value!r}")
        return int(value)
    if hint is float:
        if not isinstance(value, (int, float)):
            raise ConfigError(f"{where}: expected a number, got {value!r}")
        return float(value)
    if hint is str:
        if not isinstance(value, str):
            raise ConfigError(f"{where}: expected a string, got {value!r}")
        return value
    if hint is list:
        if not isinstance(value, list):
            raise ConfigError(f"{where}: expected a list, got {value!r}")
        return list(value)
    raise ConfigError(f"{where}: unsupported value {value!r}")


def _section(name: str, cls, data: Any):
    if not isinstance(data, dict):
        raise ConfigError(f"section {name!r} must be an object")
    known = {f.name: f for f in fields(cls)}
    unknown = sorted(set(data) - set(known))
    if unknown:
        raise ConfigError(f"unknown key(s) in section {name!r}: {', '.join(unknown)}")
    hints = get_type_hints(cls)
    kwargs = {k: _coerce(f"{name}.{k}", v, hints[k]) for k, v in data.items()}
    return cls(**kwargs)


def spec_from_dict(data: dict) -> ProblemSpec:
    if not isinstance(data, dict):
        raise ConfigError("configuration must be a JSON object")
    unknown = sorted(set(data) - set(_SECTIONS) - {"seed"})
    if unknown:
        raise ConfigError(f"unknown top-level key(s): {', '.join(unknown)}")
    kwargs = {name: _section(name, cls, data[name]) for name, cls in _SECTIONS.items() if name in data}
    if "seed" in data:
        kwargs["seed"] = _coerce("seed", data["seed"], int)
    return ProblemSpec(**kwargs)


def load_spec(path) -> ProblemSpec:
    path = Path(path)
    try:
        data = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}:{exc.lineno}: {exc.msg}") from None
    return spec_from_dict(data)


def canonical_spec(
    kappa: float = 1.0,
    dt: float = 0.01,
    T: float = 2.0,
    cells: int = 4,
    strategy: str = "exhaustive",
) -> ProblemSpec:
    """1D chain on (0, 1), quadratic W with mu = 1, F = 0, w(t) = t at x = 1."""
    return ProblemSpec(
        geometry=GeometrySection(dimension=1, extents=[1.0], cells=[cells]),
        toughness=ToughnessSection(base=kappa),
        time=TimeSection(dt=dt, T=T),
        strategy=StrategySection(name=strategy),
        validation=ValidationSection(coercivity_waiver=True),
    )
