"""Experiment configuration: dataclasses, JSON loading, field-path validation."""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field
from pathlib import Path

from .spaces import ModelSpace, euclidean_space, make_potential, quantile_space

SCHEMA_VERSION = 1


class ConfigError(ValueError):
    """Invalid configuration; ``path`` names the offending field."""

    def __init__(self, path: str, message: str):
        self.path = path
        super().__init__(f"{path}: {message}")


@dataclass(frozen=True)
class SpaceConfig:
    kind: str = "euclidean"
    size: int | None = None  # dimension (default 1) or quantile grid (default 64)
    potential: str = "quadratic"
    kappa: float = 1.0
    box: float = 5.0
    sample_radius: float = 2.0

    def resolved_size(self) -> int:
        if self.size is not None:
            return self.size
        return 1 if self.kind == "euclidean" else 64

    def build(self) -> ModelSpace:
        pot = make_potential(self.potential, self.kappa)
        if self.kind == "euclidean":
            return euclidean_space(pot, dim=self.resolved_size(), box=self.box,
                                   sample_radius=self.sample_radius)
        return quantile_space(pot, grid_size=self.resolved_size(), box=self.box,
                              sample_radius=self.sample_radius)


@dataclass(frozen=True)
class EviConfig:
    instances: int = 200
    delta: float = 1e-4


@dataclass(frozen=True)
class TataruConfig:
    epsilon: float = 1e-2
    instances: int = 500
    pi: tuple = (0.0,)
    mu: tuple = (3.0,)
    dump_objective: bool = False


@dataclass(frozen=True)
class LaplaceConfig:
    epsilon: float = 0.1
    m_list: tuple = (10, 100, 1000, 10000)
    refine_n: tuple = (10, 40, 160)
    refine_m: int = 20
    pi: tuple = (0.0,)
    mu: tuple = (3.0,)
    concentration_m: int = 1000
    concentration_epsilon: float = 1e-3
    concentration_window: float = 0.1
    concentration_mass: float = 0.95


@dataclass(frozen=True)
class HamChainConfig:
    link: str = "1to2"
    samples: int = 500


@dataclass(frozen=True)
class ResolventConfig:
    lam: float = 1.0
    dx: float = 1.0 / 200.0
    dt_factor: float = 50.0
    control_bound: float = 2.0
    n_controls: int = 129
    tol: float = 1e-10
    h: str = "linear_clip"
    h_param: float = 1.0


@dataclass(frozen=True)
class ComparisonConfig:
    pairs: int = 20
    dx: float = 1.0 / 100.0
    lam: float = 1.0


@dataclass(frozen=True)
class ExperimentConfig:
    schema: int = SCHEMA_VERSION
    seed: int = 12345
    out: str = "out"
    space: SpaceConfig = field(default_factory=SpaceConfig)
    evi: EviConfig = field(default_factory=EviConfig)
    tataru: TataruConfig = field(default_factory=TataruConfig)
    laplace: LaplaceConfig = field(default_factory=LaplaceConfig)
    ham_chain: HamChainConfig = field(default_factory=HamChainConfig)
    resolvent: ResolventConfig = field(default_factory=ResolventConfig)
    comparison: ComparisonConfig = field(default_factory=ComparisonConfig)

    def to_dict(self) -> dict:
        return asdict(self)


_SECTIONS = {
    "space": SpaceConfig,
    "evi": EviConfig,
    "tataru": TataruConfig,
    "laplace": LaplaceConfig,
    "ham_chain": HamChainConfig,
    "resolvent": ResolventConfig,
    "comparison": ComparisonConfig,
}


def _build_section(name: str, cls, data: dict):
    if not isinstance(data, dict):
        raise ConfigError(name, "must be an object")
    allowed = set(cls.__dataclass_fields__)
    for key, value in data.items():
        if key not in allowed:
            raise ConfigError(f"{name}.{key}", "unknown field")
        if isinstance(value, list):
            data = {**data, key: tuple(value)}
    try:
        return cls(**data)
    except TypeError as exc:  # pragma: no cover - defensive
        raise ConfigError(name, str(exc)) from exc


def _validate(cfg: ExperimentConfig) -> ExperimentConfig:
    if cfg.schema != SCHEMA_VERSION:
        raise ConfigError("schema", f"unsupported schema version {cfg.schema}")
    if cfg.space.kind not in ("euclidean", "quantile"):
        raise ConfigError("space.kind", f"unknown kind {cfg.space.kind!r}")
    if cfg.space.potential not in ("quadratic", "quartic", "double_well"):
        raise ConfigError("space.potential", f"unknown potential {cfg.space.potential!r}")
    if cfg.space.potential == "double_well" and cfg.space.kappa >= 0:
        raise ConfigError("space.kappa", "double_well requires kappa < 0")
    if cfg.space.size is not None and cfg.space.size < 1:
        raise ConfigError("space.size", "must be >= 1")
    if cfg.space.box <= 0:
        raise ConfigError("space.box", "must be positive")
    if cfg.evi.instances < 1:
        raise ConfigError("evi.instances", "must be >= 1")
    if cfg.evi.delta <= 0:
        raise ConfigError("evi.delta", "must be positive")
    if cfg.tataru.epsilon <= 0:
        raise ConfigError("tataru.epsilon", "must be positive")
    if cfg.laplace.epsilon <= 0:
        raise ConfigError("laplace.epsilon", "must be positive")
    if any(b <= a for a, b in zip(cfg.laplace.m_list, cfg.laplace.m_list[1:])):
        raise ConfigError("laplace.m_list", "must be increasing")
    if cfg.ham_chain.link not in ("1to2", "4to5", "0to1"):
        raise ConfigError("ham_chain.link", f"unknown link {cfg.ham_chain.link!r}")
    if cfg.ham_chain.samples < 1:
        raise ConfigError("ham_chain.samples", "must be >= 1")
    if cfg.resolvent.lam <= 0:
        raise ConfigError("resolvent.lam", "must be positive")
    if cfg.resolvent.dt_factor <= 1:
        raise ConfigError("resolvent.dt_factor", "must exceed 1 (dt < lam)")
    if cfg.resolvent.h not in ("linear_clip", "constant", "fourier"):
        raise ConfigError("resolvent.h", f"unknown h family {cfg.resolvent.h!r}")
    if cfg.comparison.pairs < 1:
        raise ConfigError("comparison.pairs", "must be >= 1")
    return cfg


def config_from_dict(data: dict) -> ExperimentConfig:
    if not isinstance(data, dict):
        raise ConfigError("<root>", "config must be a JSON object")
    kwargs = {}
    for key, value in data.items():
        if key in _SECTIONS:
            kwargs[key] = _build_section(key, _SECTIONS[key], value)
        elif key in ("schema", "seed", "out"):
            kwargs[key] = value
        else:
            raise ConfigError(key, "unknown field")
    return _validate(ExperimentConfig(**kwargs))


def load_config(path: str | Path) -> ExperimentConfig:
    with open(path, "r", encoding="utf-8") as fh:
        data = json.load(fh)
    return config_from_dict(data)


def default_config() -> ExperimentConfig:
    return ExperimentConfig()
