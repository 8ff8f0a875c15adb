"""Experiment configuration: YAML documents, defaults, env overrides."""
from __future__ import annotations

import math
import os
from dataclasses import asdict, dataclass, field, fields, is_dataclass
from typing import Any, Optional

import yaml

ENV_PREFIX = "IPMLAB_"


class ConfigError(ValueError):
    def __init__(self, path: str, message: str):
        super().__init__(f"{path}: {message}" if path else message)
        self.path = path


@dataclass(frozen=True)
class GridSection:
    n: int = 512
    L: float = 4.0


@dataclass(frozen=True)
class SeedSection:
    N: list = field(default_factory=lambda: [16, 36, 64])
    x0: list = field(default_factory=lambda: [0.0, 0.0])
    strict_resolution: bool = False


@dataclass(frozen=True)
class ProfileSection:
    gamma: float = 1.0
    # optional tabulated g'(x2) on the grid's x2 samples; overrides gamma
    gprime: Optional[list] = None


@dataclass(frozen=True)
class SolverSection:
    T: Optional[float] = None  # fixed horizon; None means t_N = kappa / sqrt(N)
    kappa: float = 0.1
    cfl_number: float = 0.5
    dt_max: float = 1e-2
    dealias: bool = True
    output_stride: int = 1
    particle_stride: int = 1


@dataclass(frozen=True)
class BesovSection:
    p: float = 2.0


@dataclass(frozen=True)
class OutputSection:
    dir: str = "runs"
    svg: bool = True


@dataclass(frozen=True)
class Tolerances:
    operator_identity: float = 1e-6
    partition: float = 1e-12
    bernstein_spread: float = 0.10
    steady: float = 1e-10
    conservation: float = 1e-6
    rk4_order: float = 3.8
    wlinf_ratio: float = 2.0
    besov_low_ratio: float = 3.0
    besov_high_ratio: float = 3.0
    slope_rel: float = 0.15
    eps_slope: float = 0.15
    m_ratio: float = 2.0
    growth_window: float = 0.25


@dataclass(frozen=True)
class Constants:
    C: float = 1.0
    c_g: Optional[float] = None  # None: measured ||g'||_{B^{2/p+1}_{p,1}}


@dataclass(frozen=True)
class ExperimentConfig:
    grid: GridSection = field(default_factory=GridSection)
    seed: SeedSection = field(default_factory=SeedSection)
    profile: ProfileSection = field(default_factory=ProfileSection)
    solver: SolverSection = field(default_factory=SolverSection)
    besov: BesovSection = field(default_factory=BesovSection)
    output: OutputSection = field(default_factory=OutputSection)
    tolerances: Tolerances = field(default_factory=Tolerances)
    constants: Constants = field(default_factory=Constants)

    def horizon(self, N: int) -> float:
        if self.solver.T is not None:
            return self.solver.T
        return self.solver.kappa / math.sqrt(N)

    def to_dict(self) -> dict:
        return asdict(self)

    def dump(self) -> str:
        return yaml.safe_dump(self.to_dict(), sort_keys=True)


# ---------------------------------------------------------------------------

_NUMBER = (int, float)


def _coerce(path: str, value: Any, default: Any, annotation: str):
    if value is None:
        if "Optional" in annotation:
            return None
        raise ConfigError(path, "null is not allowed here")
    if isinstance(default, bool) or annotation == "bool":
        if not isinstance(value, bool):
            raise ConfigError(path, f"expected a boolean, got {type(value).__name__}")
        return value
    if annotation == "int":
        if isinstance(value, bool) or not isinstance(value, int):
            raise ConfigError(path, f"expected an integer, got {type(value).__name__}")
        return value
    if "float" in annotation:
        if isinstance(value, bool) or not isinstance(value, _NUMBER):
            raise ConfigError(path, f"expected a number, got {type(value).__name__}")
        return float(value)
    if annotation == "str":
        if not isinstance(value, str):
            raise ConfigError(path, f"expected a string, got {type(value).__name__}")
        return value
    if "list" in annotation:
        if not isinstance(value, list):
            raise ConfigError(path, f"expected a list, got {type(value).__name__}")
        return list(value)
    return value


def _build(cls, data: Any, path: str):
    if data is None:
        data = {}
    if not isinstance(data, dict):
        raise ConfigError(path, f"expected a mapping, got {type(data).__name__}")
    known = {f.name: f for f in fields(cls)}
    for key in data:
        if key not in known:
            where = f"{path}.{key}" if path else str(key)
            raise ConfigError(where, "unknown key")
    proto = cls()
    kwargs = {}
    for name, f in known.items():
        sub = f"{path}.{name}" if path else name
        default = getattr(proto, name)
        if name not in data:
            continue
        if is_dataclass(default):
            kwargs[name] = _build(type(default), data[name], sub)
        else:
            kwargs[name] = _coerce(sub, data[name], default, str(f.type))
    return cls(**kwargs)


def _validate(cfg: ExperimentConfig) -> None:
    n = cfg.grid.n
    if n < 16 or n & (n - 1):
        raise ConfigError("grid.n", f"must be a power of two >= 16, got {n}")
    if not cfg.grid.L > 0:
        raise ConfigError("grid.L", "must be positive")
    Ns = cfg.seed.N
    for i, N in enumerate(Ns):
        if isinstance(N, bool) or not isinstance(N, int) or N < 1:
            raise ConfigError(f"seed.N[{i}]", f"must be a positive integer, got {N!r}")
    if len(cfg.seed.x0) != 2 or not all(isinstance(v, _NUMBER) for v in cfg.seed.x0):
        raise ConfigError("seed.x0", "must be a pair of numbers")
    reach = max(abs(cfg.seed.x0[0]), abs(cfg.seed.x0[1])) + 2.0
    if reach > 0.75 * cfg.grid.L:
        raise ConfigError("seed.x0", f"cutoff support leaves less than L/4 margin; need L >= {reach / 0.75:g}")
    if cfg.seed.strict_resolution:
        h = 2 * cfg.grid.L / n
        for i, N in enumerate(Ns):
            if 2.0 ** (-N / 2) < 4 * h:
                need = 2 ** math.ceil(math.log2(8 * cfg.grid.L * 2.0 ** (N / 2)))
                raise ConfigError(f"seed.N[{i}]", f"N={N} is unresolved at n={n}; need n >= {need}")
    if cfg.profile.gprime is not None and len(cfg.profile.gprime) != n:
        raise ConfigError("profile.gprime", f"tabulated g' needs {n} samples")
    s = cfg.solver
    if s.T is not None and s.T < 0:
        raise ConfigError("solver.T", "must be nonnegative")
    if s.kappa < 0:
        raise ConfigError("solver.kappa", "must be nonnegative")
    if not 0 < s.cfl_number <= 1:
        raise ConfigError("solver.cfl_number", "must lie in (0, 1]")
    if not s.dt_max > 0:
        raise ConfigError("solver.dt_max", "must be positive")
    if s.output_stride < 1:
        raise ConfigError("solver.output_stride", "must be >= 1")
    if s.particle_stride < 1:
        raise ConfigError("solver.particle_stride", "must be >= 1")
    if not 2 <= cfg.besov.p < math.inf:
        raise ConfigError("besov.p", "must lie in [2, inf)")


def config_from_dict(data: Any) -> ExperimentConfig:
    cfg = _build(ExperimentConfig, data, "")
    _validate(cfg)
    return cfg


def parse_config(text: str) -> ExperimentConfig:
    try:
        data = yaml.safe_load(text) if text.strip() else {}
    except yaml.YAMLError as exc:
        raise ConfigError("", f"malformed document: {exc}") from None
    return config_from_dict(data)


def normalize(text: str) -> dict:
    """Canonical dict form of a document: defaults filled in."""
    return parse_config(text).to_dict()


def _merge(base: dict, path: list[str], value) -> None:
    node = base
    for key in path[:-1]:
        node = node.setdefault(key, {})
        if not isinstance(node, dict):
            raise ConfigError(".".join(path), "override target is not a section")
    node[path[-1]] = value


def apply_overrides(cfg: ExperimentConfig, overrides: dict[str, Any]) -> ExperimentConfig:
    """Apply dotted-path overrides such as ``{"grid.n": 256}``."""
    data = cfg.to_dict()
    for dotted, value in overrides.items():
        _merge(data, dotted.split("."), value)
    return config_from_dict(data)


def _env_path(key: str) -> str:
    section, _, name = key[len(ENV_PREFIX):].partition("__")
    sections = {f.name: f.name for f in fields(ExperimentConfig)}
    sec = sections.get(section.lower())
    if sec is None:
        raise ConfigError(key, "unknown section in environment override")
    names = {f.name.lower(): f.name for f in fields(type(getattr(ExperimentConfig(), sec)))}
    if name.lower() not in names:
        raise ConfigError(f"{sec}.{name.lower()}", "unknown key in environment override")
    return f"{sec}.{names[name.lower()]}"


def env_overrides(environ=None) -> dict[str, Any]:
    """IPMLAB_GRID__N=256 -> {"grid.n": 256}; values parsed as YAML scalars."""
    environ = os.environ if environ is None else environ
    out = {}
    for key in sorted(environ):
        if not key.startswith(ENV_PREFIX) or "__" not in key:
            continue
        dotted = _env_path(key)
        try:
            out[dotted] = yaml.safe_load(environ[key])
        except yaml.YAMLError as exc:
            raise ConfigError(dotted, f"bad environment value: {exc}") from None
    return out


def load_config(path: str | None = None, environ=None, overrides: dict | None = None) -> ExperimentConfig:
    text = ""
    if path is not None:
        try:
            with open(path, encoding="utf-8") as fh:
                text = fh.read()
        except OSError as exc:
            raise ConfigError("", f"cannot read config {path}: {exc}") from None
    cfg = parse_config(text)
    env = env_overrides(environ)
    if env:
        cfg = apply_overrides(cfg, env)
    if overrides:
        cfg = apply_overrides(cfg, overrides)
    return cfg
