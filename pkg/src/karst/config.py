"""Run configuration: one JSON document, validated before any work starts."""

from __future__ import annotations

import json
import types
import typing
from dataclasses import asdict, dataclass, field, fields, is_dataclass

from .elements.families import canonical_tag
from .estimator import MODES
from .solver import METHODS


class ConfigError(ValueError):
    """Invalid configuration; the message starts with the offending field path."""


@dataclass
class GeometryConfig:
    L: float = 1.0
    H_m: float = 1.0


@dataclass
class MeshConfig:
    nx: int = 8
    ny: int = 8
    grading: float = 1.0
    triangles: bool | None = None  # null: follow the element family
    aspect: float | None = None  # overrides ny/grading when set


@dataclass
class ProblemConfig:
    """A manufactured case by name, or constant sources when ``case`` is null."""

    case: str | None = "layered"
    K: float = 1.0
    D: float = 1.0
    alpha: float = 1.0
    a: float | None = None
    f_m: float = 1.0
    f_c: float = 1.0


@dataclass
class EstimatorConfig:
    mode: str | None = None


@dataclass
class SolverSection:
    method: str = "cg"
    tol: float = 1e-10
    max_iter: int = 20000
    precondition: bool = True


@dataclass
class AdaptConfig:
    max_levels: int = 3
    theta: float = 0.5


@dataclass
class VerifyConfig:
    families: list = field(default_factory=lambda: ["P1", "Q1"])
    convergence_case: str = "smooth"
    n0: int = 8
    levels: int = 4
    sweep_families: list = field(default_factory=lambda: ["P1", "CR1", "Q1", "CR2"])
    sweep_nx: int = 8
    sweep_levels: int = 2
    sweep_alpha: float = 1.0
    sweep_a: float = 2.0  # layered-case constant a, in units of 1/H_m (1 makes the exact exchange flux vanish)
    aspects: list = field(default_factory=lambda: [1, 10, 100, 1000])
    suites: list | None = None


@dataclass
class RunConfig:
    geometry: GeometryConfig = field(default_factory=GeometryConfig)
    mesh: MeshConfig = field(default_factory=MeshConfig)
    family: str = "Q1"
    problem: ProblemConfig = field(default_factory=ProblemConfig)
    estimator: EstimatorConfig = field(default_factory=EstimatorConfig)
    solver: SolverSection = field(default_factory=SolverSection)
    adapt: AdaptConfig = field(default_factory=AdaptConfig)
    verify: VerifyConfig = field(default_factory=VerifyConfig)
    output: str = "out"
    seed: int = 0

    def to_dict(self) -> dict:
        return asdict(self)

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)


# ------------------------------------------------------------------ loading
def _check_scalar(path: str, tp, value):
    origin = typing.get_origin(tp)
    if origin in (typing.Union, types.UnionType):
        args = typing.get_args(tp)
        if value is None and type(None) in args:
            return None
        inner = [a for a in args if a is not type(None)]
        return _check_scalar(path, inner[0], value)
    if tp is bool:
        if not isinstance(value, bool):
            raise ConfigError(f"{path}: expected true/false, got {value!r}")
        return value
    if tp is int:
        if isinstance(value, bool) or not isinstance(value, int):
            raise ConfigError(f"{path}: expected an integer, got {value!r}")
        return value
    if tp is float:
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise ConfigError(f"{path}: expected a number, got {value!r}")
        return float(value)
    if tp is str:
        if not isinstance(value, str):
            raise ConfigError(f"{path}: expected a string, got {value!r}")
        return value
    if tp is list or origin is list:
        if value is None:
            raise ConfigError(f"{path}: expected a list, got null")
        if not isinstance(value, list):
            raise ConfigError(f"{path}: expected a list, got {value!r}")
        return list(value)
    return value


def _build(cls, data, path: str):
    if not isinstance(data, dict):
        raise ConfigError(f"{path or '<root>'}: expected an object, got {type(data).__name__}")
    hints = typing.get_type_hints(cls)
    known = {f.name: f for f in fields(cls)}
    unknown = sorted(set(data) - set(known))
    if unknown:
        where = f"{path}." if path else ""
        raise ConfigError(f"{where}{unknown[0]}: unknown key")
    kw = {}
    for name, value in data.items():
        tp = hints[name]
        sub = f"{path}.{name}" if path else name
        if is_dataclass(tp):
            kw[name] = _build(tp, value, sub)
        else:
            kw[name] = _check_scalar(sub, tp, value)
    try:
        return cls(**kw)
    except TypeError as exc:  # pragma: no cover - all fields have defaults
        raise ConfigError(f"{path}: {exc}") from exc


def validate(cfg: RunConfig) -> RunConfig:
    """Semantic checks beyond types."""
    def need(cond, where, msg):
        if not cond:
            raise ConfigError(f"{where}: {msg}")

    need(cfg.geometry.L > 0, "geometry.L", "must be positive")
    need(cfg.geometry.H_m > 0, "geometry.H_m", "must be positive")
    need(cfg.mesh.nx >= 1, "mesh.nx", "must be at least 1")
    need(cfg.mesh.ny >= 1, "mesh.ny", "must be at least 1")
    need(0 < cfg.mesh.grading <= 1, "mesh.grading", "must lie in (0, 1]")
    need(cfg.mesh.aspect is None or cfg.mesh.aspect >= 1, "mesh.aspect", "must be at least 1")
    try:
        canonical_tag(cfg.family)
    except KeyError as exc:
        raise ConfigError(f"family: {exc.args[0]}") from None
    from .verification.cases import CASES

    need(cfg.problem.case is None or cfg.problem.case in CASES, "problem.case",
         f"unknown case {cfg.problem.case!r}; choose from {', '.join(CASES)} or null")
    need(cfg.problem.K > 0, "problem.K", "must be positive")
    need(cfg.problem.D > 0, "problem.D", "must be positive")
    need(cfg.problem.alpha >= 0, "problem.alpha", "must be nonnegative")
    need(cfg.estimator.mode is None or cfg.estimator.mode in MODES, "estimator.mode",
         f"must be one of {', '.join(MODES)}")
    need(cfg.solver.method in METHODS or cfg.solver.method in
         ("conjugate-gradient", "dense-direct", "sparse-direct"), "solver.method", "unknown method")
    need(0 < cfg.solver.tol < 1, "solver.tol", "must lie in (0, 1)")
    need(cfg.solver.max_iter >= 1, "solver.max_iter", "must be at least 1")
    need(cfg.adapt.max_levels >= 1, "adapt.max_levels", "must be at least 1")
    need(0 < cfg.adapt.theta <= 1, "adapt.theta", "must lie in (0, 1]")
    for i, fam in enumerate(cfg.verify.families + cfg.verify.sweep_families):
        try:
            canonical_tag(fam)
        except KeyError as exc:
            raise ConfigError(f"verify.families[{i}]: {exc.args[0]}") from None
    need(cfg.verify.convergence_case in CASES, "verify.convergence_case", "unknown case")
    need(cfg.verify.levels >= 2, "verify.levels", "a study needs at least two levels")
    need(cfg.verify.sweep_alpha >= 0, "verify.sweep_alpha", "must be nonnegative")
    need(cfg.verify.n0 >= 1 and cfg.verify.sweep_nx >= 1, "verify.n0", "mesh sizes must be at least 1")
    need(cfg.verify.sweep_levels >= 2, "verify.sweep_levels", "a study needs at least two levels")
    need(all(isinstance(a, (int, float)) and a >= 1 for a in cfg.verify.aspects), "verify.aspects",
         "aspect ratios must be numbers >= 1")
    if cfg.verify.suites is not None:
        from .verification.properties import SUITES

        bad = [s for s in cfg.verify.suites if s not in SUITES]
        need(not bad, "verify.suites", f"unknown suite(s) {bad}; choose from {', '.join(SUITES)}")
    need(cfg.seed >= 0, "seed", "must be nonnegative")
    return cfg


def config_from_dict(data: dict) -> RunConfig:
    return validate(_build(RunConfig, data, ""))


def load_config(path) -> RunConfig:
    try:
        with open(path) as fh:
            data = json.load(fh)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"<root>: {path} is not valid JSON ({exc})") from None
    return config_from_dict(data)


def _parse_value(text: str):
    try:
        return json.loads(text)
    except json.JSONDecodeError:
        return text


def apply_overrides(cfg: RunConfig, items) -> RunConfig:
    """Apply ``key.sub=value`` overrides; values are parsed as JSON when possible."""
    data = cfg.to_dict()
    for item in items or ():
        if "=" not in item:
            raise ConfigError(f"{item}: override must look like key=value")
        key, text = item.split("=", 1)
        parts = key.strip().split(".")
        node = data
        for i, p in enumerate(parts[:-1]):
            if not isinstance(node.get(p), dict):
                raise ConfigError(f"{'.'.join(parts[:i + 1])}: unknown key")
            node = node[p]
        if parts[-1] not in node:
            raise ConfigError(f"{key}: unknown key")
        node[parts[-1]] = _parse_value(text)
    return config_from_dict(data)


__all__ = [
    "ConfigError", "RunConfig", "GeometryConfig", "MeshConfig", "ProblemConfig", "EstimatorConfig",
    "SolverSection", "AdaptConfig", "VerifyConfig", "config_from_dict", "load_config",
    "apply_overrides", "validate",
]
