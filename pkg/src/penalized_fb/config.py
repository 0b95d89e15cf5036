"""Run configuration files.

Format: one ``key = value`` per line, ``#`` starts a comment, dotted keys
group settings (``solver.tol_energy = 1e-9``).  Lists are comma separated.
Numbers may be written as fractions (``h = 1/64``).  Boundary segments take a
constant or an expression in ``x``, ``y``, ``r``, ``theta``:

    boundary.segment.top = b * maximum(1 - x/l, 0)
"""

from __future__ import annotations

import inspect
import math
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path
from typing import Any, Callable, Iterable

from .problems import PROBLEMS, Problem, SegmentError, build_problem
from .solver import SolverConfig

__all__ = ["ConfigError", "RunConfig", "parse_config", "parse_config_text", "apply_overrides", "ALL_CHECKS"]

ALL_CHECKS = (
    "volume_attainment",
    "overshoot",
    "radial_oracle",
    "lambda_bounds",
    "replacement_inequality",
    "density_bounds",
    "linear_growth",
    "blowup",
    "flatness_decay",
    "asymptotic_development",
    "structural",
)


class ConfigError(ValueError):
    def __init__(self, message: str, key: str | None = None, line: int | str | None = None):
        where = []
        if key is not None:
            where.append(f"key {key!r}")
        if line is not None:
            where.append(f"line {line}")
        prefix = f"{', '.join(where)}: " if where else ""
        super().__init__(prefix + message)
        self.key = key
        self.line = line


def _number(text: str) -> float:
    try:
        return float(text)
    except ValueError:
        return float(Fraction(text.replace(" ", "")))


def _as_float(text: str) -> float:
    v = _number(text)
    if not math.isfinite(v):
        raise ValueError("must be finite")
    return v


def _as_int(text: str) -> int:
    v = _number(text)
    if v != int(v):
        raise ValueError("must be an integer")
    return int(v)


def _as_bool(text: str) -> bool:
    low = text.strip().lower()
    if low in ("1", "true", "yes", "on"):
        return True
    if low in ("0", "false", "no", "off"):
        return False
    raise ValueError("must be a boolean")


def _as_str(text: str) -> str:
    text = text.strip()
    if len(text) >= 2 and text[0] == text[-1] and text[0] in "\"'":
        text = text[1:-1]
    if not text:
        raise ValueError("must be nonempty")
    return text


def _as_float_list(text: str) -> list[float]:
    return [_as_float(t) for t in text.split(",") if t.strip()]


def _as_str_list(text: str) -> list[str]:
    return [_as_str(t) for t in text.split(",") if t.strip()]


def _opt(conv: Callable[[str], Any]) -> Callable[[str], Any]:
    def parse(text: str):
        return None if text.strip().lower() in ("none", "") else conv(text)

    return parse


def _segment_value(text: str):
    try:
        return _as_float(text)
    except (ValueError, ZeroDivisionError):
        return _as_str(text)


_TOP = {
    "problem": _as_str,
    "p": _as_float,
    "alpha": _as_float,
    "epsilon_list": _as_float_list,
    "output_dir": _as_str,
    "seed": _as_int,
    "warm_start": _as_bool,
    "vol_tol": _opt(_as_float),
}
_GEOMETRY = {
    "n": _as_int,
    "nx": _as_int,
    "ny": _as_int,
    "h": _as_float,
    "b": _as_float,
    "inner_radius": _as_float,
    "outer_radius": _as_float,
    "radius": _as_float,
}
_BOUNDARY = {"contact_tag": _opt(_as_str), "c0": _as_float}
_SOLVER = {
    "eta": _opt(_as_float),
    "max_outer": _as_int,
    "relax_iters": _as_int,
    "tol_energy": _as_float,
    "toggle_passes": _as_int,
    "toggle_radius": _opt(_as_int),
    "relax_method": _as_str,
    "newton_tol": _as_float,
    "newton_maxiter": _as_int,
}
_VERIFY = {"checks": _as_str_list}
_REQUIRED = ("problem", "epsilon_list")


@dataclass
class RunConfig:
    problem: str
    epsilon_list: list[float]
    p: float = 2.0
    alpha: float = 0.5
    geometry: dict[str, Any] = field(default_factory=dict)
    segments: dict[str, Any] = field(default_factory=dict)
    contact_tag: str | None = None
    c0: float | None = None
    solver: dict[str, Any] = field(default_factory=dict)
    output_dir: str = "out"
    seed: int = 0
    warm_start: bool = False
    vol_tol: float | None = None
    checks: list[str] = field(default_factory=lambda: list(ALL_CHECKS))
    lines: dict[str, int | str] = field(default_factory=dict, repr=False, compare=False)

    def __post_init__(self):
        self.validate()

    def _fail(self, message: str, key: str):
        raise ConfigError(message, key, self.lines.get(key))

    def validate(self) -> None:
        if self.problem not in PROBLEMS:
            self._fail(f"unknown problem {self.problem!r}; choose from {sorted(PROBLEMS)}", "problem")
        if not self.epsilon_list:
            self._fail("epsilon_list must be nonempty", "epsilon_list")
        if any(not e > 0 for e in self.epsilon_list):
            self._fail("epsilon_list entries must be strictly positive", "epsilon_list")
        self.epsilon_list = sorted(self.epsilon_list, reverse=True)
        if not self.p > 1:
            self._fail("p must exceed 1", "p")
        if not self.alpha > 0:
            self._fail("alpha must be positive", "alpha")
        if self.vol_tol is not None and not self.vol_tol > 0:
            self._fail("vol_tol must be positive", "vol_tol")
        unknown = [c for c in self.checks if c not in ALL_CHECKS]
        if unknown:
            self._fail(f"unknown checks {unknown}; choose from {list(ALL_CHECKS)}", "verify.checks")
        accepted = inspect.signature(PROBLEMS[self.problem]).parameters
        for key in self.geometry:
            if key not in accepted or key in ("p", "epsilon", "alpha", "segments", "contact_tag", "c0"):
                self._fail(f"not a geometry parameter of {self.problem}", f"geometry.{key}")
        try:
            self.solver_config()
        except ValueError as exc:
            key = next(iter(self.solver), None)
            self._fail(str(exc), f"solver.{key}" if key else "solver")
        try:
            prob = self.build()
        except ConfigError:
            raise
        except ValueError as exc:
            self._fail(str(exc), "geometry")
        if not prob.alpha < prob.domain.area:
            self._fail(f"alpha={self.alpha} gives a target area {prob.alpha} not below the domain area {prob.domain.area}", "alpha")

    def build(self, epsilon: float | None = None) -> Problem:
        builder = PROBLEMS[self.problem]
        accepted = inspect.signature(builder).parameters
        kwargs = dict(self.geometry)
        kwargs["alpha"] = self.alpha
        if self.segments:
            kwargs["segments"] = dict(self.segments)
        if self.contact_tag is not None:
            kwargs["contact_tag"] = self.contact_tag
        if self.c0 is not None and "c0" in accepted:
            kwargs["c0"] = self.c0
        try:
            return build_problem(self.problem, epsilon=epsilon, p=self.p, **kwargs)
        except SegmentError as exc:
            key = f"boundary.segment.{exc.tag}"
            raise ConfigError(str(exc), key, self.lines.get(key)) from exc
        except (ValueError, KeyError) as exc:
            key = "boundary" if ("segment" in str(exc) or "contact" in str(exc) or "c0" in str(exc)) else "geometry"
            raise ConfigError(str(exc), key, self.lines.get(key)) from exc

    def solver_config(self) -> SolverConfig:
        return SolverConfig(p=self.p, seed=self.seed, **self.solver)


def _route(key: str):
    """Return (section, name, converter) for a dotted key, or None."""
    if key in _TOP:
        return ("top", key, _TOP[key])
    head, _, rest = key.partition(".")
    if head == "geometry" and rest in _GEOMETRY:
        return ("geometry", rest, _GEOMETRY[rest])
    if head == "solver" and rest in _SOLVER:
        return ("solver", rest, _SOLVER[rest])
    if head == "verify" and rest in _VERIFY:
        return ("verify", rest, _VERIFY[rest])
    if head == "boundary":
        if rest in _BOUNDARY:
            return ("boundary", rest, _BOUNDARY[rest])
        sub, _, tag = rest.partition(".")
        if sub == "segment" and tag:
            return ("segment", tag, _segment_value)
    return None


def _collect(entries: Iterable[tuple[str, str, int | str]], base: dict | None = None) -> dict:
    raw = {} if base is None else base
    for key, value, line in entries:
        route = _route(key)
        if route is None:
            raise ConfigError("unknown key", key, line)
        section, name, conv = route
        try:
            parsed = conv(value)
        except (ValueError, ZeroDivisionError) as exc:
            raise ConfigError(f"bad value {value.strip()!r}: {exc}", key, line) from None
        raw[key] = (section, name, parsed, line)
    return raw


def _assemble(raw: dict) -> RunConfig:
    for key in _REQUIRED:
        if key not in raw:
            raise ConfigError("missing required key", key)
    kw: dict[str, Any] = {"geometry": {}, "segments": {}, "solver": {}, "lines": {}}
    for key, (section, name, value, line) in raw.items():
        kw["lines"][key] = line
        if section == "top":
            kw[name] = value
        elif section == "geometry":
            kw["geometry"][name] = value
        elif section == "solver":
            kw["solver"][name] = value
        elif section == "segment":
            kw["segments"][name] = value
            kw["lines"].setdefault("boundary", line)
        elif section == "boundary":
            kw[name] = value
            kw["lines"].setdefault("boundary", line)
        elif section == "verify":
            kw[name] = value
    for key, (section, _, _, line) in raw.items():
        if section == "geometry":
            kw["lines"].setdefault("geometry", line)
    return RunConfig(**kw)


def _lines(text: str):
    for lineno, line in enumerate(text.splitlines(), start=1):
        body = line.split("#", 1)[0].strip()
        if not body:
            continue
        if "=" not in body:
            raise ConfigError("expected 'key = value'", None, lineno)
        key, value = body.split("=", 1)
        key = key.strip()
        if not key:
            raise ConfigError("empty key", None, lineno)
        yield key, value, lineno


def parse_config_text(text: str, overrides: Iterable[str] = ()) -> RunConfig:
    raw = _collect(_lines(text))
    return _assemble(_collect(_override_entries(overrides), raw))


def parse_config(path, overrides: Iterable[str] = ()) -> RunConfig:
    return parse_config_text(Path(path).read_text(), overrides)


def _override_entries(overrides: Iterable[str]):
    for item in overrides:
        if "=" not in item:
            raise ConfigError(f"override {item!r} is not key=value", None, "--set")
        key, value = item.split("=", 1)
        yield key.strip(), value, "--set"


def apply_overrides(config: RunConfig, overrides: Iterable[str]) -> RunConfig:
    """New config with ``key=value`` overrides applied on top of ``config``."""
    raw = _collect(_lines(_serialize(config)))
    return _assemble(_collect(_override_entries(overrides), raw))


def _fmt(v) -> str:
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        return repr(v)
    if isinstance(v, (list, tuple)):
        return ", ".join(_fmt(x) for x in v)
    return str(v)


def _serialize(config: RunConfig) -> str:
    out = [f"problem = {config.problem}", f"epsilon_list = {_fmt(config.epsilon_list)}", f"p = {_fmt(config.p)}", f"alpha = {_fmt(config.alpha)}"]
    out += [f"output_dir = {config.output_dir}", f"seed = {config.seed}", f"warm_start = {_fmt(config.warm_start)}"]
    if config.vol_tol is not None:
        out.append(f"vol_tol = {_fmt(config.vol_tol)}")
    out += [f"geometry.{k} = {_fmt(v)}" for k, v in config.geometry.items()]
    out += [f"boundary.segment.{k} = {_fmt(v)}" for k, v in config.segments.items()]
    if config.contact_tag is not None:
        out.append(f"boundary.contact_tag = {config.contact_tag}")
    if config.c0 is not None:
        out.append(f"boundary.c0 = {_fmt(config.c0)}")
    out += [f"solver.{k} = {_fmt(v)}" for k, v in config.solver.items()]
    out.append(f"verify.checks = {_fmt(config.checks)}")
    return "\n".join(out) + "\n"
