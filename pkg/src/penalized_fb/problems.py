"""Standard test problems: domain, Dirichlet data and target positivity area."""

from __future__ import annotations

import inspect
import math
from dataclasses import dataclass
from typing import Callable, Mapping

import numpy as np

from .grid import BoundaryData, GridDomain, build_annulus, build_halfdisk, build_rectangle

__all__ = [
    "Problem",
    "PROBLEMS",
    "interval_1d",
    "strip_2d",
    "square_2d",
    "annulus_2d",
    "halfdisk",
    "build_problem",
    "compile_expression",
    "SegmentError",
]


@dataclass(frozen=True)
class Problem:
    name: str
    domain: GridDomain
    bdata: BoundaryData
    alpha: float
    lambda_star: float | None = None
    support_radius: float | None = None


_MATH = {
    "np": np,
    "pi": math.pi,
    "e": math.e,
    "sqrt": np.sqrt,
    "exp": np.exp,
    "log": np.log,
    "sin": np.sin,
    "cos": np.cos,
    "abs": np.abs,
    "hypot": np.hypot,
    "arctan2": np.arctan2,
    "maximum": np.maximum,
    "minimum": np.minimum,
    "clip": np.clip,
    "where": np.where,
}


def compile_expression(expr: str, constants: Mapping[str, float] | None = None) -> Callable:
    """Turn ``expr`` in ``x``, ``y`` (and ``r``, ``theta``) into a vectorized callable.

    Only numpy math functions and the given constants are visible.
    """
    code = compile(expr, "<boundary expression>", "eval")
    allowed = set(_MATH) | {"x", "y", "r", "theta"} | set(constants or {})
    unknown = set(code.co_names) - allowed
    if unknown:
        raise ValueError(f"unknown names in expression {expr!r}: {sorted(unknown)}")
    scope = dict(_MATH)
    scope.update(constants or {})

    def f(X, Y):
        env = dict(scope, x=X, y=Y, r=np.hypot(X, Y), theta=np.arctan2(Y, X))
        out = eval(code, {"__builtins__": {}}, env)
        return np.broadcast_to(np.asarray(out, dtype=float), np.shape(X))

    return f


class SegmentError(ValueError):
    """Bad data for one boundary segment; ``tag`` names it."""

    def __init__(self, tag: str, message: str):
        super().__init__(f"segment {tag!r}: {message}")
        self.tag = tag


def _segments(defaults: Mapping, overrides: Mapping | None, constants: Mapping) -> dict:
    segs = dict(defaults)
    for tag, val in (overrides or {}).items():
        if tag not in defaults:
            raise SegmentError(tag, f"no such segment; have {sorted(defaults)}")
        try:
            segs[tag] = compile_expression(val, constants) if isinstance(val, str) else float(val)
        except (SyntaxError, ValueError) as exc:
            raise SegmentError(tag, str(exc)) from None
    return segs


def interval_1d(n: int = 256, b: float = 1.0, alpha: float = 0.5, segments=None, contact_tag="left", c0=None) -> Problem:
    """Unit interval with ``u(0) = b`` (contact side) and ``u(1) = 0``."""
    d = build_rectangle(n, 1, 1.0 / (n - 1))
    segs = _segments({"left": b, "right": 0.0}, segments, {"b": b, "alpha": alpha})
    bd = BoundaryData.from_segments(d, segs, contact_tag=contact_tag, c0=c0)
    return Problem("interval_1d", d, bd, alpha, lambda_star=b / alpha)


def strip_2d(
    nx: int = 81,
    ny: int = 41,
    h: float | None = None,
    b: float = 1.0,
    alpha: float = 0.5,
    p: float = 2.0,
    epsilon: float | None = None,
    segments=None,
    contact_tag="left",
    c0=None,
) -> Problem:
    """Rectangle ``[0, 1] x [0, (ny-1) h]`` carrying the 1D ramp problem in ``x``.

    Left side ``b``, right side 0.  Bottom and top carry the ramp
    ``b * max(1 - x/l, 0)`` of the one-dimensional minimizer for ``epsilon``
    (the target length when ``epsilon`` is None), rounded to whole columns
    with ``l`` one node past the last positive column.  Dirichlet energy and
    penalty both scale with the height, so the 1D minimizer extended in ``y``
    solves the strip problem.  ``alpha`` is a length; the target area is
    ``alpha`` in whole columns times the interior height.
    """
    from .oracles import oracle_1d_minimizer

    h = 1.0 / (nx - 1) if h is None else h
    d = build_rectangle(nx, ny, h)
    cols = max(int(round(alpha / h)), 1)
    area = cols * (ny - 2) * h * h
    length = cols * h
    if epsilon is not None:
        s_star = oracle_1d_minimizer(b, p, epsilon, alpha).s_star
        length = max(int(round(s_star / h)), 1) * h
    ell = length + h
    ramp = lambda X, Y: b * np.maximum(1.0 - X / ell, 0.0)
    segs = _segments({"left": b, "right": 0.0, "bottom": ramp, "top": ramp}, segments, {"b": b, "alpha": alpha, "l": ell})
    bd = BoundaryData.from_segments(d, segs, contact_tag=contact_tag, c0=c0)
    return Problem("strip_2d", d, bd, area, lambda_star=b / ell)


def square_2d(n: int = 65, b: float = 1.0, alpha: float = 0.3, segments=None, contact_tag="left", c0=None) -> Problem:
    """Unit square, ``b`` on the left side and 0 elsewhere."""
    d = build_rectangle(n, n, 1.0 / (n - 1))
    segs = _segments({"left": b, "right": 0.0, "bottom": 0.0, "top": 0.0}, segments, {"b": b, "alpha": alpha})
    bd = BoundaryData.from_segments(d, segs, contact_tag=contact_tag, c0=c0)
    return Problem("square_2d", d, bd, alpha)


def annulus_2d(
    inner_radius: float = 1.0, outer_radius: float = 2.0, h: float = 1.0 / 32, c0: float = 1.0, alpha: float = 0.5, segments=None, contact_tag="inner"
) -> Problem:
    """Ring with ``c0`` on the inner circle (contact) and 0 on the outer one."""
    d = build_annulus(inner_radius, outer_radius, h)
    segs = _segments({"inner": c0, "outer": 0.0}, segments, {"c0": c0, "alpha": alpha})
    bd = BoundaryData.from_segments(d, segs, contact_tag=contact_tag, c0=c0)
    return Problem("annulus_2d", d, bd, alpha)


def halfdisk(radius: float = 1.0, h: float = 1.0 / 64, alpha: float = 0.5, segments=None, contact_tag=None, c0=None) -> Problem:
    """Upper half-disk with data ``y`` on the arc and 0 on the flat side."""
    d = build_halfdisk(radius, h)
    segs = _segments({"flat": 0.0, "arc": lambda X, Y: np.maximum(Y, 0.0)}, segments, {"alpha": alpha})
    bd = BoundaryData.from_segments(d, segs, contact_tag=contact_tag, c0=c0)
    return Problem("halfdisk", d, bd, alpha)


PROBLEMS: dict[str, Callable[..., Problem]] = {
    "interval_1d": interval_1d,
    "strip_2d": strip_2d,
    "square_2d": square_2d,
    "annulus_2d": annulus_2d,
    "halfdisk": halfdisk,
}


def build_problem(name: str, epsilon: float | None = None, p: float | None = None, **kwargs) -> Problem:
    """Build a named problem; ``epsilon`` and ``p`` reach builders whose data depend on them."""
    try:
        builder = PROBLEMS[name]
    except KeyError:
        raise ValueError(f"unknown problem {name!r}; choose from {sorted(PROBLEMS)}") from None
    accepted = inspect.signature(builder).parameters
    if epsilon is not None and "epsilon" in accepted:
        kwargs["epsilon"] = epsilon
    if p is not None and "p" in accepted:
        kwargs["p"] = p
    return builder(**kwargs)
