"""Real functions on [0, 1] with a.e. derivatives.

:class:`RealFunc` is the common interface (value, derivative, boundary
values, optional Lipschitz bound). :class:`PiecewiseLinear` and
:class:`StepFunction` are exact representations; the named closed forms used
throughout the package are built by the ``make_*`` helpers and
:func:`from_name`.
"""
from __future__ import annotations

import math
import re
from fractions import Fraction
from typing import Callable, Sequence

import numpy as np

KINDS = ("closed-form", "piecewise-linear", "antiderivative", "mollified")


class RealFunc:
    """A function ``u`` on [0, 1] with derivative access.

    ``deriv`` is only defined almost everywhere: points listed in
    ``undefined_points`` return NaN, and at interior ``breakpoints`` the
    right-hand derivative is returned. Both lists are forwarded to the
    quadrature so that it splits panels there.
    """

    def __init__(
        self,
        func: Callable,
        deriv: Callable,
        kind: str = "closed-form",
        *,
        lipschitz_bound: float | None = None,
        undefined_points: Sequence[float] = (),
        breakpoints: Sequence[float] = (),
        name: str | None = None,
        boundary: tuple[float, float] | None = None,
    ):
        if kind not in KINDS:
            raise ValueError(f"unknown kind {kind!r}")
        if lipschitz_bound is not None and lipschitz_bound < 0:
            raise ValueError("lipschitz_bound must be nonnegative")
        self._func = func
        self._deriv = deriv
        self.kind = kind
        self.lipschitz_bound = lipschitz_bound
        self.undefined_points = tuple(float(p) for p in undefined_points)
        self.breakpoints = tuple(sorted(float(p) for p in breakpoints))
        self.name = name
        self._boundary = boundary

    def __call__(self, x):
        return self.eval(x)

    def eval(self, x):
        x = np.asarray(x, dtype=float)
        return self._func(x)

    def deriv(self, x):
        x = np.asarray(x, dtype=float)
        with np.errstate(divide="ignore", invalid="ignore"):
            d = np.asarray(self._deriv(x), dtype=float)
        if self.undefined_points:
            d = np.where(np.isin(x, self.undefined_points), np.nan, d)
        return d[()] if d.ndim == 0 else d

    @property
    def boundary_left(self) -> float:
        if self._boundary is not None:
            return self._boundary[0]
        return float(self.eval(0.0))

    @property
    def boundary_right(self) -> float:
        if self._boundary is not None:
            return self._boundary[1]
        return float(self.eval(1.0))

    def to_json(self) -> dict:
        if self.name is None:
            raise ValueError(f"{self.kind} function has no serializable name")
        return {"kind": self.kind, "name": self.name}

    def __repr__(self):
        label = self.name or hex(id(self))
        return f"RealFunc({self.kind}, {label})"


def _sqrt_family(scale: float, name: str) -> RealFunc:
    def f(x):
        return scale * np.sqrt(x)

    def df(x):
        return scale / (2.0 * np.sqrt(x))

    return RealFunc(f, df, undefined_points=(0.0,), name=name)


def make_sqrt() -> RealFunc:
    return _sqrt_family(1.0, "sqrt")


def make_sqrt_quarter_half() -> tuple[RealFunc, RealFunc]:
    """The two parabolas ``sqrt(x)/4`` and ``sqrt(x)/2``."""
    return _sqrt_family(0.25, "sqrt_quarter"), _sqrt_family(0.5, "sqrt_half")


def minimizing_sequence_member(n: int) -> RealFunc:
    """``u_n(x) = sqrt(x) + x(x - 1)/n``; admissible, energy tends to 0."""
    if int(n) != n or n < 1:
        raise ValueError(f"n must be a positive integer, got {n!r}")
    n = int(n)

    def f(x):
        return np.sqrt(x) + x * (x - 1.0) / n

    def df(x):
        return 1.0 / (2.0 * np.sqrt(x)) + (2.0 * x - 1.0) / n

    return RealFunc(f, df, undefined_points=(0.0,), name=f"u_n({n})")


def make_line(A: float = 0.0, B: float = 1.0) -> RealFunc:
    A, B = float(A), float(B)
    slope = B - A

    def f(x):
        return A + slope * x

    def df(x):
        return np.full_like(np.asarray(x, dtype=float), slope)

    return RealFunc(f, df, lipschitz_bound=abs(slope), name=f"line({_fmt(A)},{_fmt(B)})")


def _fmt(v: float) -> str:
    return repr(int(v)) if float(v).is_integer() else repr(float(v))


_NAMED = {
    "sqrt": lambda: make_sqrt(),
    "sqrt_quarter": lambda: make_sqrt_quarter_half()[0],
    "sqrt_half": lambda: make_sqrt_quarter_half()[1],
}


def from_name(name: str) -> RealFunc:
    """Build a named closed form: ``sqrt``, ``sqrt_quarter``, ``sqrt_half``,
    ``u_n(<n>)`` or ``line(<A>,<B>)``."""
    name = name.strip()
    if name in _NAMED:
        return _NAMED[name]()
    m = re.fullmatch(r"u_n\(\s*(\d+)\s*\)", name)
    if m:
        return minimizing_sequence_member(int(m.group(1)))
    m = re.fullmatch(r"line\(\s*([^,]+),\s*([^)]+)\)", name)
    if m:
        return make_line(float(m.group(1)), float(m.group(2)))
    raise ValueError(f"unknown function name {name!r}")


def from_json(data: dict) -> RealFunc:
    if data.get("kind") == "piecewise-linear":
        return PiecewiseLinear(data["knots"], data["values"])
    if data.get("kind") == "closed-form":
        return from_name(data["name"])
    raise ValueError(f"cannot deserialize function of kind {data.get('kind')!r}")


class PiecewiseLinear(RealFunc):
    """Continuous piecewise linear function through ``(knots[i], values[i])``.

    Knots are strictly increasing from 0 to 1. The derivative is the step
    function of segment slopes, taking the right-hand slope at knots (the
    last slope at ``x = 1``).
    """

    def __init__(self, knots: Sequence[float], values: Sequence[float]):
        knots = np.asarray(knots, dtype=float)
        values = np.asarray(values, dtype=float)
        if knots.ndim != 1 or knots.shape != values.shape or len(knots) < 2:
            raise ValueError("knots and values must be 1-D of equal length >= 2")
        if knots[0] != 0.0 or knots[-1] != 1.0:
            raise ValueError("knots must start at 0 and end at 1")
        if not np.all(np.diff(knots) > 0):
            raise ValueError("knots must be strictly increasing")
        self.knots = knots
        self.values = values
        self.slopes = np.diff(values) / np.diff(knots)
        super().__init__(
            self._eval_pl, self._deriv_pl, "piecewise-linear",
            lipschitz_bound=float(np.max(np.abs(self.slopes))),
            breakpoints=knots[1:-1],
        )

    def _eval_pl(self, x):
        return np.interp(x, self.knots, self.values)

    def _deriv_pl(self, x):
        idx = np.searchsorted(self.knots, x, side="right") - 1
        idx = np.clip(idx, 0, len(self.slopes) - 1)
        return self.slopes[idx]

    def integral_of_derivative(self) -> float:
        """Exact ``sum(slope * width)``; telescopes to ``values[-1] - values[0]``."""
        return math.fsum(self.slopes * np.diff(self.knots))

    def to_json(self) -> dict:
        return {"kind": self.kind, "knots": self.knots.tolist(), "values": self.values.tolist()}

    def __repr__(self):
        return f"PiecewiseLinear(knots={self.knots.tolist()}, values={self.values.tolist()})"


class StepFunction:
    """Piecewise constant function on [0, 1].

    Cells are ``[b_i, b_{i+1})`` except the last, which is closed. The
    breakpoints and values may be floats or :class:`fractions.Fraction`;
    exact arithmetic is preserved by :meth:`integral` and the interval-set
    algorithms.
    """

    def __init__(self, breakpoints: Sequence, plateau_values: Sequence):
        breakpoints = list(breakpoints)
        plateau_values = list(plateau_values)
        if len(breakpoints) < 2 or len(plateau_values) != len(breakpoints) - 1:
            raise ValueError("need n+1 breakpoints for n plateau values")
        if breakpoints[0] != 0 or breakpoints[-1] != 1:
            raise ValueError("breakpoints must start at 0 and end at 1")
        if any(b <= a for a, b in zip(breakpoints, breakpoints[1:])):
            raise ValueError("breakpoints must be strictly increasing")
        self.breakpoints = breakpoints
        self.plateau_values = plateau_values
        self._bp = np.array([float(b) for b in breakpoints])
        self._vals = np.array([float(v) for v in plateau_values])

    @property
    def cells(self):
        """Yield ``(left, right, value)`` per cell."""
        return list(zip(self.breakpoints[:-1], self.breakpoints[1:], self.plateau_values))

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        idx = np.searchsorted(self._bp, x, side="right") - 1
        idx = np.clip(idx, 0, len(self._vals) - 1)
        out = self._vals[idx]
        return out[()] if out.ndim == 0 else out

    def value_at(self, x):
        """Exact (non-vectorized) lookup preserving the value type."""
        for lo, hi, v in self.cells:
            if lo <= x < hi:
                return v
        if x == self.breakpoints[-1]:
            return self.plateau_values[-1]
        raise ValueError(f"x={x} outside [0, 1]")

    def integral(self, a=0, b=1):
        """Exact ``sum(value * overlap)`` over ``[a, b]``."""
        total = 0
        for lo, hi, v in self.cells:
            overlap = min(hi, b) - max(lo, a)
            if overlap > 0:
                total += v * overlap
        return total

    def antiderivative(self, offset: float = 0.0) -> PiecewiseLinear:
        """The exact antiderivative ``offset + integral over [0, x]``."""
        knots = [float(b) for b in self.breakpoints]
        values = [float(offset)]
        for lo, hi, v in self.cells:
            values.append(values[-1] + float(v) * float(hi - lo))
        return PiecewiseLinear(knots, values)

    def to_json(self) -> dict:
        return {
            "kind": "step",
            "breakpoints": [str(b) for b in self.breakpoints],
            "plateau_values": [str(v) for v in self.plateau_values],
        }

    def __repr__(self):
        return f"StepFunction({len(self.plateau_values)} cells)"


def random_lipschitz_candidate(seed: int, knot_count: int, slope_cap: float) -> PiecewiseLinear:
    """Random admissible piecewise linear ``u`` with ``u(0)=0``, ``u(1)=1``.

    Interior knots are uniform on (0, 1), sorted. Values are drawn left to
    right, each uniformly from the set that keeps both the incoming slope
    and the remaining rise to 1 within ``slope_cap`` (forward-backward
    clamping), so the last segment is feasible by construction.
    """
    if knot_count < 2:
        raise ValueError("knot_count must be at least 2")
    if not slope_cap >= 1:
        raise ValueError("slope_cap must be >= 1: the total rise over [0, 1] is 1")
    rng = np.random.default_rng(seed)
    for _ in range(1000):
        interior = np.sort(rng.uniform(0.0, 1.0, knot_count - 2))
        knots = np.concatenate([[0.0], interior, [1.0]])
        if not np.all(np.diff(knots) > 0):
            continue
        if slope_cap == 1 or knot_count == 2:
            # Only the line x -> x is admissible.
            return PiecewiseLinear(knots, knots.copy())
        cap = slope_cap * (1.0 - 1e-12)
        values = [0.0]
        for i in range(1, knot_count - 1):
            h = knots[i] - knots[i - 1]
            rest = 1.0 - knots[i]
            lo = max(values[-1] - cap * h, 1.0 - cap * rest)
            hi = min(values[-1] + cap * h, 1.0 + cap * rest)
            if lo > hi:
                lo = hi = 0.5 * (lo + hi)
            values.append(float(rng.uniform(lo, hi)))
        values.append(1.0)
        cand = PiecewiseLinear(knots, values)
        if cand.lipschitz_bound <= slope_cap:
            return cand
    raise RuntimeError("could not draw an admissible candidate")  # pragma: no cover
