"""The gap example: functional, geometry, conditions and inequality chains.

The functional is

    F(u) = integral over [0, 1] of exp(-2 / (u - sqrt(x))**2) * f(u'(x)) dx

with ``f(xi) = exp(c * xi**2)`` and ``c = 2048`` by default. Energies are
always handled as logarithms: ``log F(u_n)`` for the minimizing sequence is
of order ``-1e5``, while a steep Lipschitz candidate gives ``log F`` of
order ``+1e5``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
from scipy.optimize import brentq

from .func_model import (
    PiecewiseLinear,
    RealFunc,
    minimizing_sequence_member,
    random_lipschitz_candidate,
)
from .quadrature import (
    DEFAULT_REL_TOL,
    LogScalar,
    QuadratureError,
    integrate_log,
    _json_float,
)

DEFAULT_C = 2048.0
P_FACTOR = 7.0 + 4.0 * math.sqrt(3.0)
LOG_E = 1.0


def _lavrentiev_log_weight(x, y):
    with np.errstate(divide="ignore", invalid="ignore"):
        d = np.asarray(y, dtype=float) - np.sqrt(x)
        return np.where(d == 0.0, -np.inf, -2.0 / (d * d))


@dataclass(frozen=True)
class LagrangianSpec:
    """Integrand ``w(x, y) * f(xi)`` given through ``log w`` and ``log f``.

    ``dlog_f`` and ``d2log_f`` are the first two derivatives of ``log f``;
    they let :func:`check_conditions` evaluate ``f'`` and ``f''`` in log form
    (``f'' = f * (d2log_f + dlog_f**2)``). ``dfdy_bound`` is a bound ``M``
    on ``|df/dy|`` when one exists.
    """

    log_weight: Callable
    log_f: Callable
    dlog_f: Callable | None = None
    d2log_f: Callable | None = None
    c: float | None = None
    dfdy_bound: float | None = None
    name: str = "custom"

    def log_integrand(self, x, y, slope):
        lw = np.asarray(self.log_weight(x, y), dtype=float)
        with np.errstate(invalid="ignore"):
            lf = np.asarray(self.log_f(slope), dtype=float)
            return np.where(lw == -np.inf, -np.inf, lw + lf)

    def to_json(self) -> dict:
        return {"name": self.name, "c": self.c, "dfdy_bound": self.dfdy_bound}


def lavrentiev_spec(c: float = DEFAULT_C) -> LagrangianSpec:
    """The gap functional with ``f(xi) = exp(c * xi**2)``."""
    c = float(c)
    return LagrangianSpec(
        log_weight=_lavrentiev_log_weight,
        log_f=lambda xi: c * np.square(xi),
        dlog_f=lambda xi: 2.0 * c * np.asarray(xi, dtype=float),
        d2log_f=lambda xi: np.full_like(np.asarray(xi, dtype=float), 2.0 * c),
        c=c,
        name=f"lavrentiev(c={c:g})",
    )


def bounded_spec(cap: float = 10.0) -> LagrangianSpec:
    """A Lagrangian satisfying the approximation hypotheses.

    ``w(x, y) = exp(-(y - sqrt(x))**2)`` and ``f(xi) = min(1 + xi**2, cap)``.
    Then ``|df/dy| <= cap * sqrt(2/e)``, and ``u = sqrt(x)`` has finite energy.
    """
    cap = float(cap)

    def log_weight(x, y):
        d = np.asarray(y, dtype=float) - np.sqrt(x)
        return -d * d

    def log_f(xi):
        return np.log(np.minimum(1.0 + np.square(xi), cap))

    return LagrangianSpec(
        log_weight=log_weight,
        log_f=log_f,
        dfdy_bound=cap * math.sqrt(2.0 / math.e),
        name=f"bounded(cap={cap:g})",
    )


def f_only_spec(log_f: Callable, name: str = "f-only") -> LagrangianSpec:
    """Weight identically 1: ``F(u) = integral of f(u')``."""
    return LagrangianSpec(log_weight=lambda x, y: np.zeros(np.shape(x)), log_f=log_f,
                          dfdy_bound=0.0, name=name)


# --------------------------------------------------------------------------
# geometry

def p_map(x: float) -> float:
    """``p(x) = (7 + 4 sqrt 3) x``."""
    if x < 0:
        raise ValueError("p is defined for x >= 0")
    return P_FACTOR * x


def tangent_second_intersection(x0: float) -> float:
    """Abscissa where the tangent to ``sqrt(x)/4`` at ``x0`` meets ``sqrt(x)/2``.

    The larger of the two intersections; bracketed on ``[x0, 100 x0]``
    and solved with Brent's method.
    """
    if not x0 > 0:
        raise ValueError("x0 must be positive")
    s0 = math.sqrt(x0)

    def gap(x):
        return 0.5 * math.sqrt(x) - (0.25 * s0 + (x - x0) / (8.0 * s0))

    lo, hi = x0, 100.0 * x0
    if not gap(lo) > 0 > gap(hi):
        raise RuntimeError(f"no sign change of tangent gap on [{lo}, {hi}]")
    root, info = brentq(gap, lo, hi, xtol=1e-300, rtol=4 * np.finfo(float).eps,
                        maxiter=500, full_output=True)
    if not info.converged:
        raise RuntimeError(f"root finder did not converge: {info.flag}")
    return root


def xn_sequence(count: int) -> list[float]:
    """``x_1 = 1/2`` and ``p(x_{n+1}) = x_n``."""
    if count < 1:
        raise ValueError("count must be >= 1")
    xs = [0.5]
    for _ in range(count - 1):
        xs.append(xs[-1] / P_FACTOR)
    return xs


# --------------------------------------------------------------------------
# energies

def _singular_ends(u: RealFunc, a: float, b: float) -> list[float]:
    ends = []
    for e in (a, b):
        touches = abs(float(u.eval(e)) - math.sqrt(e)) < 1e-12
        if e in u.undefined_points or touches:
            ends.append(e)
    return ends


def energy(u: RealFunc, spec: LagrangianSpec | None = None, rel_tol: float = DEFAULT_REL_TOL,
           a: float = 0.0, b: float = 1.0, **quad_kwargs) -> LogScalar:
    """``log F(u)`` over ``[a, b]`` as a :class:`LogScalar`.

    Breakpoints of ``u`` split the quadrature panels; endpoints where ``u``
    touches ``sqrt(x)`` or has no derivative are approached on a graded mesh.
    """
    spec = spec or lavrentiev_spec()

    def log_integrand(x):
        return spec.log_integrand(x, u.eval(x), u.deriv(x))

    bps = [p for p in (*u.breakpoints, *u.undefined_points) if a < p < b]
    res = integrate_log(log_integrand, a, b, rel_tol=rel_tol,
                        singular_endpoints=_singular_ends(u, a, b), breakpoints=bps,
                        **quad_kwargs)
    return res.value


def max_log_integrand(u: RealFunc, spec: LagrangianSpec | None = None,
                      grid_size: int = 200_001) -> tuple[float, float]:
    """Grid maximum of the log-integrand over (0, 1) and where it occurs.

    Since the interval has length 1, ``log F(u)`` cannot exceed the true
    supremum; this is the independent upper-bound check for energies.
    """
    spec = spec or lavrentiev_spec()
    x = (np.arange(grid_size) + 0.5) / grid_size
    vals = spec.log_integrand(x, u.eval(x), u.deriv(x))
    i = int(np.argmax(vals))
    return float(vals[i]), float(x[i])


def jensen_line_bound(log_f: Callable, a: float, b: float, ua: float, ub: float) -> LogScalar:
    """``log[(b - a) f((ub - ua) / (b - a))]``: the straight-line lower bound
    for the f-only energy with convex ``f``."""
    if not a < b:
        raise ValueError("need a < b")
    return LogScalar.from_log(math.log(b - a) + float(log_f((ub - ua) / (b - a))))


# --------------------------------------------------------------------------
# crossing interval

def crossing_points(u: RealFunc, scan_step: float = 1e-4, xtol: float = 1e-12) -> tuple[float, float]:
    """Endpoints ``(a, b)`` with ``sqrt(x)/4 < u < sqrt(x)/2`` on ``(a, b)``,
    ``u(a) = sqrt(a)/4`` and ``u(b) = sqrt(b)/2``.

    ``b`` is the first crossing of the upper parabola; ``a`` is the last
    touching of the lower parabola before ``b``. The scan runs on a uniform
    grid of step ``scan_step`` (with a logarithmic pre-scan below the first
    grid point) and brackets are bisected to ``xtol``. Sign changes narrower
    than the scan step can be missed; for a ``L``-Lipschitz ``u`` the step
    must resolve where ``u`` and the parabolas approach within ``L * step``.
    """
    if abs(u.boundary_left) > 1e-12 or abs(u.boundary_right - 1.0) > 1e-12:
        raise ValueError(f"u is not admissible: u(0)={u.boundary_left}, u(1)={u.boundary_right}")

    def lower(x):
        return np.asarray(u.eval(x), dtype=float) - 0.25 * np.sqrt(x)

    def upper(x):
        return np.asarray(u.eval(x), dtype=float) - 0.5 * np.sqrt(x)

    grid = np.concatenate([np.geomspace(1e-14, scan_step, 200, endpoint=False),
                           np.arange(1, int(round(1 / scan_step)) + 1) * scan_step])
    grid[-1] = 1.0
    up = upper(grid)
    hits = np.nonzero(up >= 0)[0]
    if len(hits) == 0:
        raise RuntimeError(f"no crossing of sqrt(x)/2 found on scan grid of step {scan_step}")
    j = int(hits[0])
    if j == 0:
        raise RuntimeError(f"u is above sqrt(x)/2 already at x={grid[0]}; refine the scan grid")
    b = brentq(lambda t: float(upper(t)), grid[j - 1], grid[j], xtol=xtol, rtol=1e-15) \
        if up[j] > 0 else float(grid[j])
    below = grid[:j]
    lo_vals = lower(below)
    cand = np.nonzero(lo_vals <= 0)[0]
    if len(cand) == 0:
        raise RuntimeError(f"u never touches sqrt(x)/4 before b={b}; scan step {scan_step} too coarse")
    i = int(cand[-1])
    left = float(below[i])
    right = float(below[i + 1]) if i + 1 < len(below) else b
    if lo_vals[i] == 0:
        return left, b
    if float(lower(right)) <= 0:
        # only possible when right == b is itself a touching point
        raise RuntimeError(f"degenerate crossing at x={right}")
    a = brentq(lambda t: float(lower(t)), left, right, xtol=xtol, rtol=1e-15)
    return a, b


# --------------------------------------------------------------------------
# inequality chains (default f only)

def _check_case1(a, b, strict_upper=True):
    ok = 0 < a < b and b <= 1 and (b < 2 * a if strict_upper else b <= 2 * a)
    if not ok:
        rel = "<" if strict_upper else "<="
        raise ValueError(f"need 0 < a < b {rel} 2a and b <= 1, got a={a}, b={b}")


def case1_chain_links(a: float, b: float) -> dict:
    """All links of the short-interval chain, as log-scale margins.

    ``g_exponent``: the Jensen step gives ``g(3 sqrt(a) / (16 (b - a)))``
    with ``g = exp(1024 xi**2)``, i.e. exponent ``36 a / (b - a)**2``; the
    chain keeps only ``8 a / (b - a)**2``. ``m1``: absorbing ``e^{8/a}``
    using ``e^{8a/(b-a)^2} >= e^{8/a}``. ``m2``: ``8a/(b-a)^2 >= 1/(b-a)``.
    ``m3``: ``(b - a) e^{1/(b-a)} >= e``.
    """
    _check_case1(a, b)
    t = b - a
    x = 8.0 * a / (t * t)
    d = x - 8.0 / a  # >= 0 because (b - a) < a
    return {
        "g_exponent": 36.0 * a / (t * t) - x,
        "m1": math.log1p(-math.expm1(-d)),  # log(2 - e^{-d})
        "m2": x - 1.0 / t,
        "m3": math.log(t) + 1.0 / t - LOG_E,
    }


def case1_chain_margin(a: float, b: float) -> float:
    """Smallest of the three chain links; the chain holds iff this is >= 0."""
    links = case1_chain_links(a, b)
    return min(links["m1"], links["m2"], links["m3"])


def case1_slope_margin(a: float, b: float) -> float:
    """``(sqrt(b)/2 - sqrt(a)/4) / sqrt(a) - 3/16``.

    The mean slope on ``[a, b]`` times ``b - a`` is at least ``(3/16) sqrt(a)``
    iff this is nonnegative. ``b == a`` returns the limit value ``1/16``.
    """
    if not (0 < a <= b <= 2 * a):
        raise ValueError(f"need 0 < a <= b <= 2a, got a={a}, b={b}")
    return (0.5 * math.sqrt(b) - 0.25 * math.sqrt(a)) / math.sqrt(a) - 3.0 / 16.0


def case2_constant() -> float:
    """``128 (3 - 2 sqrt 2) - 8``."""
    return 128.0 * (3.0 - 2.0 * math.sqrt(2.0)) - 8.0


def case2_chain_margin(a: float) -> float:
    """``log[a exp(K / a)] - 1`` with ``K = 128 (3 - 2 sqrt 2) - 8``."""
    if not (0 < a <= 1):
        raise ValueError(f"need 0 < a <= 1, got a={a}")
    return math.log(a) + case2_constant() / a - LOG_E


def case_lower_bound_log(u: RealFunc, a: float, b: float, c: float = DEFAULT_C) -> tuple[int, float]:
    """Which case applies to ``(a, b)`` and the log lower bound it certifies
    for the energy restricted to ``[a, b]``.

    Case 1 uses the actual mean slope ``m`` in ``(b - a)(2 g(m) - e^{8/a})``;
    case 2 uses ``a e^{-8/a} f((u(2a) - sqrt(a)/4) / a)``.
    """
    if b < 2 * a:
        m = (0.5 * math.sqrt(b) - 0.25 * math.sqrt(a)) / (b - a)
        y = 0.5 * c * m * m
        lead = math.log(2.0) + y
        if lead <= 8.0 / a:
            return 1, -math.inf
        return 1, math.log(b - a) + lead + math.log(-math.expm1(8.0 / a - lead))
    slope = (float(u.eval(2 * a)) - 0.25 * math.sqrt(a)) / a
    return 2, math.log(a) - 8.0 / a + c * slope * slope


# --------------------------------------------------------------------------
# conditions (I)-(V)

@dataclass
class ConditionResult:
    name: str
    verdict: bool
    worst_margin: float
    witness: tuple
    grid_spec: str
    details: dict = field(default_factory=dict)

    def to_json(self) -> dict:
        return {
            "condition": self.name,
            "verdict": "pass" if self.verdict else "fail",
            "worst_margin": _json_float(self.worst_margin),
            "witness": [float(w) for w in self.witness],
            "grid_spec": self.grid_spec,
            "details": {k: _json_float(v) if isinstance(v, float) else v for k, v in self.details.items()},
        }


@dataclass
class ConditionReport:
    """Verdicts for (I)-(V). A pass is a pass at the sampled resolution."""

    spec_name: str
    results: dict

    @property
    def all_pass(self) -> bool:
        return all(r.verdict for r in self.results.values())

    def to_json(self) -> dict:
        return {"spec": self.spec_name, "all_pass": self.all_pass,
                "conditions": [r.to_json() for r in self.results.values()]}

    def csv_rows(self):
        for r in self.results.values():
            yield [r.name, "pass" if r.verdict else "fail", repr(r.worst_margin),
                   " ".join(repr(float(w)) for w in r.witness)]


_Q2 = 0.25 * math.sqrt(0.5)


def condition_margin(name: str, spec: LagrangianSpec, point: Sequence[float]) -> float:
    """Margin of one condition at one point, evaluated with scalar math.

    Positive means the strict inequality holds. For (I) the margin is the
    smallest of ``f''/f``, ``log f(xi) - log f(0)`` and ``log f(0)``; the last
    two only need to be nonnegative.
    """
    lf = lambda v: float(spec.log_f(np.float64(v)))
    if name == "I":
        (xi,) = point
        s = float(spec.d2log_f(np.float64(xi))) + float(spec.dlog_f(np.float64(xi))) ** 2
        return min(s, lf(xi) - lf(0.0), lf(0.0))
    if name == "II":
        a, p0 = point
        s = p0 - a
        return math.log(s) + lf(_Q2 / s) - 8.0 * math.sqrt(2.0)
    if name == "III":
        (x,) = point
        p = p_map(x)
        arg = 0.25 * (math.sqrt(p) - math.sqrt(x)) / (p - x)
        return -8.0 / math.sqrt(x) + math.log(p - x) + lf(arg)
    if name == "IV":
        (x,) = point
        xi = 1.0 / (8.0 * math.sqrt(x))
        return (-8.0 / math.sqrt(x) - math.log(4.0) + 0.5 * math.log(x) + lf(xi)
                - 0.5 * math.log1p(xi * xi))
    if name == "V":
        (t,) = point
        return (float(spec.dlog_f(np.float64(t))) - t / (1.0 + t * t)) / t
    raise ValueError(f"unknown condition {name!r}")


def check_conditions(spec: LagrangianSpec | None = None, log_grid: int = 2048,
                     region_grid: int = 512, symmetric_grid: int = 4001,
                     xi_max: float = 10.0, edge: float = 1e-6) -> ConditionReport:
    """Check (I)-(V) on finite grids.

    (I) on a symmetric grid of ``xi``; (II) on a ``region_grid**2`` grid of
    ``1/2 <= a < 1``, ``a < p0 <= 1`` kept ``edge`` away from the open sides;
    (III)/(IV) on log-spaced ``x``; (V) on log-spaced ``t > 0``.
    """
    spec = spec or lavrentiev_spec()
    if spec.dlog_f is None or spec.d2log_f is None:
        raise ValueError("check_conditions needs dlog_f and d2log_f")
    results = {}

    xi = np.linspace(-xi_max, xi_max, symmetric_grid)
    lf = np.asarray(spec.log_f(xi), dtype=float)
    lf0 = float(spec.log_f(np.float64(0.0)))
    convex = np.asarray(spec.d2log_f(xi), dtype=float) + np.asarray(spec.dlog_f(xi), dtype=float) ** 2
    parts = {"f2_over_f": (float(convex.min()), float(xi[convex.argmin()])),
             "min_at_zero": (float((lf - lf0).min()), float(xi[(lf - lf0).argmin()])),
             "log_f0": (lf0, 0.0)}
    worst_key = min(parts, key=lambda k: parts[k][0])
    verdict = parts["f2_over_f"][0] > 0 and parts["min_at_zero"][0] >= 0 and lf0 >= 0
    results["I"] = ConditionResult(
        "I", verdict, parts[worst_key][0], (parts[worst_key][1],),
        f"xi=linspace(-{xi_max:g},{xi_max:g},{symmetric_grid})",
        {k: v[0] for k, v in parts.items()})

    a = np.linspace(0.5, 1.0 - edge, region_grid)
    frac = np.linspace(0.0, 1.0, region_grid)
    p0 = (a[:, None] + edge) + frac[None, :] * (1.0 - a[:, None] - edge)
    s = p0 - a[:, None]
    obj = np.log(s) + np.asarray(spec.log_f(_Q2 / s), dtype=float) - 8.0 * math.sqrt(2.0)
    i, j = np.unravel_index(int(np.argmin(obj)), obj.shape)
    results["II"] = ConditionResult(
        "II", bool(obj[i, j] > 0), float(obj[i, j]), (float(a[i]), float(p0[i, j])),
        f"a=linspace(0.5,1-{edge:g},{region_grid}) x p0 in [a+{edge:g},1] ({region_grid})")

    x = np.geomspace(1e-8, 1.0, log_grid)
    p = P_FACTOR * x
    arg = 0.25 * (np.sqrt(p) - np.sqrt(x)) / (p - x)
    m3 = -8.0 / np.sqrt(x) + np.log(p - x) + np.asarray(spec.log_f(arg), dtype=float)
    k = int(np.argmin(m3))
    results["III"] = ConditionResult("III", bool(m3[k] > 0), float(m3[k]), (float(x[k]),),
                                     f"x=geomspace(1e-8,1,{log_grid})")

    x4 = np.geomspace(1e-8, 1.0 - edge, log_grid)
    xi4 = 1.0 / (8.0 * np.sqrt(x4))
    m4 = (-8.0 / np.sqrt(x4) - math.log(4.0) + 0.5 * np.log(x4)
          + np.asarray(spec.log_f(xi4), dtype=float) - 0.5 * np.log1p(xi4 * xi4))
    k = int(np.argmin(m4))
    results["IV"] = ConditionResult("IV", bool(m4[k] > 0), float(m4[k]), (float(x4[k]),),
                                    f"x=geomspace(1e-8,1-{edge:g},{log_grid})")

    t = np.geomspace(1e-6, 1e4, log_grid)
    m5 = (np.asarray(spec.dlog_f(t), dtype=float) - t / (1.0 + t * t)) / t
    k = int(np.argmin(m5))
    results["V"] = ConditionResult("V", bool(m5[k] > 0), float(m5[k]), (float(t[k]),),
                                   f"t=geomspace(1e-6,1e4,{log_grid})")
    return ConditionReport(spec.name, results)


# --------------------------------------------------------------------------
# sweeps and the gap report

def case1_grid(size: int = 500):
    """Interior grid of ``{0 < a < b < 2a, b <= 1}``: ``a = i/(size+1)`` and
    ``b = a + t (min(2a, 1) - a)`` with ``t = j/(size+1)``."""
    a = np.arange(1, size + 1) / (size + 1)
    t = np.arange(1, size + 1) / (size + 1)
    b = a[:, None] + t[None, :] * (np.minimum(2 * a, 1.0) - a)[:, None]
    return np.broadcast_to(a[:, None], b.shape), b


def case_sweeps(case1_size: int = 500, case2_size: int = 10_000) -> dict:
    """Worst margins of the case-1 chain, the slope bound and the case-2 chain."""
    A, B = case1_grid(case1_size)
    chain = np.empty(A.shape)
    slope = np.empty(A.shape)
    for idx in np.ndindex(A.shape):
        a, b = float(A[idx]), float(B[idx])
        if not a < b < 2 * a:
            chain[idx] = slope[idx] = math.nan
            continue
        chain[idx] = case1_chain_margin(a, b)
        slope[idx] = case1_slope_margin(a, b)
    ci = np.unravel_index(int(np.nanargmin(chain)), chain.shape)
    si = np.unravel_index(int(np.nanargmin(slope)), slope.shape)
    a2 = np.arange(1, case2_size + 1) / case2_size
    m2 = np.array([case2_chain_margin(float(v)) for v in a2])
    k = int(np.argmin(m2))
    # the slope bound holds with constant 3/16 + min margin
    return {
        "case1_chain": {"worst_margin": float(chain[ci]), "witness": [float(A[ci]), float(B[ci])],
                        "grid": f"{case1_size}x{case1_size}", "skipped": int(np.isnan(chain).sum())},
        "case1_slope": {"worst_margin": float(slope[si]), "witness": [float(A[si]), float(B[si])],
                        "constant": 3.0 / 16.0, "best_constant_on_grid": 3.0 / 16.0 + float(slope[si])},
        "case2_chain": {"worst_margin": float(m2[k]), "witness": [float(a2[k])],
                        "grid": case2_size, "constant": case2_constant()},
    }


@dataclass
class CorpusSpec:
    size: int = 1000
    seed: int = 0
    slope_cap: float = 10.0
    max_knots: int = 8

    def candidates(self):
        """Deterministic corpus; candidate ``i`` has ``2 + i % (max_knots - 1)`` knots."""
        seeds = np.random.SeedSequence(self.seed).generate_state(self.size)
        for i in range(self.size):
            knots = 2 + i % max(1, self.max_knots - 1)
            yield i, random_lipschitz_candidate(int(seeds[i]), knots, self.slope_cap)


@dataclass
class GapReport:
    rows: list  # (n, log_energy or None, error message or None)
    corpus_energies: list  # (id, log_energy or None, error)
    corpus_min_energy_log: float
    case_sweep_worst_margins: dict
    crossings: list = field(default_factory=list)

    @property
    def sweeps_pass(self) -> bool:
        return all(v["worst_margin"] >= -1e-12 for v in self.case_sweep_worst_margins.values())

    @property
    def corpus_pass(self) -> bool:
        ok = all(e is not None for _, e, _ in self.corpus_energies)
        return ok and self.corpus_min_energy_log >= LOG_E

    @property
    def crossings_pass(self) -> bool:
        return all(row["restricted_log_energy"] is not None and row["restricted_log_energy"] >= LOG_E
                   for row in self.crossings)

    @property
    def passed(self) -> bool:
        return self.sweeps_pass and self.corpus_pass and self.crossings_pass

    def to_json(self) -> dict:
        return {
            "rows": [{"n": n, "log_energy": _json_float(e) if e is not None else None, "error": err}
                     for n, e, err in self.rows],
            "corpus_min_energy_log": _json_float(self.corpus_min_energy_log),
            "corpus_size": len(self.corpus_energies),
            "case_sweeps": self.case_sweep_worst_margins,
            "crossings_checked": len(self.crossings),
            "passed": self.passed,
        }


def gap_demo(n_list: Sequence[int], corpus_spec: CorpusSpec | None = None,
             rel_tol: float = DEFAULT_REL_TOL, spec: LagrangianSpec | None = None,
             case1_size: int = 500, case2_size: int = 10_000,
             crossing_check: bool = True) -> GapReport:
    """Energies of ``u_n`` (collapse), minimum energy over a Lipschitz corpus
    (lower bound), the case sweeps, and optionally the per-candidate
    crossing-interval check ``log of the restricted energy >= 1``.

    Quadrature failures are recorded per row and do not stop the run.
    """
    spec = spec or lavrentiev_spec()
    corpus_spec = corpus_spec or CorpusSpec()
    rows = []
    for n in sorted(n_list):
        try:
            rows.append((n, energy(minimizing_sequence_member(n), spec, rel_tol).log_magnitude, None))
        except QuadratureError as exc:
            rows.append((n, None, str(exc)))
    corpus = []
    crossings = []
    for i, cand in corpus_spec.candidates():
        try:
            corpus.append((i, energy(cand, spec, rel_tol).log_magnitude, None))
        except QuadratureError as exc:
            corpus.append((i, None, str(exc)))
        if crossing_check:
            crossings.append(_crossing_row(i, cand, spec, rel_tol))
    finite = [e for _, e, _ in corpus if e is not None]
    corpus_min = min(finite) if finite else math.nan
    return GapReport(rows, corpus, corpus_min, case_sweeps(case1_size, case2_size), crossings)


def _crossing_row(i: int, cand: PiecewiseLinear, spec: LagrangianSpec, rel_tol: float) -> dict:
    a, b = crossing_points(cand)
    try:
        restricted = energy(cand, spec, rel_tol, a=a, b=b).log_magnitude
    except QuadratureError:
        restricted = None
    case, bound = case_lower_bound_log(cand, a, b, spec.c or DEFAULT_C)
    return {"id": i, "a": a, "b": b, "case": case, "restricted_log_energy": restricted,
            "case_bound_log": bound}
