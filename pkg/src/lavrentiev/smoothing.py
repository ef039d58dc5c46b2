"""Smoothing an absolutely continuous function: truncate, mollify, correct.

Stage 1 replaces ``u'`` by ``v_k = u' * [|u'| < k]`` and integrates back,
giving a ``k``-Lipschitz ``u_k``. Stage 2 convolves ``u_k`` (extended by
constants outside [0, 1]) with the rescaled standard mollifier ``eta_{1/n}``.
Stage 3 adds an affine correction so the boundary values are restored.
:func:`approximate` runs the stages on a ``(k, n)`` schedule and returns the
first result whose :class:`Certificate` passes.
"""
from __future__ import annotations

import csv
import math
import warnings
from dataclasses import asdict, dataclass, field
from typing import Sequence

import numpy as np

from .func_model import PiecewiseLinear, RealFunc, StepFunction
from .lavrentiev_core import LagrangianSpec, energy
from .quadrature import (
    DEFAULT_REL_TOL,
    LogScalar,
    QuadratureError,
    _json_float,
    antiderivative_table,
    integrate_signed,
)

_SQRT_SCALES = {"sqrt": 1.0, "sqrt_quarter": 0.25, "sqrt_half": 0.5}


class MollifierKernel:
    """``eta(t) = exp(-1 / (1 - t**2)) / Z`` on (-1, 1), zero outside.

    Convolutions use a fixed ``node_count``-point Gauss-Legendre rule on the
    support, so mollified evaluation is deterministic.
    """

    def __init__(self, node_count: int = 64):
        self.Z = integrate_signed(self._bump, -1.0, 1.0, rel_tol=1e-13, abs_tol=1e-15)
        self.nodes, weights = np.polynomial.legendre.leggauss(node_count)
        self.eta_weights = weights * self.eta(self.nodes)
        self.eta_deriv_weights = weights * self.eta_deriv(self.nodes)

    @staticmethod
    def _bump(t):
        t = np.asarray(t, dtype=float)
        inside = np.abs(t) < 1.0
        safe = np.where(inside, t, 0.0)
        return np.where(inside, np.exp(-1.0 / (1.0 - safe * safe)), 0.0)

    def eta(self, t):
        return self._bump(t) / self.Z

    def eta_deriv(self, t):
        t = np.asarray(t, dtype=float)
        inside = np.abs(t) < 1.0
        safe = np.where(inside, t, 0.0)
        return np.where(inside, self.eta(t) * (-2.0 * safe / (1.0 - safe * safe) ** 2), 0.0)


_DEFAULT_KERNEL: MollifierKernel | None = None


def default_kernel() -> MollifierKernel:
    global _DEFAULT_KERNEL
    if _DEFAULT_KERNEL is None:
        _DEFAULT_KERNEL = MollifierKernel()
    return _DEFAULT_KERNEL


# --------------------------------------------------------------------------
# stage 1

def truncate_derivative(u: RealFunc, k: float):
    """Return ``(v_k, u_k)`` with ``u_k(x) = u(0) + integral of v_k over [0, x]``.

    Exact for the ``sqrt`` family and for piecewise linear ``u``; other
    functions go through a tabulated antiderivative.
    """
    if not k > 0:
        raise ValueError(f"k must be positive, got {k}")
    k = float(k)
    u0 = u.boundary_left

    def v(x):
        d = np.asarray(u.deriv(x), dtype=float)
        with np.errstate(invalid="ignore"):
            return np.where(np.abs(d) < k, d, 0.0)

    if u.name in _SQRT_SCALES:
        alpha = _SQRT_SCALES[u.name]
        x0 = alpha * alpha / (4.0 * k * k)  # |u'| < k iff x > x0

        def uk(x):
            x = np.asarray(x, dtype=float)
            return u0 + np.where(x <= x0, 0.0, alpha * np.sqrt(np.maximum(x, x0)) - alpha * alpha / (2.0 * k))

        def vk(x):
            x = np.asarray(x, dtype=float)
            with np.errstate(divide="ignore"):
                return np.where(x <= x0, 0.0, alpha / (2.0 * np.sqrt(np.maximum(x, x0))))

        return vk, RealFunc(uk, vk, "antiderivative", lipschitz_bound=k,
                            breakpoints=(x0,) if x0 < 1 else (), name=None)

    if isinstance(u, PiecewiseLinear):
        kept = np.where(np.abs(u.slopes) < k, u.slopes, 0.0)
        step = StepFunction(list(u.knots), list(kept))
        uk = step.antiderivative(offset=u0)
        return step, uk

    table = antiderivative_table(v, breakpoints=u.breakpoints + u.undefined_points)
    return v, RealFunc(lambda x: u0 + table(x), v, "antiderivative", lipschitz_bound=k,
                       breakpoints=u.breakpoints)


# --------------------------------------------------------------------------
# stage 2

def mollify(u_k: RealFunc, n: int, kernel: MollifierKernel | None = None) -> RealFunc:
    """``u_{k,n}(x) = integral of u_k(x - t/n) eta(t) dt`` with ``u_k``
    extended by ``u_k(0)`` on the left and ``u_k(1)`` on the right.

    The derivative is ``n * integral of u_k(x - t/n) eta'(t) dt``. The
    kernel support is split wherever ``x - t/n`` hits a breakpoint of
    ``u_k`` or the ends 0 and 1 (kinks of the extension), and each piece
    gets its own Gauss-Legendre rule.
    """
    if int(n) != n or n < 1:
        raise ValueError(f"n must be a positive integer, got {n!r}")
    n = int(n)
    kernel = kernel or default_kernel()
    kinks = np.array(sorted({0.0, 1.0, *u_k.breakpoints}))
    g_nodes, g_weights = kernel.nodes, np.polynomial.legendre.leggauss(len(kernel.nodes))[1]

    def rule(x):
        # per point: pieces of [-1, 1] between the kink images t = n (x - p)
        near = kinks[(kinks >= x.min() - 1.0 / n) & (kinks <= x.max() + 1.0 / n)]
        cuts = n * (x[:, None] - near[None, :])
        cuts = np.where(np.abs(cuts) < 1.0, cuts, 1.0)
        edges = np.concatenate([np.full((len(x), 1), -1.0), np.sort(cuts, axis=1),
                                np.ones((len(x), 1))], axis=1)
        mid = 0.5 * (edges[:, 1:] + edges[:, :-1])
        half = 0.5 * (edges[:, 1:] - edges[:, :-1])
        t = mid[..., None] + half[..., None] * g_nodes
        w = half[..., None] * g_weights
        return t.reshape(len(x), -1), w.reshape(len(x), -1)

    def integrate(x, weight_fn, scale):
        x = np.asarray(x, dtype=float)
        flat = np.atleast_1d(x).ravel()
        t, w = rule(flat)
        vals = np.asarray(u_k.eval(np.clip(flat[:, None] - t / n, 0.0, 1.0)), dtype=float)
        out = scale * np.einsum("ij,ij->i", vals, w * weight_fn(t))
        return out.reshape(x.shape)

    def f(x):
        return integrate(x, kernel.eta, 1.0)

    def df(x):
        return integrate(x, kernel.eta_deriv, float(n))

    h = 1.0 / n
    bps = {p + s for p in kinks for s in (-h, 0.0, h)}
    bps = sorted(p for p in bps if 0.0 < p < 1.0)
    out = RealFunc(f, df, "mollified", lipschitz_bound=u_k.lipschitz_bound, breakpoints=bps)
    out.mollifier_n = n
    return out


# --------------------------------------------------------------------------
# stage 3

def boundary_correct(u_kn: RealFunc, A: float, B: float) -> RealFunc:
    """``phi(x) = A + (u_kn(x) - u_kn(0)) + x [(B - A) - (u_kn(1) - u_kn(0))]``."""
    c0 = float(u_kn.eval(0.0))
    c1 = float(u_kn.eval(1.0))
    slope = (B - A) - (c1 - c0)

    def f(x):
        x = np.asarray(x, dtype=float)
        return A + (u_kn.eval(x) - c0) + x * slope

    def df(x):
        return u_kn.deriv(x) + slope

    lip = None if u_kn.lipschitz_bound is None else u_kn.lipschitz_bound + abs(slope)
    phi = RealFunc(f, df, u_kn.kind, lipschitz_bound=lip, breakpoints=u_kn.breakpoints)
    phi.correction_slope = slope
    return phi


def smooth_stages(u: RealFunc, k: float, n: int, kernel: MollifierKernel | None = None) -> dict:
    """All intermediate functions for one ``(k, n)``."""
    v_k, u_k = truncate_derivative(u, k)
    u_kn = mollify(u_k, n, kernel)
    phi = boundary_correct(u_kn, u.boundary_left, u.boundary_right)
    return {"v_k": v_k, "u_k": u_k, "u_kn": u_kn, "phi": phi}


# --------------------------------------------------------------------------
# stage-wise bounds

def sup_distance(f: RealFunc, g: RealFunc, grid_size: int = 10_000) -> tuple[float, float]:
    """Sampled ``max |f - g|`` on a uniform grid, and its location."""
    x = np.linspace(0.0, 1.0, grid_size)
    d = np.abs(np.asarray(f.eval(x), dtype=float) - np.asarray(g.eval(x), dtype=float))
    i = int(np.argmax(d))
    return float(d[i]), float(x[i])


def derivative_deviation(u_k: RealFunc, u_kn: RealFunc, n: int, grid_size: int = 10_000,
                         exclude_jumps: bool = False) -> tuple[float, float]:
    """Sampled ``max |u_k' - u_kn'|`` and its location.

    With ``exclude_jumps`` the points within ``1/n`` of a jump of ``u_k'``
    are skipped; the constant extension makes the derivative jump at 0 and 1
    unless ``u_k'`` vanishes there.
    """
    x = (np.arange(grid_size) + 0.5) / grid_size
    d = np.abs(np.asarray(u_k.deriv(x), dtype=float) - np.asarray(u_kn.deriv(x), dtype=float))
    if exclude_jumps:
        jumps = [*u_k.breakpoints, 0.0, 1.0]
        near = np.zeros(x.shape, dtype=bool)
        for p in jumps:
            near |= np.abs(x - p) <= 1.0 / n
        d = np.where(near, 0.0, d)
    i = int(np.argmax(d))
    return float(d[i]), float(x[i])


def truncation_tail(u: RealFunc, k: float, rel_tol: float = 1e-10) -> float:
    """``integral of |u'| over {|u'| >= k}``, bounding ``||u - u_k||_inf``."""

    def tail(x):
        d = np.abs(np.asarray(u.deriv(x), dtype=float))
        return np.where(d >= k, d, 0.0)

    sing = tuple(p for p in (0.0, 1.0) if p in u.undefined_points)
    return integrate_signed(tail, 0.0, 1.0, rel_tol=rel_tol, singular_endpoints=sing,
                            breakpoints=[p for p in u.breakpoints if 0 < p < 1])


# --------------------------------------------------------------------------
# certificates

@dataclass
class Certificate:
    """Closeness record for ``u`` and its smooth approximant ``phi``.

    ``sup_distance`` already includes ``sup_pad`` (Lipschitz bound times half
    the grid step); ``pad_rigorous`` is false when ``u`` carries no Lipschitz
    bound. ``energy_gap_log`` is ``log |F(u) - F(phi)|``.
    """

    epsilon_target: float
    sup_distance: float
    sup_pad: float
    pad_rigorous: bool
    energy_gap_log: float
    energies_log: tuple
    boundary_residuals: tuple
    l1_deriv_distance: float | None
    k_used: float | None = None
    n_used: int | None = None
    sampling_spec: str = ""
    l3_guaranteed: bool = True
    require_l1: bool = False
    notes: list = field(default_factory=list)

    @property
    def energy_gap(self) -> float:
        return math.exp(self.energy_gap_log) if self.energy_gap_log < 709 else math.inf

    @property
    def passed(self) -> bool:
        eps = self.epsilon_target
        ok = (self.sup_distance < eps and self.energy_gap_log < math.log(eps)
              and max(self.boundary_residuals) < 1e-10)
        if self.require_l1:
            ok = ok and self.l1_deriv_distance is not None and self.l1_deriv_distance < eps
        return ok

    def to_json(self) -> dict:
        d = asdict(self)
        d["energies_log"] = [_json_float(v) for v in self.energies_log]
        d["energy_gap_log"] = _json_float(self.energy_gap_log)
        d["energy_gap"] = _json_float(self.energy_gap)
        d["passed"] = self.passed
        return d


def verify_certificate(u: RealFunc, phi: RealFunc, spec: LagrangianSpec, epsilon: float,
                       grid_size: int = 10_000, rel_tol: float = DEFAULT_REL_TOL,
                       require_l1: bool = False, with_l1: bool = True) -> Certificate:
    """Measure (L1)-(L4) for ``phi`` against ``u``.

    The sampling grid is refined beyond ``grid_size`` when needed so that
    the Lipschitz pad stays below ``epsilon / 4``.
    """
    if not epsilon > 0:
        raise ValueError("epsilon must be positive")
    bounds = [b.lipschitz_bound for b in (u, phi)]
    lip = sum(b for b in bounds if b is not None)
    size = max(grid_size, int(math.ceil(2.0 * lip / epsilon)) + 1)
    dist, _ = sup_distance(u, phi, size)
    pad = lip * 0.5 / (size - 1)
    residuals = (abs(float(phi.eval(0.0)) - u.boundary_left),
                 abs(float(phi.eval(1.0)) - u.boundary_right))
    e_u = energy(u, spec, rel_tol)
    e_phi = energy(phi, spec, rel_tol)
    gap = e_u - e_phi
    l1 = None
    if with_l1 or require_l1:
        l1 = l1_deriv_distance(u, phi, rel_tol=max(rel_tol, 1e-9))
    return Certificate(
        epsilon_target=float(epsilon), sup_distance=dist + pad, sup_pad=pad,
        pad_rigorous=None not in bounds, energy_gap_log=gap.log_magnitude,
        energies_log=(e_u.log_magnitude, e_phi.log_magnitude),
        boundary_residuals=residuals, l1_deriv_distance=l1,
        sampling_spec=f"uniform grid of {size} points on [0,1]",
        l3_guaranteed=spec.dfdy_bound is not None, require_l1=require_l1,
        notes=[] if spec.dfdy_bound is not None else
        ["spec has no bound on df/dy: energy closeness is measured, not guaranteed"],
    )


def l1_deriv_distance(u: RealFunc, phi: RealFunc, rel_tol: float = 1e-9) -> float:
    """``integral of |u' - phi'|`` over [0, 1]."""

    def diff(x):
        return np.abs(np.asarray(u.deriv(x), dtype=float) - np.asarray(phi.deriv(x), dtype=float))

    sing = tuple(p for p in (0.0, 1.0) if p in u.undefined_points)
    bps = sorted({p for p in (*u.breakpoints, *phi.breakpoints) if 0 < p < 1})
    return integrate_signed(diff, 0.0, 1.0, rel_tol=rel_tol, abs_tol=1e-12,
                            singular_endpoints=sing, breakpoints=bps)


# --------------------------------------------------------------------------
# the pipeline

class InfiniteEnergyError(ValueError):
    """``u`` does not have a certifiably finite energy under the given Lagrangian."""


class ScheduleExhausted(RuntimeError):
    def __init__(self, message: str, best: Certificate | None):
        super().__init__(message)
        self.best = best


@dataclass(frozen=True)
class Schedule:
    """``k`` doubles from ``k0``; ``n = ceil(k**2 / epsilon)``."""

    k0: float = 2.0
    steps: int = 10

    def pairs(self, epsilon: float):
        k = self.k0
        for _ in range(self.steps):
            yield k, int(math.ceil(k * k / epsilon))
            k *= 2.0


def approximate(u: RealFunc, spec: LagrangianSpec, epsilon: float, schedule: Schedule | None = None,
                rel_tol: float = DEFAULT_REL_TOL, require_l1: bool = False,
                grid_size: int = 10_000, kernel: MollifierKernel | None = None,
                guard_panels: int = 2**14):
    """Smooth ``u`` until the certificate passes; returns ``(phi, cert)``.

    Raises :class:`InfiniteEnergyError` before iterating when the energy of
    ``u`` cannot be computed within ``guard_panels`` panels, and
    :class:`ScheduleExhausted` (carrying the best certificate) when no step
    of the schedule passes.
    """
    if not epsilon > 0:
        raise ValueError(f"epsilon must be positive, got {epsilon}")
    schedule = schedule or Schedule()
    x = np.linspace(0.0, 1.0, 1001)
    vals = np.asarray(u.eval(x), dtype=float)
    if vals.min() < 0.0 or vals.max() > 1.0:
        warnings.warn("u leaves [0, 1]; the smoothing guarantees assume 0 <= u <= 1")
    try:
        e = energy(u, spec, rel_tol, max_panels=guard_panels)
    except QuadratureError as exc:
        raise InfiniteEnergyError(f"energy of u did not converge: {exc}") from exc
    if not math.isfinite(e.log_magnitude) and e.sign != 0:
        raise InfiniteEnergyError("energy of u is infinite")

    best = None
    for k, n in schedule.pairs(epsilon):
        phi = smooth_stages(u, k, n, kernel)["phi"]
        cert = verify_certificate(u, phi, spec, epsilon, grid_size, rel_tol, require_l1)
        cert.k_used, cert.n_used = k, n
        if cert.passed:
            return phi, cert
        if best is None or cert.sup_distance < best.sup_distance:
            best = cert
    raise ScheduleExhausted(f"no schedule step passed for epsilon={epsilon}", best)


@dataclass
class NoGapReport:
    epsilon: float
    energies: list  # (label, log F(u), log F(phi))
    min_energy: float
    min_smoothed_energy: float

    @property
    def difference(self) -> float:
        return abs(self.min_energy - self.min_smoothed_energy)

    @property
    def passed(self) -> bool:
        return self.difference <= 2 * self.epsilon

    def to_json(self) -> dict:
        return {"epsilon": self.epsilon, "min_energy": self.min_energy,
                "min_smoothed_energy": self.min_smoothed_energy,
                "difference": self.difference, "passed": self.passed,
                "rows": [{"label": lbl, "log_energy": a, "log_energy_smoothed": b}
                         for lbl, a, b in self.energies]}


def no_gap_report(corpus: Sequence[tuple[str, RealFunc]], spec: LagrangianSpec, epsilon: float,
                  rel_tol: float = DEFAULT_REL_TOL) -> NoGapReport:
    """Sampled minima of ``F`` over a corpus and over its smoothings.

    Energies are compared on the linear scale, so the Lagrangian should keep them
    representable.
    """
    rows = []
    for label, u in corpus:
        phi, cert = approximate(u, spec, epsilon, rel_tol=rel_tol)
        rows.append((label, cert.energies_log[0], cert.energies_log[1]))
    lin = [(math.exp(a), math.exp(b)) for _, a, b in rows]
    return NoGapReport(epsilon, rows, min(a for a, _ in lin), min(b for _, b in lin))


def write_curves_csv(path, u: RealFunc, stages: dict, grid_size: int = 1001, header: Sequence[str] = ()):
    """Sample ``u``, ``u_k``, ``u_kn`` and ``phi`` (value and derivative)."""
    x = np.linspace(0.0, 1.0, grid_size)
    cols = [("u", u), ("u_k", stages["u_k"]), ("u_kn", stages["u_kn"]), ("phi", stages["phi"])]
    with open(path, "w", newline="") as fh:
        for line in header:
            fh.write(f"# {line}\n")
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["x"] + [f"{name}{suffix}" for name, _ in cols for suffix in ("", "_prime")])
        data = [x]
        for _, fn in cols:
            data.append(np.broadcast_to(np.asarray(fn.eval(x), dtype=float), x.shape))
            data.append(np.broadcast_to(np.asarray(fn.deriv(x), dtype=float), x.shape))
        for row in zip(*data):
            w.writerow([repr(float(v)) for v in row])
