"""Finite unions of intervals, separating partitions and level-set partitions.

Endpoints are :class:`fractions.Fraction` in rational mode, which makes every
measure and containment check exact. Float mode runs the same code on float
endpoints.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable

from .func_model import StepFunction

MODES = ("rational", "float")


def as_number(v, mode: str = "rational"):
    """Coerce to the arithmetic of ``mode``.

    Floats enter rational mode through their shortest decimal repr, so
    ``0.1`` becomes ``1/10``.
    """
    if mode not in MODES:
        raise ValueError(f"mode must be one of {MODES}, got {mode!r}")
    if mode == "float":
        return float(v)
    if isinstance(v, float):
        return Fraction(repr(v))
    return Fraction(v)


def fraction_str(v) -> str:
    if isinstance(v, Fraction):
        return f"{v.numerator}/{v.denominator}"
    if isinstance(v, int):
        return f"{v}/1"
    return repr(float(v))


def _to_json_number(v) -> dict:
    return {"exact": fraction_str(v), "float": float(v)}


@dataclass(frozen=True, order=False)
class Interval:
    lo: object
    hi: object
    lo_closed: bool = True
    hi_closed: bool = True

    def __post_init__(self):
        if self.lo > self.hi or (self.lo == self.hi and not (self.lo_closed and self.hi_closed)):
            raise ValueError(f"empty interval {self}")

    @property
    def length(self):
        return self.hi - self.lo

    def contains(self, x) -> bool:
        left = self.lo <= x if self.lo_closed else self.lo < x
        right = x <= self.hi if self.hi_closed else x < self.hi
        return left and right

    def closure(self) -> "Interval":
        return Interval(self.lo, self.hi, True, True)

    def intersect(self, other: "Interval") -> "Interval | None":
        if self.lo > other.lo:
            lo, lc = self.lo, self.lo_closed
        elif other.lo > self.lo:
            lo, lc = other.lo, other.lo_closed
        else:
            lo, lc = self.lo, self.lo_closed and other.lo_closed
        if self.hi < other.hi:
            hi, hc = self.hi, self.hi_closed
        elif other.hi < self.hi:
            hi, hc = other.hi, other.hi_closed
        else:
            hi, hc = self.hi, self.hi_closed and other.hi_closed
        if lo < hi or (lo == hi and lc and hc):
            return Interval(lo, hi, lc, hc)
        return None

    def __str__(self):
        return f"{'[' if self.lo_closed else '('}{fraction_str(self.lo)}, {fraction_str(self.hi)}{']' if self.hi_closed else ')'}"

    def to_json(self) -> dict:
        return {"lo": _to_json_number(self.lo), "hi": _to_json_number(self.hi),
                "lo_closed": self.lo_closed, "hi_closed": self.hi_closed}


def _merge(intervals: Iterable[Interval]) -> tuple:
    ivs = sorted(intervals, key=lambda i: (i.lo, not i.lo_closed))
    out = []
    for iv in ivs:
        if out:
            cur = out[-1]
            if iv.lo < cur.hi or (iv.lo == cur.hi and (cur.hi_closed or iv.lo_closed)):
                if iv.hi > cur.hi:
                    hi, hc = iv.hi, iv.hi_closed
                elif iv.hi < cur.hi:
                    hi, hc = cur.hi, cur.hi_closed
                else:
                    hi, hc = cur.hi, cur.hi_closed or iv.hi_closed
                out[-1] = Interval(cur.lo, hi, cur.lo_closed, hc)
                continue
        out.append(iv)
    return tuple(out)


@dataclass(frozen=True)
class IntervalSet:
    """Sorted, pairwise disjoint intervals.

    Overlapping components and components sharing an endpoint that belongs
    to either of them are merged on construction. Two components may still
    touch at a point that belongs to neither, e.g. ``[0, 1/2) u (1/2, 1]``.
    """

    components: tuple = ()

    def __post_init__(self):
        object.__setattr__(self, "components", _merge(self.components))

    @classmethod
    def empty(cls) -> "IntervalSet":
        return cls(())

    @classmethod
    def unit(cls, mode: str = "rational") -> "IntervalSet":
        return cls((Interval(as_number(0, mode), as_number(1, mode)),))

    @classmethod
    def closed(cls, pairs, mode: str = "rational") -> "IntervalSet":
        """From ``(lo, hi)`` pairs, all closed."""
        return cls(tuple(Interval(as_number(a, mode), as_number(b, mode)) for a, b in pairs))

    def is_empty(self) -> bool:
        return not self.components

    def __len__(self):
        return len(self.components)

    def __iter__(self):
        return iter(self.components)

    @property
    def measure(self):
        if not self.components:
            return 0
        return sum((c.length for c in self.components[1:]), self.components[0].length)

    def contains(self, x) -> bool:
        return any(c.contains(x) for c in self.components)

    def union(self, other: "IntervalSet") -> "IntervalSet":
        return IntervalSet(self.components + other.components)

    def intersection(self, other: "IntervalSet") -> "IntervalSet":
        out = []
        i = j = 0
        a, b = self.components, other.components
        while i < len(a) and j < len(b):
            iv = a[i].intersect(b[j])
            if iv is not None:
                out.append(iv)
            if (a[i].hi, a[i].hi_closed) < (b[j].hi, b[j].hi_closed):
                i += 1
            else:
                j += 1
        return IntervalSet(tuple(out))

    def complement(self, lo=0, hi=1) -> "IntervalSet":
        """Complement within the closed interval ``[lo, hi]``."""
        zero = self.components[0].lo * 0 if self.components else 0
        lo, hi = lo + zero, hi + zero
        out = []
        start, start_closed = lo, True
        for c in self.components:
            if c.hi < lo or c.lo > hi:
                continue
            if start < c.lo or (start == c.lo and start_closed and not c.lo_closed):
                out.append(Interval(start, c.lo, start_closed, not c.lo_closed))
            start, start_closed = c.hi, not c.hi_closed
        if start < hi or (start == hi and start_closed):
            out.append(Interval(start, hi, start_closed, True))
        return IntervalSet(tuple(out)).intersection(IntervalSet((Interval(lo, hi),)))

    def difference(self, other: "IntervalSet") -> "IntervalSet":
        if self.is_empty():
            return self
        lo = min(self.components[0].lo, other.components[0].lo) if other.components else self.components[0].lo
        hi = max(self.components[-1].hi, other.components[-1].hi) if other.components else self.components[-1].hi
        return self.intersection(other.complement(lo, hi))

    def closure(self) -> "IntervalSet":
        return IntervalSet(tuple(c.closure() for c in self.components))

    def to_float(self) -> "IntervalSet":
        return IntervalSet(tuple(Interval(float(c.lo), float(c.hi), c.lo_closed, c.hi_closed)
                                 for c in self.components))

    def __str__(self):
        return " u ".join(str(c) for c in self.components) or "{}"

    def to_json(self) -> dict:
        return {"components": [c.to_json() for c in self.components],
                "measure": _to_json_number(self.measure)}


@dataclass(frozen=True)
class Partition:
    """Cover of [0, 1] by ``[a_i, a_{i+1})`` with the last interval closed."""

    cuts: tuple  # a_0 = 0 < a_1 < ... < a_N = 1

    def __post_init__(self):
        cuts = tuple(self.cuts)
        if len(cuts) < 2 or cuts[0] != 0 or cuts[-1] != 1:
            raise ValueError("cuts must run from 0 to 1")
        if any(b <= a for a, b in zip(cuts, cuts[1:])):
            raise ValueError("cuts must be strictly increasing")
        object.__setattr__(self, "cuts", cuts)

    @classmethod
    def from_cuts(cls, inner_cuts: Iterable, mode: str = "rational") -> "Partition":
        inner = sorted(set(c for c in inner_cuts if 0 < c < 1))
        return cls((as_number(0, mode), *inner, as_number(1, mode)))

    @property
    def intervals(self) -> list:
        n = len(self.cuts) - 1
        return [Interval(a, b, True, i == n - 1) for i, (a, b) in enumerate(zip(self.cuts, self.cuts[1:]))]

    def __len__(self):
        return len(self.cuts) - 1

    def index_of(self, x) -> int:
        for i, iv in enumerate(self.intervals):
            if iv.contains(x):
                return i
        raise ValueError(f"{x} is outside [0, 1]")

    def to_json(self) -> dict:
        return {"intervals": [iv.to_json() for iv in self.intervals], "count": len(self)}


# --------------------------------------------------------------------------
# separation

def _check_positive_length(P: IntervalSet, label: str):
    for c in P:
        if not c.length > 0:
            raise ValueError(f"{label} has a degenerate component {c}")


def separate_pair(P1: IntervalSet, P2: IntervalSet, mode: str = "midpoint") -> Partition:
    """Partition of [0, 1] whose intervals each meet at most one of ``P1``, ``P2``.

    Components of both sets are swept left to right; a cut goes into every
    gap between consecutive components of different sets. ``midpoint`` mode
    cuts at the middle of the gap; ``left-endpoint`` mode cuts at the left
    end of the next component, so every interval starts at a set point.
    """
    if mode not in ("midpoint", "left-endpoint"):
        raise ValueError(f"unknown separation mode {mode!r}")
    _check_positive_length(P1, "P1")
    _check_positive_length(P2, "P2")
    overlap = P1.closure().intersection(P2.closure())
    if not overlap.is_empty():
        raise ValueError(f"sets are not disjoint: both contain {fraction_str(overlap.components[0].lo)}")
    # match the endpoint arithmetic of the inputs
    sample = next(iter(P1.components + P2.components), None)
    one = 1.0 if isinstance(sample and sample.lo, float) else Fraction(1)
    if P1.is_empty() or P2.is_empty():
        return Partition((one * 0, one))
    tagged = sorted([(c, 1) for c in P1] + [(c, 2) for c in P2], key=lambda t: t[0].lo)
    cuts = []
    for (prev, s), (nxt, t) in zip(tagged, tagged[1:]):
        if s != t:
            cuts.append((prev.hi + nxt.lo) / 2 if mode == "midpoint" else nxt.lo)
    return Partition((one * 0, *cuts, one))


def alternation_count(*sets: IntervalSet) -> int:
    """Number of label changes along the merged, ordered components."""
    tagged = sorted(((c.lo, i) for i, P in enumerate(sets) for c in P))
    return sum(1 for (_, s), (_, t) in zip(tagged, tagged[1:]) if s != t)


# --------------------------------------------------------------------------
# level sets

def _cell_intervals(uprime: StepFunction):
    cells = uprime.cells
    last = len(cells) - 1
    return [(Interval(lo, hi, True, i == last), v) for i, (lo, hi, v) in enumerate(cells)]


def level_index(value, n: int) -> int:
    return math.floor(value * n)


def level_sets(uprime: StepFunction, n: int) -> dict:
    """``C_k = {x : k/n <= u'(x) < (k+1)/n}`` for every ``k`` from
    ``floor(n min u')`` to ``floor(n max u')``; empty levels included."""
    if int(n) != n or n < 1:
        raise ValueError("n must be a positive integer")
    pieces: dict = {}
    for iv, v in _cell_intervals(uprime):
        pieces.setdefault(level_index(v, n), []).append(iv)
    keys = range(min(pieces), max(pieces) + 1)
    return {k: IntervalSet(tuple(pieces.get(k, ()))) for k in keys}


def inner_core(C: IntervalSet, delta) -> IntervalSet:
    """Closed ``P`` inside ``C`` with ``measure(C - P) <= delta``.

    Each component of length ``L`` is shrunk by ``min(delta/(2m), L/4)`` per
    side, ``m`` the component count; components shorter than ``delta/(2m)``
    are dropped.
    """
    if not delta > 0:
        raise ValueError("delta must be positive")
    if C.is_empty():
        return C
    step = delta / (2 * len(C))
    out = []
    for c in C:
        if c.length < step:
            continue
        s = min(step, c.length / 4)
        out.append(Interval(c.lo + s, c.hi - s, True, True))
    return IntervalSet(tuple(out))


@dataclass
class PartitionReport:
    epsilon: object
    n: int
    M: int
    core_budget: object
    measure: object
    measure_ok: bool
    cover_ok: bool
    max_diameter: object
    diameter_ok: bool
    diameters: list = field(default_factory=list)
    pairs_separated: int = 0

    @property
    def passed(self) -> bool:
        return self.measure_ok and self.cover_ok and self.diameter_ok

    def to_json(self) -> dict:
        return {
            "epsilon": _to_json_number(self.epsilon), "n": self.n, "M": self.M,
            "core_budget": _to_json_number(self.core_budget),
            "measure": _to_json_number(self.measure), "measure_ok": self.measure_ok,
            "cover_ok": self.cover_ok, "max_diameter": _to_json_number(self.max_diameter),
            "diameter_ok": self.diameter_ok, "pairs_separated": self.pairs_separated,
            "passed": self.passed,
        }


def level_set_partition(uprime: StepFunction, epsilon, mode: str = "rational",
                        cut_mode: str = "midpoint"):
    """Build ``(P_eps, B, report)`` with ``measure(P_eps) > 1 - eps`` and
    ``diam(u'(B_i & P_eps)) <= eps`` for every cell ``B_i``.

    ``n = floor(1/eps) + 1`` levels of width ``1/n``; every level set is
    shrunk to a closed core with budget ``eps / (4 max(M, 1))``, where ``M``
    is the largest ``|k|`` with a nonempty level. Cuts separating
    ``F_m = levels <= m`` from ``G_m = levels > m`` are pooled and sorted.
    """
    eps = as_number(epsilon, mode)
    if not 0 < eps < 1:
        raise ValueError(f"epsilon must lie in (0, 1), got {epsilon}")
    uprime = _coerce_step(uprime, mode)
    n = math.floor(1 / eps) + 1
    levels = {k: C for k, C in level_sets(uprime, n).items() if not C.is_empty()}
    M = max(abs(k) for k in levels)
    budget = eps / (4 * max(M, 1))
    cores = {k: inner_core(C, budget) for k, C in levels.items()}
    cores = {k: P for k, P in cores.items() if not P.is_empty()}
    P_eps = IntervalSet(tuple(c for P in cores.values() for c in P))
    keys = sorted(cores)
    cuts = set()
    pairs = 0
    for i, m in enumerate(keys[:-1]):
        F = IntervalSet(tuple(c for k in keys[: i + 1] for c in cores[k]))
        G = IntervalSet(tuple(c for k in keys[i + 1:] for c in cores[k]))
        part = separate_pair(G, F, cut_mode)
        cuts.update(part.cuts[1:-1])
        pairs += 1
    B = Partition.from_cuts(cuts, mode)
    report = verify_partition(uprime, P_eps, B, eps)
    report.n, report.M, report.core_budget, report.pairs_separated = n, M, budget, pairs
    return P_eps, B, report


def values_on(uprime: StepFunction, S: IntervalSet) -> set:
    """Exact set of values ``u'`` takes on ``S``."""
    vals = set()
    for iv, v in _cell_intervals(uprime):
        if not IntervalSet((iv,)).intersection(S).is_empty():
            vals.add(v)
    return vals


def verify_partition(uprime: StepFunction, P: IntervalSet, B: Partition, epsilon) -> PartitionReport:
    """Re-check the three partition conditions directly with set algebra."""
    zero = epsilon * 0
    measure = P.measure
    cover = IntervalSet(tuple(B.intervals))
    cover_ok = (cover.components == IntervalSet.unit().components
                if isinstance(zero, Fraction) else
                len(cover) == 1 and cover.components[0].lo == 0 and cover.components[0].hi == 1
                and cover.components[0].lo_closed and cover.components[0].hi_closed)
    cover_ok = cover_ok and all(
        a.intersect(b) is None for i, a in enumerate(B.intervals) for b in B.intervals[i + 1:])
    diams = []
    for iv in B.intervals:
        vals = values_on(uprime, IntervalSet((iv,)).intersection(P))
        diams.append(max(vals) - min(vals) if vals else zero)
    max_d = max(diams)
    return PartitionReport(
        epsilon=epsilon, n=0, M=0, core_budget=zero, measure=measure,
        measure_ok=measure > 1 - epsilon, cover_ok=cover_ok, max_diameter=max_d,
        diameter_ok=max_d <= epsilon, diameters=diams)


def _coerce_step(uprime: StepFunction, mode: str) -> StepFunction:
    return StepFunction([as_number(b, mode) for b in uprime.breakpoints],
                        [as_number(v, mode) for v in uprime.plateau_values])


# --------------------------------------------------------------------------
# the counterexample

def counterexample_set(epsilon, depth: int, mode: str = "rational"):
    """First ``depth`` components ``[(1+eps)/2^j, (1-eps)/2^(j-1)]`` and the
    derivative that alternates between -1 and +1 on dyadic bands.

    ``u'`` is -1 on ``[2^-(i+1), 2^-i)`` for even ``i`` (the top band
    ``[1/2, 1]`` closed) and +1 for odd ``i``, with bands down to
    ``2^-(2 depth + 1)`` and +1 below. Component ``j`` lies inside band
    ``i = j - 1``, so consecutive components see opposite signs.
    """
    eps = as_number(epsilon, mode)
    if not 0 < eps < as_number(Fraction(1, 4), mode):
        raise ValueError(f"epsilon must lie in (0, 1/4), got {epsilon}")
    if int(depth) != depth or depth < 1:
        raise ValueError("depth must be a positive integer")
    one = as_number(1, mode)
    two = as_number(2, mode)
    comps = [Interval((one + eps) / two ** j, (one - eps) / two ** (j - 1)) for j in range(1, depth + 1)]
    bottom = 2 * depth + 1
    bps = [one * 0] + [one / two ** i for i in range(bottom, -1, -1)]
    vals = [one] + [(-one if i % 2 == 0 else one) for i in range(bottom - 1, -1, -1)]
    return IntervalSet(tuple(comps)), StepFunction(bps, vals)


def counterexample_measure(epsilon, depth: int, mode: str = "rational"):
    """``(1 - 3 eps)(1 - 2^-depth)``."""
    eps = as_number(epsilon, mode)
    one = as_number(1, mode)
    return (one - 3 * eps) * (one - one / as_number(2, mode) ** depth)


def min_separating_size(uprime: StepFunction, P: IntervalSet) -> int:
    """Number of maximal runs of consecutive components of ``P`` on which
    ``u'`` has the same constant value."""
    run_values = []
    for c in P:
        vals = values_on(uprime, IntervalSet((c,)))
        if len(vals) != 1:
            raise ValueError(f"u' is not constant on component {c}: values {sorted(vals)}")
        (v,) = vals
        if not run_values or run_values[-1] != v:
            run_values.append(v)
    return len(run_values)
