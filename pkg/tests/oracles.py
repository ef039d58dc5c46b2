"""Independent reference computations used by the tests.

Nothing here imports the package; these are deliberately simple methods
(midpoint sums, bisection, grid maxima) that share no code with it.
"""
import math

import numpy as np
from scipy.special import logsumexp


def graded_midpoint_log(log_integrand, a, b, points=10_000_000, grade=3, singular=("a",), chunk=1_000_000):
    """``log`` of the integral by a midpoint sum in a graded variable.

    ``x = a + (b - a) * t**grade`` clusters nodes at ``a`` (or the mirror
    for ``b``); with both ends singular the interval is split at the middle.
    """
    if set(singular) == {"a", "b"}:
        m = 0.5 * (a + b)
        half = points // 2
        return np.logaddexp(graded_midpoint_log(log_integrand, a, m, half, grade, ("a",), chunk),
                            graded_midpoint_log(log_integrand, m, b, half, grade, ("b",), chunk))
    parts = []
    h = 1.0 / points
    for start in range(0, points, chunk):
        t = (np.arange(start, min(start + chunk, points)) + 0.5) * h
        if "a" in singular:
            x = a + (b - a) * t**grade
            jac = (b - a) * grade * t ** (grade - 1)
        elif "b" in singular:
            x = b - (b - a) * t**grade
            jac = (b - a) * grade * t ** (grade - 1)
        else:
            x = a + (b - a) * t
            jac = np.full_like(t, b - a)
        with np.errstate(divide="ignore"):
            parts.append(logsumexp(log_integrand(x) + np.log(jac)) + math.log(h))
    return float(logsumexp(parts))


def bisect(f, lo, hi, iterations=200):
    flo = f(lo)
    for _ in range(iterations):
        mid = 0.5 * (lo + hi)
        fm = f(mid)
        if fm == 0:
            return mid
        if (fm > 0) == (flo > 0):
            lo, flo = mid, fm
        else:
            hi = mid
    return 0.5 * (lo + hi)


def u_n_log_integrand(n, c=2048.0):
    def g(x):
        d = x * (x - 1.0) / n
        du = 1.0 / (2.0 * np.sqrt(x)) + (2.0 * x - 1.0) / n
        return -2.0 / (d * d) + c * du * du
    return g
