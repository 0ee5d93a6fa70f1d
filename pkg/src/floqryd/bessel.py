"""Bessel functions of the first kind and their zeros.

Evaluation uses Miller's downward recurrence with normalisation, which is
accurate to better than 1e-12 over the argument range this package needs
(x <= ~20, orders <= ~25).  Zeros are located by bisection on the recurrence
evaluation, so the module has no external special-function dependency.
"""
from __future__ import annotations

import math

__all__ = ["bessel_j", "bessel_j_many", "j0_zero", "j1_zero", "j0_j1_crossing"]


def bessel_j_many(max_order: int, x: float) -> list[float]:
    """Return [J_0(x), J_1(x), ..., J_max_order(x)].

    Downward recurrence J_{m-1} = (2m/x) J_m - J_{m+1} from a start order
    well above both max_order and x, normalised with
    J_0 + 2*(J_2 + J_4 + ...) = 1.
    """
    if max_order < 0:
        raise ValueError("max_order must be >= 0")
    if x < 0:
        raise ValueError("argument must be >= 0 (use J_m(-x) = (-1)^m J_m(x))")
    if x == 0.0:
        return [1.0] + [0.0] * max_order

    start = max(max_order, int(math.ceil(x))) + 20 + int(2 * math.sqrt(max(max_order, x)))
    jp, j = 0.0, 1e-300
    out = [0.0] * (start + 1)
    out[start] = j
    for m in range(start, 0, -1):
        jm = (2.0 * m / x) * j - jp
        jp, j = j, jm
        out[m - 1] = jm
        if abs(j) > 1e250:  # rescale to avoid overflow
            j *= 1e-250
            jp *= 1e-250
            for k in range(m - 1, start + 1):
                out[k] *= 1e-250
    norm = out[0] + 2.0 * sum(out[k] for k in range(2, start + 1, 2))
    return [v / norm for v in out[: max_order + 1]]


def bessel_j(order: int, x: float) -> float:
    """J_m(x) for integer order; negative orders via J_{-m} = (-1)^m J_m."""
    m = abs(order)
    sign = -1.0 if (order < 0 and m % 2 == 1) else 1.0
    if x < 0:
        if m % 2 == 1:
            sign = -sign
        x = -x
    return sign * bessel_j_many(m, x)[m]


def _bisect(f, lo: float, hi: float, tol: float = 1e-12) -> float:
    flo = f(lo)
    fhi = f(hi)
    if flo == 0.0:
        return lo
    if fhi == 0.0:
        return hi
    if flo * fhi > 0:
        raise ValueError(f"no sign change on [{lo}, {hi}]")
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        fm = f(mid)
        if fm == 0.0:
            return mid
        if flo * fm < 0:
            hi = mid
        else:
            lo, flo = mid, fm
    return 0.5 * (lo + hi)


def _nth_zero(order: int, n: int) -> float:
    """n-th positive zero (1-based) of J_order by scanning for sign changes."""
    if n < 1:
        raise ValueError("n must be >= 1")
    f = lambda x: bessel_j(order, x)
    x, step = 0.05, 0.05
    prev = f(x)
    found = 0
    while x < 200.0:
        xn = x + step
        cur = f(xn)
        if prev == 0.0 or prev * cur < 0:
            found += 1
            if found == n:
                return _bisect(f, x, xn)
        x, prev = xn, cur
    raise ValueError(f"zero #{n} of J_{order} not found below x=200")


def j0_zero(n: int) -> float:
    """n-th positive zero of J_0 (n=1 -> 2.4048..., n=2 -> 5.5201...)."""
    return _nth_zero(0, n)


def j1_zero(n: int) -> float:
    """n-th positive zero of J_1, excluding x=0 (n=1 -> 3.8317...)."""
    return _nth_zero(1, n)


def j0_j1_crossing(n: int = 1) -> float:
    """n-th positive solution of J_0(x) = J_1(x) (n=1 -> 1.4347...)."""
    if n < 1:
        raise ValueError("n must be >= 1")
    f = lambda x: bessel_j(0, x) - bessel_j(1, x)
    x, step = 0.05, 0.05
    prev = f(x)
    found = 0
    while x < 200.0:
        xn = x + step
        cur = f(xn)
        if prev == 0.0 or prev * cur < 0:
            found += 1
            if found == n:
                return _bisect(f, x, xn)
        x, prev = xn, cur
    raise ValueError(f"crossing #{n} not found below x=200")
