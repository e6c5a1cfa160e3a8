"""Deterministic scalar bracketing primitives: bisection and golden section."""

from __future__ import annotations

import math
from typing import Callable

INV_PHI = (math.sqrt(5.0) - 1.0) / 2.0


def bisect(
    f: Callable[[float], float],
    lo: float,
    hi: float,
    f_lo: float | None = None,
    f_hi: float | None = None,
    max_iter: int = 400,
) -> tuple[float, int]:
    """Locate a sign change of ``f`` in ``[lo, hi]`` to machine resolution.

    Returns ``(root, iterations)``.  The endpoints must carry opposite signs
    (or one of them must be an exact zero).
    """
    f_lo = f(lo) if f_lo is None else f_lo
    f_hi = f(hi) if f_hi is None else f_hi
    if f_lo == 0:
        return lo, 0
    if f_hi == 0:
        return hi, 0
    if (f_lo > 0) == (f_hi > 0):
        raise ValueError(f"no sign change on [{lo!r}, {hi!r}]: f = ({f_lo!r}, {f_hi!r})")
    it = 0
    while it < max_iter:
        mid = 0.5 * (lo + hi)
        if mid <= lo or mid >= hi:
            break
        it += 1
        f_mid = f(mid)
        if f_mid == 0:
            return mid, it
        if (f_mid > 0) == (f_lo > 0):
            lo, f_lo = mid, f_mid
        else:
            hi, f_hi = mid, f_mid
    # the endpoint with the smaller residual
    return (lo if abs(f_lo) <= abs(f_hi) else hi), it


def golden_section(
    f: Callable[[float], float],
    lo: float,
    hi: float,
    tol: float = 1e-10,
    max_iter: int = 500,
) -> tuple[float, float, tuple[float, float], int]:
    """Minimize a unimodal ``f`` on ``[lo, hi]``.

    Returns ``(x, f(x), (lo, hi), iterations)`` where ``(lo, hi)`` is the
    final bracket, narrower than ``tol`` unless ``max_iter`` ran out.
    """
    x1 = hi - INV_PHI * (hi - lo)
    x2 = lo + INV_PHI * (hi - lo)
    f1, f2 = f(x1), f(x2)
    it = 0
    while hi - lo > tol and it < max_iter:
        it += 1
        if f1 <= f2:
            hi, x2, f2 = x2, x1, f1
            x1 = hi - INV_PHI * (hi - lo)
            f1 = f(x1)
        else:
            lo, x1, f1 = x1, x2, f2
            x2 = lo + INV_PHI * (hi - lo)
            f2 = f(x2)
    x, fx = (x1, f1) if f1 <= f2 else (x2, f2)
    return x, fx, (lo, hi), it
