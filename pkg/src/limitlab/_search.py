"""One-dimensional maximization helpers (golden-section based)."""

from __future__ import annotations

import math
from typing import Callable, Iterable, Sequence, Tuple

_INV_PHI = (math.sqrt(5.0) - 1.0) / 2.0  # 1/phi


def golden_max(
    f: Callable[[float], float],
    lo: float,
    hi: float,
    tol: float = 1e-10,
    max_iter: int = 400,
) -> Tuple[float, float]:
    """Maximize ``f`` on the bracket [lo, hi] by golden-section search.

    Returns (argmax, value).  The bracket endpoints are always included
    as candidates, so a maximum attained at the boundary is not lost.
    """
    if hi < lo:
        lo, hi = hi, lo
    a, b = lo, hi
    c = b - (b - a) * _INV_PHI
    d = a + (b - a) * _INV_PHI
    fc, fd = f(c), f(d)
    it = 0
    while abs(b - a) > tol and it < max_iter:
        if fc >= fd:
            b, d, fd = d, c, fc
            c = b - (b - a) * _INV_PHI
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + (b - a) * _INV_PHI
            fd = f(d)
        it += 1
    candidates = [(lo, f(lo)), (hi, f(hi)), (c, fc), (d, fd)]
    mid = 0.5 * (a + b)
    candidates.append((mid, f(mid)))
    return max(candidates, key=lambda p: p[1])


def golden_max_log(
    f: Callable[[float], float],
    lo: float,
    hi: float,
    rel_tol: float = 1e-10,
) -> Tuple[float, float]:
    """Golden-section maximization on a logarithmic axis, lo, hi > 0."""
    if lo <= 0 or hi <= 0:
        raise ValueError("log-axis search needs positive bracket endpoints")
    u, val = golden_max(lambda s: f(math.exp(s)), math.log(lo), math.log(hi), tol=rel_tol)
    return math.exp(u), val


def multistart_max_log(
    f: Callable[[float], float],
    anchors: Iterable[float],
    rel_tol: float = 1e-10,
    pad: float = 4.0,
) -> Tuple[float, float]:
    """Maximize over r > 0 with golden-section restarts between anchors.

    The anchor radii (typically geometric breakpoints of ``f``) split the
    axis into brackets; each bracket is searched separately and the
    anchors themselves are evaluated, so maxima sitting exactly on a
    breakpoint are found to full precision.
    """
    pts: Sequence[float] = sorted({float(a) for a in anchors if a > 0})
    if not pts:
        raise ValueError("need at least one positive anchor")
    brackets = [(pts[0] / pad, pts[0])]
    brackets += [(pts[i], pts[i + 1]) for i in range(len(pts) - 1)]
    brackets.append((pts[-1], pts[-1] * pad))
    best_x, best_v = pts[0], f(pts[0])
    for x in pts[1:]:
        v = f(x)
        if v > best_v:
            best_x, best_v = x, v
    for a, b in brackets:
        if b / a < 1.0 + 1e-14:
            continue
        x, v = golden_max_log(f, a, b, rel_tol=rel_tol)
        if v > best_v:
            best_x, best_v = x, v
    return best_x, best_v
