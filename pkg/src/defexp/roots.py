"""Safeguarded Newton iteration for monotone scalar equations."""

from __future__ import annotations

import math
from typing import Callable, NamedTuple


class RootResult(NamedTuple):
    x: float
    fx: float
    iterations: int
    converged: bool


def newton_bisect(
    f: Callable[[float], tuple[float, float]],
    lo: float,
    hi: float,
    ftol: float,
    max_iter: int = 100,
    x0: float | None = None,
    xtol: float = 0.0,
) -> RootResult:
    """Solve ``f(x) = 0`` for ``f`` increasing on ``[lo, hi]``.

    ``f`` returns the pair ``(value, derivative)``. The bracket must satisfy
    ``f(lo) <= 0 <= f(hi)``. A Newton step that leaves the current bracket,
    or a non-finite value, is replaced by bisection. Stops when
    ``|f| <= ftol``, when the bracket is narrower than ``xtol`` or cannot be
    split further in floating point, or after ``max_iter`` evaluations.
    """
    x = 0.5 * (lo + hi) if x0 is None else min(max(x0, lo), hi)
    best = RootResult(x, math.inf, 0, False)
    for it in range(1, max_iter + 1):
        fx, dfx = f(x)
        if math.isfinite(fx) and abs(fx) < abs(best.fx):
            best = RootResult(x, fx, it, False)
        if math.isfinite(fx) and abs(fx) <= ftol:
            return RootResult(x, fx, it, True)
        # non-finite values only arise from overflow on the high side
        if not math.isfinite(fx) or fx > 0:
            hi = x
        else:
            lo = x
        if hi - lo <= xtol:
            return best._replace(iterations=it)
        step_ok = math.isfinite(fx) and math.isfinite(dfx) and dfx > 0
        if step_ok:
            nxt = x - fx / dfx
            step_ok = lo < nxt < hi
        if not step_ok:
            nxt = 0.5 * (lo + hi)
            if nxt in (lo, hi):
                return best._replace(iterations=it)
        x = nxt
    return best._replace(iterations=max_iter)


def bisect(
    f: Callable[[float], float], lo: float, hi: float, xtol: float, max_iter: int = 400
) -> float:
    """Plain bisection for increasing ``f``; returns the bracket midpoint."""
    for _ in range(max_iter):
        mid = 0.5 * (lo + hi)
        if hi - lo <= xtol or mid in (lo, hi):
            break
        if f(mid) > 0:
            hi = mid
        else:
            lo = mid
    return 0.5 * (lo + hi)
