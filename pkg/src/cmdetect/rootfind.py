"""Bracketed scalar root finding: bisection safeguarded by Newton steps."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

__all__ = ["BracketError", "ConvergenceError", "RootResult", "bracketed_root"]


class BracketError(ValueError):
    """The supplied interval does not bracket a sign change."""


class ConvergenceError(RuntimeError):
    """The iteration budget was exhausted before reaching tolerance."""


@dataclass(frozen=True)
class RootResult:
    root: float
    iterations: int
    residual: float
    bracket: tuple[float, float]


def bracketed_root(
    f: Callable[[float], float],
    lo: float,
    hi: float,
    fprime: Callable[[float], float] | None = None,
    xtol: float = 1e-10,
    max_iter: int = 200,
) -> RootResult:
    """Find the root of ``f`` inside [lo, hi] where f(lo) and f(hi) differ in sign.

    A Newton step (analytic ``fprime`` when given, secant otherwise) is taken
    whenever it lands inside the current bracket; otherwise the method falls
    back to bisection, so convergence is guaranteed at bisection rate in the
    worst case.
    """
    a, b = float(lo), float(hi)
    fa, fb = f(a), f(b)
    if fa == 0.0:
        return RootResult(a, 0, 0.0, (a, b))
    if fb == 0.0:
        return RootResult(b, 0, 0.0, (a, b))
    if fa * fb > 0.0:
        raise BracketError(f"no sign change on [{lo}, {hi}]: f(lo)={fa}, f(hi)={fb}")

    x, fx = (a, fa) if abs(fa) < abs(fb) else (b, fb)
    x_prev, fx_prev = (b, fb) if x == a else (a, fa)
    for it in range(1, max_iter + 1):
        if b - a <= xtol:
            mid = 0.5 * (a + b)
            return RootResult(mid, it, f(mid), (lo, hi))

        step = None
        if fprime is not None:
            d = fprime(x)
            if d != 0.0:
                step = x - fx / d
        if step is None and fx != fx_prev:
            step = x - fx * (x - x_prev) / (fx - fx_prev)
        if step is None or not (a < step < b):
            step = 0.5 * (a + b)

        f_step = f(step)
        x_prev, fx_prev = x, fx
        x, fx = step, f_step
        if fx == 0.0:
            return RootResult(x, it, 0.0, (lo, hi))
        if fa * fx < 0.0:
            b, fb = x, fx
        else:
            a, fa = x, fx

    raise ConvergenceError(f"no convergence to xtol={xtol} in {max_iter} iterations")
