"""Adaptive Gauss-Legendre quadrature and bracketed bisection.

Both routines are small enough to own outright, and doing so keeps the
error contracts (absolute tolerance, iteration caps) explicit.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .errors import NumericalError

GL_ORDER = 10
_GL_NODES, _GL_WEIGHTS = np.polynomial.legendre.leggauss(GL_ORDER)


def _gl_panels(func, lo: np.ndarray, hi: np.ndarray) -> np.ndarray:
    """Fixed-order Gauss-Legendre estimate on each panel [lo[i], hi[i]]."""
    half = 0.5 * (hi - lo)
    mid = 0.5 * (hi + lo)
    x = mid[:, None] + half[:, None] * _GL_NODES[None, :]
    fx = np.asarray(func(x.ravel()), dtype=float).reshape(x.shape)
    return half * (fx @ _GL_WEIGHTS)


def integrate(
    func: Callable[[np.ndarray], np.ndarray],
    a: float,
    b: float,
    *,
    breakpoints: Sequence[float] = (),
    abs_tol: float = 1e-10,
    max_panels: int = 200_000,
    min_width: float = 1e-15,
) -> float:
    """Integrate a vectorised ``func`` over [a, b].

    Panels are bisected until the two-half estimate agrees with the whole-panel
    estimate to within the panel's share of ``abs_tol``. Known kinks or jumps
    should be passed as ``breakpoints`` so they land on panel edges.

    Raises NumericalError (with ``achieved`` set to the accumulated error
    estimate) when ``max_panels`` is exhausted.
    """
    a = float(a)
    b = float(b)
    if b < a:
        return -integrate(func, b, a, breakpoints=breakpoints, abs_tol=abs_tol,
                          max_panels=max_panels, min_width=min_width)
    if b == a:
        return 0.0
    inner = sorted({float(x) for x in breakpoints if a < x < b})
    edges = np.array([a, *inner, b])
    lo, hi = edges[:-1], edges[1:]
    est = _gl_panels(func, lo, hi)
    span = b - a

    total = 0.0
    err = 0.0
    used = len(lo)
    while len(lo):
        mid = 0.5 * (lo + hi)
        halves = _gl_panels(func, np.concatenate([lo, mid]), np.concatenate([mid, hi]))
        n = len(lo)
        left, right = halves[:n], halves[n:]
        refined = left + right
        diff = np.abs(refined - est)
        width = hi - lo
        done = (diff <= abs_tol * width / span) | (width <= min_width)
        total += float(np.sum(refined[done]))
        err += float(np.sum(diff[done]))
        keep = ~done
        used += 2 * int(np.count_nonzero(keep))
        if used > max_panels:
            leftover = float(np.sum(diff[keep]))
            raise NumericalError(
                f"quadrature did not converge on [{a}, {b}]: "
                f"error estimate {err + leftover:.3g} > {abs_tol:.3g}",
                achieved=err + leftover,
            )
        lo = np.concatenate([lo[keep], mid[keep]])
        hi = np.concatenate([mid[keep], hi[keep]])
        est = np.concatenate([left[keep], right[keep]])
    return total


@dataclass(frozen=True)
class RootResult:
    x: float
    residual: float
    iterations: int
    converged: bool


def bisect(
    func: Callable[[float], float],
    lo: float,
    hi: float,
    *,
    xtol: float = 1e-9,
    ftol: float = 1e-8,
    max_iter: int = 200,
) -> RootResult:
    """Find a sign change of ``func`` inside [lo, hi] by bisection.

    Iterates until the bracket is narrower than ``xtol`` *and* the midpoint
    residual is within ``ftol``, or until the bracket cannot shrink any
    further in floating point. Passing ``xtol=ftol=0`` therefore resolves
    the root to adjacent floats.
    """
    f_lo = func(lo)
    f_hi = func(hi)
    if f_lo == 0.0:
        return RootResult(lo, 0.0, 0, True)
    if f_hi == 0.0:
        return RootResult(hi, 0.0, 0, True)
    if np.sign(f_lo) == np.sign(f_hi):
        raise NumericalError(
            f"no sign change on [{lo}, {hi}]: f={f_lo:.6g}, {f_hi:.6g}"
        )
    best_x, best_f = (lo, f_lo) if abs(f_lo) <= abs(f_hi) else (hi, f_hi)
    exhausted = False
    for it in range(1, max_iter + 1):
        mid = 0.5 * (lo + hi)
        if mid <= lo or mid >= hi:
            # bracket is two adjacent floats; nothing left to refine
            exhausted = True
            break
        f_mid = func(mid)
        if abs(f_mid) <= abs(best_f):
            best_x, best_f = mid, f_mid
        if f_mid == 0.0:
            return RootResult(mid, 0.0, it, True)
        if np.sign(f_mid) == np.sign(f_lo):
            lo, f_lo = mid, f_mid
        else:
            hi, f_hi = mid, f_mid
        if hi - lo <= xtol and abs(best_f) <= ftol:
            return RootResult(best_x, best_f, it, True)
    else:
        it = max_iter
    return RootResult(best_x, best_f, it, exhausted or abs(best_f) <= ftol)
