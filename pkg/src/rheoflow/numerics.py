"""Small vectorized scalar solvers shared by the relation catalog and oracles."""

from __future__ import annotations

from typing import Callable

import numpy as np


def bisect_increasing(
    f: Callable[[np.ndarray], np.ndarray],
    target: np.ndarray,
    lo: np.ndarray | float = 0.0,
    hi: np.ndarray | float = 1.0,
    max_grow: int = 200,
    iters: int = 200,
) -> np.ndarray:
    """Solve ``f(x) = target`` for a nondecreasing ``f`` elementwise.

    ``hi`` is doubled until it brackets the root; bisection then runs until
    the bracket stops shrinking in floating point.
    """
    target = np.asarray(target, dtype=float)
    lo = np.broadcast_to(np.asarray(lo, dtype=float), target.shape).copy()
    hi = np.broadcast_to(np.asarray(hi, dtype=float), target.shape).copy()
    hi = np.maximum(hi, lo + 1.0)
    with np.errstate(all="ignore"):
        for _ in range(max_grow):
            short = f(hi) < target
            if not np.any(short):
                break
            lo = np.where(short, hi, lo)
            hi = np.where(short, 2.0 * hi, hi)
        else:
            raise ArithmeticError("could not bracket root")
        for _ in range(iters):
            mid = 0.5 * (lo + hi)
            done = (mid <= lo) | (mid >= hi)
            if np.all(done):
                break
            below = f(mid) < target
            lo = np.where(below & ~done, mid, lo)
            hi = np.where(~below & ~done, mid, hi)
    # pick the endpoint with the smaller residual
    with np.errstate(all="ignore"):
        rlo = np.abs(f(lo) - target)
        rhi = np.abs(f(hi) - target)
    return np.where(rlo <= rhi, lo, hi)


def bisect_sign_change(
    g: Callable[[np.ndarray], np.ndarray],
    lo: np.ndarray,
    hi: np.ndarray,
    iters: int = 200,
) -> np.ndarray:
    """Elementwise bisection for ``g(x) = 0`` given ``g(lo) <= 0 <= g(hi)``."""
    lo = np.asarray(lo, dtype=float).copy()
    hi = np.asarray(hi, dtype=float).copy()
    with np.errstate(all="ignore"):
        for _ in range(iters):
            mid = 0.5 * (lo + hi)
            done = (mid <= lo) | (mid >= hi)
            if np.all(done):
                break
            neg = g(mid) < 0.0
            lo = np.where(neg & ~done, mid, lo)
            hi = np.where(~neg & ~done, mid, hi)
        glo = np.abs(g(lo))
        ghi = np.abs(g(hi))
    return np.where(glo <= ghi, lo, hi)
