"""Deterministic point samplers and the coercivity-constant fit."""

from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class Sampler:
    """Points on a sequence of radius shells.

    ``gaussian_shell`` draws ``R * g / sqrt(m)`` with standard normal ``g``,
    so magnitudes spread around each radius ``R``; ``grid`` uses normalized
    vectors of the lattice ``{-1, 0, 1}^m`` scaled to ``R``.
    """

    seed: int = 0
    count: int = 64
    radius_schedule: tuple[float, ...] = (1e-2, 1e-1, 1.0, 10.0, 100.0)
    distribution: str = "gaussian_shell"

    def __post_init__(self):
        radii = tuple(float(r) for r in self.radius_schedule)
        object.__setattr__(self, "radius_schedule", radii)
        if self.count < 1:
            raise ValueError("count must be >= 1")
        if not radii or any(r <= 0 for r in radii):
            raise ValueError("radii must be positive")
        if any(b <= a for a, b in zip(radii, radii[1:])):
            raise ValueError("radii must be strictly increasing")
        if self.distribution not in ("gaussian_shell", "grid"):
            raise ValueError(f"unknown distribution {self.distribution!r}")

    @property
    def radii(self) -> np.ndarray:
        return np.asarray(self.radius_schedule)

    def rng(self, stream: int = 0) -> np.random.Generator:
        """Independent generator per consumer so that checks do not interfere."""
        return np.random.default_rng([self.seed, stream])

    def shells(self, m: int, stream: int = 0) -> np.ndarray:
        """Array ``(n_shells, count, m)`` of sample vectors."""
        radii = self.radii[:, None, None]
        if self.distribution == "grid":
            dirs = _lattice_directions(m)
            idx = np.arange(self.count) % len(dirs)
            return radii * dirs[idx][None, :, :]
        g = self.rng(stream).standard_normal((len(self.radii), self.count, m))
        return radii * g / np.sqrt(m)

    def directions(self, n: int, m: int, stream: int = 0) -> np.ndarray:
        g = self.rng(stream).standard_normal((n, m))
        return g / np.linalg.norm(g, axis=-1, keepdims=True)


def _lattice_directions(m: int) -> np.ndarray:
    pts = np.array([p for p in itertools.product((-1.0, 0.0, 1.0), repeat=m) if any(p)])
    return pts / np.linalg.norm(pts, axis=-1, keepdims=True)


def fit_coercivity(sd, s, d, ps, pd, shell, theta, rtol=1e-9, backoff=1e-6):
    """Largest ``C1`` with ``S:D >= C1 (|S|^ps + |D|^pd) - C2`` on the samples.

    The dissipation is split as ``theta S:D >= C1 |D|^pd - c`` and
    ``(1-theta) S:D >= C1 |S|^ps - c``.  A candidate ``C1`` is admissible when
    the largest violation on the outermost shell does not exceed the largest
    violation on the inner shells (a growing violation means no finite
    ``C2`` exists).  The supremum found by bisection is reduced by the
    relative ``backoff`` so that the reported constant sits strictly inside
    the admissible set.  Returns ``(C1, C2, index_of_worst_sample)``;
    ``C1 = 0`` when no positive candidate is admissible.
    """
    sd, s, d, shell = (np.asarray(x, dtype=float) for x in (sd, s, d, shell))
    with np.errstate(over="ignore", invalid="ignore"):
        dp = d ** pd
        sp = s ** ps
    last = shell == shell.max()
    inner = ~last
    if not np.any(inner):
        raise ValueError("coercivity fit needs at least two shells")
    scale = max(1.0, float(np.max(np.abs(sd[last]))))

    def violation(c1):
        return np.maximum(c1 * dp - theta * sd, c1 * sp - (1.0 - theta) * sd)

    def admissible(c1):
        v = violation(c1)
        if not np.all(np.isfinite(v)):
            return False
        return v[last].max() <= max(v[inner].max(), 0.0) + rtol * scale

    cands = 2.0 ** np.arange(40, -41, -1, dtype=float)
    lo = None
    for c in cands:
        if admissible(c):
            lo = c
            break
    if lo is None:
        v = violation(cands[-1])
        return 0.0, float(np.nanmax(v)), int(np.nanargmax(v))
    hi = 2.0 * lo
    for _ in range(60):
        mid = 0.5 * (lo + hi)
        if admissible(mid):
            lo = mid
        else:
            hi = mid
    lo *= 1.0 - backoff
    v = violation(lo)
    return float(lo), float(max(0.0, v.max())), int(np.argmax(v))


def fit_coercivity_budget(sd, s, d, ps, pd, theta, c2=1.0):
    """Largest ``C1`` whose split violations stay below a fixed offset ``c2``.

    Used where the pair ``(C1, C2)`` must be comparable across a family of
    relations: fixing ``C2`` removes the trade-off between the two constants.
    """
    sd, s, d = (np.asarray(x, dtype=float) for x in (sd, s, d))
    dp, sp = d ** pd, s ** ps

    def ok(c1):
        return np.max(np.maximum(c1 * dp - theta * sd, c1 * sp - (1.0 - theta) * sd)) <= c2

    if not ok(0.0):
        return 0.0
    hi = 1.0
    while ok(hi) and hi < 1e300:
        hi *= 2.0
    lo = 0.0 if not ok(0.5 * hi) else 0.5 * hi
    for _ in range(100):
        mid = 0.5 * (lo + hi)
        if ok(mid):
            lo = mid
        else:
            hi = mid
    return float(lo)
