"""Independent reference computations, used only by tests.

Nothing here certifies anything: these are the cross-checks the rigorous
path is tested against, deliberately built on different machinery —
arbitrary-precision arithmetic from mpmath for transcendentals, direct
surface quadrature for moments, finite differences for derivatives.  The
only shared vocabulary with the verified path is the domain types.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np
from mpmath import mp, mpf

from .rigor import EPS

mp.dps = 60  # ~200 bits of working precision


class BracketingError(RuntimeError):
    """The guarded sign-change test failed."""


# ---------------------------------------------------------------------------
# High-precision transcendentals
# ---------------------------------------------------------------------------

def hp_sin(x: float) -> mpf:
    """Sine at the exact double ``x``, to working precision."""
    return mp.sin(mpf(x))


def hp_cos(x: float) -> mpf:
    return mp.cos(mpf(x))


def hp_sqrt(x: float) -> mpf:
    return mp.sqrt(mpf(x))


def hp_acos(x) -> mpf:
    return mp.acos(mpf(x))


# ---------------------------------------------------------------------------
# Surface quadrature for triangle moments
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class QuadratureSpec:
    """Recursive 4-way geodesic midpoint subdivision depth.

    Patch integrals use the three geodesic edge midpoints (a degree-2
    rule), patch areas the spherical excess.  Observed accuracy of the
    moment on the octant triangle: 2.1e-6 at level 4, 1.3e-7 at level 5,
    improving ~16x per level; smaller test triangles reach 1e-6 by
    level 4.
    """

    level: int = 6

    def __post_init__(self) -> None:
        if not 0 <= self.level <= 10:
            raise ValueError("subdivision level must be in [0, 10]")


def _subdivide(tris: np.ndarray) -> np.ndarray:
    a, b, c = tris[:, 0], tris[:, 1], tris[:, 2]

    def mid(u, v):
        m = u + v
        return m / np.linalg.norm(m, axis=1, keepdims=True)

    mab, mbc, mca = mid(a, b), mid(b, c), mid(c, a)
    return np.concatenate([
        np.stack([a, mab, mca], axis=1),
        np.stack([mab, b, mbc], axis=1),
        np.stack([mca, mbc, c], axis=1),
        np.stack([mab, mbc, mca], axis=1)])


def _patch_areas(tris: np.ndarray) -> np.ndarray:
    """Spherical excess via l'Huilier's theorem."""
    a, b, c = tris[:, 0], tris[:, 1], tris[:, 2]
    ab = np.arccos(np.clip(np.sum(a * b, axis=1), -1.0, 1.0))
    bc = np.arccos(np.clip(np.sum(b * c, axis=1), -1.0, 1.0))
    ca = np.arccos(np.clip(np.sum(c * a, axis=1), -1.0, 1.0))
    s = 0.5 * (ab + bc + ca)
    t = np.tan(0.5 * s) * np.tan(0.5 * (s - ab)) \
        * np.tan(0.5 * (s - bc)) * np.tan(0.5 * (s - ca))
    return 4.0 * np.arctan(np.sqrt(np.clip(t, 0.0, None)))


def quad_moment(v1: np.ndarray, v2: np.ndarray, v3: np.ndarray,
                spec: QuadratureSpec = QuadratureSpec()) -> np.ndarray:
    """Numerical surface moment of a spherical triangle: the integral of
    the position vector over the triangle, by subdivision quadrature."""
    tris = np.array([[v1, v2, v3]], dtype=float)
    det = float(np.linalg.det(tris[0]))
    if det <= 1e-14:
        raise ValueError("triangle must be positively oriented and "
                         "non-degenerate")
    for _ in range(spec.level):
        tris = _subdivide(tris)
    areas = _patch_areas(tris)
    a, b, c = tris[:, 0], tris[:, 1], tris[:, 2]

    def mid(u, v):
        m = u + v
        return m / np.linalg.norm(m, axis=1, keepdims=True)

    f = (mid(a, b) + mid(b, c) + mid(c, a)) / 3.0
    return np.sum(areas[:, None] * f, axis=0)


# ---------------------------------------------------------------------------
# Root bracketing of the equilateral critical-point equation
# ---------------------------------------------------------------------------

def equilateral_quotient(theta) -> mpf:
    """Left side over right side of the equilateral reduction of the
    critical-point identity:

        cos(sqrt(2(2c+1)(1-c)) * theta/sin(theta)) = -sqrt(2c+1)/sqrt(3),

    with c = cos(theta).  The quotient equals 1 exactly at solutions."""
    t = mpf(theta)
    c = mp.cos(t)
    lhs = mp.cos(mp.sqrt(2 * (2 * c + 1) * (1 - c)) * t / mp.sin(t))
    rhs = -mp.sqrt(2 * c + 1) / mp.sqrt(3)
    return lhs / rhs


def bracket_root(x: float = 1.5379684120790425,
                 spread: float = 2000 * EPS,
                 guard: float = 3000 * EPS) -> tuple[float, float]:
    """Confirm the second equilateral critical edge length lies within
    ``spread`` of ``x`` by a guarded sign change of the quotient.

    The quotient at ``x - spread``, inflated by ``(1 + guard)``, must stay
    below 1, and at ``x + spread``, deflated by ``(1 - guard)``, must stay
    above 1; the guards dominate any evaluation error, so a true root is
    trapped in between.  Returns the bracketing interval.
    """
    lo, hi = x - spread, x + spread
    q_lo = equilateral_quotient(lo) * (1 + mpf(guard))
    q_hi = equilateral_quotient(hi) * (1 - mpf(guard))
    if not q_lo < 1:
        raise BracketingError(
            f"no sign change: guarded quotient at {lo} is {q_lo} >= 1")
    if not q_hi > 1:
        raise BracketingError(
            f"no sign change: guarded quotient at {hi} is {q_hi} <= 1")
    return (lo, hi)


# ---------------------------------------------------------------------------
# Finite differences
# ---------------------------------------------------------------------------

def fd_gradient(f: Callable[[float, float, float], float],
                point, step: float = 1e-6) -> np.ndarray:
    """Central-difference gradient of a scalar field on R^3."""
    if not 1e-8 <= step <= 1e-3:
        raise ValueError("step outside [1e-8, 1e-3]")
    p = np.asarray(point, dtype=float)
    g = np.zeros(3)
    for k in range(3):
        e = np.zeros(3)
        e[k] = step
        g[k] = (f(*(p + e)) - f(*(p - e))) / (2.0 * step)
    return g


def fd_hessian(f: Callable[[float, float, float], float],
               point, step: float = 1e-4) -> np.ndarray:
    """Central-difference Hessian (second differences)."""
    p = np.asarray(point, dtype=float)
    h = np.zeros((3, 3))
    for i in range(3):
        for j in range(3):
            ei = np.zeros(3)
            ej = np.zeros(3)
            ei[i] = step
            ej[j] = step
            if i == j:
                h[i, j] = (f(*(p + ei)) - 2.0 * f(*p) + f(*(p - ei))) \
                    / step ** 2
            else:
                h[i, j] = (f(*(p + ei + ej)) - f(*(p + ei - ej))
                           - f(*(p - ei + ej)) + f(*(p - ei - ej))) \
                    / (4.0 * step ** 2)
    return h
