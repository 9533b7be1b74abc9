"""Closed-form spherical-partition mathematics.

Everything here is a pure function of spherical-triangle data: the edge
functions lambda and gamma, the critical-point residual system H, the
objective F and its single-triangle form F0, the moment and fourth-vertex
formulas, and the modulus-of-continuity and gradient bounds the box
classifier relies on.

Each formula exists once, written against a tiny arithmetic backend, and
is evaluated two ways: with plain machine floats (used by tests and the
oracle cross-checks) and with :class:`~propeller.rigor.ErrValue` budget
tracking (used to validate the error allowances baked into the classifier
constants).  The grouping of the lambda expression is fixed — three
squared terms first, then twice the sum of the cross terms — and must not
be rearranged, because the error accounting is stated for that grouping.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from . import rigor
from .rigor import DomainError, ErrValue, GridAngle, NotWellDefined

#: Plain-float sinc refuses arguments below this; the rigorous path never
#: sees small edges (the domain constraints force theta >= 1/10).
SINC_MIN = 1e-8


class NonTriangleError(ValueError):
    """A dihedral cosine left [-1, 1]: the edges do not form a triangle."""


@dataclass(frozen=True)
class EdgeTriple:
    """Edge lengths (theta12, theta13, theta23) of one spherical triangle,
    in radians.  Admissibility (the domain constraints) is the constraint
    module's business, not this container's."""

    theta12: float
    theta13: float
    theta23: float

    def __post_init__(self) -> None:
        for v in (self.theta12, self.theta13, self.theta23):
            if not 0.0 <= v <= math.pi:
                raise DomainError(f"edge length {v} outside [0, pi]")

    def as_tuple(self) -> tuple[float, float, float]:
        return (self.theta12, self.theta13, self.theta23)


@dataclass(frozen=True)
class PartitionData:
    """Four partition vertices on the unit sphere plus derived edges."""

    vertices: np.ndarray  # shape (4, 3)

    def __post_init__(self) -> None:
        v = np.asarray(self.vertices, dtype=float)
        if v.shape != (4, 3):
            raise ValueError("expected four 3-vectors")
        object.__setattr__(self, "vertices", v)

    def edge(self, i: int, j: int) -> float:
        """Geodesic distance between vertices i and j (1-based)."""
        d = float(np.dot(self.vertices[i - 1], self.vertices[j - 1]))
        if abs(d) > 1.0:
            if abs(d) > 1.0 + 1e-12:
                raise DomainError("vertices are not unit vectors")
            d = math.copysign(1.0, d)
        return math.acos(d)

    def edges6(self) -> tuple[float, float, float, float, float, float]:
        """(theta12, theta13, theta14, theta23, theta24, theta34)."""
        return (self.edge(1, 2), self.edge(1, 3), self.edge(1, 4),
                self.edge(2, 3), self.edge(2, 4), self.edge(3, 4))


# ---------------------------------------------------------------------------
# Arithmetic backends
# ---------------------------------------------------------------------------

class _PlainBackend:
    """Machine-float evaluation; angles are floats in radians."""

    @staticmethod
    def sinc(x: float) -> float:
        if x < SINC_MIN:
            raise DomainError(f"sin(x)/x not evaluated below {SINC_MIN}")
        return math.sin(x) / x

    @staticmethod
    def sin(x: float) -> float:
        return math.sin(x)

    @staticmethod
    def cos(x: float) -> float:
        return math.cos(x)

    @staticmethod
    def sqrt(x: float) -> float:
        if x < 0.0:
            raise NotWellDefined(f"negative radicand {x}")
        return math.sqrt(x)

    @staticmethod
    def value(x: float) -> float:
        return x


class _ErrBackend:
    """Budget-tracked evaluation; angles are exact rational multiples of pi
    (Fractions q, denoting q*pi), so reflections inside the trig kernels
    are exact."""

    @staticmethod
    def _angle(q: Fraction) -> ErrValue:
        return ErrValue(float(q) * math.pi, 3, 0)

    @classmethod
    def sinc(cls, q: Fraction) -> ErrValue:
        a = cls._angle(q)
        return rigor.ver_sin(a, exact_fraction=q).div(a)

    @classmethod
    def sin(cls, q: Fraction) -> ErrValue:
        return rigor.ver_sin(cls._angle(q), exact_fraction=q)

    @classmethod
    def cos(cls, q: Fraction) -> ErrValue:
        return rigor.ver_cos(cls._angle(q), exact_fraction=q)

    @staticmethod
    def sqrt(x: ErrValue) -> ErrValue:
        return rigor.ver_sqrt(x)

    @classmethod
    def value(cls, q: Fraction) -> ErrValue:
        return cls._angle(q)


PLAIN = _PlainBackend()
ERR = _ErrBackend()


def _as_fraction(angle) -> Fraction:
    if isinstance(angle, GridAngle):
        return angle.fraction
    return Fraction(angle)


# ---------------------------------------------------------------------------
# Shared formula bodies
# ---------------------------------------------------------------------------

def _lambda_formula(a12, a13, a23, be):
    """Squared norm of the sinc-weighted vertex sum, in the mandated
    grouping: the three squares first, then twice the cross terms."""
    s23 = be.sinc(a23)
    s13 = be.sinc(a13)
    s12 = be.sinc(a12)
    c12 = be.cos(a12)
    c13 = be.cos(a13)
    c23 = be.cos(a23)
    squares = s23 * s23 + s13 * s13 + s12 * s12
    cross = s23 * s13 * c12 + s23 * s12 * c13 + s12 * s13 * c23
    return squares + 2.0 * cross


_GAMMA_INDEX = {
    # component i -> (edge il, edge jl, edge ij) positions in (12, 13, 23)
    1: (1, 2, 0),  # gamma1: sinc(13)cos(12) + sinc(23) + sinc(12)cos(13)
    2: (2, 1, 0),  # gamma2: sinc(23)cos(12) + sinc(13) + sinc(12)cos(23)
    3: (2, 0, 1),  # gamma3: sinc(23)cos(13) + sinc(12) + sinc(13)cos(23)
}


def _gamma_formula(edges, i, be):
    """gamma_i = sinc(theta_il)cos(theta_ij) + sinc(theta_jl)
    + sinc(theta_ij)cos(theta_il), with {i,j,l} = {1,2,3}."""
    il, jl, ij = _GAMMA_INDEX[i]
    return (be.sinc(edges[il]) * be.cos(edges[ij]) + be.sinc(edges[jl])
            + be.sinc(edges[ij]) * be.cos(edges[il]))


#: component -> (flank p, flank q, opposite r) positions in (12, 13, 23)
H_FLANKS = {1: (0, 1, 2), 2: (0, 2, 1), 3: (1, 2, 0)}


def _h_formula(edges, i, be):
    """Residual of critical-point equation i: sqrt(lambda) * cos(sqrt(
    p^2 + q^2 + 2pq cos(angle at the shared vertex))) + gamma_i."""
    ip, iq, ir = H_FLANKS[i]
    p, q, r = edges[ip], edges[iq], edges[ir]
    sp, sq_ = be.sin(p), be.sin(q)
    num = be.cos(r) - be.cos(p) * be.cos(q)
    pv, qv = be.value(p), be.value(q)
    radicand = pv * pv + qv * qv + 2.0 * (pv * qv * (num / (sp * sq_)))
    lam = _lambda_formula(edges[0], edges[1], edges[2], be)
    cos_term = _cos_of(be, be.sqrt(radicand))
    return be.sqrt(lam) * cos_term + _gamma_formula(edges, i, be)


def _cos_of(be, x):
    """Cosine of a non-grid value (used only for the compound argument of
    the residual system)."""
    if be is PLAIN:
        return math.cos(x)
    # budget path: quadrant-reduced kernel, absolute tracking
    if not 0.0 <= x.value <= 2.0 * math.pi:
        raise NotWellDefined(f"compound cosine argument {x.value} "
                             "outside [0, 2*pi]")
    val = rigor.cos_general(x.value)
    absd = rigor.SIN_BUDGET + rigor.TAYLOR_LIPSCHITZ * (
        x.abs_budget + math.ceil(x.mult_budget * abs(x.value)) + 2)
    return ErrValue(val, 0, absd)


# ---------------------------------------------------------------------------
# Plain-float public surface
# ---------------------------------------------------------------------------

def lambda_(e: EdgeTriple) -> float:
    """Squared norm of the sinc-weighted sum of the three base vertices;
    symmetric in the three edges."""
    return _lambda_formula(*e.as_tuple(), PLAIN)


def gamma_i(e: EdgeTriple, i: int) -> float:
    """The i-th inner-product coefficient gamma_i = -sqrt(lambda) <v_i, v4>
    expressed through the edges, i in {1, 2, 3}."""
    if i not in (1, 2, 3):
        raise ValueError("component index must be 1, 2 or 3")
    return _gamma_formula(e.as_tuple(), i, PLAIN)


def cos_dihedral(theta_ij: float, theta_jl: float, theta_il: float) -> float:
    """Cosine of the spherical angle at the shared vertex j, from the
    spherical law of cosines.  The two flanking edges must be interior."""
    if not (0.0 < theta_ij < math.pi and 0.0 < theta_jl < math.pi):
        raise DomainError("flanking edge at 0 or pi: dihedral undefined")
    return ((math.cos(theta_il) - math.cos(theta_ij) * math.cos(theta_jl))
            / (math.sin(theta_ij) * math.sin(theta_jl)))


def h_component(e: EdgeTriple, i: int) -> float:
    """One residual of the critical-point system; zero on critical data."""
    if i not in (1, 2, 3):
        raise ValueError("component index must be 1, 2 or 3")
    return _h_formula(e.as_tuple(), i, PLAIN)


def H_system(e: EdgeTriple) -> tuple[float, float, float]:
    """All three residuals; a critical partition triangle solves H = 0.

    Raises :class:`NotWellDefined` when a radicand is negative (the edge
    data is too far from any triangle for the system to make sense).
    """
    return (h_component(e, 1), h_component(e, 2), h_component(e, 3))


def F_sum_squares(edges: tuple[float, ...]) -> float:
    """Objective value of a partition: the sum of the six squared edges."""
    if len(edges) != 6:
        raise ValueError("expected six edge lengths")
    return float(sum(t * t for t in edges))


def F0(e: EdgeTriple) -> float:
    """Single-triangle expression of the objective.

    Strict about geometry: any dihedral cosine outside [-1, 1], even by a
    rounding sliver, raises :class:`NonTriangleError` (the rigorous path
    handles near-degeneracy through explicit budgets instead of clamping).
    """
    x, y, z = e.as_tuple()
    ca = cos_dihedral(x, y, z)   # at vertex 1
    cb = cos_dihedral(x, z, y)   # at vertex 2
    cc = cos_dihedral(y, z, x)   # at vertex 3
    for c in (ca, cb, cc):
        if abs(c) > 1.0:
            raise NonTriangleError(f"dihedral cosine {c} outside [-1, 1]")
    return (3.0 * (x * x + y * y + z * z)
            + 2.0 * ca * x * y + 2.0 * cb * x * z + 2.0 * cc * y * z)


# ---------------------------------------------------------------------------
# Vector-side operations
# ---------------------------------------------------------------------------

def _unit(v: np.ndarray) -> np.ndarray:
    n = float(np.linalg.norm(v))
    if n == 0.0:
        raise DomainError("zero vector cannot be normalized")
    return v / n


def moment(v1: np.ndarray, v2: np.ndarray, v3: np.ndarray) -> np.ndarray:
    """Surface-measure moment of the spherical triangle (v1, v2, v3):
    half the sum of edge length times unit edge normal.

    Requires positive orientation, det(v1, v2, v3) > 0.
    """
    if float(np.linalg.det(np.stack([v1, v2, v3]))) <= 0.0:
        raise DomainError("vertices must be positively oriented")
    t12 = math.acos(max(-1.0, min(1.0, float(np.dot(v1, v2)))))
    t23 = math.acos(max(-1.0, min(1.0, float(np.dot(v2, v3)))))
    t31 = math.acos(max(-1.0, min(1.0, float(np.dot(v3, v1)))))
    return 0.5 * (t12 * _unit(np.cross(v1, v2))
                  + t23 * _unit(np.cross(v2, v3))
                  + t31 * _unit(np.cross(v3, v1)))


def fourth_vertex(v1: np.ndarray, v2: np.ndarray,
                  v3: np.ndarray) -> np.ndarray:
    """The unique fourth partition vertex determined by the other three:
    minus the normalized sinc-weighted sum, with the weight of each vertex
    coming from the opposite edge."""
    if float(np.linalg.det(np.stack([v1, v2, v3]))) <= 0.0:
        raise DomainError("vertices must be positively oriented")
    t23 = math.acos(float(np.dot(v2, v3)))
    t13 = math.acos(float(np.dot(v1, v3)))
    t12 = math.acos(float(np.dot(v1, v2)))
    w = (math.sin(t23) / t23 * v1 + math.sin(t13) / t13 * v2
         + math.sin(t12) / t12 * v3)
    n = float(np.linalg.norm(w))
    if n < 1e-14:
        raise DomainError("degenerate (coplanar) vertex configuration")
    return -w / n


def opposite_edge_residual(edges: tuple[float, ...]) -> tuple[float, float]:
    """Differences of the three opposite-edge sinc products
    (12,34), (13,24), (14,23); both vanish at critical partitions.

    ``edges`` is (theta12, theta13, theta14, theta23, theta24, theta34).
    """
    t12, t13, t14, t23, t24, t34 = edges
    p1 = math.sin(t12) * math.sin(t34) / (t12 * t34)
    p2 = math.sin(t13) * math.sin(t24) / (t13 * t24)
    p3 = math.sin(t14) * math.sin(t23) / (t14 * t23)
    return (p1 - p2, p2 - p3)


def exp_inverse(v1: np.ndarray, vj: np.ndarray) -> np.ndarray:
    """Inverse exponential map: the tangent vector at v1 pointing to vj
    with length equal to the geodesic distance."""
    d = float(np.dot(vj, v1))
    if abs(d) >= 1.0 - 1e-14:
        raise DomainError("vectors parallel or antiparallel")
    theta = math.acos(d)
    w = vj - d * v1
    return theta * w / float(np.linalg.norm(w))


def stationarity_residual(p: PartitionData, i: int) -> np.ndarray:
    """Tangent-space force sum at vertex i; zero exactly at critical
    points of the squared-edge objective."""
    if i not in (1, 2, 3, 4):
        raise ValueError("vertex index must be in 1..4")
    vi = p.vertices[i - 1]
    out = np.zeros(3)
    for j in range(4):
        if j == i - 1:
            continue
        out = out + exp_inverse(vi, p.vertices[j])
    return out


# ---------------------------------------------------------------------------
# Modulus and gradient bounds
# ---------------------------------------------------------------------------

def modulus_H1(delta: float, e: EdgeTriple, eta: float,
               component: int = 1) -> float:
    """Upper bound for the sup-norm modulus of continuity of one residual
    component over a box of half-width ``delta``, given a lower bound
    ``eta`` for lambda at the box center.

    Inapplicable (raises) when ``eta - 15*delta <= 0``: the lambda floor
    cannot absorb the worst-case drift across the box.
    """
    if not 0.0 < delta < 0.01:
        raise DomainError("modulus bound requires 0 < delta < 1/100")
    if eta - 15.0 * delta <= 0.0:
        raise NotWellDefined("eta - 15*delta <= 0: modulus bound inapplicable")
    ip, iq, _ = H_FLANKS[component]
    edges = e.as_tuple()
    p, q = edges[ip] + delta, edges[iq] + delta
    inner = (2.0 * p + 2.0 * q
             + p * q * (2.0 / math.sin(p) + 2.0 / math.sin(q)
                        + 1.0 / (math.sin(p) * math.sin(q))))
    return delta * (3.5 + 15.0 / (2.0 * math.sqrt(eta - 15.0 * delta))
                    + 3.0 * inner)


def grad_F0(e: EdgeTriple) -> np.ndarray:
    """Analytic gradient of F0 (exact partial derivatives of the
    single-triangle objective with the dihedral cosines expanded through
    the spherical law of cosines)."""
    x, y, z = e.as_tuple()
    sx, sy, sz = math.sin(x), math.sin(y), math.sin(z)
    cx, cy, cz = math.cos(x), math.cos(y), math.cos(z)
    ca = (cz - cx * cy) / (sx * sy)   # flanks x, y
    cb = (cy - cx * cz) / (sx * sz)   # flanks x, z
    cc = (cx - cy * cz) / (sy * sz)   # flanks y, z

    def partial(p, q, r, sp, sq_, sr, cp, cq, cr, cpq, cpr, cqr):
        # d/dp of 3p^2 + 2pq*cpq + 2pr*cpr + 2qr*cqr where cpq has flanks
        # (p, q), cpr has flanks (p, r) and cqr has flanks (q, r)
        d_cpq = cq / sq_ - cpq * cp / sp
        d_cpr = cr / sr - cpr * cp / sp
        d_cqr = -sp / (sq_ * sr)
        return (6.0 * p + 2.0 * q * cpq + 2.0 * r * cpr
                + 2.0 * p * q * d_cpq + 2.0 * p * r * d_cpr
                + 2.0 * q * r * d_cqr)

    return np.array([
        partial(x, y, z, sx, sy, sz, cx, cy, cz, ca, cb, cc),
        partial(y, x, z, sy, sx, sz, cy, cx, cz, ca, cc, cb),
        partial(z, x, y, sz, sx, sy, cz, cx, cy, cb, cc, ca),
    ])


_GRAD_VARS = {1: (0, 1, 2), 2: (1, 0, 2), 3: (2, 0, 1)}


def grad_F0_bound(delta: float, e: EdgeTriple, var: int = 1) -> float:
    """Bound on one partial derivative of F0 over a box of half-width
    ``delta``; ``var`` selects the differentiated edge (1 -> theta12,
    2 -> theta13, 3 -> theta23).  The full l1 gradient bound is the sum of
    the three variants."""
    if not 0.0 < delta < 0.01:
        raise DomainError("gradient bound requires 0 < delta < 1/100")
    edges = e.as_tuple()
    iv, ia, ib = _GRAD_VARS[var]
    p = edges[iv] + delta
    q = edges[ia] + delta
    r = edges[ib] + delta
    return (6.0 * p
            + 2.0 * q * r / (math.sin(q) * math.sin(r))
            + 2.0 * p * q / math.sin(q)
            + 2.0 * p * r / math.sin(r)
            + 2.0 * (edges[ia] + edges[ib] + 2.0 * delta)
            * (1.0 - p / math.tan(p)))


# ---------------------------------------------------------------------------
# Budget-tracked evaluation (feeds the constants-validation tests)
# ---------------------------------------------------------------------------

def lambda_err(a12, a13, a23) -> ErrValue:
    """Budget-tracked lambda at exact grid angles."""
    return _lambda_formula(_as_fraction(a12), _as_fraction(a13),
                           _as_fraction(a23), ERR)


def gamma_err(a12, a13, a23, i: int) -> ErrValue:
    """Budget-tracked gamma_i at exact grid angles."""
    return _gamma_formula(
        (_as_fraction(a12), _as_fraction(a13), _as_fraction(a23)), i, ERR)


def h_component_err(a12, a13, a23, i: int) -> ErrValue:
    """Budget-tracked residual component at exact grid angles.

    Raises :class:`NotWellDefined` if the radicand may be negative under
    its worst-case budget; callers treat that as inconclusive.
    """
    return _h_formula(
        (_as_fraction(a12), _as_fraction(a13), _as_fraction(a23)), i, ERR)
