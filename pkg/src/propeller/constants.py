"""The audited constants table for the box-elimination tests.

Every numeric guard, slack, and threshold used by the four elimination
tests lives here, once, with the exact double value the classifier uses
and a note saying where it enters.  The table is rendered to a canonical
text listing whose SHA-256 digest is embedded in every certificate and
checkpoint; a verifier recomputes the digest from its own table, so two
binaries can only exchange certificates if they agree on every constant.

None of these values is derived at run time (beyond elementary float
expressions evaluated once at import); they are adopted verbatim from the
error analysis that fixes the elimination tests.
"""

from __future__ import annotations

import hashlib
import math
from dataclasses import dataclass

from .rigor import EPS

# pinned as the nearest double to arccos(-1/3); verified against a
# high-precision oracle in the test suite
EQUILATERAL_CANDIDATE = 1.9106332362490186

# the second equilateral critical edge length, known only numerically;
# the true root lies within 2000*EPS of this double
INTERMEDIATE_CANDIDATE = 1.5379684120790425

# objective value of the spherical propeller partition, (9/4)*pi^2
PROPELLER_VALUE = 2.25 * math.pi * math.pi

# smallest admissible edge length and the dihedral-sine floor
MIN_EDGE = 0.1
SIN_DIHEDRAL_FLOOR_COS = math.sqrt(99.0) / 10.0  # |cos| <= sqrt(99)/10

# every admissible triangle has an edge at least this long
MAX_EDGE_FLOOR = math.pi * 3.0 / (2.0 * math.sqrt(14.0))

# floor for lambda (squared norm of the weighted vertex sum)
LAMBDA_FLOOR = 0.03293

# squared radius of the excluded balls around the two candidates
EXCLUSION_RADIUS_SQ = 1e-4

# half-width of a depth-j box, as a fraction of the grid step
REFINE_FACTOR = 10
CHILD_WINDOW = 5  # children lie within 5 child-cells of the parent center


@dataclass(frozen=True)
class Constant:
    """One audited constant: value plus where the classifier uses it."""

    name: str
    value: float | int
    used_in: str


TABLE: tuple[Constant, ...] = (
    Constant("eps", EPS, "unit rounding budget for all perturbed tests"),
    Constant("max_budget", 30000, "validity limit of budget composition"),
    Constant("sin_budget", 250, "sine of an exact argument"),
    Constant("sin_theta_budget", 550, "sine/cosine of a grid edge length"),
    Constant("refine_factor", REFINE_FACTOR, "grid refinement ratio"),
    Constant("child_window", CHILD_WINDOW, "half-width of the child window"),
    Constant("equilateral_candidate", EQUILATERAL_CANDIDATE,
             "test 2: first excluded center, arccos(-1/3)"),
    Constant("intermediate_candidate", INTERMEDIATE_CANDIDATE,
             "test 2: second excluded center"),
    Constant("propeller_value", PROPELLER_VALUE,
             "test 4: objective value to beat, (9/4)*pi^2"),
    Constant("min_edge", MIN_EDGE, "test 1 row 6: edge length floor"),
    Constant("max_edge_floor", MAX_EDGE_FLOOR,
             "test 1 row 5: longest-edge floor, 3*pi/(2*sqrt(14))"),
    Constant("sin_dihedral_floor_cos", SIN_DIHEDRAL_FLOOR_COS,
             "test 1 rows 7-8: dihedral cosine bound, sqrt(99)/10"),
    Constant("lambda_floor", LAMBDA_FLOOR, "test 1 row 9: lambda floor"),
    Constant("exclusion_radius_sq", EXCLUSION_RADIUS_SQ,
             "test 2: squared radius of the excluded balls"),
    Constant("guard_domain_mult", 10,
             "test 1 rows 3-4: (1+10*eps) on domain comparisons"),
    Constant("guard_edge_mult", 7,
             "test 1 rows 5-6: (1+7*eps) on edge sums"),
    Constant("guard_maxedge_rhs", 5,
             "test 1 row 5: (1-5*eps) on the floor"),
    Constant("guard_minedge_rhs", 1,
             "test 1 row 6: (1-eps) on the floor"),
    Constant("guard_dihedral_mult", 1500,
             "test 1 rows 7-8: (1+1500*eps) on the sine bound"),
    Constant("abs_dihedral_num", 2000,
             "tests 1,3,4: absolute slack of cos_r - cos_p*cos_q"),
    Constant("abs_lambda", 20000, "tests 1,3: absolute slack of lambda"),
    Constant("modulus_lambda_l1", 15,
             "tests 1,3: l1 gradient bound of lambda (15*delta)"),
    Constant("abs_sq_dist", 40000,
             "test 2: absolute slack of the squared l2 distance"),
    Constant("abs_l1_dist", 6000,
             "test 2: absolute slack of the l1 distance"),
    Constant("guard_dist_mult", 20, "test 2: (1+20*eps) on the left side"),
    Constant("guard_dist_rhs", 2, "test 2: (1-2*eps) on the right side"),
    Constant("abs_cos_sqrt", 25000,
             "test 3: absolute slack of cos(sqrt(radicand))"),
    Constant("abs_gamma", 3000, "test 3: absolute slack of gamma"),
    Constant("guard_h_mult", 3000,
             "test 3: (1-/+3000*eps) on the two sides"),
    Constant("guard_sqrt15d", 5,
             "test 3 Hoelder form: (1+5*eps) on sqrt(15*delta)"),
    Constant("guard_f0_mult", 5000, "test 4: (1+5000*eps) on the objective"),
    Constant("guard_obj_rhs", 5, "test 4: (1-5*eps) on (9/4)*pi^2"),
    Constant("guard_grad_mult", 10000,
             "test 4: (1+10000*eps) on the gradient-bound sum"),
    Constant("abs_obj_sub", 100, "test 4: +100*eps for the subtraction"),
    Constant("guard_tan_mult", 1200,
             "test 4: (1+1200*eps) + eps inside the tangent bracket"),
    Constant("mixed_grad_coeff", 4,
             "test 4: coefficient of the mixed sine-quotient term"),
    Constant("modulus_min_delta", 0.01,
             "tests 3-4 require box half-width below 1/100"),
)

_BY_NAME = {c.name: c for c in TABLE}


def get(name: str) -> Constant:
    return _BY_NAME[name]


def render_table() -> str:
    """Canonical text listing (one constant per line)."""
    lines = ["# name value used-in"]
    for c in TABLE:
        lines.append(f"{c.name} {c.value!r} {c.used_in}")
    return "\n".join(lines) + "\n"


def table_hash() -> str:
    """SHA-256 digest of the canonical listing; pins certificates to the
    exact constants that produced them."""
    return hashlib.sha256(render_table().encode("utf-8")).hexdigest()
