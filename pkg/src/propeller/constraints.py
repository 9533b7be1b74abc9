"""The four conservative box-elimination tests.

A box is a closed cube in the edge-length space [0, pi]^3, centered at an
exact grid point.  Four tests are tried in a fixed order, each conservative
under both the box radius (modulus-of-continuity slack) and worst-case
floating-point rounding (epsilon guards):

  I    a perturbed domain constraint fails, so the whole box lies outside
       the feasible region (or violates a necessary critical-point
       restriction);
  II   the box lies inside one of the two excluded balls around the known
       equilateral critical points, where the objective is already below
       the propeller value;
  III  a residual component of the critical-point system is certifiably
       nonzero across the box;
  IV   the objective single-triangle form is certifiably below the
       propeller value across the box.

All guard constants come from :mod:`propeller.constants` verbatim.  The
classifier is written against numpy arrays; the scalar entry points wrap
one-element batches, so interactive checks, the traversal engine, and the
certificate replayer all execute literally the same float operations.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import IntEnum
from fractions import Fraction

import numpy as np

from . import constants as C
from .rigor import EPS, GridAngle, cos_grid, newton_sqrt, sin_grid

PI = math.pi

# rational bounds of pi used by the exact domain comparisons
_PI_LO = Fraction(31415926535897932384626433832795028841, 10 ** 37)
_PI_HI = Fraction(31415926535897932384626433832795028842, 10 ** 37)


class Case(IntEnum):
    UNRESOLVED = 0
    I = 1
    II = 2
    III = 3
    IV = 4


CASE_NAMES = {Case.I: "I", Case.II: "II", Case.III: "III", Case.IV: "IV"}
CASE_FROM_NAME = {v: k for k, v in CASE_NAMES.items()}


@dataclass(frozen=True)
class SearchBox:
    """Closed cube: center ``pi*(a1,a2,a3)/10**(depth+2)``, half-width
    ``pi/(2*10**(depth+2))`` (half of one grid step, so sibling boxes tile
    the level exactly)."""

    a1: int
    a2: int
    a3: int
    depth: int

    def __post_init__(self) -> None:
        den = self.denominator
        for a in (self.a1, self.a2, self.a3):
            if not 0 <= a <= den:
                raise ValueError(f"numerator {a} outside [0, {den}]")

    @property
    def denominator(self) -> int:
        return 10 ** (self.depth + 2)

    @property
    def half_width(self) -> float:
        return PI / (2 * self.denominator)

    @property
    def center(self) -> tuple[GridAngle, GridAngle, GridAngle]:
        d = self.depth
        return (GridAngle(self.a1, d), GridAngle(self.a2, d),
                GridAngle(self.a3, d))

    @property
    def center_floats(self) -> tuple[float, float, float]:
        den = self.denominator
        return ((self.a1 / den) * PI, (self.a2 / den) * PI,
                (self.a3 / den) * PI)

    def numerators(self) -> tuple[int, int, int]:
        return (self.a1, self.a2, self.a3)


@dataclass(frozen=True)
class EliminationOutcome:
    """Which test disposed of a box.

    ``detail`` identifies the firing sub-test: the row of the domain-test
    block for case I, the candidate index (1 or 2) for case II,
    ``component*10 + form`` for case III (form 1 is the lambda-floor
    modulus, form 2 the Hoelder modulus; either implies the sign of the
    perturbed residual was constant over all 16 error-sign choices), and 0
    for case IV.
    """

    case: Case
    detail: int = 0


# ---------------------------------------------------------------------------
# Shared per-level context
# ---------------------------------------------------------------------------

class _Trig:
    """Lazy trig context for one batch of boxes at a common depth.

    Sines and cosines of center coordinates (and of center + half-width)
    are sines of exact rational multiples of pi: the reflections happen on
    the integer numerators, so each value costs one Taylor kernel call and
    carries the standard grid budget.
    """

    def __init__(self, nums: np.ndarray, depth: int):
        self.nums = nums
        self.depth = depth
        self.den = 10 ** (depth + 2)
        self.delta = PI / (2 * self.den)
        self.a = [nums[:, k] for k in range(3)]
        self.th = [(ak / self.den) * PI for ak in self.a]
        self._sin = None
        self._cos = None
        self._sin_d = None
        self._cos_d = None
        self._lam = None

    @property
    def sin(self):
        if self._sin is None:
            self._sin = [sin_grid(ak, self.den) for ak in self.a]
        return self._sin

    @property
    def cos(self):
        if self._cos is None:
            self._cos = [cos_grid(ak, self.den) for ak in self.a]
        return self._cos

    @property
    def sin_d(self):
        """sin(theta + delta), formed exactly over the doubled denominator."""
        if self._sin_d is None:
            den2 = 2 * self.den
            self._sin_d = [sin_grid(2 * ak + 1, den2) for ak in self.a]
        return self._sin_d

    @property
    def cos_d(self):
        if self._cos_d is None:
            den2 = 2 * self.den
            self._cos_d = [cos_grid(2 * ak + 1, den2) for ak in self.a]
        return self._cos_d

    @property
    def lam(self):
        """Lambda at the centers, in the mandated grouping."""
        if self._lam is None:
            with np.errstate(all="ignore"):
                q = [self.sin[k] / self.th[k] for k in range(3)]
                c = self.cos
                squares = q[2] * q[2] + q[1] * q[1] + q[0] * q[0]
                cross = (q[2] * q[1] * c[0] + q[2] * q[0] * c[1]
                         + q[0] * q[1] * c[2])
                self._lam = squares + 2.0 * cross
        return self._lam

    def take(self, idx: np.ndarray) -> "_Trig":
        sub = _Trig(self.nums[idx], self.depth)
        for name in ("_sin", "_cos", "_sin_d", "_cos_d", "_lam"):
            v = getattr(self, name)
            if v is not None:
                if name == "_lam":
                    setattr(sub, name, v[idx])
                else:
                    setattr(sub, name, [col[idx] for col in v])
        return sub


#: dihedral placements: (flank p, flank q, opposite r) indices into
#: (theta12, theta13, theta23); order fixes which component fires first
_PLACEMENTS = ((0, 1, 2), (0, 2, 1), (1, 2, 0))


def _row4_fail(a: np.ndarray, den: int) -> np.ndarray:
    """Exact decision of ``theta + 1/2 > pi + delta`` (eliminating) for
    grid angles.  Floats decide except in a sliver around equality, where
    rational bounds of pi settle it; undecidable-within-bounds counts as
    holding (never eliminates)."""
    k = 2 * (den - a) + 1
    margin = k * PI - den
    fail = margin < 0.0
    border = np.abs(margin) <= 1e-9 * den
    if border.any():
        for i in np.flatnonzero(border):
            ki = int(k[i])
            if ki * _PI_HI < den:
                fail[i] = True
            elif ki * _PI_LO >= den:
                fail[i] = False
            else:
                fail[i] = False  # undecidable sliver: keep the box
    return fail


# ---------------------------------------------------------------------------
# Step evaluators (array in, array out)
# ---------------------------------------------------------------------------

def _step_i_impl(tg: _Trig, trace: dict | None = None):
    """Returns (eliminated, detail, survivor_indices, survivor_context).

    ``detail`` is the lowest-index failing row (1..9) of the perturbed
    domain block; the survivor context carries the trig already computed
    for rows 7-9 so later steps reuse it.
    """
    a1, a2, a3 = tg.a
    den, delta = tg.den, tg.delta
    n = len(a1)
    fail = np.zeros(n, bool)
    detail = np.zeros(n, np.int16)

    def mark(cond, row):
        new = cond & ~fail
        detail[new] = row
        fail[new] = True

    # rows 1-2: exact integer arithmetic in half grid units
    mark((2 * (a1 + a2) + 3 < 2 * a3) | (2 * (a1 + a3) + 3 < 2 * a2)
         | (2 * (a2 + a3) + 3 < 2 * a1), 1)
    mark(2 * (a1 + a2 + a3) > 4 * den + 3, 2)
    # row 3: theta12 <= 2pi/3 + delta, exact integers
    mark(6 * a1 > 4 * den + 3, 3)
    # row 4: theta13, theta23 <= pi - 1/2 + delta, exact via pi bounds
    mark(_row4_fail(a2, den) | _row4_fail(a3, den), 4)
    th1, th2, th3 = tg.th
    mx = np.maximum(th1, np.maximum(th2, th3))
    mark((delta + mx) * (1 + 7 * EPS) < C.MAX_EDGE_FLOOR * (1 - 5 * EPS), 5)
    lo = C.MIN_EDGE * (1 - EPS)
    mark(((th1 + delta) * (1 + 7 * EPS) < lo)
         | ((th2 + delta) * (1 + 7 * EPS) < lo)
         | ((th3 + delta) * (1 + 7 * EPS) < lo), 6)
    # rows 7-9 need trig; evaluate only on still-alive boxes (their edges
    # passed rows 3-4, so every argument is inside the kernel domains)
    alive = np.flatnonzero(~fail)
    sub = tg.take(alive)
    if len(alive):
        s, c = sub.sin, sub.cos
        f7 = np.zeros(len(alive), bool)
        f8 = np.zeros(len(alive), bool)
        for ip, iq, ir in _PLACEMENTS:
            num = c[ir] - c[ip] * c[iq]
            bound = ((3 * sub.delta
                      + C.SIN_DIHEDRAL_FLOOR_COS * (s[ip] * s[iq]
                                                    + 2 * sub.delta))
                     * (1 + 1500 * EPS))
            f7 |= -bound > num + 2000 * EPS
            f8 |= (num - 2000 * EPS > bound) & ~f7
        f9 = (15 * sub.delta + 20000 * EPS + sub.lam < C.LAMBDA_FLOOR) \
            & ~f7 & ~f8
        sel = alive[f7]
        detail[sel] = 7
        fail[sel] = True
        sel = alive[f8 & ~f7]
        detail[sel] = 8
        fail[sel] = True
        sel = alive[f9]
        detail[sel] = 9
        fail[sel] = True
        passed = ~(f7 | f8 | f9)
        alive = alive[passed]
        sub = sub.take(np.flatnonzero(passed))
    if trace is not None:
        trace["step_i"] = {
            "eliminated": bool(fail[0]),
            "first_failing_row": int(detail[0]),
        }
    return fail, detail, alive, sub


def _eval_step_i(tg: _Trig, trace: dict | None = None):
    """Perturbed domain test: (eliminated, detail) arrays."""
    fail, detail, _, _ = _step_i_impl(tg, trace)
    return fail, detail


def _eval_step_ii(tg: _Trig, trace: dict | None = None):
    """Excluded-ball test: fires when the perturbed squared distance to a
    candidate stays below the exclusion radius, certifying the objective
    bound on the whole box."""
    th = tg.th
    delta = tg.delta
    fail = np.zeros(len(th[0]), bool)
    detail = np.zeros(len(th[0]), np.int16)
    rhs = C.EXCLUSION_RADIUS_SQ * (1 - 2 * EPS)
    tinfo = []
    for ci, xc in ((1, C.EQUILATERAL_CANDIDATE),
                   (2, C.INTERMEDIATE_CANDIDATE)):
        d2 = (th[0] - xc) ** 2 + (th[1] - xc) ** 2 + (th[2] - xc) ** 2
        d1 = np.abs(th[0] - xc) + np.abs(th[1] - xc) + np.abs(th[2] - xc)
        lhs = (d2 + 40000 * EPS
               + 2 * delta * (d1 + 6000 * EPS + 3 * delta)) * (1 + 20 * EPS)
        hit = (lhs <= rhs) & ~fail
        detail[hit] = ci
        fail |= hit
        if trace is not None:
            tinfo.append({"candidate": ci, "center": xc,
                          "dist_sq": float(d2[0]), "dist_l1": float(d1[0]),
                          "lhs": float(lhs[0]), "rhs": rhs,
                          "inside": bool((lhs <= rhs)[0])})
    if trace is not None:
        trace["step_ii"] = {"eliminated": bool(fail[0]),
                            "candidates": tinfo}
    return fail, detail


def _eval_step_iii(tg: _Trig, trace: dict | None = None):
    """Residual-nonvanishing test.

    For each component the perturbed residual is evaluated at all 16
    extreme error-sign choices; the component is usable only if every
    evaluation is well-defined and all 16 share a sign.  It then fires if
    the minimum magnitude, shrunk by its guard, beats either modulus bound
    (the lambda-floor form or the Hoelder form).  Applicable only when the
    box half-width is below 1/100.
    """
    n = len(tg.a[0])
    fail = np.zeros(n, bool)
    detail = np.zeros(n, np.int16)
    delta = tg.delta
    if delta >= C.get("modulus_min_delta").value:
        if trace is not None:
            trace["step_iii"] = {"applicable": False, "eliminated": False}
        return fail, detail
    with np.errstate(all="ignore"):
        th, s, c = tg.th, tg.sin, tg.cos
        lam = tg.lam
        lam_lo = lam - 20000 * EPS
        lam_usable = lam_lo >= 0.0
        s_lo = newton_sqrt(np.clip(lam_lo, 0.0, None))
        s_hi = newton_sqrt(lam + 20000 * EPS)
        sq15d = float(newton_sqrt(15.0 * delta))
        sd = tg.sin_d
        tinfo = []
        for comp, (ip, iq, ir) in enumerate(_PLACEMENTS, start=1):
            tp, tq, tr = th[ip], th[iq], th[ir]
            sp, sq_ = s[ip], s[iq]
            gam = (sq_ / tq) * c[ip] + (s[ir] / tr) + (sp / tp) * c[iq]
            num0 = c[ir] - c[ip] * c[iq]
            ok = lam_usable.copy()
            evals = []
            for alpha in (-1.0, 1.0):
                cd = (num0 + 2000 * EPS * alpha) / (sp * sq_)
                rad = tp * tp + tq * tq + 2 * tp * tq * cd
                ok &= np.isfinite(rad) & (rad >= 0.0)
                arg = newton_sqrt(np.clip(rad, 0.0, None))
                ok &= arg <= 2.0 * PI
                cc = _cos_general_arr(arg)
                for beta in (-1.0, 1.0):
                    base = cc + 25000 * EPS * beta
                    for ssig in (s_lo, s_hi):
                        for rho in (-1.0, 1.0):
                            evals.append(base * ssig + (gam + 3000 * EPS * rho))
            pos = evals[0] > 0.0
            neg = evals[0] < 0.0
            mn = np.abs(evals[0])
            for ev in evals[1:]:
                pos &= ev > 0.0
                neg &= ev < 0.0
                mn = np.minimum(mn, np.abs(ev))
            sign_const = ok & (pos | neg)
            lhs = mn * (1 - 3000 * EPS)
            # lambda-floor modulus
            eta_room = lam_lo - 15.0 * delta
            pd, qd = tp + delta, tq + delta
            spd, sqd = sd[ip], sd[iq]
            inner = (2 * pd + 2 * qd
                     + pd * qd * (2 / spd + 2 / sqd + 1 / (spd * sqd)))
            mod_eta = delta * (3.5
                               + 15.0 / (2.0 * newton_sqrt(
                                   np.clip(eta_room, 0.0, None)))
                               + 3.0 * inner)
            five1 = (eta_room > 0.0) & (lhs > (1 + 3000 * EPS) * mod_eta) \
                & np.isfinite(inner)
            # Hoelder modulus
            rhs_h = ((1 + 5 * EPS) * sq15d
                     + delta * (1 + 3000 * EPS) * (3.5 + 3.0 * inner))
            five11 = (lhs > rhs_h) & np.isfinite(inner)
            hit1 = sign_const & five1 & ~fail
            detail[hit1] = comp * 10 + 1
            fail |= hit1
            hit2 = sign_const & five11 & ~fail
            detail[hit2] = comp * 10 + 2
            fail |= hit2
            if trace is not None:
                tinfo.append({
                    "component": comp,
                    "sign_values": [float(ev[0]) for ev in evals],
                    "well_defined": bool(ok[0]),
                    "sign_constant": bool(sign_const[0]),
                    "min_abs": float(mn[0]),
                    "modulus_lambda_floor": float(mod_eta[0]),
                    "modulus_hoelder": float(rhs_h[0]),
                    "fires_lambda_floor": bool((sign_const & five1)[0]),
                    "fires_hoelder": bool((sign_const & five11)[0]),
                })
        if trace is not None:
            trace["step_iii"] = {"applicable": True,
                                 "eliminated": bool(fail[0]),
                                 "components": tinfo}
    return fail, detail


def _eval_step_iv(tg: _Trig, trace: dict | None = None):
    """Objective-bound test: perturbed single-triangle objective plus the
    box-wide gradient allowance must clear the propeller value.
    Applicable only when the box half-width is below 1/100."""
    n = len(tg.a[0])
    fail = np.zeros(n, bool)
    delta = tg.delta
    if delta >= C.get("modulus_min_delta").value:
        if trace is not None:
            trace["step_iv"] = {"applicable": False, "eliminated": False}
        return fail
    with np.errstate(all="ignore"):
        th, s, c = tg.th, tg.sin, tg.cos
        sd, cd_ = tg.sin_d, tg.cos_d

        def cos_eps(ip, iq, ir):
            return (c[ir] - c[ip] * c[iq] + 2000 * EPS) / (s[ip] * s[iq])

        ca = cos_eps(0, 1, 2)
        cb = cos_eps(0, 2, 1)
        cc = cos_eps(1, 2, 0)
        f0e = (3 * (th[0] * th[0] + th[1] * th[1] + th[2] * th[2])
               + 2 * ca * th[0] * th[1] + 2 * cb * th[0] * th[2]
               + 2 * cc * th[1] * th[2])

        def gterm(iv, ia, ib):
            pd = th[iv] + delta
            qd = th[ia] + delta
            rd = th[ib] + delta
            tan_ratio = pd * cd_[iv] / sd[iv]
            return (6 * pd
                    + 4 * qd * rd / (sd[ia] * sd[ib])
                    + 2 * pd * qd / sd[ia]
                    + 2 * pd * rd / sd[ib]
                    + 2 * (th[ia] + th[ib] + 2 * delta)
                    * (1 - (tan_ratio * (1 + 1200 * EPS) + EPS)))

        gsum = gterm(0, 1, 2) + gterm(1, 0, 2) + gterm(2, 0, 1)
        lhs = C.PROPELLER_VALUE * (1 - 5 * EPS) - f0e * (1 + 5000 * EPS)
        rhs = delta * gsum * (1 + 10000 * EPS) + 100 * EPS
        fail = np.isfinite(lhs) & np.isfinite(rhs) & (lhs > rhs)
        if trace is not None:
            trace["step_iv"] = {"applicable": True,
                                "eliminated": bool(fail[0]),
                                "objective_perturbed": float(f0e[0]),
                                "gradient_bound_sum": float(gsum[0]),
                                "lhs_margin": float(lhs[0]),
                                "rhs_allowance": float(rhs[0])}
    return fail


def _cos_general_arr(y):
    """Array cosine on [0, 2*pi] by quadrant reduction to the sine kernel
    (kept local so the batch path never touches scalar wrappers)."""
    from .rigor import taylor_sin
    half_pi = 0.5 * PI
    v1 = taylor_sin(np.clip(half_pi - y, 0.0, None))
    t = np.clip(y - half_pi, 0.0, None)
    t = np.where(t > half_pi, np.clip(PI - t, 0.0, None), t)
    v2 = -taylor_sin(t)
    v3 = taylor_sin(np.clip(y - 3.0 * half_pi, 0.0, None))
    return np.where(y <= half_pi, v1, np.where(y <= 3.0 * half_pi, v2, v3))


# ---------------------------------------------------------------------------
# Batch and scalar classification
# ---------------------------------------------------------------------------

def classify_batch(nums: np.ndarray, depth: int,
                   trace: dict | None = None):
    """Classify a batch of boxes given by integer numerators (N, 3).

    Returns ``(case, detail)`` arrays; case 0 means unresolved (the box
    must be subdivided).  Tests run in the fixed order I, II, III, IV with
    short-circuiting, and each box's outcome depends only on (box,
    constants), never on its neighbors in the batch.
    """
    nums = np.ascontiguousarray(nums, dtype=np.int64)
    n = len(nums)
    if trace is not None and n != 1:
        raise ValueError("trace recording requires a single-box batch")
    case = np.zeros(n, np.uint8)
    detail = np.zeros(n, np.int16)
    tg = _Trig(nums, depth)

    f1, d1, idx, sub = _step_i_impl(tg, trace)
    case[f1] = Case.I
    detail[f1] = d1[f1]
    if not len(idx):
        return case, detail

    f2, d2 = _eval_step_ii(sub, trace)
    sel = idx[f2]
    case[sel] = Case.II
    detail[sel] = d2[f2]
    idx = idx[~f2]
    if not len(idx):
        return case, detail
    sub = sub.take(np.flatnonzero(~f2))

    f3, d3 = _eval_step_iii(sub, trace)
    sel = idx[f3]
    case[sel] = Case.III
    detail[sel] = d3[f3]
    idx = idx[~f3]
    if not len(idx):
        return case, detail
    sub = sub.take(np.flatnonzero(~f3))

    f4 = _eval_step_iv(sub, trace)
    sel = idx[f4]
    case[sel] = Case.IV
    return case, detail


def _single(box: SearchBox) -> np.ndarray:
    return np.array([[box.a1, box.a2, box.a3]], dtype=np.int64)


def step_i(box: SearchBox) -> tuple[bool, int]:
    """Perturbed domain test alone; True means the box is eliminated and
    the detail is the first violated row."""
    f, d = _eval_step_i(_Trig(_single(box), box.depth))
    return bool(f[0]), int(d[0])


def step_ii(box: SearchBox) -> tuple[bool, int]:
    """Excluded-ball test alone; detail is the candidate index."""
    f, d = _eval_step_ii(_Trig(_single(box), box.depth))
    return bool(f[0]), int(d[0])


def step_iii(box: SearchBox) -> tuple[bool, int]:
    """Residual-nonvanishing test alone; detail encodes component and
    modulus form.  Inconclusive evaluations (ill-defined radicands,
    non-constant signs) simply fail to eliminate."""
    f, d = _eval_step_iii(_Trig(_single(box), box.depth))
    return bool(f[0]), int(d[0])


def step_iv(box: SearchBox) -> bool:
    """Objective-bound test alone."""
    f = _eval_step_iv(_Trig(_single(box), box.depth))
    return bool(f[0])


def classify(box: SearchBox) -> EliminationOutcome:
    """Run the tests in order I, II, III, IV with short-circuiting."""
    case, detail = classify_batch(_single(box), box.depth)
    return EliminationOutcome(Case(int(case[0])), int(detail[0]))


def classify_trace(box: SearchBox) -> dict:
    """Classify one box recording every intermediate decision quantity;
    the floats in the trace are the classifier's own (same kernels, same
    operation order)."""
    trace: dict = {"box": (box.depth, box.a1, box.a2, box.a3),
                   "half_width": box.half_width,
                   "center": box.center_floats}
    case, detail = classify_batch(_single(box), box.depth, trace)
    trace["case"] = CASE_NAMES.get(Case(int(case[0])), "UNRESOLVED")
    trace["detail"] = int(detail[0])
    return trace
