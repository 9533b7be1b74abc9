"""Self-validated scalar arithmetic with explicit rounding-error budgets.

Every quantity that feeds a box-elimination test is either an exact rational
multiple of pi (:class:`GridAngle`) or a machine double carrying integer
error budgets in units of ``EPS = 3 * 2**-52`` (:class:`ErrValue`).  A
multiplicative budget of ``n`` means the true value lies within a factor
``(1 + n*EPS)`` of the stored double; an absolute budget of ``m`` means the
true value lies within ``m*EPS`` additively.  Budgets only ever grow, and
the composition rule ``(1 + 2*2**-52)**n <= 1 + n*EPS`` is valid for
``n <= 30000`` operations on nonnegative normal doubles, so exceeding that
count is a hard error rather than silent saturation.

Transcendentals are computed the same way the elimination tests assume
them to be: sine by a ten-term (19th degree) Taylor sum in ascending
degree, cosine by exact reflection to a sine of a rational multiple of pi,
square roots by Newton iteration.  The kernels accept numpy arrays so the
batch classifier and the scalar path share one implementation and produce
bit-identical doubles.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

# Unit rounding budget. A single IEEE-754 round-to-nearest operation on
# nonnegative normal doubles contributes a factor at most (1 + 2*2**-52),
# and (1 + 2*2**-52)**n <= 1 + n*EPS for n <= 30000.
EPS = 3.0 * 2.0 ** -52

#: Largest operation count for which the budget composition rule is proved.
MAX_BUDGET = 30000

#: Budget of a ten-term Taylor sine evaluation of an exactly represented
#: argument (fewer than 250 rounded operations).
SIN_BUDGET = 250

#: Extra budget per unit of argument budget: the argument appears at most
#: 100 times in the expanded Taylor evaluation.
SIN_ARG_FACTOR = 100

#: Conservative Lipschitz constant of the Taylor sine/cosine evaluation,
#: used when converting an absolute argument error to a result error.
TAYLOR_LIPSCHITZ = 6


class BudgetOverflowError(ArithmeticError):
    """An error budget left the range where the composition rule is valid."""


class NotWellDefined(ArithmeticError):
    """A radicand or other intermediate may be negative under worst-case
    error; the enclosing test must be treated as inconclusive, not crashed.
    """


class DomainError(ValueError):
    """Argument outside the validated domain of a kernel."""


def compose_error(n_ops: int) -> float:
    """Multiplicative bound ``1 + n_ops*EPS`` for ``n_ops`` rounded operations.

    Raises :class:`BudgetOverflowError` outside ``1 <= n_ops <= 30000``; the
    caller must restructure the computation rather than extrapolate.
    """
    if not 1 <= n_ops <= MAX_BUDGET:
        raise BudgetOverflowError(
            f"operation count {n_ops} outside [1, {MAX_BUDGET}]")
    return 1.0 + n_ops * EPS


# ---------------------------------------------------------------------------
# Taylor / Newton kernels (scalar or ndarray; one code path for both)
# ---------------------------------------------------------------------------

def taylor_sin(x):
    """Ten-term (degree 19) Taylor sine, terms summed in ascending degree.

    Valid for ``x`` in [0, pi/2]; truncation error is below EPS/2
    multiplicatively there, and the rounded evaluation stays within
    (1 + 250*EPS) of the true sine for exactly represented arguments.
    """
    x2 = x * x
    term = x
    s = x
    for k in range(1, 10):
        term = -term * x2 / ((2 * k) * (2 * k + 1))
        s = s + term
    return s


def newton_sqrt(x):
    """Square root by Newton iteration from a power-of-two seed.

    Ten iterations take the worst-case seed (relative error 1.0) to full
    double precision; the result is within (1 + EPS) of the true root.
    Accepts scalars or arrays; negative inputs are the caller's error.
    """
    arr = np.asarray(x, dtype=np.float64)
    m, e = np.frexp(arr)
    y = np.ldexp(np.float64(1.0), (e + 1) // 2)
    with np.errstate(divide="ignore", invalid="ignore"):
        for _ in range(10):
            y = 0.5 * (y + arr / y)
    out = np.where(arr == 0.0, 0.0, y)
    if np.ndim(x) == 0:
        return float(out)
    return out


def sin_grid(numerator, denominator):
    """sin(pi * numerator/denominator) with exact integer reflection.

    ``numerator`` may be an int or ndarray in [0, denominator]; arguments
    above pi/2 are reflected to pi - x in integer arithmetic, so no
    significance is lost before the Taylor kernel runs.
    """
    a = np.minimum(numerator, denominator - numerator)
    val = taylor_sin((a / denominator) * math.pi)
    if np.ndim(numerator) == 0:
        return float(val)
    return val


def cos_grid(numerator, denominator):
    """cos(pi * numerator/denominator) as a sine of an exact complement.

    The complement pi/2 - x is formed in integer arithmetic over the
    doubled denominator, so the subtraction is exact and the budget law of
    the sine kernel carries over unchanged.
    """
    h = denominator - 2 * np.asarray(numerator)
    val = np.sign(h) * taylor_sin((np.abs(h) / (2 * denominator)) * math.pi)
    if np.ndim(numerator) == 0:
        return float(val)
    return val


def cos_general(y):
    """Cosine on [0, 2*pi] by quadrant reduction to the sine kernel.

    For non-grid arguments (square roots of radicands) the reductions are
    floating subtractions; their error is absorbed by the generous absolute
    allowance the elimination tests attach to cosines of compound
    expressions.
    """
    arr = np.asarray(y, dtype=np.float64)
    half_pi = 0.5 * math.pi
    v1 = taylor_sin(np.clip(half_pi - arr, 0.0, None))
    t = np.clip(arr - half_pi, 0.0, None)
    t = np.where(t > half_pi, np.clip(math.pi - t, 0.0, None), t)
    v2 = -taylor_sin(t)
    v3 = taylor_sin(np.clip(arr - 3.0 * half_pi, 0.0, None))
    out = np.where(arr <= half_pi, v1, np.where(arr <= 3.0 * half_pi, v2, v3))
    if np.ndim(y) == 0:
        return float(out)
    return out


# ---------------------------------------------------------------------------
# Exact grid angles
# ---------------------------------------------------------------------------

@dataclass(frozen=True, order=False)
class GridAngle:
    """An exact rational multiple of pi: the angle ``pi * a / 10**(j+2)``.

    ``numerator`` is the net-point coordinate ``a`` and ``depth`` the
    refinement level ``j``.  Comparisons and sums between grid angles are
    carried out on exact integers (via :class:`fractions.Fraction`), never
    on the float image.
    """

    numerator: int
    depth: int

    def __post_init__(self) -> None:
        if self.depth < 0:
            raise ValueError("depth must be >= 0")
        if not 0 <= self.numerator <= self.denominator:
            raise ValueError(
                f"numerator {self.numerator} outside [0, {self.denominator}]")

    @property
    def denominator(self) -> int:
        return 10 ** (self.depth + 2)

    @property
    def fraction(self) -> Fraction:
        """The exact ratio angle/pi."""
        return Fraction(self.numerator, self.denominator)

    def to_float(self) -> float:
        """Nearest-double image; multiplicative error at most 3*EPS
        (one division, the representation of pi, one multiplication)."""
        return (self.numerator / self.denominator) * math.pi

    def to_err(self) -> "ErrValue":
        return ErrValue(self.to_float(), mult_budget=3, abs_budget=0)

    def reflect(self) -> "GridAngle":
        """pi - self, exact."""
        return GridAngle(self.denominator - self.numerator, self.depth)

    def __lt__(self, other: "GridAngle") -> bool:
        return self.fraction < other.fraction

    def __le__(self, other: "GridAngle") -> bool:
        return self.fraction <= other.fraction


# ---------------------------------------------------------------------------
# Budgeted values
# ---------------------------------------------------------------------------

def _check_budgets(mult: int, absd: int) -> None:
    if mult < 0 or absd < 0:
        raise ValueError("budgets must be nonnegative")
    if mult > MAX_BUDGET:
        raise BudgetOverflowError(
            f"multiplicative budget {mult} exceeds {MAX_BUDGET}")


@dataclass(frozen=True)
class ErrValue:
    """A machine double plus conservative error budgets in units of EPS.

    The true value T of the represented quantity satisfies
    ``|T - value| <= mult_budget*EPS*|value| + abs_budget*EPS``.
    All operations return new values; nothing mutates.
    """

    value: float
    mult_budget: int = 0
    abs_budget: int = 0

    def __post_init__(self) -> None:
        if not math.isfinite(self.value):
            raise ValueError("ErrValue requires a finite double")
        _check_budgets(self.mult_budget, self.abs_budget)

    # -- bounds -------------------------------------------------------------

    @property
    def worst_abs(self) -> float:
        """Upper bound on |true - value|."""
        return (self.mult_budget * abs(self.value) + self.abs_budget) * EPS

    @property
    def lower(self) -> float:
        return self.value - self.worst_abs

    @property
    def upper(self) -> float:
        return self.value + self.worst_abs

    # -- conversions ----------------------------------------------------------

    def as_abs(self, magnitude_bound: float | None = None) -> "ErrValue":
        """Fold the multiplicative budget into the absolute one.

        ``magnitude_bound`` is an a-priori bound on |value| (e.g. 1 for a
        cosine); when omitted the stored magnitude, rounded up, is used.
        """
        bound = abs(self.value) if magnitude_bound is None else magnitude_bound
        if abs(self.value) > bound * (1.0 + 1e-9):
            raise ValueError("magnitude bound smaller than the stored value")
        extra = math.ceil(self.mult_budget * bound)
        return ErrValue(self.value, 0, self.abs_budget + extra)

    # -- arithmetic ---------------------------------------------------------

    def __neg__(self) -> "ErrValue":
        return ErrValue(-self.value, self.mult_budget, self.abs_budget)

    def add(self, other: "ErrValue") -> "ErrValue":
        """Sum of two budgeted values of the same sign (no cancellation).

        For mixed signs use :meth:`sub` semantics via absolute budgets; a
        same-sign add keeps the multiplicative form valid.
        """
        if self.value * other.value < 0.0:
            return self.sub(-other)
        return ErrValue(
            self.value + other.value,
            max(self.mult_budget, other.mult_budget) + 1,
            self.abs_budget + other.abs_budget,
        )

    def sub(self, other: "ErrValue") -> "ErrValue":
        """Difference tracked in absolute budgets (cancellation-safe)."""
        a = self.as_abs()
        b = other.as_abs()
        out = a.value - b.value
        # the rounding of the subtraction itself, in EPS units
        rounding = math.ceil(abs(out)) if out else 1
        return ErrValue(out, 0, a.abs_budget + b.abs_budget + rounding)

    def mul(self, other: "ErrValue") -> "ErrValue":
        out = self.value * other.value
        absd = 0
        if self.abs_budget or other.abs_budget:
            # cross terms |a|*db + |b|*da; second order folded into the +1
            absd = (math.ceil(abs(self.value)) * other.abs_budget
                    + math.ceil(abs(other.value)) * self.abs_budget + 1)
        return ErrValue(out, self.mult_budget + other.mult_budget + 1, absd)

    def div(self, other: "ErrValue") -> "ErrValue":
        if other.lower <= 0.0 <= other.upper:
            raise NotWellDefined("division by a possibly-zero value")
        if other.abs_budget:
            # convert the divisor's absolute budget to multiplicative
            extra = math.ceil(other.abs_budget / abs(other.value))
            other = ErrValue(other.value, other.mult_budget + extra, 0)
        out = self.value / other.value
        absd = 0
        if self.abs_budget:
            absd = math.ceil(self.abs_budget / abs(other.value)) + 1
        return ErrValue(out, self.mult_budget + other.mult_budget + 1, absd)

    def scale_exact(self, k: float) -> "ErrValue":
        """Multiply by an exactly representable constant (factor of 2 etc.)."""
        return ErrValue(self.value * k, self.mult_budget + 1,
                        math.ceil(self.abs_budget * abs(k)))

    # operator sugar so formula bodies read the same for floats and
    # budgeted values; bare numbers are treated as exact
    def _coerce(self, other) -> "ErrValue":
        if isinstance(other, ErrValue):
            return other
        return ErrValue(float(other), 0, 0)

    def __add__(self, other):
        return self.add(self._coerce(other))

    __radd__ = __add__

    def __sub__(self, other):
        return self.sub(self._coerce(other))

    def __rsub__(self, other):
        return self._coerce(other).sub(self)

    def __mul__(self, other):
        return self.mul(self._coerce(other))

    __rmul__ = __mul__

    def __truediv__(self, other):
        return self.div(self._coerce(other))


def exact(x: float) -> ErrValue:
    """Wrap a double that represents its quantity exactly."""
    return ErrValue(float(x), 0, 0)


# ---------------------------------------------------------------------------
# Verified transcendentals
# ---------------------------------------------------------------------------

#: Domain limit of ver_cos: the elimination tests only take cosines of
#: edge lengths at most pi - 1/2 plus twice the largest box half-width.
COS_DOMAIN_MAX = math.pi - 0.5 + 2e-2


def ver_sin(x: ErrValue, exact_fraction: Fraction | None = None) -> ErrValue:
    """Budgeted sine for x in [0, pi].

    When ``exact_fraction`` gives x as an exact rational multiple of pi the
    reflection to pi - x (for x > pi/2) is exact and the result carries the
    multiplicative budget ``250 + 100*k`` for an input budget of ``k``.
    Without it, arguments above pi/2 are reflected in floats and the result
    budget is tracked absolutely (sine is 1-Lipschitz, bounded by 1).
    """
    if not 0.0 <= x.value <= math.pi:
        raise DomainError(f"sine argument {x.value} outside [0, pi]")
    if exact_fraction is not None:
        num, den = exact_fraction.numerator, exact_fraction.denominator
        if not 0 <= num <= den:
            raise DomainError("exact fraction outside [0, 1]")
        if 2 * num > den:
            num = den - num  # exact reflection
        val = taylor_sin((num / den) * math.pi)
        absd = _abs_propagate(x.abs_budget) if x.abs_budget else 0
        return ErrValue(val, SIN_BUDGET + SIN_ARG_FACTOR * x.mult_budget, absd)
    if x.value <= math.pi / 2.0:
        val = taylor_sin(x.value)
        mult = SIN_BUDGET + SIN_ARG_FACTOR * x.mult_budget
        absd = _abs_propagate(x.abs_budget) if x.abs_budget else 0
        return ErrValue(val, mult, absd)
    # float reflection: push everything to the absolute side (|sin| <= 1)
    reflected = math.pi - x.value
    val = taylor_sin(reflected)
    base = ErrValue(val, SIN_BUDGET, 0).as_abs(1.0)
    carried = _abs_propagate(
        x.abs_budget + math.ceil(x.mult_budget * abs(x.value)) + 2)
    return ErrValue(val, 0, base.abs_budget + carried)


def _abs_propagate(arg_abs: int) -> int:
    """Absolute result error from an absolute argument error, using the
    conservative Taylor-series Lipschitz constant."""
    return TAYLOR_LIPSCHITZ * arg_abs


def ver_cos(x: ErrValue, exact_fraction: Fraction | None = None) -> ErrValue:
    """Budgeted cosine for x in [0, pi - 1/2 + 2e-2].

    Computed as the sine of pi/2 - x.  For grid-derived arguments the
    complement is formed exactly over a doubled denominator, so the budget
    law is the sine one; downstream subtractions should convert to an
    absolute budget via ``.as_abs(1.0)`` (cosines are bounded by 1).
    """
    if not 0.0 <= x.value <= COS_DOMAIN_MAX:
        raise DomainError(
            f"cosine argument {x.value} outside [0, {COS_DOMAIN_MAX}]")
    if exact_fraction is not None:
        num, den = exact_fraction.numerator, exact_fraction.denominator
        half = Fraction(den - 2 * num, 2 * den)  # (pi/2 - x)/pi, exact
        sign = 1.0 if half >= 0 else -1.0
        comp_val = float(abs(half)) * math.pi
        result = ver_sin(ErrValue(comp_val, x.mult_budget, x.abs_budget),
                         exact_fraction=abs(half))
        return ErrValue(sign * result.value, result.mult_budget,
                        result.abs_budget)
    comp = math.pi / 2.0 - x.value
    if comp >= 0.0:
        mult = SIN_BUDGET + SIN_ARG_FACTOR * x.mult_budget
        absd = _abs_propagate(x.abs_budget + 1) if x.abs_budget else 0
        return ErrValue(taylor_sin(comp), mult, absd)
    # x beyond pi/2: cos x = -sin(x - pi/2), float shift, absolute tracking
    val = -taylor_sin(-comp)
    base = _abs_propagate(
        x.abs_budget + math.ceil(x.mult_budget * abs(x.value)) + 2)
    return ErrValue(val, 0, SIN_BUDGET + base)


def ver_sqrt(x: ErrValue) -> ErrValue:
    """Budgeted Newton square root.

    The radicand must be provably nonnegative: if the worst-case lower
    bound dips below zero a :class:`NotWellDefined` signal is raised so the
    enclosing elimination test can demote itself to inconclusive.  The
    input budget is carried through unhalved (conservative) and the Newton
    evaluation adds one to the multiplicative budget.
    """
    if x.lower < 0.0:
        raise NotWellDefined(
            f"radicand {x.value} may be negative under worst-case error")
    if x.value == 0.0:
        return ErrValue(0.0, x.mult_budget + 1, x.abs_budget)
    val = newton_sqrt(x.value)
    absd = x.abs_budget
    if absd:
        # |sqrt(a) - sqrt(b)| <= |a-b| / (2*sqrt(min)) ; bound the divisor
        lo = max(x.lower, 0.0)
        if lo == 0.0:
            raise NotWellDefined("cannot propagate absolute error at zero")
        absd = math.ceil(absd / (2.0 * math.sqrt(lo)))
    return ErrValue(val, x.mult_budget + 1, absd)
