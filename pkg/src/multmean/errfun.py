"""Admissible error functions and their tail functionals.

Members are increasing functions R > 1 whose scaled logarithmic slope
R'(z) z log z / R(z) is eventually monotone with R'(z) z / R(z) bounded, and
which dominate a power of the iterated logarithm.  Everything is evaluated
through log R as a function of u = log z, so astronomically large arguments
never overflow.

The slope limit splits the class in two: when the slope increases to 1
(the constant-slope case included), tail functionals pick up powers of
log R; otherwise they do not.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np
from scipy.integrate import quad

from .errors import MembershipError

ASCENDS = "ascends-to-one"
OTHER = "other"

_PANEL_EPS = 1e-6
_MAX_PANELS = 400
_W_CAP = 250.0


@dataclass
class ErrorFunction:
    """One admissible comparison function.

    log_value_at maps u = log z to log R(z); rplus_at maps u to the scaled
    slope R'(z) z log z / R(z).  When rplus_at is omitted it is derived by
    central differences in u with relative step 1e-6.  branch is set
    analytically by the constructors; classify_branch re-derives it
    numerically as a diagnostic.
    """

    label: str
    log_value_at: object  # Callable[[float], float]
    z0: float
    delta: float
    branch: str
    rplus_at: object | None = None

    def __post_init__(self):
        if self.branch not in (ASCENDS, OTHER):
            raise ValueError(f"unknown branch {self.branch!r}")
        if self.rplus_at is None:
            lv = self.log_value_at

            def fd(u: float) -> float:
                h = 1e-6 * abs(u)
                return u * (lv(u + h) - lv(u - h)) / (2.0 * h)

            self.rplus_at = fd

    def value(self, z: float) -> float:
        return math.exp(self.log_value_at(math.log(z)))

    def rplus(self, z: float) -> float:
        return self.rplus_at(math.log(z))


def make_error_function(kind: str, *params: float) -> ErrorFunction:
    """Construct a member by kind name.

    Kinds (with parameters):
      loglog-power(d)      (log log z)^(1+d), d > 0
      log-power(d, e)      (log z)^d / (log log z)^e, d > 0
      exp-loglog-power(d)  exp((log log z)^d), d > 0
      exp-log-power(d)     exp((log z)^d), 0 < d <= 1
      power(d)             z^d, d > 0
      exp-sqrt-log(c)      exp(c sqrt(log z)), c > 0
    """
    if kind == "loglog-power":
        (d,) = params
        if d <= 0:
            raise ValueError(f"loglog-power needs delta > 0, got {d}")
        return ErrorFunction(
            label=f"loglog-power:{d:g}",
            log_value_at=lambda u: (1.0 + d) * math.log(math.log(u)),
            rplus_at=lambda u: (1.0 + d) / math.log(u),
            z0=16.0,
            delta=d,
            branch=OTHER,
        )
    if kind == "log-power":
        d, e = params
        if d <= 0:
            raise ValueError(f"log-power needs delta > 0, got {d}")
        if e == 0.0:
            branch = ASCENDS if d == 1.0 else OTHER
        else:
            branch = ASCENDS if (d == 1.0 and e > 0) else OTHER
        # increasing requires log u > e/d
        u0 = math.exp(max(e / d, 1.0)) * 1.05
        return ErrorFunction(
            label=f"log-power:{d:g},{e:g}",
            log_value_at=lambda u: d * math.log(u) - e * math.log(math.log(u)),
            rplus_at=lambda u: d - e / math.log(u),
            z0=max(16.0, math.exp(u0)),
            delta=1.0,
            branch=branch,
        )
    if kind == "exp-loglog-power":
        (d,) = params
        if d <= 0:
            raise ValueError(f"exp-loglog-power needs delta > 0, got {d}")
        return ErrorFunction(
            label=f"exp-loglog-power:{d:g}",
            log_value_at=lambda u: math.log(u) ** d,
            rplus_at=lambda u: d * math.log(u) ** (d - 1.0),
            z0=16.0,
            delta=1.0,
            branch=ASCENDS if d == 1.0 else OTHER,
        )
    if kind == "exp-log-power":
        (d,) = params
        if not 0 < d <= 1:
            raise ValueError(f"exp-log-power needs 0 < delta <= 1, got {d}")
        return ErrorFunction(
            label=f"exp-log-power:{d:g}",
            log_value_at=lambda u: u**d,
            rplus_at=lambda u: d * u**d,
            z0=3.0,
            delta=1.0,
            branch=OTHER,
        )
    if kind == "power":
        (d,) = params
        if d <= 0:
            raise ValueError(f"power needs delta > 0, got {d}")
        return ErrorFunction(
            label=f"power:{d:g}",
            log_value_at=lambda u: d * u,
            rplus_at=lambda u: d * u,
            z0=2.0,
            delta=1.0,
            branch=OTHER,
        )
    if kind == "exp-sqrt-log":
        (c,) = params
        if c <= 0:
            raise ValueError(f"exp-sqrt-log needs c > 0, got {c}")
        return ErrorFunction(
            label=f"exp-sqrt-log:{c:g}",
            log_value_at=lambda u: c * math.sqrt(u),
            rplus_at=lambda u: 0.5 * c * math.sqrt(u),
            z0=2.0,
            delta=1.0,
            branch=OTHER,
        )
    raise ValueError(f"unknown error-function kind {kind!r}")


def parse_error_spec(text: str) -> ErrorFunction:
    """Parse `kind:p1[,p2]` strings, e.g. power:0.5 or log-power:1.0,0.5."""
    kind, sep, rest = text.partition(":")
    if not sep or not rest:
        raise ValueError(f"error-function spec {text!r} needs kind:params")
    try:
        params = tuple(float(t) for t in rest.split(","))
    except ValueError as exc:
        raise ValueError(f"bad parameters in error-function spec {text!r}") from exc
    return make_error_function(kind.strip(), *params)


def geometric_grid(lo: float = 1e3, hi: float = 1e12, n: int = 16) -> np.ndarray:
    if not (lo > 1 and hi > lo and n >= 2):
        raise ValueError("need 1 < lo < hi and n >= 2")
    return np.geomspace(lo, hi, n)


def classify_branch(R: ErrorFunction, grid, band: float = 0.05):
    """Numeric branch surrogate: monotone slope samples ending near 1.

    This is a heuristic check on a finite grid; constructors set the branch
    analytically.  Raises MembershipError when the samples are not monotone
    in either direction (slope condition violated).  Returns (branch,
    samples).
    """
    zs = np.asarray(grid, dtype=float)
    zs = zs[zs > R.z0]
    if len(zs) < 16:
        raise ValueError("grid needs at least 16 points above z0")
    samples = np.array([R.rplus_at(math.log(z)) for z in np.sort(zs)])
    diffs = np.diff(samples)
    tol = 1e-9 * max(1.0, float(np.max(np.abs(samples))))
    increasing = bool(np.all(diffs >= -tol))
    decreasing = bool(np.all(diffs <= tol))
    if not (increasing or decreasing):
        raise MembershipError(
            f"{R.label}: slope samples not monotone on the grid (condition (a))"
        )
    final = float(samples[-1])
    if increasing and (1.0 - band) <= final <= 1.0 + tol + 1e-12:
        return ASCENDS, samples
    return OTHER, samples


def check_membership(R: ErrorFunction, grid) -> dict:
    """Grid diagnostics for the two admissibility conditions.

    Heuristic surrogates: slope monotone and R'(z)z/R(z) non-inflating for
    condition (a); R/(log log z)^(1+delta) bounded away from zero for
    condition (b).  The lower threshold is 10% of the initial ratio: members
    with slow logarithmic growth legitimately dip by small factors over a
    finite grid, so only order-of-magnitude decay counts as failure.
    """
    zs = np.sort(np.asarray(grid, dtype=float))
    zs = zs[zs > R.z0]
    if len(zs) < 4:
        raise ValueError("grid needs at least 4 points above z0")
    us = np.log(zs)
    slope = np.array([R.rplus_at(u) for u in us])
    diffs = np.diff(slope)
    tol = 1e-9 * max(1.0, float(np.max(np.abs(slope))))
    monotone = bool(np.all(diffs >= -tol) or np.all(diffs <= tol))
    scaled = slope / us  # R'(z) z / R(z)
    bounded = bool(scaled[-1] <= 1.05 * max(scaled[0], 1e-12) + 1e-9)
    ratio = np.array(
        [math.exp(R.log_value_at(u) - (1.0 + R.delta) * math.log(math.log(u))) for u in us]
    )
    lower = bool(np.min(ratio) >= 0.1 * ratio[0])
    return {
        "condition_a_monotone": monotone,
        "condition_a_bounded": bounded,
        "condition_b_lower": lower,
        "slope_samples": slope,
        "growth_ratio": ratio,
        "ok": monotone and bounded and lower,
    }


def _tail_integral(R: ErrorFunction, x: float, log_exponent: int) -> float:
    """Integral over (x, inf) of (log R)^k / (R z log z) dz.

    Substituting twice (u = log z, then w = log u) turns the measure
    dz/(z log z) into plain dw, and for every admissible growth class the
    integrand (log R)^k / R then decays at least polynomially in w.
    Quadrature panels [W, 2W] are appended until the last panel drops below
    1e-6 of the accumulated value.  Once W reaches the evaluation cap
    (R sampled at z = exp(exp(W)) hits float range), the remainder is a
    near-exact power-law tail, summed by geometric extrapolation of the
    measured panel ratio; a ratio approaching 1 means the integral cannot
    converge and raises MembershipError.
    """
    lv = R.log_value_at

    def integrand(w: float) -> float:
        L = lv(math.exp(w))
        if log_exponent == 0 or L <= 0.0:
            return math.exp(-L)
        return math.exp(log_exponent * math.log(L) - L)

    a = math.log(math.log(x))
    b = max(2.0 * a, a + 1.0)
    parts = []
    prev = None
    for _ in range(_MAX_PANELS):
        val, _err = quad(integrand, a, b, epsabs=1e-300, epsrel=1e-10, limit=200)
        parts.append(val)
        acc = math.fsum(parts)
        if len(parts) >= 2 and abs(val) <= _PANEL_EPS * abs(acc):
            return acc
        if b >= _W_CAP and prev is not None and prev > 0.0:
            ratio = val / prev
            if 0.0 <= ratio <= 0.98:
                return acc + val * ratio / (1.0 - ratio)
            break
        prev = val
        a, b = b, 2.0 * b
    raise MembershipError(
        f"{R.label}: tail integral fails to shrink (condition (b) likely violated)"
    )


def partial_sum_error(R: ErrorFunction, x: float) -> float:
    """Relative error envelope attached to the partial-sum asymptotic.

    (log R)^2/R at x plus the matching tail integral when the slope ascends
    to 1; plain 1/R plus its tail otherwise.  Positive and decreasing in x.
    """
    if x <= R.z0:
        raise ValueError(f"x={x} must exceed z0={R.z0}")
    L = R.log_value_at(math.log(x))
    if R.branch == ASCENDS:
        head = math.exp(2.0 * math.log(L) - L) if L > 0 else math.exp(-L)
        return head + _tail_integral(R, x, 2)
    return math.exp(-L) + _tail_integral(R, x, 0)


def log_mean_error(R: ErrorFunction, x: float) -> float:
    """Relative error envelope for the logarithmic mean (single log factor)."""
    if x <= R.z0:
        raise ValueError(f"x={x} must exceed z0={R.z0}")
    L = R.log_value_at(math.log(x))
    if R.branch == ASCENDS:
        head = math.exp(math.log(L) - L) if L > 0 else math.exp(-L)
        return head + _tail_integral(R, x, 1)
    return math.exp(-L) + _tail_integral(R, x, 0)


def reduced_error_function(R: ErrorFunction) -> ErrorFunction:
    """R / log R on the ascending branch (identity elsewhere).

    The reduced function absorbs one log factor: its own tail functionals
    match the log-weighted functionals of R.  Slope identity:
    R0'/R0 = (1 - 1/log R) R'/R.  Requires R(z) > e beyond some point.
    """
    if R.branch != ASCENDS:
        return replace(R, label=f"reduced-{R.label}")
    lv = R.log_value_at
    rp = R.rplus_at
    # find where log R crosses 1 so the quotient is defined and increasing
    u = math.log(max(R.z0, 2.0))
    found = None
    for _ in range(200):
        if lv(u) > 1.05:
            found = u
            break
        u *= 1.25
    if found is None:
        raise ValueError(f"{R.label}: R never exceeds e on the scanned range")
    lo = math.log(max(R.z0, 2.0))
    hi = found
    for _ in range(80):
        mid = 0.5 * (lo + hi)
        if lv(mid) > 1.05:
            hi = mid
        else:
            lo = mid
    u_star = hi
    return ErrorFunction(
        label=f"reduced-{R.label}",
        log_value_at=lambda u: lv(u) - math.log(lv(u)),
        rplus_at=lambda u: (1.0 - 1.0 / lv(u)) * rp(u),
        z0=max(R.z0, math.exp(u_star)) * 1.0000001,
        delta=min(R.delta, 1.0),
        branch=ASCENDS,
    )


@dataclass(frozen=True)
class BoundRow:
    """One grid point of the four tail-estimate ratios.

    c1..c4 are running minimal constants making each inequality hold up to z:
      (1) z/R(z)                 <= C (1 + int_1^z dt/R(t))
      (2) max_t<=z log t / R(t)  <= C (1 + log z / R(z))
      (3) int dt/(t R(t))        <= C (log log z + (log z) F / R(z))
      (4) int R'(t) log t/R(t)^2 <= C (log log z + (log z) F / R(z))
    where F = log R(z) on the ascending branch and 1 otherwise.
    """

    z: float
    c1: float
    c2: float
    c3: float
    c4: float


def integral_bound_report(R: ErrorFunction, zs) -> list[BoundRow]:
    """Evaluate the four tail estimates on an ascending grid.

    Integrals start where R clears 1 (the class maps into (1, inf); listed
    kinds only do so beyond a kind-specific point, and the absorbed initial
    segment only shifts each constant).  Constants are running maxima, i.e.
    the smallest C making the inequality hold on the whole grid up to z.
    """
    zs = np.sort(np.asarray(zs, dtype=float))
    lv = R.log_value_at
    rp = R.rplus_at

    u_min = math.log(max(R.z0, 2.0))
    u = u_min
    for _ in range(200):
        if lv(u) > 0.05:
            break
        u *= 1.1
    u_start = max(u, u_min)
    zs = zs[zs > math.exp(u_start) * 1.5]
    if len(zs) == 0:
        raise ValueError("no grid points beyond the admissible start")

    def f1(u):  # dt/R(t) = e^(u - L) du
        return math.exp(u - lv(u))

    def f3(u):  # dt/(t R(t)) = e^(-L) du
        return math.exp(-lv(u))

    def f4(u):  # R'(t) log t / R(t)^2 dt = slope * e^(-L) du
        return rp(u) * math.exp(-lv(u))

    rows = []
    i1 = i3 = i4 = 0.0
    max2 = 0.0
    prev_u = u_start
    run1 = run2 = run3 = run4 = 0.0
    # dense sampling for the running maximum of log t / R(t)
    for z in zs:
        uz = math.log(z)
        i1 += quad(f1, prev_u, uz, epsabs=1e-300, epsrel=1e-10, limit=200)[0]
        i3 += quad(f3, prev_u, uz, epsabs=1e-300, epsrel=1e-10, limit=200)[0]
        i4 += quad(f4, prev_u, uz, epsabs=1e-300, epsrel=1e-10, limit=200)[0]
        for t in np.linspace(prev_u, uz, 64):
            max2 = max(max2, t * math.exp(-lv(t)))
        prev_u = uz

        Lz = lv(uz)
        rz = math.exp(Lz)
        lhs1 = z / rz
        rhs1 = 1.0 + i1
        lhs2 = max2
        rhs2 = 1.0 + uz / rz
        factor = Lz if R.branch == ASCENDS else 1.0
        rhs34 = math.log(uz) + uz * factor / rz
        run1 = max(run1, lhs1 / rhs1)
        run2 = max(run2, lhs2 / rhs2)
        run3 = max(run3, i3 / rhs34)
        run4 = max(run4, i4 / rhs34)
        rows.append(BoundRow(z=float(z), c1=run1, c2=run2, c3=run3, c4=run4))
    return rows
