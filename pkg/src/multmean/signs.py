"""Sign statistics of real coefficient sequences.

Counts positive, negative, and zero values up to x, counts sign changes,
builds the positive/negative part tables, and evaluates the prime-side
diagnostics (Chebyshev-weighted second moments, von Mangoldt sums, and
Hypothesis H partial sums) that support the sign-count lower bound.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .multfun import CoefficientTable, compensated_sum, expand_coefficients
from .piltz import piltz_rule
from .primes import FactorSieve, prime_power_iter, primes
from .satake import CoefficientSource, a_prime_power, theta_bound

ZERO_EPS = 1e-12


@dataclass(frozen=True)
class SignCount:
    """Counts of positive, negative, and zero coefficients for n <= x."""

    x: float
    n_plus: int
    n_minus: int
    n_zero: int


@dataclass(frozen=True)
class SignChangeCount:
    """Number of adjacent opposite-sign pairs among nonzero coefficients."""

    x: float
    changes: int


@dataclass(frozen=True)
class CauchySchwarzReport:
    """The three-quantity chain bounding sign counts from below.

    With weight w(n) = (log x/n)^weight_exponent, the positive part gives
    l_plus = sum of plus-part(n) w(n), q = sum of value(n)^2 w(n)^2, and
    Cauchy-Schwarz forces l_plus <= sqrt(q * n_plus), hence the implied
    lower bound n_plus >= l_plus^2 / q (same on the minus side).
    """

    x: float
    weight_exponent: int
    square_exponent: int
    l_plus: float
    l_minus: float
    q: float
    n_plus: int
    n_minus: int
    plus_ok: bool
    minus_ok: bool
    implied_plus: float
    implied_minus: float


def _signs_upto(table: CoefficientTable, x: float) -> np.ndarray:
    """int8 sign array for n = 1..floor(x), exact when integer signs exist."""
    if x > table.limit:
        raise ValueError(f"x={x} exceeds table limit {table.limit}")
    k = int(math.floor(x))
    if k < 1:
        return np.empty(0, dtype=np.int8)
    if table.exact_signs is not None:
        return table.exact_signs[1 : k + 1]
    v = table.values[1 : k + 1]
    s = np.zeros(k, dtype=np.int8)
    s[v > ZERO_EPS] = 1
    s[v < -ZERO_EPS] = -1
    return s


def count_signs(table: CoefficientTable, x: float) -> SignCount:
    """Classify every n <= x as positive, negative, or zero.

    Values within 1e-12 of zero count as zero unless the table carries
    exact integer signs, which decide directly.
    """
    s = _signs_upto(table, x)
    n_plus = int(np.count_nonzero(s > 0))
    n_minus = int(np.count_nonzero(s < 0))
    return SignCount(x=x, n_plus=n_plus, n_minus=n_minus, n_zero=len(s) - n_plus - n_minus)


def count_sign_changes(table: CoefficientTable, x: float) -> SignChangeCount:
    """Count sign flips between consecutive nonzero coefficients up to x.

    Zeros are skipped: a change means the nearest nonzero neighbours have
    opposite signs.
    """
    s = _signs_upto(table, x)
    nz = s[s != 0]
    if len(nz) < 2:
        return SignChangeCount(x=x, changes=0)
    return SignChangeCount(x=x, changes=int(np.count_nonzero(nz[1:] != nz[:-1])))


def lambda_pm_tables(table: CoefficientTable):
    """Split a table into its positive and negative parts.

    Returns (plus, minus) with plus[n] = max(value, 0) and
    minus[n] = max(-value, 0), so plus - minus reproduces the original
    and plus + minus its absolute value, both exactly.
    """
    v = table.values
    plus = np.maximum(v, 0.0)
    minus = np.maximum(-v, 0.0)
    es_plus = es_minus = None
    if table.exact_signs is not None:
        es = table.exact_signs
        es_plus = (es > 0).astype(np.int8)
        es_minus = (es < 0).astype(np.int8)
    return (
        CoefficientTable(table.limit, plus, label=f"{table.label}+", exact_signs=es_plus),
        CoefficientTable(table.limit, minus, label=f"{table.label}-", exact_signs=es_minus),
    )


def sign_count_lower_bound(m: int, x: float) -> float:
    """Proven floor for min(N+, N-): x^(1-2*theta) (log x)^(2/m-2).

    theta is the degree-m bound toward temperedness, so smaller theta
    (better progress) gives a larger guaranteed count.
    """
    if m < 2:
        raise ValueError(f"degree must be >= 2, got {m}")
    if x <= 1.0:
        raise ValueError(f"x must exceed 1, got {x}")
    theta = theta_bound(m)
    return x ** (1.0 - 2.0 * theta) * math.log(x) ** (2.0 / m - 2.0)


def weighted_second_moment(
    table: CoefficientTable,
    kappa: float,
    x: float,
    sieve: FactorSieve,
    *,
    piltz_table: CoefficientTable | None = None,
    threads: int = 1,
) -> float:
    """Sum of value(n)^2 / d_kappa(n) over n <= x."""
    if kappa <= 0:
        raise ValueError(f"kappa must be positive, got {kappa}")
    if x > table.limit:
        raise ValueError(f"x={x} exceeds table limit {table.limit}")
    k = int(math.floor(x))
    if k < 1:
        return 0.0
    if piltz_table is None:
        piltz_table = expand_coefficients(piltz_rule(kappa), k, sieve)
    elif piltz_table.limit < k:
        raise ValueError(f"piltz table limit {piltz_table.limit} below x={x}")
    v = table.values[1 : k + 1]
    d = piltz_table.values[1 : k + 1]
    return compensated_sum(v * v / d, threads=threads)


def pnt_prime_check(source, x: float, sieve: FactorSieve) -> tuple[float, float]:
    """Prime sum of squared coefficients with log weight, and its ratio to x.

    Accepts a CoefficientTable (values read off directly) or a
    CoefficientSource (local data evaluated per prime).  For sequences
    normalized like Hecke eigenvalues the ratio approaches 1.
    """
    k = int(math.floor(x))
    if k > sieve.limit:
        raise ValueError(f"x={x} exceeds sieve limit {sieve.limit}")
    ps = primes(sieve, k)
    if isinstance(source, CoefficientTable):
        if k > source.limit:
            raise ValueError(f"x={x} exceeds table limit {source.limit}")
        vals = source.values[ps]
    else:
        vals = np.array([a_prime_power(source.local(int(p)), 1) for p in ps])
    mag = np.abs(vals)
    total = compensated_sum(mag * mag * np.log(ps))
    return total, total / x


def pnt_von_mangoldt_check(
    source: CoefficientSource, x: float, sieve: FactorSieve
) -> tuple[float, float]:
    """Von Mangoldt-weighted sums of Dirichlet coefficients up to x.

    Returns (sum of Lambda(n) a(n)^2, sum of Lambda(n) a(n)) where a(p^nu)
    is the power sum of the local parameters.  The squared sum tracks x;
    the signed sum stays small relative to x.
    """
    k = int(math.floor(x))
    if k > sieve.limit:
        raise ValueError(f"x={x} exceeds sieve limit {sieve.limit}")
    sq: list[float] = []
    signed: list[float] = []
    local = None
    last_p = 0
    for p, nu, _q in prime_power_iter(sieve, k):
        if p != last_p:
            local = source.local(p)
            last_p = p
        a = a_prime_power(local, nu)
        lg = math.log(p)
        sq.append(lg * a * a)
        signed.append(lg * a)
    return math.fsum(sq), math.fsum(signed)


def hypothesis_h_partial(
    source: CoefficientSource,
    nu: int,
    x: float,
    sieve: FactorSieve,
    *,
    single_log: bool = False,
) -> float:
    """Partial sum of |a(p^nu)|^2 (log p)^2 / p^nu over p <= x.

    The series converges for well-behaved sources, so decade increments
    of the partial sum shrink.  single_log swaps in one log p factor.
    """
    if nu < 2:
        raise ValueError(f"nu must be >= 2, got {nu}")
    k = int(math.floor(x))
    if k > sieve.limit:
        raise ValueError(f"x={x} exceeds sieve limit {sieve.limit}")
    exp = 1 if single_log else 2
    terms = []
    for p in primes(sieve, k):
        p = int(p)
        aa = abs(a_prime_power(source.local(p), nu))
        terms.append(aa * aa * math.log(p) ** exp / float(p) ** nu)
    return math.fsum(terms)


def cauchy_schwarz_report(
    table: CoefficientTable, m: int, x: float, sieve: FactorSieve, *, threads: int = 1
) -> CauchySchwarzReport:
    """Evaluate the weighted chain that converts mass into sign counts.

    Uses weight exponent floor(m/2)+1 and its double for the squared sum.
    Entries classified as zero are excluded from every sum so the
    inequality is checked against the reported counts.
    """
    if m < 2:
        raise ValueError(f"degree must be >= 2, got {m}")
    if x <= 1.0 or x > table.limit:
        raise ValueError(f"x must be in (1, {table.limit}], got {x}")
    j = m // 2 + 1
    k = int(math.floor(x))
    s = _signs_upto(table, x)
    v = table.values[1 : k + 1].astype(np.float64, copy=True)
    v[s == 0] = 0.0
    w = np.log(x / np.arange(1.0, k + 1.0)) ** j
    weighted = v * w
    l_plus = compensated_sum(np.where(s > 0, weighted, 0.0), threads=threads)
    l_minus = compensated_sum(np.where(s < 0, -weighted, 0.0), threads=threads)
    q = compensated_sum(weighted * weighted, threads=threads)
    n_plus = int(np.count_nonzero(s > 0))
    n_minus = int(np.count_nonzero(s < 0))
    tol = 1.0 + 1e-10
    plus_ok = l_plus <= math.sqrt(q * n_plus) * tol if n_plus else l_plus == 0.0
    minus_ok = l_minus <= math.sqrt(q * n_minus) * tol if n_minus else l_minus == 0.0
    return CauchySchwarzReport(
        x=x,
        weight_exponent=j,
        square_exponent=2 * j,
        l_plus=l_plus,
        l_minus=l_minus,
        q=q,
        n_plus=n_plus,
        n_minus=n_minus,
        plus_ok=plus_ok,
        minus_ok=minus_ok,
        implied_plus=l_plus * l_plus / q if q > 0 else 0.0,
        implied_minus=l_minus * l_minus / q if q > 0 else 0.0,
    )
