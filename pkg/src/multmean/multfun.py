"""Multiplicative coefficient tables and their summation operators.

A multiplicative function is described by a rule giving its values on prime
powers.  Expansion walks 2..limit once, splitting each n into its
smallest-prime-power part times a coprime cofactor, so every table entry is
one rule value times one previously computed entry.  All partial sums go
through exact compensated accumulation with a fixed segment grid, which makes
results independent of the worker count.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .errors import CapacityError, EvaluationError
from .primes import FactorSieve, prime_power_iter, primes

TABLE_CAP = 10**8
_SEGMENT = 1 << 20


@dataclass(frozen=True)
class MomentHypotheses:
    """Growth parameters assumed by the mean-value machinery.

    kappa: linear density of f on primes (sum of f(p) log p up to z ~ kappa z).
    A: bound for the prime-power tail sum of f(p^nu) log(p^nu) / p^nu, nu >= 2.
    B: bound making sum of f(p) log p up to z at most B z.
    """

    kappa: float
    A: float
    B: float

    def __post_init__(self):
        if not (self.kappa > 0 and self.A > 0 and self.B > 0):
            raise ValueError(
                f"hypothesis parameters must be positive, got "
                f"kappa={self.kappa}, A={self.A}, B={self.B}"
            )


@dataclass
class PrimePowerRule:
    """Defining data of a multiplicative function: its values on prime powers.

    eval(p, nu) returns f(p**nu);  f(1) = 1 is implicit.  non_negative
    declares that every value is >= 0, which the expansion checks and the
    mean-value layer requires.
    """

    eval: object  # Callable[[int, int], float]
    label: str = ""
    hypothesis: MomentHypotheses | None = None
    non_negative: bool = False


@dataclass
class CoefficientTable:
    """Dense table of f(1..limit), values[0] unused and set to 0.

    exact_signs optionally carries integer ground-truth signs (int8) for
    sequences whose values come from exact integer data; sign counting uses
    it to bypass the floating-point zero threshold.
    """

    limit: int
    values: np.ndarray
    label: str = ""
    exact_signs: np.ndarray | None = None


def compensated_sum(values: np.ndarray, *, threads: int = 1, segment_size: int = _SEGMENT) -> float:
    """Sum a float array exactly (error-free transformation per segment).

    Segments are fixed by segment_size, each is summed with math.fsum, and
    the per-segment totals are combined in segment order, so the result is
    bit-identical for every thread count.
    """
    n = len(values)
    if n == 0:
        return 0.0
    bounds = [(lo, min(lo + segment_size, n)) for lo in range(0, n, segment_size)]

    def one(b):
        lo, hi = b
        return math.fsum(values[lo:hi].tolist())

    if threads > 1 and len(bounds) > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            parts = list(pool.map(one, bounds))
    else:
        parts = [one(b) for b in bounds]
    return math.fsum(parts)


def expand_coefficients(
    rule: PrimePowerRule, limit: int, sieve: FactorSieve, *, cap: int = TABLE_CAP
) -> CoefficientTable:
    """Evaluate a multiplicative rule on every n <= limit.

    Args:
        rule: Prime-power rule; eval is called once per prime power <= limit.
        limit: Table size; must not exceed the sieve limit or the cap.
        sieve: Factor sieve covering limit.
        cap: Memory guard; above it use streaming_partial_sum instead.

    Returns:
        CoefficientTable with values[n] = f(n), exactly multiplicative by
        construction (each entry is a single product of two table entries).
    """
    if limit < 1:
        raise ValueError(f"limit must be >= 1, got {limit}")
    if limit > cap:
        raise CapacityError(
            f"table limit {limit} exceeds cap {cap}; use streaming_partial_sum"
        )
    if limit > sieve.limit:
        raise ValueError(f"limit {limit} exceeds sieve limit {sieve.limit}")

    values = np.zeros(limit + 1)
    values[1] = 1.0
    ev = rule.eval
    for p, nu, q in prime_power_iter(sieve, limit):
        v = float(ev(p, nu))
        if not math.isfinite(v):
            raise EvaluationError(f"rule {rule.label!r} non-finite at p={p}, nu={nu}")
        if rule.non_negative and v < 0:
            raise EvaluationError(
                f"rule {rule.label!r} declared non-negative but f({p}^{nu}) = {v}"
            )
        values[q] = v

    if limit >= 4:
        spf = sieve.spf
        # prime-power part and coprime cofactor of every n, filled in doubling
        # blocks so all gathers hit finished entries (m = n // spf[n] <= n/2).
        pk = np.zeros(limit + 1, dtype=np.int64)
        cof = np.zeros(limit + 1, dtype=np.int64)
        pk[1] = 1
        cof[1] = 1
        lo = 2
        while lo <= limit:
            hi = min(2 * lo, limit + 1)
            p = spf[lo:hi]
            m = np.arange(lo, hi, dtype=np.int64) // p
            same = (spf[m] == p) & (m > 1)
            pk_blk = np.where(same, pk[m] * p, p)
            cof_blk = np.where(same, cof[m], np.where(m > 1, m, 1))
            vals_blk = values[pk_blk] * values[cof_blk]
            pk[lo:hi] = pk_blk
            cof[lo:hi] = cof_blk
            values[lo:hi] = vals_blk
            lo = hi
    elif limit >= 2:
        pass  # 2, 3 are prime; already set

    return CoefficientTable(limit=limit, values=values, label=rule.label)


def partial_sum(table: CoefficientTable, x: float, *, threads: int = 1) -> float:
    """Sum of table values over n <= x."""
    if x > table.limit:
        raise ValueError(f"x={x} exceeds table limit {table.limit}")
    n = int(math.floor(x))
    if n < 1:
        return 0.0
    return compensated_sum(table.values[1 : n + 1], threads=threads)


def log_mean(table: CoefficientTable, x: float, *, threads: int = 1) -> float:
    """Sum of f(n)/n over n <= x."""
    if x > table.limit:
        raise ValueError(f"x={x} exceeds table limit {table.limit}")
    n = int(math.floor(x))
    if n < 1:
        return 0.0
    arr = table.values[1 : n + 1] / np.arange(1.0, n + 1.0)
    return compensated_sum(arr, threads=threads)


def log_weighted_sum(
    table: CoefficientTable, x: float, exponent: float, *, threads: int = 1
) -> float:
    """Sum of f(n) * (log(x/n))**exponent over n <= x.

    exponent = 0 reproduces partial_sum bit-for-bit (0**0 evaluates to 1).
    """
    if x > table.limit:
        raise ValueError(f"x={x} exceeds table limit {table.limit}")
    if exponent < 0:
        raise ValueError("exponent must be >= 0")
    n = int(math.floor(x))
    if n < 1:
        return 0.0
    w = np.log(x / np.arange(1.0, n + 1.0)) ** exponent
    return compensated_sum(table.values[1 : n + 1] * w, threads=threads)


def dirichlet_convolve(a: CoefficientTable, b: CoefficientTable) -> CoefficientTable:
    """Dirichlet convolution (a*b)[n] = sum over d|n of a[d] b[n/d]."""
    n = min(a.limit, b.limit)
    out = np.zeros(n + 1)
    av = a.values
    bv = b.values
    for d in range(1, n + 1):
        out[d::d] += av[d] * bv[1 : n // d + 1]
    label = f"({a.label})*({b.label})" if a.label or b.label else ""
    return CoefficientTable(limit=n, values=out, label=label)


def pointwise_square(table: CoefficientTable, label: str | None = None) -> CoefficientTable:
    """Table of f(n)**2 (multiplicative whenever f is)."""
    signs = None
    if table.exact_signs is not None:
        signs = np.abs(table.exact_signs)
    return CoefficientTable(
        limit=table.limit,
        values=table.values**2,
        label=label if label is not None else f"({table.label})^2",
        exact_signs=signs,
    )


def verify_linear_condition(rule: PrimePowerRule, R, zs, sieve: FactorSieve):
    """Scaled residuals of the prime linear condition at each z.

    Returns [(z, (sum_{p<=z} f(p) log p - kappa*z) * R(z)/z), ...].  R may be
    an error-function object (its .value is used) or a plain callable.
    """
    if rule.hypothesis is None:
        raise ValueError("rule has no hypothesis parameters (kappa needed)")
    kappa = rule.hypothesis.kappa
    rv = R.value if hasattr(R, "value") else R
    zmax = int(max(zs))
    ps = primes(sieve, zmax)
    fp = np.array([float(rule.eval(int(p), 1)) for p in ps])
    terms = fp * np.log(ps)
    csum = np.cumsum(terms)
    out = []
    for z in zs:
        idx = int(np.searchsorted(ps, z, side="right"))
        s = float(csum[idx - 1]) if idx > 0 else 0.0
        out.append((float(z), (s - kappa * z) * float(rv(z)) / z))
    return out


def _segment_values(rule: PrimePowerRule, lo: int, hi: int, sieve: FactorSieve) -> np.ndarray:
    """Values f(n) for n in [lo, hi) without a full table (streaming mode)."""
    count = hi - lo
    val = np.ones(count)
    rem = np.arange(lo, hi, dtype=np.int64)
    exps = np.zeros(count, dtype=np.int64)
    ev = rule.eval
    root = math.isqrt(hi - 1)
    for p in primes(sieve, root):
        p = int(p)
        q = p
        while q < hi:
            first = ((lo + q - 1) // q) * q
            if first >= hi:
                break
            exps[first - lo :: q] += 1
            q *= p
        pos = np.nonzero(exps)[0]
        if len(pos) == 0:
            continue
        e = exps[pos]
        tab = np.empty(int(e.max()) + 1)
        tab[0] = 1.0
        for nu in range(1, len(tab)):
            v = float(ev(p, nu))
            if not math.isfinite(v):
                raise EvaluationError(f"rule {rule.label!r} non-finite at p={p}, nu={nu}")
            tab[nu] = v
        val[pos] *= tab[e]
        rem[pos] //= np.power(p, e)
        exps[pos] = 0
    big = rem > 1  # leftover cofactor is a single prime above sqrt(hi)
    if np.any(big):
        uniq, inv = np.unique(rem[big], return_inverse=True)
        fv = np.empty(len(uniq))
        for i, P in enumerate(uniq):
            v = float(ev(int(P), 1))
            if not math.isfinite(v):
                raise EvaluationError(f"rule {rule.label!r} non-finite at p={int(P)}, nu=1")
            fv[i] = v
        val[big] *= fv[inv]
    if lo <= 1 < hi:
        val[1 - lo] = 1.0
    if lo == 0:
        val[0] = 0.0
    return val


def streaming_partial_sum(
    rule: PrimePowerRule,
    x: float,
    sieve: FactorSieve,
    *,
    weight: str = "plain",
    exponent: float = 0.0,
    threads: int = 1,
    segment_size: int = 1 << 22,
) -> float:
    """Partial sum of a multiplicative rule without storing the full table.

    weight selects the summand: "plain" -> f(n), "reciprocal" -> f(n)/n,
    "log" -> f(n) (log(x/n))**exponent.  Only needs the sieve to reach
    sqrt(x); values are recomputed per fixed segment, so the result is
    bit-identical for every thread count.
    """
    n = int(math.floor(x))
    if n < 1:
        return 0.0
    if sieve.limit < math.isqrt(n):
        raise ValueError(f"sieve limit {sieve.limit} below sqrt({n})")
    if weight not in ("plain", "reciprocal", "log"):
        raise ValueError(f"unknown weight {weight!r}")
    bounds = [(lo, min(lo + segment_size, n + 1)) for lo in range(1, n + 1, segment_size)]

    def one(b):
        lo, hi = b
        vals = _segment_values(rule, lo, hi, sieve)
        if weight == "reciprocal":
            vals = vals / np.arange(lo, hi, dtype=np.float64)
        elif weight == "log":
            vals = vals * np.log(x / np.arange(lo, hi, dtype=np.float64)) ** exponent
        return math.fsum(vals.tolist())

    if threads > 1 and len(bounds) > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            parts = list(pool.map(one, bounds))
    else:
        parts = [one(b) for b in bounds]
    return math.fsum(parts)


def write_csv(table: CoefficientTable, path, *, value_header: str = "value", metadata=None) -> None:
    """Write `n,<value_header>` rows with 17 significant digits.

    metadata, if given, is appended as trailing `# key: value` comment lines.
    """
    with open(path, "w") as fh:
        fh.write(f"n,{value_header}\n")
        vals = table.values
        for n in range(1, table.limit + 1):
            fh.write(f"{n},{vals[n]:.17g}\n")
        if metadata:
            for k, v in metadata.items():
                fh.write(f"# {k}: {v}\n")


def read_csv(path) -> CoefficientTable:
    """Read a table written by write_csv (comment lines ignored)."""
    ns: list[int] = []
    vs: list[float] = []
    with open(path) as fh:
        header = fh.readline()
        if not header.startswith("n,"):
            raise ValueError(f"unrecognized header {header!r}")
        for line in fh:
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            a, b = line.split(",")
            ns.append(int(a))
            vs.append(float(b))
    limit = max(ns) if ns else 0
    values = np.zeros(limit + 1)
    values[np.array(ns, dtype=np.int64)] = vs
    return CoefficientTable(limit=limit, values=values)
