"""Smallest-prime-factor sieve and factorization helpers.

The sieve stores, for every integer up to its limit, the smallest prime
dividing it.  One array answers factorization, primality, and von Mangoldt
queries for every n below the limit, which is what the summation layers
need when they walk coefficient tables.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .errors import CapacityError

DEFAULT_CAP = 10**9
_SEGMENT = 1 << 20


@dataclass(frozen=True)
class FactorSieve:
    """Smallest-prime-factor table for 2..limit.

    Attributes:
        limit: Largest integer covered by the table.
        spf: int64 array of length limit+1; spf[n] is the smallest prime
            factor of n for n >= 2, and 0 for n in {0, 1}.
    """

    limit: int
    spf: np.ndarray


def _mark_segment(spf: np.ndarray, lo: int, hi: int, base_primes: np.ndarray) -> None:
    # Marks smallest prime factors inside [lo, hi).  Iterating primes in
    # increasing order and touching only unmarked cells guarantees each cell
    # ends up with its smallest prime; cells left empty are prime.
    seg = np.zeros(hi - lo, dtype=np.int64)
    for p in base_primes:
        p = int(p)
        start = p * p
        if start >= hi:
            break
        if start < lo:
            start = ((lo + p - 1) // p) * p
        view = seg[start - lo :: p]
        view[view == 0] = p
    idx = np.nonzero(seg == 0)[0]
    seg[idx] = idx + lo
    spf[lo:hi] = seg


def build_factor_sieve(limit: int, *, threads: int = 1, cap: int = DEFAULT_CAP) -> FactorSieve:
    """Build a smallest-prime-factor sieve covering 2..limit.

    Args:
        limit: Inclusive upper bound, at least 2.
        threads: Worker count for segment marking.  The segment grid is
            fixed, so the resulting table is identical for any value.
        cap: Refuse limits above this bound with CapacityError.

    Returns:
        FactorSieve with a fully populated spf array.
    """
    if limit < 2:
        raise ValueError(f"sieve limit must be >= 2, got {limit}")
    if limit > cap:
        raise CapacityError(f"sieve limit {limit} exceeds cap {cap}")

    root = math.isqrt(limit)
    # Base table up to sqrt(limit), built serially; it supplies the marking
    # primes for every segment.
    broot = max(root, 2)
    base = np.zeros(broot + 1, dtype=np.int64)
    for p in range(2, math.isqrt(broot) + 1):
        if base[p] == 0:
            view = base[p * p :: p]
            view[view == 0] = p
    bidx = np.nonzero(base == 0)[0]
    base[bidx] = bidx
    base[0] = base[1] = 0
    base_primes = np.nonzero(base[2:] == np.arange(2, broot + 1))[0] + 2

    spf = np.zeros(limit + 1, dtype=np.int64)
    bounds = [(lo, min(lo + _SEGMENT, limit + 1)) for lo in range(2, limit + 1, _SEGMENT)]
    if threads > 1 and len(bounds) > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            futures = [pool.submit(_mark_segment, spf, lo, hi, base_primes) for lo, hi in bounds]
            for f in futures:
                f.result()
    else:
        for lo, hi in bounds:
            _mark_segment(spf, lo, hi, base_primes)
    spf[0] = spf[1] = 0
    return FactorSieve(limit=limit, spf=spf)


def primes(sieve: FactorSieve, limit: int | None = None) -> np.ndarray:
    """Ascending array of primes <= limit (defaults to the sieve limit)."""
    top = sieve.limit if limit is None else int(limit)
    if top > sieve.limit:
        raise ValueError(f"limit {top} exceeds sieve limit {sieve.limit}")
    if top < 2:
        return np.empty(0, dtype=np.int64)
    spf = sieve.spf[2 : top + 1]
    return np.nonzero(spf == np.arange(2, top + 1, dtype=np.int64))[0] + 2


def factorize(n: int, sieve: FactorSieve) -> list[tuple[int, int]]:
    """Factor n into an ordered list of (prime, exponent) pairs.

    n = 1 factors into the empty list.  Raises ValueError outside
    [1, sieve.limit].
    """
    if n < 1 or n > sieve.limit:
        raise ValueError(f"n must be in [1, {sieve.limit}], got {n}")
    out: list[tuple[int, int]] = []
    spf = sieve.spf
    m = n
    while m > 1:
        p = int(spf[m])
        nu = 0
        while m % p == 0:
            m //= p
            nu += 1
        out.append((p, nu))
    return out


def von_mangoldt(n: int, sieve: FactorSieve) -> float:
    """log p when n is a positive power of the prime p, else 0.0."""
    if n < 1 or n > sieve.limit:
        raise ValueError(f"n must be in [1, {sieve.limit}], got {n}")
    if n == 1:
        return 0.0
    spf = sieve.spf
    p = int(spf[n])
    m = n
    while m % p == 0:
        m //= p
    return math.log(p) if m == 1 else 0.0


def prime_power_iter(sieve: FactorSieve, limit: int | None = None):
    """Yield (p, nu, p**nu) for every prime power up to limit, grouped by prime."""
    top = sieve.limit if limit is None else int(limit)
    for p in primes(sieve, top):
        p = int(p)
        q = p
        nu = 1
        while q <= top:
            yield p, nu, q
            q *= p
            nu += 1
