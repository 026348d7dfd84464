"""Generalized divisor function with real positive order.

d_kappa is the multiplicative function whose Dirichlet series is the kappa-th
power of zeta; on prime powers it is the rising-factorial quotient
kappa (kappa+1) ... (kappa+nu-1) / nu!.
"""

from __future__ import annotations

import math

from .multfun import MomentHypotheses, PrimePowerRule

_A_PRIME_CUTOFF = 4096
_A_NU_MAX = 80


def piltz_prime_power(kappa: float, nu: int) -> float:
    """Value of d_kappa at a prime power with exponent nu.

    Computed as the running product of (kappa+j)/(j+1); for integer kappa
    each step is an exact integer (binomial coefficient), so float results
    are exact while they fit the mantissa.
    """
    if kappa <= 0:
        raise ValueError(f"kappa must be positive, got {kappa}")
    if nu < 0:
        raise ValueError(f"nu must be >= 0, got {nu}")
    out = 1.0
    for j in range(nu):
        out = out * (kappa + j) / (j + 1)
    return out


def _tail_condition_sum(kappa: float) -> float:
    # Truncated sum of d_kappa(p^nu) log(p^nu) / p^nu over nu >= 2, used to
    # seed the hypothesis record; 1.1 covers truncation for moderate kappa.
    total = 0.0
    p = 2
    while p <= _A_PRIME_CUTOFF:
        lp = math.log(p)
        for nu in range(2, _A_NU_MAX + 1):
            t = piltz_prime_power(kappa, nu) * nu * lp / p**nu
            total += t
            if t < 1e-18:
                break
        # walk odd numbers, cheap trial-division primality
        p += 1 if p == 2 else 2
        while p <= _A_PRIME_CUTOFF and any(p % q == 0 for q in range(3, math.isqrt(p) + 1, 2)):
            p += 2
    return 1.1 * total


def piltz_rule(kappa: float) -> PrimePowerRule:
    """Rule for d_kappa with hypothesis parameters filled in (density kappa)."""
    if kappa <= 0:
        raise ValueError(f"kappa must be positive, got {kappa}")
    hyp = MomentHypotheses(kappa=kappa, A=_tail_condition_sum(kappa), B=1.1 * kappa)
    return PrimePowerRule(
        eval=lambda p, nu: piltz_prime_power(kappa, nu),
        label=f"piltz-{kappa:g}",
        hypothesis=hyp,
        non_negative=True,
    )
