"""Mean values of non-negative multiplicative functions.

The main term of the partial sum is C_f x (log x)^(kappa-1) with C_f an
Euler product against the kappa-th power of zeta; the logarithmic mean uses
the companion constant c_f = C_f / kappa.  Local factors are accumulated in
log space with exact compensated reduction over fixed prime blocks.
"""

from __future__ import annotations

import json
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .errfun import ErrorFunction, partial_sum_error
from .errors import EvaluationError
from .multfun import (
    CoefficientTable,
    MomentHypotheses,
    PrimePowerRule,
    expand_coefficients,
    log_mean,
    partial_sum,
)
from .primes import FactorSieve, prime_power_iter, primes

_PRIME_BLOCK = 1 << 16
_SERIES_REL_TOL = 1e-15
_SERIES_NU_MAX = 6000
_TAIL_INFLATION = 1.5


@dataclass(frozen=True)
class EulerConstantResult:
    """Euler-product constant with truncation bookkeeping.

    tail_magnitude bounds the log-scale change still expected from primes
    beyond prime_limit (geometric extrapolation of the last decades,
    inflated 1.5x because decade sums decay slightly slower than
    geometrically).
    """

    value: float
    prime_limit: int
    tail_magnitude: float
    kappa: float
    label: str = ""


@dataclass(frozen=True)
class MomentPoint:
    x: float
    empirical: float
    predicted: float
    ratio: float
    error_envelope: float


@dataclass(frozen=True)
class MomentReport:
    label: str
    kappa: float
    constant: EulerConstantResult
    points: list


@dataclass(frozen=True)
class HallTenenbaumResult:
    """One evaluation of the general upper bound S_f(x) <= (A+B+1) x s_f(x)/log x."""

    x: float
    lhs: float
    rhs: float
    slack: float
    A: float
    B: float
    a_estimated: bool
    b_estimated: bool


def _log_local_factor(rule: PrimePowerRule, p: int, kappa: float) -> float:
    """log[(1 + sum f(p^nu)/p^nu) (1-1/p)^kappa] with divergence guard."""
    s = 0.0
    grow = 0
    prev = math.inf
    pk = 1.0
    for nu in range(1, _SERIES_NU_MAX + 1):
        pk *= p
        try:
            t = float(rule.eval(p, nu)) / pk
        except OverflowError as exc:
            raise EvaluationError(
                f"local series for {rule.label!r} overflows at p={p}, nu={nu}"
            ) from exc
        s += t
        at = abs(t)
        if not math.isfinite(s):
            raise EvaluationError(f"local series for {rule.label!r} diverges at p={p}")
        if at <= _SERIES_REL_TOL * max(1.0, abs(s)):
            break
        # terms that keep growing past any reasonable local-factor size mean
        # the series cannot converge; bounded humps (large kappa) are fine
        grow = grow + 1 if at > prev else 0
        if grow >= 4 and at > 1e100:
            raise EvaluationError(f"local series for {rule.label!r} diverges at p={p}")
        prev = at
    else:
        raise EvaluationError(f"local series for {rule.label!r} did not converge at p={p}")
    if s <= -1.0:
        raise EvaluationError(f"local factor for {rule.label!r} is nonpositive at p={p}")
    return math.log1p(s) + kappa * math.log1p(-1.0 / p)


def _local_logs(rule, ps, kappa, threads):
    blocks = [(i, min(i + _PRIME_BLOCK, len(ps))) for i in range(0, len(ps), _PRIME_BLOCK)]

    def one(b):
        lo, hi = b
        return [_log_local_factor(rule, int(p), kappa) for p in ps[lo:hi]]

    if threads > 1 and len(blocks) > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            parts = list(pool.map(one, blocks))
    else:
        parts = [one(b) for b in blocks]
    out: list[float] = []
    for part in parts:
        out.extend(part)
    return out


def _tail_estimate(ps: np.ndarray, logs: list, prime_limit: int) -> float:
    # geometric extrapolation from the last two decades of |log local factor|
    hi = prime_limit
    mid = hi // 10
    lo = hi // 100
    if lo < 2:
        return float(np.sum(np.abs(logs)))  # grid too small to extrapolate
    logs = np.asarray(logs)
    w1 = float(np.sum(np.abs(logs[(ps > lo) & (ps <= mid)])))
    w2 = float(np.sum(np.abs(logs[(ps > mid) & (ps <= hi)])))
    if w2 == 0.0:
        return 0.0
    if w1 <= 0.0:
        return _TAIL_INFLATION * w2
    r = w2 / w1
    if r >= 0.99:
        return math.inf
    return _TAIL_INFLATION * w2 * r / (1.0 - r)


def euler_constant_Cf(
    rule: PrimePowerRule,
    kappa: float,
    prime_limit: int,
    sieve: FactorSieve,
    *,
    threads: int = 1,
    label: str | None = None,
) -> EulerConstantResult:
    """Main-term constant: Euler product over p <= prime_limit divided by Gamma(kappa).

    Requires a rule declared non-negative.  Local factors are summed in log
    space; the reduction order is fixed by prime blocks, so the value is
    identical for every thread count.
    """
    if kappa <= 0:
        raise ValueError(f"kappa must be positive, got {kappa}")
    if kappa > 170:
        raise ValueError(f"kappa={kappa} overflows the gamma factor (max 170)")
    if not rule.non_negative:
        raise ValueError(f"rule {rule.label!r} is not declared non-negative")
    if prime_limit < 2 or prime_limit > sieve.limit:
        raise ValueError(f"prime_limit must be in [2, {sieve.limit}], got {prime_limit}")
    ps = primes(sieve, prime_limit)
    logs = _local_logs(rule, ps, kappa, threads)
    total = math.fsum(logs)
    value = math.exp(total) / math.gamma(kappa)
    return EulerConstantResult(
        value=value,
        prime_limit=prime_limit,
        tail_magnitude=_tail_estimate(ps, logs, prime_limit),
        kappa=kappa,
        label=label if label is not None else rule.label,
    )


def euler_constant_cf(
    rule: PrimePowerRule,
    kappa: float,
    prime_limit: int,
    sieve: FactorSieve,
    *,
    threads: int = 1,
    label: str | None = None,
) -> EulerConstantResult:
    """Logarithmic-mean constant (Gamma(kappa+1) in place of Gamma(kappa)).

    Post-check: c_f * kappa must reproduce C_f to 1e-12 relative.
    """
    big = euler_constant_Cf(rule, kappa, prime_limit, sieve, threads=threads, label=label)
    value = big.value * math.gamma(kappa) / math.gamma(kappa + 1.0)
    if abs(value * kappa - big.value) > 1e-12 * abs(big.value):
        raise EvaluationError(
            f"constant identity violated: {value} * {kappa} != {big.value}"
        )
    return EulerConstantResult(
        value=value,
        prime_limit=big.prime_limit,
        tail_magnitude=big.tail_magnitude,
        kappa=kappa,
        label=big.label,
    )


def predict_main_term(kind: str, constant: EulerConstantResult, x: float) -> float:
    """Main term at x: kind "S" -> C x (log x)^(kappa-1), "s" -> c (log x)^kappa."""
    if x <= 1.0:
        raise ValueError(f"x must exceed 1, got {x}")
    k = constant.kappa
    if kind == "S":
        return constant.value * x * math.log(x) ** (k - 1.0)
    if kind == "s":
        return constant.value * math.log(x) ** k
    raise ValueError(f"kind must be 'S' or 's', got {kind!r}")


def compare_moments(
    rule: PrimePowerRule,
    kappa: float,
    R: ErrorFunction,
    xs,
    limit: int,
    sieve: FactorSieve,
    *,
    prime_limit: int | None = None,
    table: CoefficientTable | None = None,
    threads: int = 1,
) -> MomentReport:
    """Empirical partial sums against the predicted main term.

    error_envelope carries the theorem shape (log log x)^2/log x plus the
    tail functional of R at each x.
    """
    xs = sorted(float(x) for x in xs)
    if xs and xs[-1] > limit:
        raise ValueError(f"largest x={xs[-1]} exceeds table limit {limit}")
    if table is None:
        table = expand_coefficients(rule, limit, sieve)
    if prime_limit is None:
        prime_limit = min(sieve.limit, 10**6)
    const = euler_constant_Cf(rule, kappa, prime_limit, sieve, threads=threads)
    points = []
    for x in xs:
        emp = partial_sum(table, x, threads=threads)
        pred = predict_main_term("S", const, x)
        envelope = math.log(math.log(x)) ** 2 / math.log(x) + partial_sum_error(R, x)
        points.append(
            MomentPoint(
                x=x,
                empirical=emp,
                predicted=pred,
                ratio=emp / pred if pred != 0 else math.inf,
                error_envelope=envelope,
            )
        )
    return MomentReport(label=rule.label, kappa=kappa, constant=const, points=points)


def estimate_prime_linear_bound(rule: PrimePowerRule, sieve: FactorSieve, *, margin=1.1) -> float:
    """Estimate B with margin: max over a decade grid of sum f(p) log p / z."""
    zmax = sieve.limit
    ps = primes(sieve, zmax)
    fp = np.array([float(rule.eval(int(p), 1)) for p in ps])
    csum = np.cumsum(fp * np.log(ps))
    best = 0.0
    z = 100
    while z <= zmax:
        idx = int(np.searchsorted(ps, z, side="right"))
        if idx > 0:
            best = max(best, float(csum[idx - 1]) / z)
        z *= 10
    idx = len(ps)
    if idx > 0:
        best = max(best, float(csum[-1]) / zmax)
    return max(margin * best, 1e-2)


def estimate_prime_power_tail(rule: PrimePowerRule, sieve: FactorSieve, *, margin=1.1) -> float:
    """Estimate A with margin: truncated sum of f(p^nu) log(p^nu)/p^nu, nu >= 2."""
    total = 0.0
    for p, nu, q in prime_power_iter(sieve):
        if nu < 2:
            continue
        total += float(rule.eval(p, nu)) * math.log(q) / q
    return max(margin * total, 1e-2)


def hall_tenenbaum_bound(
    rule: PrimePowerRule,
    hyp: MomentHypotheses | None,
    x: float,
    limit: int,
    sieve: FactorSieve,
    *,
    table: CoefficientTable | None = None,
    threads: int = 1,
) -> HallTenenbaumResult:
    """General upper bound S_f(x) <= (A+B+1) x s_f(x) / log x.

    Missing hypothesis parameters are estimated from truncated sums with a
    10% margin and flagged in the result.
    """
    if not rule.non_negative:
        raise ValueError(f"rule {rule.label!r} is not declared non-negative")
    if x <= 1 or x > limit:
        raise ValueError(f"x must be in (1, {limit}], got {x}")
    if hyp is None:
        hyp = rule.hypothesis
    a_est = b_est = False
    if hyp is None:
        A = estimate_prime_power_tail(rule, sieve)
        B = estimate_prime_linear_bound(rule, sieve)
        a_est = b_est = True
    else:
        A, B = hyp.A, hyp.B
    if table is None:
        table = expand_coefficients(rule, limit, sieve)
    lhs = partial_sum(table, x, threads=threads)
    rhs = (A + B + 1.0) * x * log_mean(table, x, threads=threads) / math.log(x)
    return HallTenenbaumResult(
        x=x, lhs=lhs, rhs=rhs, slack=rhs - lhs, A=A, B=B, a_estimated=a_est, b_estimated=b_est
    )


def mean_value_envelope(
    rule: PrimePowerRule,
    kappa: float,
    xs,
    limit: int,
    sieve: FactorSieve,
    *,
    table: CoefficientTable | None = None,
    threads: int = 1,
) -> float:
    """max over xs of S_f(x) / (x (log x)^(kappa-1)), the normalized envelope."""
    if table is None:
        table = expand_coefficients(rule, limit, sieve)
    best = 0.0
    for x in xs:
        x = float(x)
        if x > limit:
            raise ValueError(f"x={x} exceeds table limit {limit}")
        best = max(best, partial_sum(table, x, threads=threads) / (x * math.log(x) ** (kappa - 1.0)))
    return best


def report_to_dict(report: MomentReport) -> dict:
    return {
        "label": report.label,
        "kappa": report.kappa,
        "constant": {
            "value": report.constant.value,
            "prime_limit": report.constant.prime_limit,
            "tail_magnitude": report.constant.tail_magnitude,
        },
        "points": [
            {
                "x": p.x,
                "empirical": p.empirical,
                "predicted": p.predicted,
                "ratio": p.ratio,
                "error_envelope": p.error_envelope,
            }
            for p in report.points
        ],
    }


def report_to_json(report: MomentReport, *, meta: dict | None = None) -> str:
    payload = report_to_dict(report)
    if meta:
        payload["meta"] = meta
    return json.dumps(payload, indent=2)
