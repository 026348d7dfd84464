import math

import numpy as np
import pytest

from multmean import (
    CapacityError,
    CoefficientTable,
    EvaluationError,
    PrimePowerRule,
    compensated_sum,
    dirichlet_convolve,
    expand_coefficients,
    factorize,
    log_mean,
    log_weighted_sum,
    partial_sum,
    piltz_rule,
    pointwise_square,
    read_csv,
    streaming_partial_sum,
    verify_linear_condition,
    write_csv,
)


def squarefree_rule():
    return PrimePowerRule(
        eval=lambda p, nu: 1.0 if nu == 1 else 0.0,
        label="squarefree",
        non_negative=True,
    )


def test_expand_squarefree_brute_force(sieve6):
    table = expand_coefficients(squarefree_rule(), 1000, sieve6)
    for n in range(1, 1001):
        sf = all(nu == 1 for _, nu in factorize(n, sieve6))
        assert table.values[n] == (1.0 if sf else 0.0), n


def test_expand_divisor_brute_force(sieve6):
    table = expand_coefficients(piltz_rule(2.0), 1000, sieve6)
    for n in range(1, 1001):
        d = sum(1 for k in range(1, n + 1) if n % k == 0)
        assert table.values[n] == pytest.approx(d, rel=1e-12), n


def test_expand_multiplicative(sieve6):
    table = expand_coefficients(piltz_rule(1.5), 10**4, sieve6)
    rng = np.random.default_rng(7)
    pairs = 0
    while pairs < 50:
        a = int(rng.integers(2, 100))
        b = int(rng.integers(2, 100))
        if math.gcd(a, b) != 1:
            continue
        assert table.values[a * b] == pytest.approx(
            table.values[a] * table.values[b], rel=1e-12
        )
        pairs += 1


def test_partial_sum_against_python_sum(sieve6):
    table = expand_coefficients(piltz_rule(2.0), 5000, sieve6)
    direct = sum(float(table.values[n]) for n in range(1, 3001))
    assert partial_sum(table, 3000) == pytest.approx(direct, rel=1e-14)
    assert partial_sum(table, 3000.7) == partial_sum(table, 3000)
    assert partial_sum(table, 0.5) == 0.0
    with pytest.raises(ValueError):
        partial_sum(table, 5001)


def test_compensated_sum_is_fsum_and_thread_stable():
    rng = np.random.default_rng(11)
    vals = rng.normal(scale=1e8, size=300_001) + rng.normal(size=300_001)
    expected = math.fsum(vals.tolist())
    results = {compensated_sum(vals, threads=t) for t in (1, 4, 8)}
    assert len(results) == 1
    assert results.pop() == expected


def test_log_weighted_sum_exponent_zero(sieve6):
    table = expand_coefficients(piltz_rule(2.0), 2000, sieve6)
    assert log_weighted_sum(table, 1500, 0.0) == partial_sum(table, 1500)
    w = log_weighted_sum(table, 1500, 2.0)
    direct = math.fsum(
        float(table.values[n]) * math.log(1500 / n) ** 2 for n in range(1, 1501)
    )
    assert w == pytest.approx(direct, rel=1e-12)


def test_log_mean(sieve6):
    table = expand_coefficients(squarefree_rule(), 100, sieve6)
    direct = math.fsum(float(table.values[n]) / n for n in range(1, 5))
    assert log_mean(table, 4) == pytest.approx(direct, rel=1e-14)
    # 1 + 1/2 + 1/3 + 0 = 11/6 for squarefree weights over n <= 4
    assert log_mean(table, 4) == pytest.approx(11.0 / 6.0, rel=1e-12)


def test_dirichlet_convolution_identity(sieve6):
    ones = expand_coefficients(piltz_rule(1.0), 10**4, sieve6)
    d2 = expand_coefficients(piltz_rule(2.0), 10**4, sieve6)
    conv = dirichlet_convolve(ones, ones)
    assert np.allclose(conv.values[1:], d2.values[1:], rtol=1e-12, atol=0)


def test_half_convolution_square_root(sieve6):
    half = expand_coefficients(piltz_rule(0.5), 10**4, sieve6)
    conv = dirichlet_convolve(half, half)
    ones = np.ones(10**4 + 1)
    assert np.max(np.abs(conv.values[1:] - ones[1:])) < 1e-9


def test_pointwise_square(delta6):
    _, table = delta6
    sq = pointwise_square(table)
    assert np.array_equal(sq.values, table.values * table.values)
    assert sq.exact_signs is not None
    assert np.all(sq.exact_signs >= 0)


def test_declared_nonnegative_violation(sieve6):
    bad = PrimePowerRule(
        eval=lambda p, nu: -1.0 if (p, nu) == (3, 2) else 1.0,
        label="bad",
        non_negative=True,
    )
    with pytest.raises(EvaluationError, match=r"p=3.*nu=2|3\^2|\(3, 2\)"):
        expand_coefficients(bad, 100, sieve6)


def test_nonfinite_value_rejected(sieve6):
    bad = PrimePowerRule(eval=lambda p, nu: math.inf if p == 5 else 1.0, label="inf")
    with pytest.raises(EvaluationError):
        expand_coefficients(bad, 100, sieve6)


def test_expansion_cap(sieve6):
    with pytest.raises(CapacityError):
        expand_coefficients(piltz_rule(1.0), 10**6, sieve6, cap=10**5)


def test_streaming_matches_dense(sieve6):
    rule = piltz_rule(2.0)
    table = expand_coefficients(rule, 10**5, sieve6)
    got = streaming_partial_sum(rule, 10**5, sieve6)
    assert got == pytest.approx(partial_sum(table, 10**5), rel=1e-13)
    got_log = streaming_partial_sum(rule, 10**5, sieve6, weight="log", exponent=1.0)
    want_log = log_weighted_sum(table, 10**5, 1.0)
    assert got_log == pytest.approx(want_log, rel=1e-12)
    got_rec = streaming_partial_sum(rule, 10**4, sieve6, weight="reciprocal")
    want_rec = log_mean(table, 10**4)
    assert got_rec == pytest.approx(want_rec, rel=1e-12)


def test_streaming_thread_determinism(sieve6):
    rule = piltz_rule(1.5)
    vals = {streaming_partial_sum(rule, 10**5, sieve6, threads=t) for t in (1, 4, 8)}
    assert len(vals) == 1


def test_verify_linear_condition(sieve6):
    rule = piltz_rule(2.0)
    rows = verify_linear_condition(rule, lambda z: z, [10**5, 10**6], sieve6)
    assert [z for z, _ in rows] == [10**5, 10**6]
    for z, resid in rows:
        # sum of 2 log p over p <= z stays within a few percent of 2z
        assert abs(resid) / z < 0.05


def test_csv_round_trip(tmp_path, sieve6):
    table = expand_coefficients(piltz_rule(0.5), 500, sieve6)
    path = tmp_path / "t.csv"
    write_csv(table, path, metadata={"note": "round-trip"})
    back = read_csv(path)
    assert back.limit == 500
    assert np.array_equal(back.values, table.values)
    text = path.read_text()
    assert "# note: round-trip" in text
