import math

import numpy as np
import pytest
from scipy.integrate import quad
from scipy.special import exp1

from multmean import (
    MembershipError,
    check_membership,
    classify_branch,
    geometric_grid,
    integral_bound_report,
    log_mean_error,
    make_error_function,
    parse_error_spec,
    partial_sum_error,
    reduced_error_function,
)

ALL_KINDS = [
    ("loglog-power", (1.0,)),
    ("log-power", (1.0, 0.5)),
    ("exp-loglog-power", (1.0,)),
    ("exp-log-power", (0.5,)),
    ("power", (1.0,)),
    ("exp-sqrt-log", (1.0,)),
]


def make(kind, params):
    return make_error_function(kind, *params)


def test_formulas_at_sample_points():
    R = make("power", (1.0,))
    assert R.value(1000.0) == pytest.approx(1000.0, rel=1e-12)
    assert R.rplus(1000.0) == pytest.approx(math.log(1000.0), rel=1e-9)

    R = make("loglog-power", (0.5,))
    u = math.log(1e6)
    assert R.value(1e6) == pytest.approx(math.log(u) ** 1.5, rel=1e-12)
    assert R.rplus(1e6) == pytest.approx(1.5 / math.log(u), rel=1e-9)

    R = make("exp-loglog-power", (1.0,))
    assert R.value(1e8) == pytest.approx(math.log(1e8), rel=1e-12)
    assert R.rplus(1e8) == pytest.approx(1.0, rel=1e-9)

    R = make("exp-sqrt-log", (2.0,))
    assert R.value(1e6) == pytest.approx(math.exp(2 * math.sqrt(u := math.log(1e6))), rel=1e-12)
    assert R.rplus(1e6) == pytest.approx(math.sqrt(u), rel=1e-9)

    R = make("log-power", (1.0, 0.5))
    z = 1e9
    u = math.log(z)
    assert R.value(z) == pytest.approx(u / math.sqrt(math.log(u)), rel=1e-12)


def test_branches():
    assert make("power", (1.0,)).branch == "other"
    assert make("loglog-power", (1.0,)).branch == "other"
    assert make("exp-log-power", (0.5,)).branch == "other"
    assert make("exp-sqrt-log", (1.0,)).branch == "other"
    assert make("exp-loglog-power", (1.0,)).branch == "ascends-to-one"
    assert make("exp-loglog-power", (0.5,)).branch == "other"
    assert make("log-power", (1.0, 0.5)).branch == "ascends-to-one"
    assert make("log-power", (1.0, 0.0)).branch == "ascends-to-one"
    assert make("log-power", (2.0, 0.5)).branch == "other"


def test_parse_error_spec():
    R = parse_error_spec("power:0.5")
    assert R.value(100.0) == pytest.approx(10.0, rel=1e-12)
    R = parse_error_spec("log-power:1,0.5")
    assert R.branch == "ascends-to-one"
    for bad in ("power", "power:", "nosuch:1", "power:x", "power:-1"):
        with pytest.raises(ValueError):
            parse_error_spec(bad)


def test_classify_branch_numeric():
    grid = list(geometric_grid(1e3, 1e12, 24))
    branch, samples = classify_branch(make("exp-loglog-power", (1.0,)), grid)
    assert branch == "ascends-to-one"
    assert len(samples) >= 16
    branch, _ = classify_branch(make("power", (1.0,)), grid)
    assert branch == "other"
    branch, _ = classify_branch(make("loglog-power", (0.5,)), grid)
    assert branch == "other"


def test_membership_all_kinds():
    grid = list(geometric_grid(1e3, 1e12, 24))
    for kind, params in ALL_KINDS:
        report = check_membership(make(kind, params), grid)
        assert report["ok"], (kind, report)


def test_partial_sum_error_power_oracle():
    # independent closed form: 1/x + E1(log x)
    R = make("power", (1.0,))
    for x in (50.0, 100.0, 1e4):
        exact = 1.0 / x + float(exp1(math.log(x)))
        assert partial_sum_error(R, x) == pytest.approx(exact, rel=1e-10)
    # frozen value at x=100 (the tail is E1(log 100) = 0.00182974349963)
    assert partial_sum_error(R, 100.0) == pytest.approx(0.011830, abs=1e-4)
    assert log_mean_error(R, 100.0) == pytest.approx(0.011830, abs=1e-4)


def test_partial_sum_error_loglog_oracle():
    # exact closed form after substitution: head + w0^(-d)/d
    for d in (1.0, 0.5):
        R = make("loglog-power", (d,))
        for x in (1e4, 1e8):
            w0 = math.log(math.log(x))
            exact = w0 ** -(1.0 + d) + w0 ** (-d) / d
            assert partial_sum_error(R, x) == pytest.approx(exact, rel=1e-6)


def test_ascends_functionals_closed_form_oracle():
    # R = log z: with w = log log z the head is w^2 exp(-w) and the tail
    # integral is the incomplete gamma (w^2 + 2w + 2) exp(-w), so
    # the squared functional equals (2w^2 + 2w + 2) exp(-w) exactly,
    # and the single-log one equals (2w + 1) exp(-w)
    R = make("exp-loglog-power", (1.0,))
    for x in (1e4, 1e6):
        w0 = math.log(math.log(x))
        exact_sq = (2 * w0**2 + 2 * w0 + 2) * math.exp(-w0)
        exact_single = (2 * w0 + 1) * math.exp(-w0)
        assert partial_sum_error(R, x) == pytest.approx(exact_sq, rel=1e-8)
        assert log_mean_error(R, x) == pytest.approx(exact_single, rel=1e-8)

    # cross-check the tail alone against finite-range quadrature in
    # t = log z (integrand (log t)^2 / t^2) plus the closed-form remainder
    x, big = 1e4, 1e30
    w0, wb = math.log(math.log(x)), math.log(math.log(big))
    finite, _ = quad(
        lambda t: math.log(t) ** 2 / t**2, math.log(x), math.log(big), limit=200
    )
    remainder = (wb**2 + 2 * wb + 2) * math.exp(-wb)
    head = w0**2 * math.exp(-w0)
    assert partial_sum_error(R, x) == pytest.approx(
        head + finite + remainder, rel=1e-6
    )


def test_functionals_strictly_decreasing():
    xs = [1e3, 1e4, 1e5, 1e6, 1e8]
    for kind, params in ALL_KINDS:
        R = make(kind, params)
        e = [partial_sum_error(R, x) for x in xs]
        le = [log_mean_error(R, x) for x in xs]
        assert all(a > b for a, b in zip(e, e[1:])), (kind, e)
        assert all(a > b for a, b in zip(le, le[1:])), (kind, le)


def test_functionals_domain():
    R = make("loglog-power", (1.0,))
    with pytest.raises(ValueError):
        partial_sum_error(R, R.z0)
    with pytest.raises(ValueError):
        log_mean_error(R, 2.0)


def test_reduced_functions():
    R = make("power", (1.0,))
    R0 = reduced_error_function(R)
    assert R0.value(1e5) == pytest.approx(R.value(1e5), rel=1e-12)

    R = make("exp-loglog-power", (1.0,))
    R0 = reduced_error_function(R)
    z = 1e6
    assert R0.value(z) == pytest.approx(math.log(z) / math.log(math.log(z)), rel=1e-10)

    grid = list(geometric_grid(1e3, 1e12, 24))
    for kind, params in ALL_KINDS:
        R0 = reduced_error_function(make(kind, params))
        report = check_membership(R0, grid)
        assert report["ok"], (kind, report)


def test_integral_bound_report_power_exact():
    # R = z: bound (1) integrand is constant 1, so c1 = z-term ratio ~ 1
    R = make("power", (1.0,))
    rows = integral_bound_report(R, list(geometric_grid(1e3, 1e12, 19)))
    assert rows
    for row in rows:
        assert row.c1 > 0 and row.c2 > 0 and row.c3 > 0 and row.c4 > 0
    c1s = [r.c1 for r in rows]
    assert max(c1s) / min(c1s) < 1.01


def test_integral_bound_drift_all_kinds():
    grid = list(geometric_grid(1e3, 1e12, 19))
    for kind, params in ALL_KINDS:
        rows = integral_bound_report(make(kind, params), grid)
        assert len(rows) >= 10, kind
        for col in ("c1", "c2", "c3", "c4"):
            vals = [getattr(r, col) for r in rows if getattr(r, col) > 0]
            assert vals, (kind, col)
            assert max(vals) / min(vals) < 2.0, (kind, col, max(vals) / min(vals))


def test_running_max_constants_monotone():
    R = make("exp-sqrt-log", (1.0,))
    rows = integral_bound_report(R, list(geometric_grid(1e3, 1e12, 19)))
    for col in ("c1", "c2", "c3", "c4"):
        vals = [getattr(r, col) for r in rows]
        assert all(b >= a - 1e-12 for a, b in zip(vals, vals[1:])), col


def test_geometric_grid():
    g = geometric_grid(1e3, 1e6, 4)
    assert g[0] == pytest.approx(1e3)
    assert g[-1] == pytest.approx(1e6)
    assert len(g) == 4
    assert all(b > a for a, b in zip(g, g[1:]))
