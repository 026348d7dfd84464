import cmath
import math

import numpy as np
import pytest

from multmean import (
    CapacityError,
    EvaluationError,
    HeckeEigenvalueForm,
    LocalSatake,
    a_prime_power,
    conjugate_inverse_defect,
    eta_margin,
    gl2_from_eigenvalue,
    grc_residual,
    hecke_recurrence_residual,
    lambda_prime_power,
    prime_power_iter,
    ramanujan_delta_source,
    ramanujan_tau_table,
    source_from_form,
    source_rule,
    sym_power_lift,
    sym_power_source,
    theta_bound,
    write_satake_csv,
)

KNOWN_TAU = {
    1: 1, 2: -24, 3: 252, 4: -1472, 5: 4830, 6: -6048, 7: -16744,
    8: 84480, 9: -113643, 10: -115920, 11: 534612, 12: -370944,
    13: -577738, 14: 401856, 15: 1217160, 16: 987136,
}


def naive_tau(limit):
    """Independent oracle: multiply out (1-q^n)^24 with plain integers."""
    deg = limit - 1
    poly = [0] * (deg + 1)
    poly[0] = 1
    for n in range(1, deg + 1):
        # multiply by (1 - q^n)^24 term by term, truncated at deg
        for _ in range(24):
            for i in range(deg, n - 1, -1):
                poly[i] -= poly[i - n]
    return [0] + poly


def test_tau_against_independent_oracle():
    tau = ramanujan_tau_table(60)
    oracle = naive_tau(60)
    assert tau == oracle


def test_tau_known_values():
    tau = ramanujan_tau_table(16)
    for n, v in KNOWN_TAU.items():
        assert tau[n] == v, n


def test_tau_hecke_relations():
    tau = ramanujan_tau_table(1000)
    assert tau[6] == tau[2] * tau[3]
    assert tau[10] == tau[2] * tau[5]
    assert tau[35] == tau[5] * tau[7]
    for p in (2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31):
        assert tau[p * p] == tau[p] ** 2 - p**11, p


def test_tau_deligne_bound():
    tau = ramanujan_tau_table(10**4)
    for p in (2, 3, 5, 101, 997, 2003, 9973):
        assert abs(tau[p]) <= 2 * p**5.5 * (1 + 1e-12), p


def test_tau_capacity():
    with pytest.raises(CapacityError):
        ramanujan_tau_table(10**8)


def test_lambda_gl2_sine_formula():
    # For a unit-circle pair e^{+-i theta}, lambda(p^nu) = sin((nu+1)t)/sin(t)
    theta = 1.234
    local = LocalSatake(prime=7, params=np.array(
        [cmath.exp(1j * theta), cmath.exp(-1j * theta)]))
    for nu in range(0, 15):
        want = math.sin((nu + 1) * theta) / math.sin(theta)
        assert lambda_prime_power(local, nu) == pytest.approx(want, abs=1e-12)


def test_hecke_recurrence_random_sets():
    rng = np.random.default_rng(3)
    for _ in range(50):
        m = int(rng.integers(2, 6))
        phases = rng.uniform(0, math.pi, m // 2)
        params = []
        for t in phases:
            params += [cmath.exp(1j * t), cmath.exp(-1j * t)]
        if m % 2:
            params.append(1.0)
        local = LocalSatake(prime=5, params=np.array(params))
        assert hecke_recurrence_residual(local, 12) < 1e-12


def test_power_sums(delta6):
    source, _ = delta6
    local = source.local(2)
    lam1 = lambda_prime_power(local, 1)
    assert a_prime_power(local, 1) == pytest.approx(lam1, abs=1e-12)
    # with unit determinant, the second power sum is lambda(p)^2 - 2
    assert a_prime_power(local, 2) == pytest.approx(lam1**2 - 2.0, abs=1e-12)


def test_gl2_from_eigenvalue():
    loc = gl2_from_eigenvalue(1.2)
    assert loc.degree == 2
    assert not loc.non_tempered
    assert abs(loc.params[0] * loc.params[1] - 1.0) < 1e-12
    assert abs(abs(loc.params[0]) - 1.0) < 1e-12
    big = gl2_from_eigenvalue(2.5)
    assert big.non_tempered
    assert abs(big.params[0] * big.params[1] - 1.0) < 1e-12
    assert all(abs(a.imag) < 1e-15 for a in big.params)


def test_sym_power_lift_identities():
    loc = gl2_from_eigenvalue(0.81)
    lifted = sym_power_lift(loc, 2)
    assert lifted.degree == 3
    lam = lambda_prime_power(loc, 1)
    lam_sym2 = lambda_prime_power(lifted, 1)
    assert lam_sym2 == pytest.approx(lam * lam - 1.0, abs=1e-12)
    assert conjugate_inverse_defect(lifted) < 1e-10
    # k = 1 reproduces the original parameters
    same = sym_power_lift(loc, 1)
    assert np.allclose(np.sort_complex(same.params), np.sort_complex(loc.params))


def test_grc_residual():
    loc = gl2_from_eigenvalue(1.9, prime=2)
    assert grc_residual(loc, 0.0) <= 1e-12
    spread = gl2_from_eigenvalue(2.1, prime=2)
    assert grc_residual(spread, 0.0) > 0
    # a positive exponent allowance shrinks the residual
    assert grc_residual(spread, 0.25) < grc_residual(spread, 0.0)
    with pytest.raises(ValueError):
        grc_residual(gl2_from_eigenvalue(1.0), 0.0)


def test_complex_leak_guard():
    # a self-contragredient claim with asymmetric parameters leaks an
    # imaginary part, which the evaluation refuses to round away
    local = LocalSatake(
        prime=3,
        params=np.array([0.5 + 0.5j, 2.0]),
        self_contragredient=True,
    )
    with pytest.raises(EvaluationError):
        lambda_prime_power(local, 3)
    # without the claim the complex value is simply returned
    free = LocalSatake(prime=3, params=np.array([0.5 + 0.5j, 2.0]))
    assert isinstance(lambda_prime_power(free, 3), complex)


def test_delta_source_values(delta6):
    source, table = delta6
    assert table.values[1] == 1.0
    assert table.values[2] == pytest.approx(-24 / 2**5.5, rel=1e-15)
    assert table.values[4] == pytest.approx(-0.71875, rel=1e-12)
    assert table.exact_signs is not None
    nz = table.values != 0
    assert np.array_equal(
        np.sign(table.values[nz]), table.exact_signs[nz].astype(float)
    )
    with pytest.raises(ValueError):
        source.local(10**6 + 3)


def test_satake_path_matches_q_expansion(delta6, sieve6):
    source, table = delta6
    tau = ramanujan_tau_table(10**4)
    worst = 0.0
    for p, nu, q in prime_power_iter(sieve6, 10**4):
        want = tau[q] / float(q) ** 5.5
        got = lambda_prime_power(source.local(p), nu)
        denom = max(abs(want), 1e-300)
        worst = max(worst, abs(got - want) / denom)
    assert worst < 1e-10


def test_source_rule_and_sym_source(delta6):
    source, table = delta6
    rule = source_rule(source)
    assert rule.eval(2, 1) == pytest.approx(float(table.values[2]), rel=1e-14)
    assert rule.eval(3, 2) == pytest.approx(float(table.values[9]), rel=1e-14)
    sym2 = sym_power_source(source, 2)
    assert sym2.degree == 3
    lam = float(table.values[3])
    assert lambda_prime_power(sym2.local(3), 1) == pytest.approx(lam * lam - 1, abs=1e-12)


def test_source_from_form(delta6):
    source, table = delta6
    form = HeckeEigenvalueForm(weight=12, eigenvalue=lambda p: float(table.values[p]))
    built = source_from_form(form, label="by-eigenvalue")
    for p in (2, 3, 5, 97):
        a = np.sort_complex(built.local(p).params)
        b = np.sort_complex(source.local(p).params)
        assert np.allclose(a, b, atol=1e-12)


def test_theta_and_eta_tables():
    assert theta_bound(2) == pytest.approx(7 / 64)
    assert theta_bound(3) == pytest.approx(5 / 14)
    assert theta_bound(4) == pytest.approx(9 / 22)
    assert theta_bound(5) == pytest.approx(0.5 - 2 / 26)
    assert theta_bound(9) == pytest.approx(0.5 - 2 / 82)
    assert eta_margin(2) == pytest.approx(25 / 128)
    assert eta_margin(4) == pytest.approx(1 / 22)
    assert eta_margin(5) == pytest.approx(1 / 26)
    with pytest.raises(ValueError):
        theta_bound(1)


def test_write_satake_csv(tmp_path, delta6):
    source, _ = delta6
    path = tmp_path / "satake.csv"
    write_satake_csv(source, [2, 3], path, metadata={"source": "delta"})
    lines = path.read_text().splitlines()
    assert lines[0] == "p,j,re,im"
    assert len([l for l in lines if l.startswith("2,")]) == 2
    assert lines[-1] == "# source: delta"
