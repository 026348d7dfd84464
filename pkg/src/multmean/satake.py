"""Local coefficient data for degree-m Euler products.

Each prime carries m complex parameters; coefficients on prime powers are
complete homogeneous symmetric polynomials in them, and the companion
sequence a(p^nu) collects power sums.  The built-in example is the weight-12
cusp form with integer q-expansion, computed exactly and normalized so the
prime coefficients land in [-2, 2].
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import gmpy2
import numpy as np

from .errors import CapacityError, EvaluationError
from .multfun import CoefficientTable, PrimePowerRule

DELTA_CAP = 10**7


def theta_bound(m: int) -> float:
    """Best available bound on the unitarity defect exponent for degree m."""
    if m < 2:
        raise ValueError(f"degree must be >= 2, got {m}")
    if m == 2:
        return 7 / 64
    if m == 3:
        return 5 / 14
    if m == 4:
        return 9 / 22
    return 0.5 - 2.0 / (m * m + 1)


def eta_margin(m: int) -> float:
    """Quarter-complement (1 - 2 theta)/4 of the degree-m bound.

    This is the exponent margin that keeps divisor-bounded prime-power terms
    summable in the recurrence estimates.
    """
    return (1.0 - 2.0 * theta_bound(m)) / 4.0


@dataclass
class LocalSatake:
    """Parameters of one local factor.

    params: the m complex numbers attached to the prime.
    self_contragredient: declares the multiset closed under conjugate
        inverse, which forces real coefficient values.
    non_tempered: set when at least one parameter leaves the unit circle.
    """

    prime: int | None
    params: np.ndarray
    self_contragredient: bool = False
    non_tempered: bool = False

    @property
    def degree(self) -> int:
        return len(self.params)


def _maybe_real(value: complex, local: LocalSatake, what: str):
    if local.self_contragredient:
        if abs(value.imag) > 1e-10 * (1.0 + abs(value)):
            raise EvaluationError(
                f"{what} at p={local.prime}: imaginary part {value.imag:.3e} on a "
                f"self-contragredient source"
            )
        return float(value.real)
    return complex(value)


def lambda_prime_power(local: LocalSatake, nu: int):
    """Coefficient at the nu-th power of the local prime.

    Complete homogeneous symmetric polynomial h_nu of the parameters,
    evaluated by multiplying one geometric factor per parameter into a
    running series (O(m*nu) operations).  Returns a real float for
    self-contragredient sources, complex otherwise.
    """
    if nu < 0:
        raise ValueError(f"nu must be >= 0, got {nu}")
    c = [0j] * (nu + 1)
    c[0] = 1.0 + 0j
    for a in local.params:
        a = complex(a)
        for k in range(1, nu + 1):
            c[k] = c[k] + a * c[k - 1]
    return _maybe_real(c[nu], local, "coefficient")


def a_prime_power(local: LocalSatake, nu: int):
    """Power sum of the parameters (the prime-power companion sequence)."""
    if nu < 1:
        raise ValueError(f"nu must be >= 1, got {nu}")
    s = complex(np.sum(local.params**nu))
    return _maybe_real(s, local, "power sum")


def hecke_recurrence_residual(local: LocalSatake, nu_max: int) -> float:
    """Largest scaled defect of the Newton identity nu*h_nu = sum p_j h_(nu-j).

    Residuals are divided by max(1, |nu*h_nu|), so the figure is absolute for
    small coefficients and relative for growing (non-tempered) ones.
    Mathematically zero.
    """
    if nu_max < 1:
        raise ValueError(f"nu_max must be >= 1, got {nu_max}")
    c = [0j] * (nu_max + 1)
    c[0] = 1.0 + 0j
    for a in local.params:
        a = complex(a)
        for k in range(1, nu_max + 1):
            c[k] = c[k] + a * c[k - 1]
    pows = [complex(np.sum(local.params**j)) for j in range(1, nu_max + 1)]
    worst = 0.0
    for nu in range(1, nu_max + 1):
        lhs = nu * c[nu]
        rhs = sum(pows[j - 1] * c[nu - j] for j in range(1, nu + 1))
        worst = max(worst, abs(lhs - rhs) / max(1.0, abs(lhs)))
    return worst


def gl2_from_eigenvalue(lambda_p: float, prime: int | None = None) -> LocalSatake:
    """Local parameters (alpha, beta) with alpha+beta = lambda_p, alpha*beta = 1.

    |lambda_p| <= 2 puts both roots on the unit circle; larger eigenvalues
    give a real reciprocal pair and set the non_tempered flag.
    """
    disc = lambda_p * lambda_p - 4.0
    if disc <= 0.0:
        im = math.sqrt(-disc) / 2.0
        a = complex(lambda_p / 2.0, im)
        params = np.array([a, a.conjugate()])
        non_tempered = False
    else:
        s = math.sqrt(disc)
        params = np.array([complex((lambda_p + s) / 2.0), complex((lambda_p - s) / 2.0)])
        non_tempered = True
    return LocalSatake(
        prime=prime, params=params, self_contragredient=True, non_tempered=non_tempered
    )


def sym_power_lift(local: LocalSatake, k: int) -> LocalSatake:
    """Degree k+1 parameters alpha^k, alpha^(k-2), ..., alpha^(-k).

    Requires a degree-2 local factor with unit determinant.
    """
    if k < 1:
        raise ValueError(f"k must be >= 1, got {k}")
    if local.degree != 2:
        raise ValueError(f"symmetric power lift needs degree 2, got {local.degree}")
    prod = complex(local.params[0] * local.params[1])
    if abs(prod - 1.0) > 1e-9:
        raise ValueError(f"parameter product {prod} is not 1; cannot lift")
    exps = np.arange(k, -k - 1, -2)
    params = local.params[0] ** exps
    return LocalSatake(
        prime=local.prime,
        params=params,
        self_contragredient=local.self_contragredient,
        non_tempered=local.non_tempered,
    )


def conjugate_inverse_defect(local: LocalSatake) -> float:
    """Distance between {conj(alpha_j)} and {1/alpha_j} as multisets.

    Values are paired greedily by nearest match, so ties in the real part
    (conjugate pairs after rounding) cannot scramble the comparison the way
    a lexicographic sort would.
    """
    targets = [complex(v) for v in np.conj(local.params)]
    pool = [complex(v) for v in 1.0 / local.params]
    worst = 0.0
    for v in targets:
        j = min(range(len(pool)), key=lambda i: abs(pool[i] - v))
        worst = max(worst, abs(pool[j] - v))
        pool.pop(j)
    return float(worst)


def grc_residual(local: LocalSatake, theta: float) -> float:
    """max_j |alpha_j| - p**theta; nonpositive when the claimed bound holds."""
    if theta < 0:
        raise ValueError(f"theta must be >= 0, got {theta}")
    if local.prime is None:
        raise ValueError("local factor has no prime attached")
    return float(np.max(np.abs(local.params)) - float(local.prime) ** theta)


@dataclass
class HeckeEigenvalueForm:
    """Normalized eigenvalue supplier for a holomorphic eigenform.

    weight: even integer, 12 for the built-in form.
    eigenvalue: p -> lambda(p) already divided by p^((weight-1)/2).
    """

    weight: int
    eigenvalue: object  # Callable[[int], float]
    tempered: bool = True


@dataclass
class CoefficientSource:
    """Degree-m family of local factors, one per prime."""

    degree: int
    supplier: object  # Callable[[int], LocalSatake]
    label: str = ""
    theta: float = 0.0

    def local(self, p: int) -> LocalSatake:
        return self.supplier(p)


def source_rule(source: CoefficientSource) -> PrimePowerRule:
    """Multiplicative rule evaluating the source's prime-power coefficients."""

    def ev(p, nu):
        return lambda_prime_power(source.supplier(p), nu)

    return PrimePowerRule(eval=ev, label=source.label)


def source_from_form(form: HeckeEigenvalueForm, label: str = "") -> CoefficientSource:
    """Degree-2 source whose local parameters come from the form's eigenvalues."""

    def supplier(p):
        return gl2_from_eigenvalue(form.eigenvalue(p), prime=p)

    return CoefficientSource(
        degree=2, supplier=supplier, label=label, theta=0.0 if form.tempered else theta_bound(2)
    )


def sym_power_source(source: CoefficientSource, k: int) -> CoefficientSource:
    """Symmetric-power family of a degree-2 source."""
    if source.degree != 2:
        raise ValueError(f"symmetric power needs a degree-2 source, got {source.degree}")

    def supplier(p):
        return sym_power_lift(source.supplier(p), k)

    return CoefficientSource(
        degree=k + 1,
        supplier=supplier,
        label=f"sym{k}-{source.label}" if source.label else f"sym{k}",
        theta=k * source.theta,
    )


# ---------------------------------------------------------------------------
# exact q-expansion of the weight-12 discriminant form


def _eta3_sparse(max_deg: int):
    # cube of the Euler product: sum over k of (-1)^k (2k+1) q^(k(k+1)/2)
    offs = []
    vals = []
    k = 0
    while k * (k + 1) // 2 <= max_deg:
        offs.append(k * (k + 1) // 2)
        vals.append(2 * k + 1 if k % 2 == 0 else -(2 * k + 1))
        k += 1
    return np.array(offs, dtype=np.int64), np.array(vals, dtype=np.int64)


def _eta6_dense(max_deg: int) -> np.ndarray:
    offs, vals = _eta3_sparse(max_deg)
    out = np.zeros(max_deg + 1, dtype=np.int64)
    for i in range(len(offs)):
        lim = max_deg - int(offs[i])
        jmax = int(np.searchsorted(offs, lim, side="right"))
        if jmax == 0:
            break
        # offsets are strictly increasing, so the target indices are distinct
        out[int(offs[i]) + offs[:jmax]] += int(vals[i]) * vals[:jmax]
    return out


def _square_exact(coeffs: list, out_len: int) -> list:
    """Exact truncated square of an integer polynomial.

    Coefficients are packed into fixed-width two's-complement-style slots of
    one big integer, squared once through gmpy2, and unpacked with borrow
    propagation.  Slot width is chosen from the worst-case convolution bound,
    so recovery is exact.
    """
    n = len(coeffs)
    m = max(1, max(abs(c) for c in coeffs))
    bound = n * m * m
    b8 = (bound.bit_length() + 2 + 7) // 8
    b = 8 * b8
    pos = bytearray(n * b8)
    neg = bytearray(n * b8)
    for i, c in enumerate(coeffs):
        if c > 0:
            pos[i * b8 : i * b8 + b8] = c.to_bytes(b8, "little")
        elif c < 0:
            neg[i * b8 : i * b8 + b8] = (-c).to_bytes(b8, "little")
    packed = gmpy2.mpz(int.from_bytes(pos, "little") - int.from_bytes(neg, "little"))
    squared = packed * packed
    total = out_len * b8
    low = int(squared & ((gmpy2.mpz(1) << (8 * total)) - 1))
    tb = low.to_bytes(total, "little")
    half = 1 << (b - 1)
    base = 1 << b
    out = []
    carry = 0
    for i in range(out_len):
        v = int.from_bytes(tb[i * b8 : (i + 1) * b8], "little") + carry
        if v >= half:
            out.append(v - base)
            carry = 1
        else:
            out.append(v)
            carry = 0
    return out


_tau_cache: dict = {"limit": 0, "tau": [0]}


def ramanujan_tau_table(limit: int, *, cap: int = DELTA_CAP) -> list:
    """Exact integer q-expansion coefficients tau(0..limit) (index 0 is 0).

    The weight-12 form is the 24th power of the Euler product shifted by one;
    the cube is sparse, and three exact squarings reach the 24th power.
    """
    if limit < 1:
        raise ValueError(f"limit must be >= 1, got {limit}")
    if limit > cap:
        raise CapacityError(f"q-expansion limit {limit} exceeds cap {cap}")
    if _tau_cache["limit"] >= limit:
        return _tau_cache["tau"][: limit + 1]
    deg = limit - 1
    eta6 = [int(c) for c in _eta6_dense(deg)]
    eta12 = _square_exact(eta6, deg + 1)
    eta24 = _square_exact(eta12, deg + 1)
    tau = [0] + eta24
    _tau_cache["limit"] = limit
    _tau_cache["tau"] = tau
    return tau


def ramanujan_delta_source(
    limit: int, *, cap: int = DELTA_CAP
) -> tuple[CoefficientSource, CoefficientTable]:
    """Built-in weight-12 source plus its normalized coefficient table.

    Table values are tau(n)/n^(11/2); exact integer signs ride along so sign
    statistics need no floating-point threshold.
    """
    tau = ramanujan_tau_table(limit, cap=cap)
    tau_f = np.array([float(t) for t in tau])
    n = np.arange(limit + 1, dtype=np.float64)
    with np.errstate(divide="ignore", invalid="ignore"):
        lam = tau_f / n**5.5
    lam[0] = 0.0
    table = CoefficientTable(
        limit=limit,
        values=lam,
        label="ramanujan-delta",
        exact_signs=np.sign(tau_f).astype(np.int8),
    )

    def eigenvalue(p: int) -> float:
        if p > limit:
            raise ValueError(f"prime {p} beyond table limit {limit}")
        return float(lam[p])

    form = HeckeEigenvalueForm(weight=12, eigenvalue=eigenvalue, tempered=True)
    source = source_from_form(form, label="ramanujan-delta")
    return source, table


def write_satake_csv(source: CoefficientSource, ps, path, *, metadata=None) -> None:
    """Write local parameters as `p,j,re,im` rows (17 significant digits)."""
    with open(path, "w") as fh:
        fh.write("p,j,re,im\n")
        for p in ps:
            loc = source.supplier(int(p))
            for j, a in enumerate(loc.params):
                fh.write(f"{int(p)},{j},{a.real:.17g},{a.imag:.17g}\n")
        if metadata:
            for k, v in metadata.items():
                fh.write(f"# {k}: {v}\n")
