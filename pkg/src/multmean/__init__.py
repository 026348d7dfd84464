"""Coefficient tables, mean values, and sign statistics of multiplicative functions.

The package builds dense tables of multiplicative functions from their
prime-power values (including Hecke-type coefficients derived from local
Satake parameters), evaluates mean values against Euler-product main terms
with explicit error functionals, and measures sign statistics with a proven
lower-bound comparison.
"""

__version__ = "0.1.0"

from .errors import CapacityError, EvaluationError, MembershipError
from .primes import (
    FactorSieve,
    build_factor_sieve,
    factorize,
    prime_power_iter,
    primes,
    von_mangoldt,
)
from .multfun import (
    CoefficientTable,
    MomentHypotheses,
    PrimePowerRule,
    compensated_sum,
    dirichlet_convolve,
    expand_coefficients,
    log_mean,
    log_weighted_sum,
    partial_sum,
    pointwise_square,
    read_csv,
    streaming_partial_sum,
    verify_linear_condition,
    write_csv,
)
from .piltz import piltz_prime_power, piltz_rule
from .satake import (
    CoefficientSource,
    HeckeEigenvalueForm,
    LocalSatake,
    a_prime_power,
    conjugate_inverse_defect,
    eta_margin,
    gl2_from_eigenvalue,
    grc_residual,
    hecke_recurrence_residual,
    lambda_prime_power,
    ramanujan_delta_source,
    ramanujan_tau_table,
    source_from_form,
    source_rule,
    sym_power_lift,
    sym_power_source,
    theta_bound,
    write_satake_csv,
)
from .errfun import (
    BoundRow,
    ErrorFunction,
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
from .meanvalue import (
    EulerConstantResult,
    HallTenenbaumResult,
    MomentPoint,
    MomentReport,
    compare_moments,
    euler_constant_Cf,
    euler_constant_cf,
    hall_tenenbaum_bound,
    mean_value_envelope,
    predict_main_term,
    report_to_dict,
    report_to_json,
)
from .signs import (
    CauchySchwarzReport,
    SignChangeCount,
    SignCount,
    cauchy_schwarz_report,
    count_sign_changes,
    count_signs,
    hypothesis_h_partial,
    lambda_pm_tables,
    pnt_prime_check,
    pnt_von_mangoldt_check,
    sign_count_lower_bound,
    weighted_second_moment,
)

__all__ = [name for name in dir() if not name.startswith("_")]
