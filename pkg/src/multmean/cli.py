"""Command-line frontend.

Subcommands: coeffs (materialize a coefficient table), moments (mean-value
report), signs (sign statistics), diag (prime-side and error-functional
diagnostics).  All output is deterministic: identical configurations give
identical files regardless of the worker count.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import math
import sys
from dataclasses import dataclass, replace

import numpy as np

from . import __version__
from .errfun import (
    classify_branch,
    check_membership,
    geometric_grid,
    integral_bound_report,
    parse_error_spec,
)
from .errors import CapacityError, EvaluationError, MembershipError
from .meanvalue import compare_moments, report_to_dict
from .multfun import (
    CoefficientTable,
    MomentHypotheses,
    PrimePowerRule,
    expand_coefficients,
    pointwise_square,
)
from .piltz import piltz_prime_power, piltz_rule
from .primes import build_factor_sieve
from .satake import (
    lambda_prime_power,
    ramanujan_delta_source,
    source_rule,
    sym_power_source,
)
from .signs import (
    count_sign_changes,
    count_signs,
    hypothesis_h_partial,
    pnt_prime_check,
    pnt_von_mangoldt_check,
    sign_count_lower_bound,
)

_FORM_HELP = (
    "ones | squarefree | piltz:K | delta | delta-sq | "
    "delta-sq-over-piltz:K | sym-delta:K"
)
_DIAG_KINDS = ("pnt", "hyp-h", "bounds")


@dataclass(frozen=True)
class FormSpec:
    """Parsed --form value: kind plus optional numeric parameter."""

    text: str
    kind: str
    param: float | None = None
    degree: int | None = None
    non_negative: bool = True
    satake: bool = False

    @property
    def default_kappa(self) -> float:
        if self.kind == "piltz":
            return float(self.param)
        if self.kind == "delta-sq-over-piltz":
            return 1.0 / float(self.param)
        return 1.0


@dataclass(frozen=True)
class RunConfig:
    """Fully resolved invocation: every field validated before any work."""

    command: str
    diag_kind: str | None = None
    form: FormSpec | None = None
    limit: int | None = None
    xs: tuple = ()
    zs: tuple = ()
    kappa: float | None = None
    nu: int = 2
    r_spec: str | None = None
    prime_limit: int | None = None
    out: str | None = None
    fmt: str = "json"
    threads: int = 1

    def hash_payload(self) -> dict:
        # out and threads never influence computed numbers, so they stay
        # outside the hash and files remain identical across worker counts.
        return {
            "command": self.command,
            "diag_kind": self.diag_kind,
            "form": self.form.text if self.form else None,
            "limit": self.limit,
            "x": list(self.xs),
            "z": list(self.zs),
            "kappa": self.kappa,
            "nu": self.nu,
            "R": self.r_spec,
            "prime_limit": self.prime_limit,
            "format": self.fmt,
            "version": __version__,
        }

    def config_hash(self) -> str:
        blob = json.dumps(self.hash_payload(), sort_keys=True)
        return hashlib.sha256(blob.encode()).hexdigest()[:16]


def parse_number(text: str) -> float:
    """Parse a numeric literal, accepting 1000, 1e6, and 10^6 spellings."""
    t = text.strip()
    if "^" in t:
        base, _, exp = t.partition("^")
        return float(int(base) ** int(exp))
    return float(t)


def parse_int(text: str) -> int:
    v = parse_number(text)
    if v != int(v):
        raise ValueError(f"expected an integer, got {text!r}")
    return int(v)


def parse_grid(text: str) -> tuple:
    """Parse an x/z grid: comma list of numbers, or lo..hi geometric range."""
    t = text.strip()
    if ".." in t:
        lo_s, _, hi_s = t.partition("..")
        lo, hi = parse_number(lo_s), parse_number(hi_s)
        if not (0 < lo < hi):
            raise ValueError(f"range must satisfy 0 < lo < hi, got {text!r}")
        decades = math.log10(hi / lo)
        count = max(2, int(round(2 * decades)) + 1)
        return tuple(geometric_grid(lo, hi, count))
    vals = tuple(parse_number(part) for part in t.split(",") if part.strip())
    if not vals:
        raise ValueError(f"empty grid {text!r}")
    if any(v <= 0 for v in vals):
        raise ValueError(f"grid values must be positive, got {text!r}")
    return vals


def parse_form(text: str) -> FormSpec:
    t = text.strip().lower()
    base, _, par = t.partition(":")
    if base == "ones" and not par:
        return FormSpec(t, "ones")
    if base == "squarefree" and not par:
        return FormSpec(t, "squarefree")
    if base == "piltz":
        k = float(parse_number(par))
        if k <= 0:
            raise ValueError(f"piltz parameter must be positive, got {par!r}")
        return FormSpec(t, "piltz", param=k)
    if base == "delta" and not par:
        return FormSpec(t, "delta", degree=2, non_negative=False, satake=True)
    if base == "delta-sq" and not par:
        return FormSpec(t, "delta-sq", degree=2, satake=True)
    if base == "delta-sq-over-piltz":
        k = float(parse_number(par))
        if k <= 0:
            raise ValueError(f"piltz parameter must be positive, got {par!r}")
        return FormSpec(t, "delta-sq-over-piltz", param=k, degree=2, satake=True)
    if base == "sym-delta":
        k = parse_int(par)
        if k < 1:
            raise ValueError(f"symmetric power must be >= 1, got {par!r}")
        return FormSpec(t, "sym-delta", param=float(k), degree=k + 1,
                        non_negative=False, satake=True)
    raise ValueError(f"unknown form {text!r}; expected {_FORM_HELP}")


def _squarefree_rule() -> PrimePowerRule:
    return PrimePowerRule(
        eval=lambda p, nu: 1.0 if nu == 1 else 0.0,
        label="squarefree",
        hypothesis=MomentHypotheses(kappa=1.0, A=0.01, B=1.1),
        non_negative=True,
    )


def build_form(form: FormSpec, limit: int, *, threads: int = 1):
    """Materialize (table, rule, source) for a parsed form.

    rule is None for forms that are not multiplicative-by-rule consumers
    (none currently); source is None for non-Satake forms.
    """
    if form.kind == "delta":
        source, table = ramanujan_delta_source(limit)
        return table, source_rule(source), source
    if form.kind == "delta-sq":
        source, table = ramanujan_delta_source(limit)
        sq = pointwise_square(table, label="delta-sq")
        rule = PrimePowerRule(
            eval=lambda p, nu: lambda_prime_power(source.local(p), nu) ** 2,
            label="delta-sq",
            non_negative=True,
        )
        return sq, rule, source
    if form.kind == "delta-sq-over-piltz":
        k = float(form.param)
        source, table = ramanujan_delta_source(limit)
        sq = pointwise_square(table, label=form.text)
        sieve = build_factor_sieve(limit)
        dk = expand_coefficients(piltz_rule(k), limit, sieve)
        vals = sq.values.copy()
        vals[1:] /= dk.values[1:]
        weighted = CoefficientTable(limit, vals, label=form.text,
                                    exact_signs=sq.exact_signs)
        rule = PrimePowerRule(
            eval=lambda p, nu: lambda_prime_power(source.local(p), nu) ** 2
            / piltz_prime_power(k, nu),
            label=form.text,
            non_negative=True,
        )
        return weighted, rule, source
    if form.kind == "sym-delta":
        k = int(form.param)
        base, _ = ramanujan_delta_source(limit)
        lifted = sym_power_source(base, k)
        rule = source_rule(lifted)
        sieve = build_factor_sieve(limit)
        table = expand_coefficients(rule, limit, sieve)
        return table, rule, lifted
    if form.kind == "ones":
        rule = replace(piltz_rule(1.0), label="ones")
    elif form.kind == "squarefree":
        rule = _squarefree_rule()
    elif form.kind == "piltz":
        rule = piltz_rule(float(form.param))
    else:
        raise ValueError(f"unknown form kind {form.kind!r}")
    sieve = build_factor_sieve(limit, threads=threads)
    table = expand_coefficients(rule, limit, sieve)
    return table, rule, None


def _read_config_file(path: str) -> dict:
    known = {"form", "limit", "x", "z", "kappa", "nu", "r", "prime-limit",
             "out", "format", "threads"}
    out: dict = {}
    try:
        with open(path, encoding="utf-8") as fh:
            for lineno, raw in enumerate(fh, 1):
                line = raw.split("#", 1)[0].strip()
                if not line:
                    continue
                if "=" not in line:
                    raise ValueError(f"{path}:{lineno}: expected key=value, got {raw.rstrip()!r}")
                key, _, val = line.partition("=")
                key = key.strip().lower()
                if key not in known:
                    raise ValueError(f"{path}:{lineno}: unknown key {key!r}")
                out[key] = val.strip()
    except OSError as exc:
        raise ValueError(f"cannot read config file {path}: {exc}") from exc
    return out


def _pick(flag_value, file_cfg: dict, key: str, default=None):
    if flag_value is not None:
        return flag_value
    if key in file_cfg:
        return file_cfg[key]
    return default


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="multmean",
        description="Coefficient tables, mean values, and sign statistics "
        "of multiplicative functions.",
    )
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, *, with_form=True):
        if with_form:
            p.add_argument("--form", "--f", dest="form", help=_FORM_HELP)
        p.add_argument("--limit", help="table limit (accepts 1e6 / 10^6)")
        p.add_argument("--threads", type=int, help="worker count (default 1)")
        p.add_argument("--out", help="output path (default stdout)")
        p.add_argument("--format", dest="fmt", choices=("csv", "json"),
                       help="output format")
        p.add_argument("--config", help="flat key=value config file")

    p = sub.add_parser("coeffs", help="write a coefficient table as CSV")
    common(p)

    p = sub.add_parser("moments", help="mean-value report against the main term")
    common(p)
    p.add_argument("--x", help="comma list or lo..hi grid of evaluation points")
    p.add_argument("--kappa", help="mean parameter (default from form)")
    p.add_argument("--R", dest="r_spec", help="error-function spec kind:params")
    p.add_argument("--prime-limit", dest="prime_limit",
                   help="Euler product truncation (default min(limit, 1e6))")

    p = sub.add_parser("signs", help="sign counts, changes, and lower bound")
    common(p)
    p.add_argument("--x", help="comma list or lo..hi grid of evaluation points")

    p = sub.add_parser("diag", help="prime-side and error-functional diagnostics")
    p.add_argument("kind", choices=_DIAG_KINDS)
    common(p)
    p.add_argument("--x", help="comma list or lo..hi grid of evaluation points")
    p.add_argument("--nu", help="prime-power exponent for hyp-h (default 2)")
    p.add_argument("--R", dest="r_spec", help="error-function spec kind:params")
    p.add_argument("--z", help="evaluation grid for bounds (default 1e3..1e12)")
    return parser


def resolve_config(args: argparse.Namespace) -> RunConfig:
    """Merge flags over config-file values over defaults, then validate."""
    file_cfg = _read_config_file(args.config) if getattr(args, "config", None) else {}

    def val(name, key=None, default=None):
        return _pick(getattr(args, name, None), file_cfg, key or name, default)

    command = args.command
    diag_kind = getattr(args, "kind", None)

    form_text = val("form")
    form = parse_form(form_text) if form_text is not None else None

    xs_text = val("x")
    xs = parse_grid(xs_text) if xs_text is not None else ()
    zs_text = val("z")
    zs = parse_grid(zs_text) if zs_text is not None else ()

    limit_text = val("limit")
    limit = parse_int(str(limit_text)) if limit_text is not None else None

    kappa_text = val("kappa")
    kappa = float(parse_number(str(kappa_text))) if kappa_text is not None else None

    nu_text = val("nu")
    nu = parse_int(str(nu_text)) if nu_text is not None else 2

    r_spec = val("r_spec", key="r")
    prime_limit_text = val("prime_limit", key="prime-limit")
    prime_limit = parse_int(str(prime_limit_text)) if prime_limit_text is not None else None

    threads_text = val("threads", default=1)
    threads = int(threads_text)
    if threads < 1:
        raise ValueError(f"threads must be >= 1, got {threads}")

    fmt_default = "csv" if command == "coeffs" or diag_kind == "bounds" else "json"
    fmt = val("fmt", key="format", default=fmt_default)
    if fmt not in ("csv", "json"):
        raise ValueError(f"format must be csv or json, got {fmt!r}")

    out = val("out")

    needs_form = command in ("coeffs", "moments", "signs") or diag_kind in ("pnt", "hyp-h")
    if needs_form and form is None:
        raise ValueError(f"{command} requires --form ({_FORM_HELP})")

    needs_x = command in ("moments", "signs") or diag_kind in ("pnt", "hyp-h")
    if needs_x and not xs:
        raise ValueError(f"{command} requires --x")

    if command == "coeffs" and limit is None:
        raise ValueError("coeffs requires --limit")
    if limit is None and xs:
        limit = int(math.ceil(max(xs)))
    if limit is not None and xs and max(xs) > limit:
        raise ValueError(f"largest x={max(xs):g} exceeds --limit {limit}")
    if limit is not None and limit < 2:
        raise ValueError(f"limit must be >= 2, got {limit}")

    if command == "moments":
        if not form.non_negative:
            raise ValueError(
                f"moments requires a non-negative form, got {form.text!r}"
            )
        if kappa is None:
            kappa = form.default_kappa
        if kappa <= 0:
            raise ValueError(f"kappa must be positive, got {kappa}")
        if r_spec is None:
            r_spec = "power:1"
        parse_error_spec(r_spec)

    if diag_kind in ("pnt", "hyp-h") and not form.satake:
        raise ValueError(f"diag {diag_kind} requires a Satake-backed form "
                         f"(delta or sym-delta:K), got {form.text!r}")
    if diag_kind == "hyp-h" and nu < 2:
        raise ValueError(f"--nu must be >= 2, got {nu}")
    if diag_kind == "bounds":
        if r_spec is None:
            raise ValueError("diag bounds requires --R kind:params")
        parse_error_spec(r_spec)
        if not zs:
            zs = parse_grid("1e3..1e12")

    return RunConfig(
        command=command,
        diag_kind=diag_kind,
        form=form,
        limit=limit,
        xs=xs,
        zs=zs,
        kappa=kappa,
        nu=nu,
        r_spec=r_spec,
        prime_limit=prime_limit,
        out=out,
        fmt=fmt,
        threads=threads,
    )


def _fmt(v: float) -> str:
    return "%.17g" % float(v)


def _emit_text(cfg: RunConfig, text: str) -> None:
    if cfg.out:
        with open(cfg.out, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _emit_json(cfg: RunConfig, payload: dict) -> None:
    payload["meta"] = {"version": __version__, "config_hash": cfg.config_hash()}
    _emit_text(cfg, json.dumps(payload, indent=2) + "\n")


def _emit_csv(cfg: RunConfig, header: list, rows: list) -> None:
    lines = [",".join(header)]
    for row in rows:
        lines.append(",".join(_fmt(c) if isinstance(c, float) else str(c) for c in row))
    lines.append(f"# version: {__version__}")
    lines.append(f"# config_hash: {cfg.config_hash()}")
    _emit_text(cfg, "\n".join(lines) + "\n")


def cmd_coeffs(cfg: RunConfig) -> None:
    table, _, _ = build_form(cfg.form, cfg.limit, threads=cfg.threads)
    rows = [(n, float(table.values[n])) for n in range(1, cfg.limit + 1)]
    if cfg.fmt == "json":
        _emit_json(cfg, {
            "form": cfg.form.text,
            "limit": cfg.limit,
            "values": {str(n): v for n, v in rows},
        })
    else:
        _emit_csv(cfg, ["n", "lambda"], rows)


def cmd_moments(cfg: RunConfig) -> None:
    table, rule, _ = build_form(cfg.form, cfg.limit, threads=cfg.threads)
    sieve = build_factor_sieve(cfg.limit)
    R = parse_error_spec(cfg.r_spec)
    prime_limit = cfg.prime_limit or min(cfg.limit, 10**6)
    report = compare_moments(
        rule, cfg.kappa, R, list(cfg.xs), cfg.limit, sieve,
        prime_limit=prime_limit, table=table, threads=cfg.threads,
    )
    payload = report_to_dict(report)
    payload["form"] = cfg.form.text
    payload["R"] = cfg.r_spec
    if cfg.fmt == "json":
        _emit_json(cfg, payload)
    else:
        rows = [
            (p["x"], p["empirical"], p["predicted"], p["ratio"], p["error_envelope"])
            for p in payload["points"]
        ]
        _emit_csv(cfg, ["x", "empirical", "predicted", "ratio", "error_envelope"], rows)


def cmd_signs(cfg: RunConfig) -> None:
    table, _, _ = build_form(cfg.form, cfg.limit, threads=cfg.threads)
    points = []
    for x in cfg.xs:
        sc = count_signs(table, x)
        ch = count_sign_changes(table, x)
        point = {
            "x": x,
            "n_plus": sc.n_plus,
            "n_minus": sc.n_minus,
            "n_zero": sc.n_zero,
            "sign_changes": ch.changes,
        }
        if cfg.form.degree is not None and x > 1:
            bound = sign_count_lower_bound(cfg.form.degree, x)
            point["sign_count_lower_bound"] = bound
            point["bound_pass"] = min(sc.n_plus, sc.n_minus) >= bound
        points.append(point)
    if cfg.fmt == "json":
        _emit_json(cfg, {"form": cfg.form.text, "degree": cfg.form.degree,
                         "points": points})
    else:
        header = ["x", "n_plus", "n_minus", "n_zero", "sign_changes",
                  "sign_count_lower_bound", "bound_pass"]
        rows = [
            (p["x"], p["n_plus"], p["n_minus"], p["n_zero"], p["sign_changes"],
             p.get("sign_count_lower_bound", float("nan")),
             int(p.get("bound_pass", False)))
            for p in points
        ]
        _emit_csv(cfg, header, rows)


def cmd_diag_pnt(cfg: RunConfig) -> None:
    _, _, source = build_form(cfg.form, cfg.limit, threads=cfg.threads)
    sieve = build_factor_sieve(cfg.limit)
    points = []
    for x in cfg.xs:
        prime_sum, prime_ratio = pnt_prime_check(source, x, sieve)
        sq, signed = pnt_von_mangoldt_check(source, x, sieve)
        points.append({
            "x": x,
            "prime_sum": prime_sum,
            "prime_ratio": prime_ratio,
            "von_mangoldt_square_sum": sq,
            "von_mangoldt_square_ratio": sq / x,
            "von_mangoldt_signed_sum": signed,
            "von_mangoldt_signed_ratio": signed / x,
        })
    if cfg.fmt == "json":
        _emit_json(cfg, {"form": cfg.form.text, "points": points})
    else:
        header = list(points[0].keys())
        _emit_csv(cfg, header, [tuple(p[k] for k in header) for p in points])


def cmd_diag_hyph(cfg: RunConfig) -> None:
    _, _, source = build_form(cfg.form, cfg.limit, threads=cfg.threads)
    sieve = build_factor_sieve(cfg.limit)
    points = []
    prev = None
    increments = []
    for x in sorted(cfg.xs):
        v = hypothesis_h_partial(source, cfg.nu, x, sieve)
        single = hypothesis_h_partial(source, cfg.nu, x, sieve, single_log=True)
        point = {"x": x, "value": v, "single_log_value": single}
        if prev is not None:
            point["increment"] = v - prev
            increments.append(v - prev)
        points.append(point)
        prev = v
    decreasing = all(a > b for a, b in zip(increments, increments[1:]))
    payload = {
        "form": cfg.form.text,
        "nu": cfg.nu,
        "points": points,
        "increments_decreasing": bool(decreasing) if len(increments) >= 2 else None,
    }
    if cfg.fmt == "json":
        _emit_json(cfg, payload)
    else:
        header = ["x", "value", "single_log_value", "increment"]
        rows = [
            (p["x"], p["value"], p["single_log_value"], p.get("increment", float("nan")))
            for p in points
        ]
        _emit_csv(cfg, header, rows)


def cmd_diag_bounds(cfg: RunConfig) -> None:
    R = parse_error_spec(cfg.r_spec)
    branch, _ = classify_branch(R, list(cfg.zs)) if len(cfg.zs) >= 16 else (R.branch, [])
    raw = check_membership(R, list(cfg.zs))
    membership = {
        k: bool(v) for k, v in raw.items()
        if k in ("condition_a_monotone", "condition_a_bounded", "condition_b_lower", "ok")
    }
    rows = integral_bound_report(R, list(cfg.zs))
    if cfg.fmt == "json":
        payload = {
            "R": cfg.r_spec,
            "branch": R.branch,
            "classified_branch": branch,
            "membership": membership,
            "rows": [
                {"z": r.z, "c1": r.c1, "c2": r.c2, "c3": r.c3, "c4": r.c4}
                for r in rows
            ],
        }
        _emit_json(cfg, payload)
    else:
        _emit_csv(cfg, ["z", "c1", "c2", "c3", "c4"],
                  [(r.z, r.c1, r.c2, r.c3, r.c4) for r in rows])


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        cfg = resolve_config(args)
        if cfg.command == "coeffs":
            cmd_coeffs(cfg)
        elif cfg.command == "moments":
            cmd_moments(cfg)
        elif cfg.command == "signs":
            cmd_signs(cfg)
        elif cfg.command == "diag":
            if cfg.diag_kind == "pnt":
                cmd_diag_pnt(cfg)
            elif cfg.diag_kind == "hyp-h":
                cmd_diag_hyph(cfg)
            else:
                cmd_diag_bounds(cfg)
        return 0
    except CapacityError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3
    except (MembershipError, EvaluationError, FloatingPointError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 4
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
