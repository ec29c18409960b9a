"""Command-line front end.

Exit codes
----------
0   success (sweep: verdict nondecreasing; checks: all passed)
1   a verification ran but reported failures
10  sweep verdict strictly-decreasing-initially
11  sweep verdict mixed
12  certificate inconclusive (tail bound straddles zero)
64  usage error (bad flags, invalid measure or exponents, even q for a certificate)
65  numerical failure (non-convergence, grid or enumeration cap); JSON diagnostic on stderr

CSV columns: sweep ``t,Q,dQq_dt,route``; coeffs ``n,c_n,err``.  Other
commands emit JSON only.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from dataclasses import dataclass
from pathlib import Path

from . import __version__
from .blcheck import build_system, verify_hypotheses
from .errors import (
    CapExceeded,
    DomainTooWide,
    HeatmonoError,
    InconclusiveCertificate,
    NonConvergence,
    SweepPointError,
)
from .lattice import (
    certify_with_escalation,
    generate_params,
    verify_parity_lemma,
    verify_sign_structure,
    verify_star_lemma,
)
from .measure import DiscreteMeasure, ExponentPair, parse_exponent
from .spectral import (
    DECREASING_INITIALLY,
    MIXED,
    NONDECREASING,
    QuadratureControl,
    coefficient_table,
    linear_grid,
    log_grid,
    sweep,
)
from .spectral.control import TOL_ENV_VAR

EXIT_OK = 0
EXIT_CHECK_FAILED = 1
EXIT_DECREASING = 10
EXIT_MIXED = 11
EXIT_INCONCLUSIVE = 12
EXIT_USAGE = 64
EXIT_NUMERIC = 65

VERDICT_EXIT = {NONDECREASING: EXIT_OK, DECREASING_INITIALLY: EXIT_DECREASING, MIXED: EXIT_MIXED}
DEFAULT_R = {"A": 0.4, "B": 0.25}


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


@dataclass(frozen=True)
class RunConfig:
    command: str
    measure_source: str | None
    p: str
    q: str | None
    tmin: float
    tmax: float
    tcount: int
    tscale: str
    tol: float
    fmt: str
    out: str | None

    def __post_init__(self):
        if not self.tmin > 0 or not self.tmax > self.tmin:
            raise UsageError("need 0 < tmin < tmax")
        if self.tcount < 2:
            raise UsageError("tcount must be >= 2")
        if not self.tol > 0:
            raise UsageError("tolerance must be positive")

    def grid(self) -> list[float]:
        make = log_grid if self.tscale == "log" else linear_grid
        return make(self.tmin, self.tmax, self.tcount)


def _control(args) -> QuadratureControl:
    if args.tol is not None:
        if not args.tol > 0:
            raise UsageError("--tol must be positive")
        return QuadratureControl(rtol=args.tol)
    return QuadratureControl.from_env()


def _measure(args) -> tuple[DiscreteMeasure, str]:
    if args.measure and args.family:
        raise UsageError("give either --measure or --family, not both")
    if args.measure:
        text = args.measure.strip()
        if text.startswith("{"):
            return DiscreteMeasure.from_json(text), "inline"
        path = Path(text)
        if not path.exists():
            raise UsageError(f"--measure: no such file {text!r} (inline JSON must start with '{{')")
        return DiscreteMeasure.load(path), str(path)
    if args.family:
        gen_q = args.gen_q if args.gen_q is not None else args.q
        if gen_q is None:
            raise UsageError("--family needs --q (or --gen-q)")
        r = args.r if args.r is not None else DEFAULT_R[args.family]
        params = generate_params(parse_exponent(gen_q), family=args.family, r=r)
        return params.measure(), f"family:{args.family} q={gen_q} r={r}"
    raise UsageError("a measure is required: --measure <json|path> or --family A|B")


def _emit(args, payload: str) -> None:
    if args.out:
        Path(args.out).write_text(payload)
    else:
        sys.stdout.write(payload)
        if not payload.endswith("\n"):
            sys.stdout.write("\n")


def _dump(obj) -> str:
    return json.dumps(obj, indent=2) + "\n"


def cmd_sweep(args) -> int:
    ctrl = _control(args)
    mu, source = _measure(args)
    if args.q is None:
        raise UsageError("sweep needs --q")
    pq = ExponentPair(args.p, args.q)
    cfg = RunConfig("sweep", source, str(args.p), str(args.q), args.tmin, args.tmax, args.tcount,
                    args.tscale, ctrl.rtol, args.format, args.out)
    report = sweep(mu, pq, cfg.grid(), ctrl, workers=args.workers)
    if cfg.fmt == "csv":
        _emit(args, report.to_csv())
    else:
        data = report.to_dict()
        data["measure_source"] = source
        _emit(args, _dump(data))
    return VERDICT_EXIT[report.verdict]


def cmd_certificate(args) -> int:
    ctrl = _control(args)
    if args.q is None:
        raise UsageError("certificate needs --q")
    family = args.family or "A"
    r = args.r if args.r is not None else DEFAULT_R[family]
    params = generate_params(parse_exponent(args.q), family=family, r=r)
    signs = verify_sign_structure(params)
    report = {"parameters": params.to_dict(), "sign_structure": signs.to_dict()}
    try:
        cert = certify_with_escalation(params, K_start=args.kmax, K_limit=args.klimit)
    except InconclusiveCertificate as exc:
        report["certificate"] = {"value": exc.value, "tail_bound": exc.tail_bound, "conclusive": False}
        _emit(args, _dump(report))
        return EXIT_INCONCLUSIVE
    from .spectral import fourier_coefficient

    two_c1 = 2 * fourier_coefficient(params.measure(), params.q, 1, ctrl)
    allowed = cert.tail_bound + 1e-8
    agrees = abs(two_c1 - cert.value) <= allowed
    report["certificate"] = cert.to_dict()
    report["cross_check"] = {"two_c1_quadrature": two_c1, "difference": two_c1 - cert.value,
                             "allowed": allowed, "agrees": agrees}
    _emit(args, _dump(report))
    return EXIT_OK if (agrees and cert.negative and signs.passed) else EXIT_CHECK_FAILED


def cmd_lemmas(args) -> int:
    reports = []
    if (args.n - args.m) % 2 == 0:
        reports.append(verify_parity_lemma(args.m, args.n, args.kmax))
    reports.append(verify_star_lemma(args.m, args.n, args.kmax))
    _emit(args, _dump({"reports": [r.to_dict() for r in reports]}))
    return EXIT_OK if all(r.passed for r in reports) else EXIT_CHECK_FAILED


def cmd_blcheck(args) -> int:
    report = verify_hypotheses(build_system(args.k, args.d))
    _emit(args, report.to_json(indent=2) + "\n")
    return EXIT_OK if report.passed else EXIT_CHECK_FAILED


def cmd_coeffs(args) -> int:
    ctrl = _control(args)
    mu, _ = _measure(args)
    if args.q is None:
        raise UsageError("coeffs needs --q")
    q = parse_exponent(args.q)
    if args.nmax < 0:
        raise UsageError("--nmax must be >= 0")
    table = coefficient_table(mu, q, args.nmax, ctrl)
    _emit(args, table.to_csv() if args.format == "csv" else _dump(table.to_dict()))
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    exits = __doc__.split("Exit codes")[1].split("CSV columns")[0].strip("\n -")
    parser = _Parser(prog="heatmono", description="Heat-flow monotonicity of Fourier L^q norms.",
                     epilog="exit codes:\n" + exits.rstrip(),
                     formatter_class=argparse.RawDescriptionHelpFormatter)
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--tol", type=float, default=None,
                        help=f"relative quadrature tolerance (default from ${TOL_ENV_VAR}, else 1e-11)")
    common.add_argument("--out", default=None, help="write output to this file instead of stdout")

    measure = argparse.ArgumentParser(add_help=False)
    measure.add_argument("--measure", help='inline JSON {"dim":1,"atoms":[{"x":[0],"w":1}]} or a path')
    measure.add_argument("--family", choices=["A", "B"], help="generate the counterexample measure")
    measure.add_argument("--gen-q", default=None, help="q used to generate the family (default: --q)")
    measure.add_argument("--r", type=float, default=None, help="family weight r (default 0.4 for A, 0.25 for B)")

    s = sub.add_parser("sweep", parents=[common, measure], help="evaluate Q on a t-grid; verdict in exit code")
    s.add_argument("--q", required=False)
    s.add_argument("--p", default="1")
    s.add_argument("--tmin", type=float, default=1e-3)
    s.add_argument("--tmax", type=float, default=1e-1)
    s.add_argument("--tcount", type=int, default=50)
    s.add_argument("--tscale", choices=["log", "linear"], default="log")
    s.add_argument("--workers", type=int, default=1)
    s.add_argument("--format", choices=["json", "csv"], default="json")
    s.set_defaults(func=cmd_sweep)

    c = sub.add_parser("certificate", parents=[common], help="certify c_1 + c_-1 < 0 for a counterexample family")
    c.add_argument("--q", required=False)
    c.add_argument("--family", choices=["A", "B"], default="A")
    c.add_argument("--r", type=float, default=None)
    c.add_argument("--kmax", type=int, default=40, help="starting truncation K (doubled while inconclusive)")
    c.add_argument("--klimit", type=int, default=640)
    c.set_defaults(func=cmd_certificate)

    lm = sub.add_parser("lemmas", parents=[common], help="brute-force the emptiness lemmas for (m, n)")
    lm.add_argument("--m", type=int, required=True)
    lm.add_argument("--n", type=int, required=True)
    lm.add_argument("--kmax", type=int, default=20)
    lm.set_defaults(func=cmd_lemmas)

    b = sub.add_parser("blcheck", parents=[common], help="exact checks of the Brascamp-Lieb data")
    b.add_argument("--k", type=int, default=2)
    b.add_argument("--d", type=int, default=1)
    b.set_defaults(func=cmd_blcheck)

    co = sub.add_parser("coeffs", parents=[common, measure], help="Fourier coefficients of |mu_hat|^q")
    co.add_argument("--q", required=False)
    co.add_argument("--nmax", type=int, default=10)
    co.add_argument("--format", choices=["json", "csv"], default="csv")
    co.set_defaults(func=cmd_coeffs)
    return parser


def _diagnostic(exc: BaseException) -> str:
    cause = exc.cause if isinstance(exc, SweepPointError) else exc
    data = {"error": type(cause).__name__, "message": str(exc)}
    if isinstance(exc, SweepPointError):
        data.update(index=exc.index, t=exc.t)
    if isinstance(cause, NonConvergence):
        data.update(last_change=cause.last_change if cause.last_change is None or math.isfinite(cause.last_change)
                    else None, depth=cause.depth)
    return json.dumps(data)


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"heatmono: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (NonConvergence, DomainTooWide, CapExceeded, SweepPointError) as exc:
        print(_diagnostic(exc), file=sys.stderr)
        return EXIT_NUMERIC
    except (HeatmonoError, ValueError) as exc:
        # invalid measure, exponents, even q, non-coprime (m, n), bad ranges
        print(f"heatmono: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
