"""Command-line interface.

Exit codes: 0 success, 1 infeasible input, 2 verification failure,
3 parse/schema error, 4 size cap exceeded.
"""

import argparse
from concurrent.futures import ThreadPoolExecutor
import logging
import sys

from . import __version__
from .averaging import average_simultaneous
from .errors import (
    BranchError,
    CertificateError,
    DomainError,
    InfeasibleError,
    NotAveragingError,
    NotPSDError,
    ParityError,
    ParseError,
    RankError,
    SchemaError,
    ShapeError,
    SizeError,
    StructureError,
    TraceError,
)
from .majorization import (
    compose_certificates,
    corner_reduction,
    corner_sum_certificate,
    cyclic_mean_certificate,
    sign_pinch_certificate,
    tau_scalar_certificate,
)
from .nilpotent import nilpotent_realization, shift_trace
from .pinching import constant_diagonal_unitary, optimize_block_pinching
from .projection_sums import (
    build_q_pm,
    fillmore_decompose,
    gp_bound,
    halve_two_projections,
    mu_bound,
    positive_combination,
    two_projection_form,
)
from .serialization import (
    DEFAULT_VERIFY_SCALE,
    certificate_file,
    certificate_text,
    load_certificate,
    loads_certificate,
    parse_matrix,
    to_majorization,
    verify_certificate,
)

OK, INFEASIBLE, VERIFY_FAILED, PARSE_ERROR, SIZE_CAP = 0, 1, 2, 3, 4

_INFEASIBLE = (
    InfeasibleError,
    TraceError,
    ParityError,
    NotAveragingError,
    BranchError,
    RankError,
    NotPSDError,
    StructureError,
    DomainError,
)


def _load(path):
    return parse_matrix(path).matrix


def _ranks(text):
    try:
        return [int(r) for r in text.split(",") if r.strip()]
    except ValueError:
        raise ParseError(f"cannot parse block ranks {text!r}") from None


def _finish(args, cert, summary, **extra):
    """Serialize, reload, re-verify and (optionally) write a certificate."""
    cf = certificate_file(cert, verify_scale=args.tol, **extra)
    text = certificate_text(cf)
    check = verify_certificate(loads_certificate(text))
    for line in summary:
        print(line)
    for key, value in check.residuals.items():
        status = "ok" if value <= check.thresholds[key] else "FAIL"
        print(f"  {key:<16} {value:.3e}  (<= {check.thresholds[key]:.1e})  {status}")
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(text)
        print(f"wrote {cf.kind} certificate to {args.out}")
    if not check.passed:
        print(f"verification failed: {', '.join(check.failures())}", file=sys.stderr)
        return VERIFY_FAILED
    return OK


def cmd_pinch(args):
    X = _load(args.matrix)
    if args.blocks:
        cert = optimize_block_pinching(X, _ranks(args.blocks), seed=args.seed)
    else:
        _, cert = constant_diagonal_unitary(X)
    summary = [f"pinching: {cert.order} blocks, target tau = {cert.target:.17g}"]
    if not cert.certified:
        _finish(args, cert, summary)
        print(f"no exact pinching found for blocks {args.blocks} (residual {cert.residual:.3e})", file=sys.stderr)
        return INFEASIBLE
    return _finish(args, cert, summary)


def cmd_average(args):
    Xs = [_load(p) for p in args.matrices]
    cert = average_simultaneous(Xs, max_k=args.max_k)
    return _finish(args, cert, [f"dixmier: {len(cert.matrices)} matrices, k = {cert.k} unitaries"])


def cmd_decompose(args):
    cert = fillmore_decompose(_load(args.matrix))
    return _finish(args, cert, [f"projection sum: {cert.count} projections"])


def cmd_combine(args):
    cert = positive_combination(_load(args.matrix))
    coeffs = ", ".join(f"{a:.6g}" for a in cert.coefficients)
    return _finish(args, cert, [f"positive combination: {len(cert.coefficients)} terms ({coeffs})"])


def cmd_nilpotent(args):
    X = _load(args.matrix)
    if args.shift_trace:
        X = shift_trace(X)
    real = nilpotent_realization(X)
    return _finish(args, real, ["nilpotent realization X = Z + Z*"], matrix=X)


def cmd_qpm(args):
    b = _load(args.b)
    V = _load(args.V)
    qm, qp, res = build_q_pm(b, V)
    cert = {"b": b, "V": V, "q_minus": qm, "q_plus": qp}
    return _finish(args, cert, [f"q_pm: identity residual {res:.3e}"])


def cmd_twoproj(args):
    E = _load(args.E)
    F = _load(args.F)
    form = two_projection_form(E, F)
    halves = halve_two_projections(E, F) if args.halve else None
    a, b, c, d, m = form.ranks
    summary = [f"two projections: E^F={a} E^F'={b} E'^F={c} E'^F'={d} generic pairs={m}"]
    return _finish(args, form, summary, halves=halves)


def cmd_majorize(args):
    sub = args.sub
    if sub == "pinch":
        B = _load(args.inputs[0])
        ranks = _ranks(args.blocks) if args.blocks else [1] * B.shape[0]
        cert = sign_pinch_certificate(B, ranks)
    elif sub == "cyclic":
        cert = cyclic_mean_certificate([_load(p) for p in args.inputs])
    elif sub == "corner":
        cert = corner_sum_certificate([_load(p) for p in args.inputs])
    elif sub == "scalar":
        cert = tau_scalar_certificate(_load(args.inputs[0]))
    elif sub == "compose":
        if len(args.inputs) != 2:
            raise ParseError("compose needs two certificate files")
        c1, c2 = (to_majorization(load_certificate(p)) for p in args.inputs)
        cert = compose_certificates(c1, c2)
    elif sub == "reduce":
        if len(args.inputs) != 2:
            raise ParseError("reduce needs a certificate file and a matrix file")
        c = to_majorization(load_certificate(args.inputs[0]))
        cert = corner_reduction(c, _load(args.inputs[1]))
    else:
        raise ParseError(f"unknown majorize subcommand {sub!r}")
    return _finish(args, cert, [f"majorization ({sub}): {cert.size} unitaries"])


def _verify_one(path):
    try:
        cf = load_certificate(path)
        return path, verify_certificate(cf), None
    except (ParseError, SchemaError, ShapeError, ValueError) as exc:
        return path, None, exc


def cmd_verify(args):
    if args.batch:
        with ThreadPoolExecutor() as pool:
            results = list(pool.map(_verify_one, args.certificates))
    else:
        results = [_verify_one(p) for p in args.certificates]
    code = OK
    for path, check, exc in results:
        if exc is not None:
            print(f"{path}: {exc}", file=sys.stderr)
            code = max(code, PARSE_ERROR)
            continue
        for msg in check.warnings:
            print(f"{path}: warning: {msg}", file=sys.stderr)
        status = "PASS" if check.passed else "FAIL"
        print(f"{path}: {check.kind} {status}")
        for key, value in check.residuals.items():
            print(f"  {key:<16} {value:.3e}  (<= {check.thresholds[key]:.1e})")
        if not check.passed and code < PARSE_ERROR:
            code = VERIFY_FAILED
    return code


def cmd_bound(args):
    if args.norm is None and args.invnorm is None and args.mu is None:
        raise ParseError("bound needs --norm and --invnorm, or --mu")
    if args.norm is not None or args.invnorm is not None:
        if args.norm is None or args.invnorm is None:
            raise ParseError("--norm and --invnorm go together")
        print(f"gp_bound = {gp_bound(args.norm, args.invnorm)}")
    if args.mu is not None:
        print(f"mu_bound = {mu_bound(args.mu)}")
    return OK


def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--tol", type=float, default=DEFAULT_VERIFY_SCALE,
                        help="verification scale: residual <= tol * n * (1 + ||input||_F)")
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("-o", "--out", help="write the certificate here")
    common.add_argument("--max-k", type=int, default=10**5, help="cap on the averaging family size")

    parser = argparse.ArgumentParser(prog="pinchcert", description="Matrix pinching and averaging certificates.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("pinch", parents=[common], help="trace-constant pinching")
    p.add_argument("matrix")
    p.add_argument("--blocks", help="comma-separated block ranks")
    p.set_defaults(func=cmd_pinch)

    p = sub.add_parser("average", parents=[common], help="simultaneous Dixmier averaging")
    p.add_argument("matrices", nargs="+")
    p.set_defaults(func=cmd_average)

    p = sub.add_parser("decompose", parents=[common], help="finite sum of projections")
    p.add_argument("matrix")
    p.set_defaults(func=cmd_decompose)

    p = sub.add_parser("combine", parents=[common], help="positive combination of projections")
    p.add_argument("matrix")
    p.set_defaults(func=cmd_combine)

    p = sub.add_parser("nilpotent", parents=[common], help="X = Z + Z* with Z nilpotent")
    p.add_argument("matrix")
    p.add_argument("--shift-trace", action="store_true", help="subtract tau(X) I first")
    p.set_defaults(func=cmd_nilpotent)

    p = sub.add_parser("qpm", parents=[common], help="q-plus/minus projections")
    p.add_argument("b")
    p.add_argument("V")
    p.set_defaults(func=cmd_qpm)

    p = sub.add_parser("twoproj", parents=[common], help="relative position of two projections")
    p.add_argument("E")
    p.add_argument("F")
    p.add_argument("--halve", action="store_true")
    p.set_defaults(func=cmd_twoproj)

    p = sub.add_parser("majorize", parents=[common], help="majorization certificates")
    p.add_argument("sub", choices=["pinch", "cyclic", "corner", "scalar", "compose", "reduce"])
    p.add_argument("inputs", nargs="+")
    p.add_argument("--blocks", help="block ranks for 'pinch'")
    p.set_defaults(func=cmd_majorize)

    p = sub.add_parser("verify", parents=[common], help="re-verify certificate files")
    p.add_argument("certificates", nargs="+")
    p.add_argument("--batch", action="store_true", help="check files concurrently")
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("bound", parents=[common], help="projection-count bounds")
    p.add_argument("--norm", type=float)
    p.add_argument("--invnorm", type=float)
    p.add_argument("--mu", type=float)
    p.set_defaults(func=cmd_bound)
    return parser


def run(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return PARSE_ERROR if exc.code else OK
    logging.basicConfig(level=logging.WARNING, format="%(levelname)s: %(message)s")
    try:
        return args.func(args)
    except SizeError as exc:
        print(f"size cap exceeded: {exc} (raise --max-k to override)", file=sys.stderr)
        return SIZE_CAP
    except (ParseError, SchemaError, ShapeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return PARSE_ERROR
    except CertificateError as exc:
        print(f"certificate error: {exc}", file=sys.stderr)
        return VERIFY_FAILED
    except _INFEASIBLE as exc:
        flag = getattr(exc, "flag", None)
        suffix = f" [failed flag: {flag}]" if flag else ""
        print(f"infeasible: {exc}{suffix}", file=sys.stderr)
        return INFEASIBLE
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return PARSE_ERROR


def main():
    sys.exit(run())


if __name__ == "__main__":
    main()
