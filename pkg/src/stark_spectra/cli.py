"""Command-line interface: ``stark-spectra {airy,spectrum,verify,oracle-compare}``.

Exit codes: 0 success, 1 verification or comparison check failed, 2 usage or
input error, 3 numerical failure (partial results are still written).
"""

from __future__ import annotations

import argparse
import csv
import datetime as dt
import io
import json
import math
import os
import re
import sys

import numpy as np

from . import __version__
from .airy import AiryZeroKind, airy, airy_zero
from .asymptotics import residual_report
from .errors import DomainError, NotIntegrableError, SpectrumError, StarkError
from .oracle import FdConfig, assemble, fd_norming, fd_spectrum
from .potential import parse_potential
from .spectra import BoundaryCondition, low_lying, spectrum
from .volterra import SolverConfig

EXIT_OK, EXIT_CHECK, EXIT_USAGE, EXIT_NUMERIC = 0, 1, 2, 3
THREADS_ENV = "STARK_SPECTRA_THREADS"

RECORD_KEYS = (
    "k", "bc", "lambda", "bracket_lo", "bracket_hi", "nu_inv_deriv", "nu_inv_norm",
    "consistency_gap", "predicted_lambda", "predicted_nu_inv", "boundary_residual",
)

_NUM = r"(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?"
_REAL = re.compile(rf"^[+-]?{_NUM}$")
_IMAG = re.compile(rf"^(?P<im>[+-]?(?:{_NUM})?)[ij]$")
_FULL = re.compile(rf"^(?P<re>[+-]?{_NUM})(?P<im>[+-](?:{_NUM})?)[ij]$")


VALUE_OPTIONS = ("--z", "--x-max", "--tol", "--nu-tol", "--term-tol", "--fd-length")


class UsageError(Exception):
    pass


# ---------------------------------------------------------------------------
# formatting


def fmt_float(v):
    v = float(v)
    if not math.isfinite(v):
        return "null"
    return "%.17g" % v


def to_json(obj):
    """Deterministic JSON: insertion-ordered keys, floats at 17 significant digits."""
    if isinstance(obj, dict):
        return "{" + ", ".join(f"{json.dumps(str(k))}: {to_json(v)}" for k, v in obj.items()) + "}"
    if isinstance(obj, (list, tuple)):
        return "[" + ", ".join(to_json(v) for v in obj) + "]"
    if isinstance(obj, (bool, np.bool_)) or obj is None:
        return json.dumps(None if obj is None else bool(obj))
    if isinstance(obj, (int, np.integer)):
        return str(int(obj))
    if isinstance(obj, (float, np.floating)):
        return fmt_float(obj)
    return json.dumps(str(obj))


def _unit(text):
    return {"": 1.0, "+": 1.0, "-": -1.0}.get(text) or float(text)


def parse_complex(text):
    """Parse ``a``, ``bi``, ``a+bi`` or ``a-bj`` with no embedded whitespace."""
    if _REAL.match(text):
        return complex(float(text), 0.0)
    if m := _IMAG.match(text):
        return complex(0.0, _unit(m.group("im")))
    if m := _FULL.match(text):
        return complex(float(m.group("re")), _unit(m.group("im")))
    raise UsageError(f"cannot parse complex number {text!r}")


def timestamp():
    epoch = os.environ.get("SOURCE_DATE_EPOCH")
    when = (
        dt.datetime.fromtimestamp(int(epoch), dt.timezone.utc)
        if epoch is not None
        else dt.datetime.now(dt.timezone.utc).replace(microsecond=0)
    )
    return when.isoformat().replace("+00:00", "Z")


def manifest(command, q=None, bc=None, config=None):
    return {
        "command": command,
        "potential": None if q is None else q.descriptor(),
        "bc": None if bc is None else bc.value,
        "config": config or {},
        "tool_version": __version__,
        "timestamp": timestamp(),
    }


def resolve_threads(arg):
    env = os.environ.get(THREADS_ENV)
    if env:
        try:
            n = int(env)
        except ValueError:
            raise UsageError(f"{THREADS_ENV} must be an integer, got {env!r}") from None
    else:
        n = arg if arg is not None else (os.cpu_count() or 1)
    if n < 1:
        raise UsageError("thread count must be >= 1")
    return n


# ---------------------------------------------------------------------------
# argument types


def _positive_int(text):
    try:
        v = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not an integer: {text!r}") from None
    if v < 1:
        raise argparse.ArgumentTypeError(f"must be >= 1, got {v}")
    return v


def _bc(text):
    try:
        return BoundaryCondition.parse(text)
    except ValueError:
        raise argparse.ArgumentTypeError("bc must be dirichlet or neumann") from None


def _potential(text):
    try:
        return parse_potential(text)
    except (DomainError, NotIntegrableError, OSError) as exc:
        raise argparse.ArgumentTypeError(str(exc)) from None


def _solver_config(args):
    kw = {}
    for name in ("x_max", "n_grid", "term_tol", "max_iter"):
        v = getattr(args, name, None)
        if v is not None:
            kw[name] = v
    try:
        cfg = SolverConfig(**kw)
    except (ValueError, DomainError) as exc:
        raise UsageError(str(exc)) from None
    return cfg


def _add_solver_options(p):
    g = p.add_argument_group("solver")
    g.add_argument("--x-max", dest="x_max", type=float, help="truncation point (default from z)")
    g.add_argument("--n-grid", dest="n_grid", type=_positive_int, help="approximate number of nodes")
    g.add_argument("--term-tol", dest="term_tol", type=float, help="Picard stopping tolerance")
    g.add_argument("--max-iter", dest="max_iter", type=_positive_int, help="Picard iteration cap")
    p.add_argument("--threads", type=_positive_int, help=f"worker threads (env {THREADS_ENV} wins)")


def _write(args, text):
    if getattr(args, "output", None):
        with open(args.output, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


# ---------------------------------------------------------------------------
# subcommands


def cmd_airy(args):
    if args.action == "eval":
        z = parse_complex(args.z)
        ai, aip, bi, bip = (complex(v) for v in airy(z))
        row = {"z": z.real, "z_im": z.imag}
        for name, v in (("ai", ai), ("ai_prime", aip), ("bi", bi), ("bi_prime", bip)):
            row[name] = v.real
            row[name + "_im"] = v.imag
        _write(args, to_json(row) + "\n")
    else:
        kind = AiryZeroKind(args.kind)
        lines = [to_json({"k": k, "kind": kind.value, "zero": airy_zero(k, kind)}) for k in args.k]
        _write(args, "\n".join(lines) + "\n")
    return EXIT_OK


def _records_csv(man, rows, failures):
    buf = io.StringIO()
    buf.write("# manifest: " + to_json(man) + "\n")
    for k, msg in failures:
        buf.write(f"# failed k={k}: {msg}\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(RECORD_KEYS + ("label",))
    for r in rows:
        d = r.as_dict()
        w.writerow([fmt_float(d[k]) if isinstance(d[k], float) else d[k] for k in RECORD_KEYS] + [r.label])
    return buf.getvalue()


def _records_jsonl(man, rows, failures):
    lines = [to_json({"manifest": man})]
    for r in rows:
        d = r.as_dict()
        if r.label != str(r.k):
            d["label"] = r.label
        lines.append(to_json(d))
    for k, msg in failures:
        lines.append(to_json({"failed_k": k, "error": msg}))
    return "\n".join(lines) + "\n"


def _run_spectrum(q, bc, k_min, k_max, cfg, threads):
    """(records, failures) where failures is a list of (k, message)."""
    try:
        return spectrum(q, bc, k_max, cfg, threads=threads, k_min=k_min), []
    except SpectrumError as exc:
        return exc.partial, [(k, str(e)) for k, e in sorted(exc.failures.items())]


def cmd_spectrum(args):
    cfg = _solver_config(args)
    threads = resolve_threads(args.threads)
    rows, failures = _run_spectrum(args.q, args.bc, 1, args.kmax, cfg, threads)
    if args.low_lying and not failures:
        try:
            rows = low_lying(args.q, args.bc, cfg) + rows
        except StarkError as exc:
            failures.append((0, str(exc)))
    man = manifest("spectrum", args.q, args.bc, {**cfg.as_dict(), "kmax": args.kmax})
    text = _records_csv(man, rows, failures) if args.out == "csv" else _records_jsonl(man, rows, failures)
    _write(args, text)
    if failures:
        for k, msg in failures:
            print(f"stark-spectra: k={k}: {msg}", file=sys.stderr)
        return EXIT_NUMERIC
    return EXIT_OK


def cmd_verify(args):
    if args.kmin >= args.kmax:
        raise UsageError("--kmin must be smaller than --kmax")
    cfg = _solver_config(args)
    threads = resolve_threads(args.threads)
    rows, failures = _run_spectrum(args.q, args.bc, args.kmin, args.kmax, cfg, threads)
    man = manifest("verify", args.q, args.bc, {**cfg.as_dict(), "kmin": args.kmin, "kmax": args.kmax})
    doc = {"manifest": man}
    status = EXIT_OK
    if rows:
        report = residual_report(rows)
        doc["report"] = report.as_dict()
        if not report.passed:
            status = EXIT_CHECK
    if failures:
        doc["failures"] = [{"k": k, "error": msg} for k, msg in failures]
        status = EXIT_NUMERIC
    _write(args, to_json(doc) + "\n")
    return status


def cmd_oracle_compare(args):
    cfg = _solver_config(args)
    threads = resolve_threads(args.threads)
    fd = FdConfig.default(args.kmax, args.q)
    if args.fd_length is not None or args.fd_n is not None:
        length = args.fd_length if args.fd_length is not None else fd.length
        n = args.fd_n if args.fd_n is not None else int(round(fd.n / fd.length * length))
        try:
            fd = FdConfig(length, n, args.kmax)
        except DomainError as exc:
            raise UsageError(str(exc)) from None
    rows, failures = _run_spectrum(args.q, args.bc, 1, args.kmax, cfg, threads)
    mat = assemble(args.q, args.bc, fd)
    lams = fd_spectrum(args.q, args.bc, fd, mat)
    table = []
    for r in rows:
        lam_fd = lams[r.k - 1]
        nu_fd = fd_norming(args.q, args.bc, fd, r.k, mat, lam_fd)
        table.append({
            "k": r.k,
            "lambda": r.lam,
            "lambda_fd": lam_fd,
            "lambda_gap": abs(r.lam - lam_fd),
            "nu_inv": r.nu_inv_deriv,
            "nu_inv_fd": nu_fd,
            "nu_inv_gap": abs(r.nu_inv_deriv - nu_fd),
        })
    max_lam = max((t["lambda_gap"] for t in table), default=math.nan)
    max_nu = max((t["nu_inv_gap"] for t in table), default=math.nan)
    ok = bool(table) and max_lam <= args.tol and max_nu <= args.nu_tol
    man = manifest("oracle-compare", args.q, args.bc, {**cfg.as_dict(), "fd": fd.as_dict()})
    doc = {
        "manifest": man,
        "rows": table,
        "max_lambda_gap": max_lam,
        "max_nu_inv_gap": max_nu,
        "tol": args.tol,
        "nu_tol": args.nu_tol,
        "passed": ok,
    }
    if failures:
        doc["failures"] = [{"k": k, "error": msg} for k, msg in failures]
    _write(args, to_json(doc) + "\n")
    if failures:
        return EXIT_NUMERIC
    return EXIT_OK if ok else EXIT_CHECK


# ---------------------------------------------------------------------------
# parser


def build_parser():
    parser = argparse.ArgumentParser(
        prog="stark-spectra",
        description="Eigenvalues and norming constants of -u'' + (x + q(x)) u on [0, oo).",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("airy", help="Airy function values and zeros")
    asub = p.add_subparsers(dest="action", required=True)
    pe = asub.add_parser("eval", help="Ai, Ai', Bi, Bi' at a complex point")
    pe.add_argument("--z", required=True, help="point, e.g. 1.5, -2+0.5i, 3j")
    pe.add_argument("--output", help="write to a file instead of stdout")
    pz = asub.add_parser("zero", help="k-th zero of Ai or Ai'")
    pz.add_argument("--k", required=True, type=_positive_int, nargs="+")
    pz.add_argument("--kind", choices=[k.value for k in AiryZeroKind], default="ai")
    pz.add_argument("--output", help="write to a file instead of stdout")
    p.set_defaults(func=cmd_airy)

    qhelp = "zero | exp:rate,amp | box:height,left,right | invsq:amp,shift | file:path.csv"

    p = sub.add_parser("spectrum", help="eigenvalues and norming constants for k = 1..kmax")
    p.add_argument("--bc", required=True, type=_bc)
    p.add_argument("--q", required=True, type=_potential, help=qhelp)
    p.add_argument("--kmax", required=True, type=_positive_int)
    p.add_argument("--out", choices=["json", "csv"], default="json")
    p.add_argument("--output", help="write to a file instead of stdout")
    p.add_argument("--low-lying", action="store_true", help="also scan below the first Airy bracket")
    _add_solver_options(p)
    p.set_defaults(func=cmd_spectrum)

    p = sub.add_parser("verify", help="asymptotic residual report over kmin..kmax")
    p.add_argument("--bc", required=True, type=_bc)
    p.add_argument("--q", required=True, type=_potential, help=qhelp)
    p.add_argument("--kmin", required=True, type=_positive_int)
    p.add_argument("--kmax", required=True, type=_positive_int)
    p.add_argument("--output", help="write to a file instead of stdout")
    _add_solver_options(p)
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("oracle-compare", help="compare against the finite-difference oracle")
    p.add_argument("--bc", required=True, type=_bc)
    p.add_argument("--q", required=True, type=_potential, help=qhelp)
    p.add_argument("--kmax", required=True, type=_positive_int)
    p.add_argument("--fd-length", type=float, help="FD truncation length")
    p.add_argument("--fd-n", type=_positive_int, help="FD interior nodes")
    p.add_argument("--tol", type=float, default=1e-4, help="eigenvalue gap tolerance")
    p.add_argument("--nu-tol", type=float, default=1e-3, help="norming-constant gap tolerance")
    p.add_argument("--output", help="write to a file instead of stdout")
    _add_solver_options(p)
    p.set_defaults(func=cmd_oracle_compare)
    return parser


def _attach_values(argv):
    # "--z -2+0.5i" would otherwise read the value as an option
    out = []
    for tok in argv:
        if out and out[-1] in VALUE_OPTIONS and tok.startswith("-") and tok[1:2] not in ("", "-"):
            out[-1] = f"{out[-1]}={tok}"
        else:
            out.append(tok)
    return out


def main(argv=None):
    parser = build_parser()
    argv = sys.argv[1:] if argv is None else list(argv)
    args = parser.parse_args(_attach_values(argv))
    try:
        return args.func(args)
    except UsageError as exc:
        parser.print_usage(sys.stderr)
        print(f"stark-spectra: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except StarkError as exc:
        print(f"stark-spectra: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
