"""Command-line front end.

Five subcommands drive the solvers end to end and write one rectangular table
per run, as CSV or JSON, to ``--out`` or standard output::

    fracslp ml -1e6 1+2j --alpha 1.5 --beta 2
    fracslp spectrum --alpha 1.6 --n 2
    fracslp decay --alpha 1.5 --n 15 --potential q2
    fracslp reconstruct --alpha 1.5 --n 8 --m 8 --potential q1 --out rec.csv
    fracslp cond --alpha 1.02 1.5 1.75 --n 5 8 10 15

Complex quantities are written as two real columns; every number uses
scientific notation with nine significant digits so that repeated runs are
byte-identical.  Exit codes: 0 success, 2 usage error, 3 incomplete spectrum,
4 inverse divergence.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import math
import os
import re
import sys
import tempfile
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import __version__
from .errors import FracSLPError, NewtonDiverged, RankDeficientJacobian
from .fivp import Mesh
from .inverse import (
    NEWTON_MAXITER,
    NEWTON_RTOL,
    build_frozen_jacobian,
    frozen_newton,
    reconstruction_error,
    sine_basis,
)
from .mlf import MLParams, eig_asymptotic, ml_branch, ml_eval
from .potentials import Potential, parse_potential
from .spectrum import SECANT_TOL, SEED_IMAG, asymptotic_indices, enumerate_spectrum

log = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_INCOMPLETE = 3
EXIT_DIVERGED = 4

PROFILE_POINTS = 1001


class UsageError(Exception):
    pass


@dataclass
class ResultTable:
    columns: list[str]
    rows: list[list] = field(default_factory=list)
    config: dict = field(default_factory=dict)
    summary: dict = field(default_factory=dict)

    def add(self, *values):
        if len(values) != len(self.columns):
            raise ValueError("row width does not match the header")
        self.rows.append(list(values))


def fmt(value) -> str:
    """Nine significant digits in scientific notation; ints and text verbatim."""
    if isinstance(value, (bool, np.bool_)):
        return str(bool(value)).lower()
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, str):
        return value
    if value is None:
        return ""
    v = float(value)
    if math.isnan(v):
        return "nan"
    if math.isinf(v):
        return "inf" if v > 0 else "-inf"
    return f"{v:.8e}"


def _json_value(value):
    if isinstance(value, (list, tuple)):
        return [_json_value(v) for v in value]
    if isinstance(value, dict):
        return {k: _json_value(v) for k, v in value.items()}
    if isinstance(value, (bool, np.bool_, str)) or value is None:
        return bool(value) if isinstance(value, np.bool_) else value
    if isinstance(value, (int, np.integer)):
        return int(value)
    v = float(value)
    return float(fmt(v)) if math.isfinite(v) else None


def render(table: ResultTable, kind: str) -> str:
    if kind == "json":
        body = {
            "config": _json_value(table.config),
            "columns": table.columns,
            "rows": [_json_value(r) for r in table.rows],
        }
        if table.summary:
            body["summary"] = _json_value(table.summary)
        return json.dumps(body, indent=1, sort_keys=False) + "\n"
    buf = io.StringIO()
    for key, value in table.config.items():
        buf.write(f"# {key}: {_echo(value)}\n")
    for key, value in table.summary.items():
        buf.write(f"# {key}: {_echo(value)}\n")
    writer = csv.writer(buf, lineterminator="\r\n", quoting=csv.QUOTE_MINIMAL)
    writer.writerow(table.columns)
    for row in table.rows:
        writer.writerow([fmt(v) for v in row])
    return buf.getvalue()


def _echo(value) -> str:
    if isinstance(value, (list, tuple)):
        return " ".join(_echo(v) for v in value)
    return fmt(value)


def write_output(text: str, out: str | None):
    """Write ``text`` atomically; a failed run never leaves a partial file."""
    if out is None or out == "-":
        sys.stdout.write(text)
        return
    path = Path(out)
    fd, tmp = tempfile.mkstemp(dir=path.parent or Path("."), prefix=f".{path.name}.")
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


# -- argument handling ---------------------------------------------------------


def _complex_arg(text: str) -> complex:
    try:
        return complex(text.replace(" ", "").replace("i", "j"))
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a complex number: {text!r}") from None


def _alpha_arg(text: str) -> float:
    try:
        if "/" in text:
            num, den = text.split("/", 1)
            value = float(num) / float(den)
        else:
            value = float(text)
    except (ValueError, ZeroDivisionError):
        raise argparse.ArgumentTypeError(f"not a number: {text!r}") from None
    return value


def _positive_float(text: str) -> float:
    try:
        value = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a number: {text!r}") from None
    if not value > 0:
        raise argparse.ArgumentTypeError("must be positive")
    return value


class _Parser(argparse.ArgumentParser):
    def __init__(self, *args, **kwargs):
        super().__init__(*args, **kwargs)
        # let "-1e6" and "-2+1j" through as positional values, not options
        self._negative_number_matcher = re.compile(r"^-(\d|\.\d)")

    def error(self, message):
        raise UsageError(f"{self.prog}: error: {message}")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="fracslp", description="Forward and inverse fractional Sturm-Liouville problems.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("-v", "--verbose", action="store_true", help="log solver progress to stderr")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def common(p, alpha_default=None):
        p.add_argument("--alpha", type=_alpha_arg, nargs="+", default=alpha_default,
                       required=alpha_default is None, help="order(s); fractions like 4/3 are accepted")
        p.add_argument("--out", default=None, help="output path (default: stdout)")
        p.add_argument("--format", choices=("csv", "json"), default="csv")

    def forward(p):
        p.add_argument("--potential", default="zero", help="zero | q1 | q2 | const:c | sine:c1,c2,.. | piecewise:file")
        p.add_argument("--coeffs", type=float, nargs="+", default=None, help="sine coefficients for --potential sine")
        p.add_argument("--h-forward", type=_positive_float, default=1e-3, help="forward mesh step")
        p.add_argument("--tol", type=_positive_float, default=None)
        p.add_argument("--maxiter", type=int, default=None)
        p.add_argument("--seed-imag", type=float, default=SEED_IMAG)

    p = sub.add_parser("ml", help="evaluate E_{alpha,beta}(z)")
    common(p)
    p.add_argument("--beta", type=_positive_float, default=1.0)
    p.add_argument("z", type=_complex_arg, nargs="+", help="arguments, e.g. 1, -1e6, 2+3j")

    p = sub.add_parser("spectrum", help="smallest eigenvalues with asymptotic predictions")
    common(p)
    forward(p)
    p.add_argument("--n", type=int, default=10)

    p = sub.add_parser("decay", help="remainders lambda_n(q) - lambda_n(0) - int q")
    common(p)
    forward(p)
    p.add_argument("--n", type=int, default=15)

    p = sub.add_parser("reconstruct", help="frozen Newton reconstruction from synthetic data")
    common(p)
    forward(p)
    p.add_argument("--n", type=int, default=8)
    p.add_argument("--m", type=int, default=None, help="number of sine modes (default: N)")
    p.add_argument("--h-inverse", type=_positive_float, default=1.25e-3, help="inversion mesh step")
    p.add_argument("--profile", default=None,
                   help="reconstruction profile path (default: next to --out with suffix _profile)")

    p = sub.add_parser("cond", help="condition numbers of the stacked frozen Jacobian")
    common(p)
    p.add_argument("--n", type=int, nargs="+", default=[5, 8, 10, 15], help="N = M values")
    p.add_argument("--h-forward", type=_positive_float, default=1e-3)
    return parser


def _check_alphas(alphas, lo=1.0, hi=2.0, closed_hi=False):
    for a in alphas:
        ok = lo < a < hi or (closed_hi and a == hi)
        if not ok:
            raise UsageError(f"alpha={a} outside ({lo}, {hi}{']' if closed_hi else ')'}")


def _mesh(h: float) -> Mesh:
    K = round(1.0 / h)
    if K < 2 or abs(K * h - 1.0) > 1e-9:
        raise UsageError(f"mesh step {h} must divide 1 into at least 2 cells")
    return Mesh(K)


def _potential(args) -> Potential:
    try:
        return parse_potential(args.potential, args.coeffs)
    except (ValueError, OSError, KeyError) as exc:
        raise UsageError(f"bad --potential: {exc}") from None


def _base_config(args) -> dict:
    cfg = {"command": args.command, "version": __version__, "numpy": np.__version__}
    for key, value in sorted(vars(args).items()):
        if key in ("command", "verbose", "out", "format"):
            continue
        cfg[key] = value
    return cfg


# -- subcommands -----------------------------------------------------------


def cmd_ml(args) -> tuple[ResultTable, int]:
    _check_alphas(args.alpha, 0.0, 2.0, closed_hi=True)
    table = ResultTable(["alpha", "beta", "z_re", "z_im", "value_re", "value_im", "branch"], config=_base_config(args))
    table.config["z"] = [f"{fmt(z.real)}{'+' if z.imag >= 0 else '-'}{fmt(abs(z.imag))}j" for z in args.z]
    for a in args.alpha:
        params = MLParams(a, args.beta)
        for z in args.z:
            v = ml_eval(params, z)
            table.add(a, args.beta, z.real, z.imag, v.real, v.imag, ml_branch(a, z))
    return table, EXIT_OK


def _spectrum_kwargs(args) -> dict:
    kw = {"seed_imag": args.seed_imag, "strict": False}
    if args.tol is not None:
        kw["tol"] = args.tol
    if args.maxiter is not None:
        kw["maxiter"] = args.maxiter
    return kw


def _report_gaps(alpha, missing):
    print(f"incomplete spectrum at alpha={alpha:g}: missing ranks {list(missing)}", file=sys.stderr)


def cmd_spectrum(args) -> tuple[ResultTable, int]:
    _check_alphas(args.alpha)
    if args.n < 1:
        raise UsageError("--n must be at least 1")
    q = _potential(args)
    mesh = _mesh(args.h_forward)
    cols = ["alpha", "n", "lambda_re", "lambda_im", "abs_lambda", "arg_lambda",
            "predicted_abs", "predicted_arg", "residual", "iterations"]
    table = ResultTable(cols, config=_base_config(args))
    table.config["K_forward"] = mesh.K
    code = EXIT_OK
    for a in args.alpha:
        spec = enumerate_spectrum(q, a, args.n, mesh, **_spectrum_kwargs(args))
        if spec.missing:
            _report_gaps(a, spec.missing)
            code = EXIT_INCOMPLETE
        indices = asymptotic_indices(spec.eigenvalues)
        for pair, idx in zip(spec.pairs, indices):
            lam = pair.lam
            mag, ph = eig_asymptotic(a, int(idx)) if idx > 0 else (math.nan, math.nan)
            table.add(a, pair.index, lam.real, lam.imag, abs(lam), np.angle(lam), mag, ph, pair.residual, pair.iterations)
    return table, code


def cmd_decay(args) -> tuple[ResultTable, int]:
    _check_alphas(args.alpha)
    if args.n < 1:
        raise UsageError("--n must be at least 1")
    q = _potential(args)
    mesh = _mesh(args.h_forward)
    table = ResultTable(["alpha", "n", "c_re", "c_im", "abs_c"], config=_base_config(args))
    table.config["K_forward"] = mesh.K
    table.config["integral_q"] = q.mean
    code = EXIT_OK
    for a in args.alpha:
        lq = enumerate_spectrum(q, a, args.n, mesh, **_spectrum_kwargs(args))
        l0 = enumerate_spectrum(Potential.zero(), a, args.n, mesh, **_spectrum_kwargs(args))
        missing = sorted(set(lq.missing) | set(l0.missing))
        if missing:
            _report_gaps(a, missing)
            code = EXIT_INCOMPLETE
        for n, (x, y) in enumerate(zip(lq.eigenvalues, l0.eigenvalues), start=1):
            c = x - y - q.mean
            table.add(a, n, c.real, c.imag, abs(c))
    return table, code


def _profile_path(args) -> str | None:
    if args.profile:
        return args.profile
    if args.out and args.out != "-":
        p = Path(args.out)
        return str(p.with_name(p.stem + "_profile" + p.suffix))
    return None


def cmd_reconstruct(args) -> tuple[ResultTable, int]:
    _check_alphas(args.alpha)
    M = args.n if args.m is None else args.m
    if not args.n >= M >= 1:
        raise UsageError("need N >= M >= 1")
    q = _potential(args)
    fwd, inv = _mesh(args.h_forward), _mesh(args.h_inverse)
    rtol = args.tol if args.tol is not None else NEWTON_RTOL
    maxiter = args.maxiter if args.maxiter is not None else NEWTON_MAXITER
    table = ResultTable(["alpha", "iteration", "residual", "error"], config=_base_config(args))
    table.config.update(K_forward=fwd.K, K_inverse=inv.K, M=M)
    code = EXIT_OK
    x = np.linspace(0.0, 1.0, PROFILE_POINTS)
    profile = ResultTable(["x", "q_true"] + [f"q_rec_alpha_{a:.6g}" for a in args.alpha], config=dict(table.config))
    profile_cols = [x, q(x)]
    for a in args.alpha:
        data = enumerate_spectrum(q, a, args.n, fwd, seed_imag=args.seed_imag, strict=False)
        if data.missing:
            _report_gaps(a, data.missing)
            return table, EXIT_INCOMPLETE
        try:
            coeffs, report = frozen_newton(data.eigenvalues, a, M, inv, maxiter=maxiter, rtol=rtol, q_true=q)
        except NewtonDiverged as exc:
            report, coeffs = exc.report, exc.q_coeffs
            print(f"frozen Newton diverged at alpha={a:g}", file=sys.stderr)
            code = EXIT_DIVERGED
        except RankDeficientJacobian as exc:
            print(str(exc), file=sys.stderr)
            return table, EXIT_DIVERGED
        for it, (r, e) in enumerate(zip(report.residuals, report.errors)):
            table.add(a, it, r, e)
        key = f"alpha_{a:.6g}"
        table.summary[f"{key}_coefficients"] = list(coeffs)
        table.summary[f"{key}_final_error"] = reconstruction_error(q, coeffs)
        table.summary[f"{key}_converged"] = bool(report.converged)
        profile_cols.append(sine_basis(M, x) @ coeffs)
        if code == EXIT_DIVERGED:
            break
    while len(profile_cols) < len(profile.columns):
        profile_cols.append(np.full(x.size, np.nan))
    for row in zip(*profile_cols):
        profile.add(*row)
    path = _profile_path(args)
    if path is not None:
        write_output(render(profile, args.format), path)
    return table, code


def cmd_cond(args) -> tuple[ResultTable, int]:
    _check_alphas(args.alpha)
    if any(n < 1 for n in args.n):
        raise UsageError("--n values must be at least 1")
    mesh = _mesh(args.h_forward)
    table = ResultTable(["alpha", "N", "M", "condition", "rank"], config=_base_config(args))
    table.config["K_forward"] = mesh.K
    for a in args.alpha:
        for n in args.n:
            J = build_frozen_jacobian(a, n, n, mesh)
            s = np.linalg.svd(J.stacked, compute_uv=False)
            rank = int(np.sum(s > s[0] * max(J.stacked.shape) * np.finfo(float).eps))
            table.add(a, n, n, J.condition_number, rank)
    return table, EXIT_OK


COMMANDS = {
    "ml": cmd_ml,
    "spectrum": cmd_spectrum,
    "decay": cmd_decay,
    "reconstruct": cmd_reconstruct,
    "cond": cmd_cond,
}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except UsageError as exc:
        print(exc, file=sys.stderr)
        return EXIT_USAGE
    except SystemExit as exc:  # --help and --version
        return int(exc.code or 0)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, stream=sys.stderr)
    try:
        table, code = COMMANDS[args.command](args)
    except UsageError as exc:
        print(f"fracslp {args.command}: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (ValueError, FracSLPError) as exc:
        print(f"fracslp {args.command}: {exc}", file=sys.stderr)
        return EXIT_USAGE if isinstance(exc, ValueError) and not isinstance(exc, FracSLPError) else 1
    write_output(render(table, args.format), args.out)
    return code


if __name__ == "__main__":
    sys.exit(main())
