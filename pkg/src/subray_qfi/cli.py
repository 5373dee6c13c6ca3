"""Command-line front end: ``subray-qfi <command> [flags]``.

Exit codes: 0 success, 1 failed validation, 2 invalid flags, 3 numerical failure.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from contextlib import contextmanager

import numpy as np

from . import __version__
from .analysis import (
    CLASSICAL_LABEL,
    EXPANSION_PREFACTOR,
    QUOTED_PREFACTOR,
    SweepTable,
    find_s_half,
    snr_scaling_fit,
    sweep_qfi,
)
from .errors import DomainError, NoCrossing, QuadratureNonConvergence
from .photostat import SourceScenario
from .psf import PointSpreadFunction, QuadratureConfig, functionals, load_table
from .qfi import classical_limit, cramer_rao_error, qfi_exact
from .validation import run_all

FORMAT_TAG = "# subray-qfi v1"
DEFAULT_ETA_VARIANTS = "0.01,0.1,1,5,20"
DEFAULT_SNR_VARIANTS = "inf,1000,100,10,1"
DEFAULT_SCALING_SNR = "100,1000,10000,100000"
NUMERIC_ERRORS = (DomainError, NoCrossing, QuadratureNonConvergence)


class NumericalFailure(Exception):
    pass


def fmt(value) -> str:
    """Nine significant digits; non-finite values as inf / -inf / nan."""
    value = float(value)
    if math.isnan(value):
        return "nan"
    if math.isinf(value):
        return "inf" if value > 0 else "-inf"
    return f"{value:.9g}"


def _label_num(value: float) -> str:
    return "inf" if math.isinf(value) else f"{value:g}"


def _json_num(value):
    value = float(value)
    return value if math.isfinite(value) else fmt(value)


def _positive(text: str) -> float:
    v = float(text)
    if not v > 0 or math.isnan(v):
        raise argparse.ArgumentTypeError(f"must be positive, got {text}")
    return v


def _non_negative(text: str) -> float:
    v = float(text)
    if not v >= 0 or math.isinf(v):
        raise argparse.ArgumentTypeError(f"must be finite and non-negative, got {text}")
    return v


def _snr(text: str) -> float:
    v = float(text)
    if not v > 0:
        raise argparse.ArgumentTypeError(f"SNR must be positive (or inf), got {text}")
    return v


def _float_list(text: str) -> list[float]:
    try:
        values = [float(t) for t in text.split(",") if t.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a comma-separated list of numbers: {text!r}") from None
    if not values:
        raise argparse.ArgumentTypeError("empty list")
    return values


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--eta-n", type=_non_negative, default=None,
                        help="mean detected photons per source (eta*N)")
    noise = common.add_mutually_exclusive_group()
    noise.add_argument("--epsilon", type=_non_negative, default=None, help="dark-count mean per mode")
    noise.add_argument("--snr", type=_snr, default=None, help="eta_n / epsilon; 'inf' means no noise")
    common.add_argument("--s", type=_non_negative, default=None, help="separation in units of x_R")
    common.add_argument("--xr", type=_positive, default=1.0, help="Rayleigh length")
    common.add_argument("--psf", default="gauss", help="gauss | gauss-paper | table:<path>")
    common.add_argument("--s-min", type=float, default=0.0, help="grid start (units of x_R)")
    common.add_argument("--s-max", type=float, default=6.0, help="grid end (units of x_R)")
    common.add_argument("--steps", type=int, default=601, help="grid points")
    common.add_argument("--fd-step", type=_positive, default=None,
                        help="finite-difference step in units of x_R (default 1e-5)")
    common.add_argument("--copies", type=int, default=1, help="copies for the Cramer-Rao error (point)")
    common.add_argument("--output-format", choices=("csv", "json"), default="csv")
    common.add_argument("--out", default=None, help="output file (default stdout)")
    common.add_argument("--variants", type=_float_list, default=None,
                        help="comma list: eta_n values (curve) or SNR values (noisy-curve, scaling)")

    parser = argparse.ArgumentParser(
        prog="subray-qfi",
        description="QFI and resolution limits for two incoherent thermal point sources.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("curve", parents=[common], help="normalized QFI vs s/x_R for several eta_n")
    sub.add_parser("noisy-curve", parents=[common], help="normalized QFI vs s/x_R for several SNR")
    sub.add_parser("s-half", parents=[common], help="half-maximum separation at one SNR")
    sub.add_parser("scaling", parents=[common], help="fit s_half against SNR")
    sub.add_parser("validate", parents=[common], help="run the cross-check battery")
    sub.add_parser("point", parents=[common], help="QFI breakdown at one separation")
    return parser


def _epsilon(args, eta_n: float) -> float:
    if args.epsilon is not None:
        return args.epsilon
    if args.snr is not None:
        return 0.0 if math.isinf(args.snr) else eta_n / args.snr
    return 0.0


def _resolve(parser, args):
    """Validate flag combinations before any computation; errors exit with code 2."""
    if args.steps < 2:
        parser.error("--steps must be >= 2")
    if not args.s_min < args.s_max:
        parser.error("--s-min must be < --s-max")
    if args.s_min < 0:
        parser.error("--s-min must be >= 0")
    if args.copies < 1:
        parser.error("--copies must be >= 1")
    if args.eta_n is not None and args.eta_n == 0 and args.command != "validate":
        parser.error("--eta-n must be positive")
    if args.variants is not None:
        if args.command == "curve" and any(not v > 0 or math.isinf(v) for v in args.variants):
            parser.error("eta_n variants must be finite and positive")
        if args.command in ("noisy-curve", "scaling") and any(not v > 0 for v in args.variants):
            parser.error("SNR variants must be positive")
        if args.command == "scaling" and any(math.isinf(v) for v in args.variants):
            parser.error("scaling needs finite SNR values")
    if args.command == "s-half" and args.epsilon is None and args.snr is None:
        args.snr = 100.0
    cfg = QuadratureConfig(fd_step=None if args.fd_step is None else args.fd_step * args.xr)
    psf_arg = args.psf
    try:
        if psf_arg == "gauss":
            psf = PointSpreadFunction.gaussian(args.xr)
        elif psf_arg == "gauss-paper":
            psf = PointSpreadFunction.gaussian_mixed(args.xr)
        elif psf_arg.startswith("table:"):
            psf = load_table(psf_arg[len("table:"):], args.xr)
        else:
            parser.error(f"unknown --psf {psf_arg!r}")
    except (OSError, ValueError) as exc:
        parser.error(f"cannot load PSF: {exc}")
    return psf, cfg


@contextmanager
def _output(path):
    if path is None:
        yield sys.stdout
    else:
        with open(path, "w", newline="") as fh:
            yield fh


def _meta_line(metadata: dict) -> str:
    return "# " + " ".join(f"{k}={v if isinstance(v, str) else fmt(v)}" for k, v in metadata.items())


def render_table(table: SweepTable, fmt_name: str) -> str:
    if fmt_name == "json":
        obj = {
            "parameter_label": table.parameter_label,
            "metadata": {k: v if isinstance(v, str) else _json_num(v) for k, v in table.metadata.items()},
            "series": [
                {"label": s.label, "points": [[_json_num(x), _json_num(y)] for x, y in zip(s.x, s.y)]}
                for s in table.series
            ],
        }
        return json.dumps(obj, indent=1) + "\n"
    lines = [FORMAT_TAG, _meta_line(table.metadata),
             ",".join(["s_over_xr"] + [f"qfi_norm_{s.label}" for s in table.series])]
    cols = [table.x] + [s.y for s in table.series]
    for row in zip(*cols):
        lines.append(",".join(fmt(v) for v in row))
    return "\n".join(lines) + "\n"


def render_record(metadata: dict, rows: list[tuple[str, object]], fmt_name: str) -> str:
    if fmt_name == "json":
        def conv(v):
            if isinstance(v, (list, tuple, np.ndarray)):
                return [conv(x) for x in v]
            return v if isinstance(v, str) else _json_num(v)

        return json.dumps({"metadata": {k: conv(v) for k, v in metadata.items()},
                           "values": {k: conv(v) for k, v in rows}}, indent=1) + "\n"
    lines = [FORMAT_TAG, _meta_line(metadata), "quantity,value"]
    for k, v in rows:
        if isinstance(v, (list, tuple, np.ndarray)):
            v = ";".join(fmt(x) for x in v)
        elif not isinstance(v, str):
            v = fmt(v)
        lines.append(f"{k},{v}")
    return "\n".join(lines) + "\n"


def _grid(args) -> np.ndarray:
    return np.linspace(args.s_min, args.s_max, args.steps) * args.xr


def _flag_failures(table: SweepTable) -> None:
    for s in table.series:
        bad = ~np.isfinite(s.y)
        if np.any(bad):
            raise NumericalFailure(f"series {s.label}: non-finite value at s/x_R = {fmt(s.x[np.argmax(bad)])}")


def cmd_curve(args, psf, cfg) -> str:
    if args.variants:
        eta_values = args.variants
    elif args.eta_n is not None:
        eta_values = [args.eta_n]
    else:
        eta_values = _float_list(DEFAULT_ETA_VARIANTS)
    eps = _epsilon(args, args.eta_n or eta_values[0])
    base = SourceScenario(args.eta_n or eta_values[0], eps, 0.0, args.xr)
    variants = [(f"etaN_{_label_num(v)}", {"eta_n": v, "epsilon": eps}) for v in eta_values]
    table = sweep_qfi(base, _grid(args), variants, psf, cfg)
    table.metadata["variants"] = "etaN:" + "|".join(_label_num(v) for v in eta_values)
    args._table = table
    return render_table(table, args.output_format)


def cmd_noisy_curve(args, psf, cfg) -> str:
    eta_n = args.eta_n if args.eta_n is not None else 0.01
    if args.variants:
        snr_values = args.variants
    elif args.snr is not None:
        snr_values = [args.snr]
    elif args.epsilon is not None:
        snr_values = [math.inf if args.epsilon == 0 else eta_n / args.epsilon]
    else:
        snr_values = _float_list(DEFAULT_SNR_VARIANTS)
    base = SourceScenario(eta_n, 0.0, 0.0, args.xr)
    variants = [(f"snr_{_label_num(v)}", {"epsilon": 0.0 if math.isinf(v) else eta_n / v})
                for v in snr_values]
    table = sweep_qfi(base, _grid(args), variants, psf, cfg)
    table.series[-1].label = "snr_to_0"
    table.metadata.pop("epsilon")
    table.metadata.pop("snr")
    table.metadata["variants"] = "snr:" + "|".join(_label_num(v) for v in snr_values)
    args._table = table
    return render_table(table, args.output_format)


def cmd_point(args, psf, cfg) -> str:
    eta_n = args.eta_n if args.eta_n is not None else 0.01
    eps = _epsilon(args, eta_n)
    s = (args.s if args.s is not None else 1.0) * args.xr
    f = functionals(psf, s, cfg)
    q = qfi_exact(eta_n, eps, f, args.xr)
    try:
        crb = cramer_rao_error(q.total, args.copies)
    except DomainError:
        crb = math.inf
    meta = {"eta_n": eta_n, "epsilon": eps, "psf": psf.kind.value, "xr": args.xr}
    rows = [
        ("s_over_xr", s / args.xr), ("delta", f.delta), ("gamma", f.gamma), ("delta_k2", f.delta_k2),
        ("prob_term", q.prob_term), ("op_term", q.op_term), ("total", q.total),
        ("normalized", q.normalized), ("classical_limit_norm", classical_limit(f) * args.xr**2),
        ("copies", args.copies), ("cramer_rao_error", crb),
    ]
    if q.degenerate:
        rows.append(("flag", "degenerate"))
    return render_record(meta, rows, args.output_format)


def cmd_s_half(args, psf, cfg) -> str:
    eta_n = args.eta_n if args.eta_n is not None else 0.01
    eps = _epsilon(args, eta_n)
    res = find_s_half(eta_n, eps, psf, cfg)
    xr = args.xr
    meta = {"eta_n": eta_n, "epsilon": eps, "snr": eta_n / eps if eps > 0 else math.inf,
            "psf": psf.kind.value, "xr": xr}
    rows = [("s_half_over_xr", res.s_half / xr), ("bracket_over_xr", [b / xr for b in res.bracket]),
            ("iterations", res.iterations)]
    if eps > 0:
        rows.append(("expansion_estimate_over_xr", EXPANSION_PREFACTOR / math.sqrt(eta_n / eps)))
    return render_record(meta, rows, args.output_format)


def cmd_scaling(args, psf, cfg) -> str:
    eta_n = args.eta_n if args.eta_n is not None else 0.01
    snr = args.variants or _float_list(DEFAULT_SCALING_SNR)
    fit = snr_scaling_fit(eta_n, snr, psf, cfg)
    meta = {"eta_n": eta_n, "psf": psf.kind.value, "xr": args.xr}
    rows = [
        ("exponent", fit.exponent),
        ("prefactor", fit.prefactor),
        ("expansion_prefactor", EXPANSION_PREFACTOR),
        ("quoted_prefactor", QUOTED_PREFACTOR),
        ("snr", fit.snr),
        ("s_half_over_xr", fit.s_half / args.xr),
    ]
    return render_record(meta, rows, args.output_format)


def cmd_validate(args, psf, cfg) -> str:
    checks = run_all(cfg)
    args._failed = sum(not c.passed for c in checks)
    lines = [c.line() for c in checks]
    lines.append(f"{len(checks) - args._failed}/{len(checks)} checks passed")
    return "\n".join(lines) + "\n"


COMMANDS = {
    "curve": cmd_curve,
    "noisy-curve": cmd_noisy_curve,
    "point": cmd_point,
    "s-half": cmd_s_half,
    "scaling": cmd_scaling,
    "validate": cmd_validate,
}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    psf, cfg = _resolve(parser, args)
    try:
        text = COMMANDS[args.command](args, psf, cfg)
    except NUMERIC_ERRORS as exc:
        print(f"subray-qfi: numerical failure: {exc}", file=sys.stderr)
        return 3
    with _output(args.out) as fh:
        fh.write(text)
    if args.command == "validate":
        return 1 if args._failed else 0
    table = getattr(args, "_table", None)
    if table is not None:
        try:
            _flag_failures(table)
        except NumericalFailure as exc:
            print(f"subray-qfi: numerical failure: {exc}", file=sys.stderr)
            return 3
    return 0


if __name__ == "__main__":
    sys.exit(main())
