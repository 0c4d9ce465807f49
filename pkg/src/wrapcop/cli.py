"""Command-line interface.

Usage::

    wrapcop [--seed N] [--threads N] [--out PATH] [--format csv|json] COMMAND ...

Commands: ``sample``, ``density``, ``cdf``, ``concordance``,
``select-signature``, ``fit``, ``kde``, ``study`` and ``pipeline``.  Global
options may be given before or after the command.  Data go to ``--out`` or
standard output; the resolved configuration and log messages go to standard
error.  Exit status is 0 on success, 1 on a usage error and 2 on a data or
numerical error.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import os
import sys
from pathlib import Path
from typing import Any, Sequence

import numpy as np

from wrapcop.concordance import closed_form_concordance, oracle_concordance
from wrapcop.copula import CopulaModel, Signature
from wrapcop.exceptions import WrapcopError
from wrapcop.experiments import (
    StudyConfig,
    format_number,
    read_numeric_csv,
    run_data_pipeline,
    run_study,
)
from wrapcop.generator import frac
from wrapcop.inference import (
    fit_kde,
    fit_parametric,
    pseudo_observations,
    select_signature,
    wrapped_sums,
)

__all__ = ["main", "build_parser"]

log = logging.getLogger("wrapcop")

EXIT_OK, EXIT_USAGE, EXIT_DATA = 0, 1, 2


class UsageError(Exception):
    """Invalid command-line grammar."""

    def __init__(self, message: str, help_text: str = ""):
        super().__init__(message)
        self.help_text = help_text


class _StderrHandler(logging.Handler):
    """Writes to whatever ``sys.stderr`` is at the time of the record."""

    def emit(self, record):
        sys.stderr.write(self.format(record) + "\n")


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # argparse would exit with status 2
        raise UsageError(message, self.format_help())


# ---------------------------------------------------------------------------
# Parser
# ---------------------------------------------------------------------------
def _global_options(parser: argparse.ArgumentParser, suppress: bool) -> None:
    default = argparse.SUPPRESS if suppress else None
    parser.add_argument("--seed", type=int, default=argparse.SUPPRESS if suppress else 0,
                        help="random seed (default 0)")
    parser.add_argument("--threads", type=int, default=default,
                        help="worker threads (default: $WRAPCOP_THREADS or 1)")
    parser.add_argument("--out", type=Path, default=default,
                        help="output file (stdout when omitted)")
    parser.add_argument("--format", choices=("csv", "json"), default=default,
                        help="output format (default depends on the command)")


def _signature(text: str) -> Signature:
    try:
        bits = tuple(int(b) for b in text.replace(" ", "").split(","))
        return Signature(bits)
    except (ValueError, WrapcopError) as exc:
        raise argparse.ArgumentTypeError(f"invalid signature {text!r}: {exc}") from exc


def _point(text: str) -> list[float]:
    try:
        return [float(v) for v in text.split(",")]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"invalid point {text!r}") from exc


def _columns(text: str) -> list[str]:
    return [c.strip() for c in text.split(",")]


def build_parser() -> argparse.ArgumentParser:
    """The argument parser of the ``wrapcop`` command."""
    parser = _Parser(prog="wrapcop", description="Wrapped-sum copulas on the unit cube.")
    _global_options(parser, suppress=False)
    common = _Parser(add_help=False)
    _global_options(common, suppress=True)
    sub = parser.add_subparsers(dest="command", metavar="COMMAND", parser_class=_Parser)
    sub.required = True

    def add(name, help_text):
        return sub.add_parser(name, help=help_text, parents=[common], description=help_text)

    p = add("sample", "draw a sample from a copula model")
    p.add_argument("--model", type=Path, required=True, help="model JSON file")
    p.add_argument("--n", type=int, required=True, help="number of draws")

    for name, text in (("density", "evaluate the copula density"),
                       ("cdf", "evaluate the copula distribution function")):
        p = add(name, text)
        p.add_argument("--model", type=Path, required=True, help="model JSON file")
        p.add_argument("--point", type=_point, action="append", default=[],
                       help="comma-separated point; may be repeated")
        p.add_argument("--points", type=Path, help="CSV file of points, one per row")

    p = add("concordance", "Spearman's rho, Kendall's tau and xi of a bivariate model")
    p.add_argument("--model", type=Path, required=True, help="model JSON file")
    p.add_argument("--oracle", action="store_true",
                   help="also compute the brute-force quadrature values")

    p = add("select-signature", "choose the signature from data")
    p.add_argument("--data", type=Path, required=True, help="CSV file of observations")
    p.add_argument("--method", type=str.lower, choices=("ks", "cvm"), default="ks")

    p = add("fit", "maximum-likelihood fit of a generator family")
    p.add_argument("--data", type=Path, required=True, help="CSV file of observations")
    p.add_argument("--family", required=True,
                   help='family name, e.g. "Beta" or "Mixture(Beta,VonMises)"')
    p.add_argument("--signature", type=_signature,
                   help="comma-separated bits; selected by KS when omitted")
    p.add_argument("--shift", type=float, default=0.0,
                   help="shift added to the wrapped sums before fitting")
    p.add_argument("--starts", type=int, default=8, help="number of optimiser starts")

    p = add("kde", "kernel density estimate of the generator")
    p.add_argument("--data", type=Path, required=True, help="CSV file of observations")
    p.add_argument("--signature", type=_signature,
                   help="comma-separated bits; selected by KS when omitted")
    p.add_argument("--bandwidth", default="auto", help='positive number or "auto"')
    p.add_argument("--grid-size", type=int, default=200)
    p.add_argument("--circular", action="store_true", help="wrap the kernel around the circle")

    p = add("study", "run a simulation study")
    p.add_argument("--config", type=Path, required=True, help="study configuration JSON")
    p.add_argument("--manifest", type=Path, help="write the JSON manifest here")

    p = add("pipeline", "fit the bivariate model to a pair of angle columns")
    p.add_argument("--data", type=Path, required=True, help="CSV file of angles")
    p.add_argument("--angle-unit", default="radians_pm_pi",
                   choices=("radians_pm_pi", "radians_0_2pi", "unit_interval"))
    p.add_argument("--columns", type=_columns, default=["0", "1"],
                   help="two comma-separated column indices or names")
    p.add_argument("--delimiter", default=None, help="CSV delimiter (sniffed by default)")
    return parser


# ---------------------------------------------------------------------------
# Output helpers
# ---------------------------------------------------------------------------
def _csv_text(header: Sequence[str], rows: Sequence[Sequence[Any]]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([format_number(v) if isinstance(v, (float, np.floating)) else v
                         for v in row])
    return buf.getvalue()


def _json_text(obj: Any) -> str:
    return json.dumps(obj, indent=2, sort_keys=False) + "\n"


def _emit(args, text: str) -> None:
    if args.out is None:
        sys.stdout.write(text)
    else:
        args.out.write_text(text)
        log.info("wrote %s", args.out)


def _load_json(path: Path) -> Any:
    try:
        return json.loads(path.read_text())
    except (OSError, UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise WrapcopError(f"cannot read {path}: {exc}") from exc


def _load_model(path: Path) -> CopulaModel:
    return CopulaModel.from_dict(_load_json(path))


def _points(args, d: int) -> np.ndarray:
    pts = [list(p) for p in args.point]
    if args.points is not None:
        data, _ = read_numeric_csv(args.points)
        pts.extend(data.tolist())
    if not pts:
        raise UsageError("give at least one --point or a --points file")
    arr = np.asarray(pts, dtype=float)
    if arr.ndim != 2 or arr.shape[1] != d:
        raise WrapcopError(f"points must have {d} coordinates")
    return arr


def _observations(args):
    data, _ = read_numeric_csv(args.data, min_columns=2)
    return pseudo_observations(data)


# ---------------------------------------------------------------------------
# Commands
# ---------------------------------------------------------------------------
def _cmd_sample(args) -> None:
    model = _load_model(args.model)
    if args.n < 1:
        raise UsageError("--n must be positive")
    u = model.sample(args.seed, args.n)
    if args.format == "json":
        _emit(args, _json_text({"model": model.to_dict(), "sample": u.tolist()}))
    else:
        _emit(args, _csv_text([f"u{j + 1}" for j in range(model.d)], u.tolist()))


def _cmd_density(args) -> None:
    model = _load_model(args.model)
    pts = _points(args, model.d)
    vals = np.atleast_1d(model.density(pts))
    if args.format == "json":
        _emit(args, _json_text([{"point": p.tolist(), "density": float(v)}
                                for p, v in zip(pts, vals)]))
    else:
        header = [f"u{j + 1}" for j in range(model.d)] + ["density"]
        _emit(args, _csv_text(header, [[*p.tolist(), float(v)] for p, v in zip(pts, vals)]))


def _cmd_cdf(args) -> None:
    model = _load_model(args.model)
    pts = _points(args, model.d)
    out = [model.cdf_with_error(p) for p in pts]
    if args.format == "json":
        _emit(args, _json_text([{"point": p.tolist(), "cdf": v, "stderr": e}
                                for p, (v, e) in zip(pts, out)]))
    else:
        header = [f"u{j + 1}" for j in range(model.d)] + ["cdf", "stderr"]
        _emit(args, _csv_text(header, [[*p.tolist(), v, e] for p, (v, e) in zip(pts, out)]))


def _cmd_concordance(args) -> None:
    model = _load_model(args.model)
    reports = [closed_form_concordance(model)]
    if args.oracle:
        reports.append(oracle_concordance(model))
    if args.format == "csv":
        _emit(args, _csv_text(["source", "rho", "tau", "xi", "sign_factor"],
                              [[r.source, r.rho, r.tau, r.xi, r.sign_factor] for r in reports]))
    else:
        body = reports[0].to_dict() if len(reports) == 1 else [r.to_dict() for r in reports]
        _emit(args, _json_text(body))


def _cmd_select(args) -> None:
    report = select_signature(_observations(args), args.method)
    if args.format == "csv":
        rows = [[",".join(map(str, k)), v["KS"], v["CvM"], int(Signature(k) == report.chosen)]
                for k, v in report.statistic_per_candidate.items()]
        _emit(args, _csv_text(["signature", "KS", "CvM", "chosen"], rows))
    else:
        _emit(args, _json_text(report.to_dict()))


def _wrapped(args):
    pobs = _observations(args)
    sig = args.signature
    if sig is None:
        sig = select_signature(pobs, "KS").chosen
        log.info("selected signature %s", list(sig.bits))
    if sig.d != pobs.d:
        raise WrapcopError(f"signature has length {sig.d} but the data have {pobs.d} columns")
    return sig, wrapped_sums(pobs, sig)


def _cmd_fit(args) -> None:
    sig, y = _wrapped(args)
    y = frac(y + args.shift) if args.shift else y
    report = fit_parametric(y, args.family, signature=sig, shift=args.shift,
                            n_starts=args.starts, seed=args.seed)
    if args.format == "csv":
        params = ";".join(f"{k}={format_number(v)}" for k, v in report.params.items())
        _emit(args, _csv_text(
            ["generator", "parameters", "rho", "tau", "xi", "aic", "log_likelihood",
             "converged"],
            [[report.family, params, report.rho, report.tau, report.xi, report.aic,
              report.log_likelihood, int(report.converged)]]))
    else:
        body = report.to_dict()
        body["signature"] = list(sig.bits)
        _emit(args, _json_text(body))


def _cmd_kde(args) -> None:
    _, y = _wrapped(args)
    bw = args.bandwidth if args.bandwidth == "auto" else float(args.bandwidth)
    kde = fit_kde(y, bandwidth=bw, grid_size=args.grid_size, circular=args.circular)
    if args.format == "json":
        _emit(args, _json_text({"bandwidth": kde.bandwidth, "kernel": kde.kernel,
                                "modes": kde.modes().tolist(), "grid": kde.grid.tolist(),
                                "density": kde.values.tolist()}))
    else:
        _emit(args, _csv_text(["x", "density"], np.column_stack([kde.grid, kde.values]).tolist()))


def _cmd_study(args) -> None:
    data = _load_json(args.config)
    if not isinstance(data, dict):
        raise WrapcopError("the study configuration must be a JSON object")
    data.setdefault("seed", args.seed)
    cfg = StudyConfig.from_dict(data)
    result = run_study(cfg, threads=args.threads)
    if args.manifest is not None:
        args.manifest.write_text(_json_text(result.manifest()))
    if args.format == "json":
        _emit(args, _json_text({"manifest": result.manifest(), "rows": list(result.rows)}))
    else:
        _emit(args, result.to_csv())


def _cmd_pipeline(args) -> None:
    if len(args.columns) != 2:
        raise UsageError("--columns needs exactly two entries")
    result = run_data_pipeline(args.data, args.angle_unit, args.columns,
                               delimiter=args.delimiter, threads=args.threads, seed=args.seed)
    if args.format == "json":
        _emit(args, _json_text(result.to_dict()))
    else:
        _emit(args, result.fits_csv())


_COMMANDS = {
    "sample": (_cmd_sample, "csv"),
    "density": (_cmd_density, "csv"),
    "cdf": (_cmd_cdf, "csv"),
    "concordance": (_cmd_concordance, "json"),
    "select-signature": (_cmd_select, "json"),
    "fit": (_cmd_fit, "json"),
    "kde": (_cmd_kde, "csv"),
    "study": (_cmd_study, "csv"),
    "pipeline": (_cmd_pipeline, "csv"),
}


def _resolve(args) -> None:
    if args.threads is None:
        env = os.environ.get("WRAPCOP_THREADS", "1")
        try:
            args.threads = int(env)
        except ValueError as exc:
            raise UsageError(f"WRAPCOP_THREADS must be an integer, got {env!r}") from exc
    if args.threads < 1:
        raise UsageError("--threads must be at least 1")
    if args.format is None:
        args.format = _COMMANDS[args.command][1]


def _config_line(args) -> str:
    cfg = {k: (str(v) if isinstance(v, Path) else v) for k, v in vars(args).items()}
    cfg = {k: (list(v.bits) if isinstance(v, Signature) else v) for k, v in cfg.items()}
    return "wrapcop config: " + json.dumps(cfg, sort_keys=True, default=str)


def main(argv: Sequence[str] | None = None) -> int:
    """Run the command line; returns the exit status."""
    if not any(isinstance(h, _StderrHandler) for h in log.handlers):
        handler = _StderrHandler()
        handler.setFormatter(logging.Formatter("wrapcop: %(message)s"))
        log.addHandler(handler)
        log.setLevel(logging.INFO)
        log.propagate = False
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        _resolve(args)
    except UsageError as exc:
        sys.stderr.write(f"{exc.help_text}\nwrapcop: error: {exc}\n")
        return EXIT_USAGE
    except SystemExit as exc:  # --help
        return int(exc.code or 0)
    sys.stderr.write(_config_line(args) + "\n")
    try:
        _COMMANDS[args.command][0](args)
    except UsageError as exc:
        sys.stderr.write(f"wrapcop: error: {exc}\n")
        return EXIT_USAGE
    except (WrapcopError, OSError, ArithmeticError, ValueError) as exc:
        sys.stderr.write(f"wrapcop: error: {exc}\n")
        return EXIT_DATA
    return EXIT_OK


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
