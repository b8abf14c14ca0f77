"""``qfim`` command-line front end.

Exit codes:
    0   success (check-invertibility: jointly estimable)
    2   invalid flags, unparseable config, wrong parameter count
    3   parameter point outside the model domain
    4   output file could not be written
    10  check-invertibility: not jointly estimable
    11  check-invertibility: indeterminate
    12  combine: QFIM has full rank, no reduction needed
    13  combine: QFIM is zero, nothing is estimable
"""

from __future__ import annotations

import argparse
import csv
import io
import itertools
import json
import logging
import math
import os
import sys
import tempfile
from collections import Counter
from dataclasses import dataclass, field
from typing import Any, Optional

import numpy as np

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

from qubitqfim.diff import DiffConfig
from qubitqfim.expr import GRAMMAR_HELP, Expression, ExpressionError, split_top_level
from qubitqfim.invertibility import (
    COND_TOL,
    DET_TOL,
    INDETERMINATE,
    JOINTLY_ESTIMABLE,
    NOT_JOINTLY_ESTIMABLE,
    ArityError,
    FullRankError,
    NoEstimableCombinationError,
    check_condition,
    estimable_combination,
)
from qubitqfim.linalg import DomainError
from qubitqfim.models import BlochModel, DissipativeQubitModel, EigenModel, ParamPoint
from qubitqfim.qfim import (
    QFIM_ROUTES,
    RANK_TOL,
    QfimResult,
    make_result,
    cr_bound,
    qfim_sld,
)

log = logging.getLogger("qubitqfim")

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_DOMAIN = 3
EXIT_WRITE = 4
EXIT_NOT_ESTIMABLE = 10
EXIT_INDETERMINATE = 11
EXIT_FULL_RANK = 12
EXIT_NO_COMBINATION = 13

VERDICT_EXIT = {
    JOINTLY_ESTIMABLE: EXIT_OK,
    NOT_JOINTLY_ESTIMABLE: EXIT_NOT_ESTIMABLE,
    INDETERMINATE: EXIT_INDETERMINATE,
}

NA = "n/a"
SIG_DIGITS = 12


class ConfigError(ValueError):
    pass


class UsageError(ValueError):
    pass


@dataclass
class Tolerances:
    cond_tol: float = COND_TOL
    det_tol: float = DET_TOL
    rank_tol: float = RANK_TOL


@dataclass
class ScanConfig:
    model_kind: str
    model_constants: dict[str, Any]
    axes: dict[str, list[float]]
    diff: DiffConfig = field(default_factory=DiffConfig)
    tolerances: Tolerances = field(default_factory=Tolerances)
    format: str = "csv"
    path: Optional[str] = None


def fmt(value: Any) -> Any:
    """Round floats to 12 significant digits; pass strings and ints through."""
    if isinstance(value, (bool, str)) or value is None:
        return value
    if isinstance(value, (int, np.integer)):
        return int(value)
    value = float(value)
    if not math.isfinite(value):
        return NA
    return float(format(value, f".{SIG_DIGITS}g"))


def fmt_text(value: Any) -> str:
    value = fmt(value)
    if isinstance(value, float):
        return format(value, f".{SIG_DIGITS}g")
    return str(value)


# model construction


def build_model(kind: str, constants: dict[str, Any]):
    if kind == "dissipative":
        return DissipativeQubitModel(
            time=float(constants.get("t", 1.0)), omega=float(constants.get("omega", 0.0))
        )
    if kind == "eigen":
        if constants.get("lambda") is None or constants.get("h") is None:
            raise UsageError("eigen model needs lambda and h expressions")
        return EigenModel(
            Expression(constants["lambda"]),
            Expression(constants["h"]),
            float(constants.get("theta0", 0.0)),
        )
    if kind == "bloch":
        w = constants.get("w")
        if w is None:
            raise UsageError("bloch model needs three w expressions")
        if isinstance(w, str):
            w = split_top_level(w)
        if len(w) != 3:
            raise UsageError(f"bloch model needs three w expressions, got {len(w)}")
        return BlochModel.from_strings(*w)
    raise UsageError(f"unknown model {kind!r}")


def build_point(kind: str, values: dict[str, float]) -> ParamPoint:
    if kind == "dissipative":
        missing = {"gamma", "x"} - set(values)
        if missing:
            raise UsageError(f"dissipative model needs parameters gamma and x; missing {sorted(missing)}")
        return ParamPoint(("gamma", "x"), (values["gamma"], values["x"]))
    if not values:
        raise UsageError("no parameter values given")
    return ParamPoint(tuple(values), tuple(values.values()))


# evaluation


def evaluate_point(model, point: ParamPoint, diff: DiffConfig, tol: Tolerances) -> dict[str, Any]:
    """Compute one report row plus the objects it was derived from."""
    if len(point) == 2:
        verdict = check_condition(model, point, diff, tol.cond_tol, tol.det_tol, tol.rank_tol)
        F = verdict.qfim
        condition_value, verdict_name = verdict.condition_value, verdict.verdict
    else:
        verdict = None
        F = qfim_sld(model, point, diff, tol.rank_tol)
        condition_value, verdict_name = NA, NA
    bound = cr_bound(F, tol.rank_tol)

    combo = None
    if F.n == 2 and F.rank == 1:
        combo = estimable_combination(F, point, tol.rank_tol)

    row: dict[str, Any] = dict(point.as_dict())
    for i in range(F.n):
        for j in range(i, F.n):
            row[f"F{i + 1}{j + 1}"] = F.F[i, j]
    row.update(
        det=F.det,
        rank=F.rank,
        condition_value=condition_value,
        verdict=verdict_name,
        trace_bound=bound.trace_bound,
        qfi_max=combo.qfi_values[0] if combo else NA,
        qfi_min=combo.qfi_values[1] if combo else NA,
        direction_1=combo.direction[0] if combo else NA,
        direction_2=combo.direction[1] if combo else NA,
    )
    return {
        "row": {k: fmt(v) for k, v in row.items()},
        "qfim": F,
        "bound": bound,
        "verdict": verdict,
        "combination": combo,
    }


def _matrix(a: Optional[np.ndarray]):
    return None if a is None else [[fmt(v) for v in r] for r in np.asarray(a)]


def compute_report(model, point, diff, tol, routes=("sld",)) -> dict[str, Any]:
    ev = evaluate_point(model, point, diff, tol)
    F: QfimResult = ev["qfim"]
    out: dict[str, Any] = {
        "parameters": {k: fmt(v) for k, v in point.as_dict().items()},
        "names": list(point.names),
        "F": _matrix(F.F),
        "F_classical": _matrix(F.F_classical),
        "F_quantum": _matrix(F.F_quantum),
        "eigenvalues": [fmt(v) for v in F.eigenvalues],
        "det": fmt(F.det),
        "rank": F.rank,
        "trace_bound": fmt(ev["bound"].trace_bound),
        "condition_number": fmt(ev["bound"].condition_number),
        "condition_value": ev["row"]["condition_value"],
        "verdict": ev["row"]["verdict"],
        "notes": ev["verdict"].notes if ev["verdict"] else "",
    }
    if len(routes) > 1 or routes[0] != "sld":
        out["routes"] = {name: _matrix(QFIM_ROUTES[name](model, point, diff).F) for name in routes}
    combo = ev["combination"]
    out["combination"] = (
        None
        if combo is None
        else {
            "direction": [fmt(v) for v in combo.direction],
            "qfi": fmt(combo.qfi_values[0]),
            "description": combo.combined_parameter_description,
        }
    )
    out["row"] = ev["row"]
    return out


# output


def rows_to_csv(rows: list[dict[str, Any]]) -> str:
    buf = io.StringIO()
    writer = csv.DictWriter(buf, fieldnames=list(rows[0]) if rows else [])
    writer.writeheader()
    for row in rows:
        writer.writerow({k: fmt_text(v) for k, v in row.items()})
    return buf.getvalue()


def rows_to_json(rows: list[dict[str, Any]]) -> str:
    return json.dumps(rows, indent=2) + "\n"


def write_atomic(path: str, text: str) -> None:
    """Write via a temporary file in the target directory, then rename."""
    directory = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".qfim-", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def format_text_report(report: dict[str, Any]) -> str:
    names = report["names"]
    width = max(len(n) for n in names)
    lines = ["point:"]
    lines += [f"  {n:<{width}} = {fmt_text(v)}" for n, v in report["parameters"].items()]
    lines.append(f"QFIM (sld), order ({', '.join(names)}):")
    for r in report["F"]:
        lines.append("  " + "  ".join(f"{fmt_text(v):>20}" for v in r))
    for name, F in report.get("routes", {}).items():
        lines.append(f"QFIM ({name}):")
        for r in F:
            lines.append("  " + "  ".join(f"{fmt_text(v):>20}" for v in r))
    for key in ("det", "rank", "trace_bound", "condition_number", "condition_value", "verdict"):
        lines.append(f"{key:<16} {fmt_text(report[key])}")
    combo = report["combination"]
    if combo:
        lines.append(f"{'combination':<16} {combo['description']}")
        lines.append(f"{'combination_qfi':<16} {fmt_text(combo['qfi'])}")
    return "\n".join(lines) + "\n"


# config


def _axis_values(name: str, spec: Any) -> list[float]:
    if not isinstance(spec, dict):
        raise ConfigError(f"parameter {name!r} must be a table")
    if "values" in spec:
        values = [float(v) for v in spec["values"]]
        if not values:
            raise ConfigError(f"parameter {name!r} has an empty value list")
        return values
    try:
        lo, hi, count = float(spec["min"]), float(spec["max"]), int(spec["count"])
    except (KeyError, TypeError, ValueError) as exc:
        raise ConfigError(f"parameter {name!r} needs min, max and count (or values): {exc}") from None
    if count < 1:
        raise ConfigError(f"parameter {name!r}: count must be >= 1")
    if lo > hi:
        raise ConfigError(f"parameter {name!r}: min exceeds max")
    if count == 1:
        return [lo]
    return [float(v) for v in np.linspace(lo, hi, count)]


def load_config(path: str) -> ScanConfig:
    try:
        with open(path, "rb") as fh:
            raw = tomllib.load(fh)
    except (OSError, tomllib.TOMLDecodeError) as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from None
    try:
        model = dict(raw["model"])
        kind = model.pop("kind")
        params = raw["parameters"]
    except (KeyError, TypeError) as exc:
        raise ConfigError(f"config is missing section/key {exc}") from None
    axes = {name: _axis_values(name, spec) for name, spec in params.items()}
    if len(axes) != 2:
        raise ConfigError(f"scan needs exactly two parameter axes, got {len(axes)}")
    try:
        diff = DiffConfig(**raw.get("diff", {}))
        tolerances = Tolerances(**raw.get("tolerances", {}))
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"bad diff/tolerances section: {exc}") from None
    outputs = raw.get("outputs", {})
    fmt_name = outputs.get("format", "csv")
    if fmt_name not in ("csv", "json"):
        raise ConfigError(f"outputs.format must be csv or json, got {fmt_name!r}")
    return ScanConfig(kind, model, axes, diff, tolerances, fmt_name, outputs.get("path"))


def run_scan(cfg: ScanConfig) -> list[dict[str, Any]]:
    model = build_model(cfg.model_kind, cfg.model_constants)
    names = list(cfg.axes)
    rows = []
    for combo in itertools.product(*cfg.axes.values()):
        point = build_point(cfg.model_kind, dict(zip(names, combo)))
        rows.append(evaluate_point(model, point, cfg.diff, cfg.tolerances)["row"])
    return rows


# argument parsing


def _model_parent() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(add_help=False)
    g = p.add_argument_group("model")
    g.add_argument("--model", choices=["dissipative", "eigen", "bloch"], default="dissipative")
    g.add_argument("--x", type=float, help="parameter x (dissipative: initial excited population)")
    g.add_argument("--y", type=float, help="parameter y (eigen and bloch models)")
    g.add_argument("--gamma", type=float, help="decay rate (dissipative)")
    g.add_argument("--t", type=float, default=1.0, help="evolution time (dissipative)")
    g.add_argument("--omega", type=float, default=0.0, help="qubit frequency (dissipative)")
    g.add_argument("--theta0", type=float, default=0.0, help="constant phase (eigen)")
    g.add_argument("--lambda-expr", help="eigenvalue weight lambda(x, y) (eigen)")
    g.add_argument("--h-expr", help="mixing angle h(x, y) (eigen)")
    g.add_argument("--w", help="three comma-separated Bloch components (bloch)")
    n = p.add_argument_group("numerics")
    n.add_argument("--fd-step", type=float, default=DiffConfig.step)
    n.add_argument("--no-richardson", action="store_true")
    n.add_argument("--cond-tol", type=float, default=COND_TOL)
    n.add_argument("--det-tol", type=float, default=DET_TOL)
    n.add_argument("--rank-tol", type=float, default=RANK_TOL)
    return p


def _out_parent(choices) -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(add_help=False)
    p.add_argument("--format", choices=choices, default=choices[0])
    p.add_argument("--out", metavar="PATH", help="write the report here instead of stdout")
    return p


def make_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="qfim",
        description="Quantum Fisher information and joint estimability for a qubit.",
        epilog=GRAMMAR_HELP,
    )
    sub = parser.add_subparsers(dest="command", required=True)
    model = _model_parent()

    c = sub.add_parser("compute", parents=[model, _out_parent(["text", "json", "csv"])],
                       help="QFIM, bound and verdict at one point", epilog=GRAMMAR_HELP)
    c.add_argument("--all-routes", action="store_true", help="also report spectral and bloch routes")

    s = sub.add_parser("scan", parents=[_out_parent([None, "csv", "json"])],
                       help="grid scan from a TOML config")
    s.add_argument("--config", required=True, metavar="PATH")

    sub.add_parser("check-invertibility", parents=[model],
                   help="exit 0 / 10 / 11 for estimable / not / indeterminate",
                   epilog=GRAMMAR_HELP)

    k = sub.add_parser("combine", parents=[model, _out_parent(["text", "json"])],
                       help="estimable combination of a singular 2x2 QFIM", epilog=GRAMMAR_HELP)
    k.add_argument("--qfim", metavar="F11,F12,F22",
                   help="use this symmetric matrix instead of computing one")
    return parser


def _model_from_args(args):
    kind = args.model
    if kind == "dissipative":
        constants = {"t": args.t, "omega": args.omega}
        values = {
            "gamma": math.log(2) if args.gamma is None else args.gamma,
            "x": 0.5 if args.x is None else args.x,
        }
    else:
        constants = {"theta0": args.theta0, "lambda": args.lambda_expr, "h": args.h_expr, "w": args.w}
        values = {k: v for k, v in (("x", args.x), ("y", args.y)) if v is not None}
    model = build_model(kind, constants)
    return model, build_point(kind, values)


def _diff_from_args(args) -> DiffConfig:
    return DiffConfig(step=args.fd_step, richardson=not args.no_richardson)


def _tol_from_args(args) -> Tolerances:
    return Tolerances(args.cond_tol, args.det_tol, args.rank_tol)


def _emit(text: str, out: Optional[str]) -> None:
    if out:
        write_atomic(out, text)
    else:
        sys.stdout.write(text)


def cmd_compute(args) -> int:
    model, point = _model_from_args(args)
    routes = ("sld", "spectral", "bloch") if args.all_routes else ("sld",)
    report = compute_report(model, point, _diff_from_args(args), _tol_from_args(args), routes)
    if args.format == "json":
        text = json.dumps(report, indent=2) + "\n"
    elif args.format == "csv":
        text = rows_to_csv([report["row"]])
    else:
        text = format_text_report(report)
    _emit(text, args.out)
    return EXIT_OK


def cmd_scan(args) -> int:
    cfg = load_config(args.config)
    fmt_name = args.format or cfg.format
    path = args.out or cfg.path
    rows = run_scan(cfg)
    text = rows_to_csv(rows) if fmt_name == "csv" else rows_to_json(rows)
    if path:
        write_atomic(path, text)
        counts = Counter(r["verdict"] for r in rows)
        summary = ", ".join(f"{k}={v}" for k, v in sorted(counts.items()))
        print(f"wrote {len(rows)} rows to {path}; verdicts: {summary}")
    else:
        sys.stdout.write(text)
    return EXIT_OK


def cmd_check_invertibility(args) -> int:
    model, point = _model_from_args(args)
    tol = _tol_from_args(args)
    v = check_condition(model, point, _diff_from_args(args), tol.cond_tol, tol.det_tol, tol.rank_tol)
    print(f"{v.verdict} condition_value={fmt_text(v.condition_value)} det_qfim={fmt_text(v.det_qfim)}")
    return VERDICT_EXIT[v.verdict]


def _parse_qfim(text: str) -> QfimResult:
    try:
        entries = [float(v) for v in text.split(",")]
    except ValueError:
        raise UsageError(f"--qfim expects comma-separated numbers, got {text!r}") from None
    if len(entries) == 3:
        a, b, d = entries
        F = np.array([[a, b], [b, d]])
    elif len(entries) == 4:
        F = np.array(entries).reshape(2, 2)
    else:
        raise UsageError("--qfim expects F11,F12,F22 or four entries")
    return make_result(F, None, None, "input", ("p1", "p2"), RANK_TOL)


def cmd_combine(args) -> int:
    if args.qfim:
        F, point = _parse_qfim(args.qfim), None
    else:
        model, point = _model_from_args(args)
        F = qfim_sld(model, point, _diff_from_args(args), args.rank_tol)
    combo = estimable_combination(F, point, args.rank_tol)
    if args.format == "json":
        payload = {
            "names": list(combo.names),
            "direction": [fmt(v) for v in combo.direction],
            "qfi": fmt(combo.qfi_values[0]),
            "qfi_values": [fmt(v) for v in combo.qfi_values],
            "R": _matrix(combo.R),
            "description": combo.combined_parameter_description,
        }
        text = json.dumps(payload, indent=2) + "\n"
    else:
        text = (
            f"direction   ({', '.join(fmt_text(v) for v in combo.direction)})\n"
            f"combination {combo.combined_parameter_description}\n"
            f"qfi         {fmt_text(combo.qfi_values[0])}\n"
        )
    _emit(text, args.out)
    return EXIT_OK


COMMANDS = {
    "compute": cmd_compute,
    "scan": cmd_scan,
    "check-invertibility": cmd_check_invertibility,
    "combine": cmd_combine,
}


def _setup_logging() -> None:
    level = os.environ.get("QFIM_LOG", "error").lower()
    levels = {"error": logging.ERROR, "warn": logging.WARNING, "info": logging.INFO, "debug": logging.DEBUG}
    logging.basicConfig(level=levels.get(level, logging.ERROR), stream=sys.stderr,
                        format="%(levelname)s %(name)s: %(message)s")
    logging.captureWarnings(True)


def main(argv: Optional[list[str]] = None) -> int:
    _setup_logging()
    parser = make_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return COMMANDS[args.command](args)
    except (UsageError, ConfigError, ArityError, ExpressionError) as exc:
        print(f"qfim: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except DomainError as exc:
        print(f"qfim: domain error: {exc}", file=sys.stderr)
        return EXIT_DOMAIN
    except FullRankError as exc:
        print(f"qfim: {exc}", file=sys.stderr)
        return EXIT_FULL_RANK
    except NoEstimableCombinationError as exc:
        print(f"qfim: {exc}", file=sys.stderr)
        return EXIT_NO_COMBINATION
    except OSError as exc:
        print(f"qfim: cannot write output: {exc}", file=sys.stderr)
        return EXIT_WRITE


if __name__ == "__main__":
    sys.exit(main())
