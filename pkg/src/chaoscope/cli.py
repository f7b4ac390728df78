"""Command-line front end.

Exit codes: 0 success, 1 invalid input, 2 runtime abort (dual-state overflow).
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
from pathlib import Path

import numpy as np

from . import certificates as cert
from .cfunction import c_value, induced_graphical_game
from .decomposition import (
    chebyshev_fit,
    decompose,
    extract_bimatrix_potential,
    extract_potential,
    is_bimatrix_potential,
    is_potential,
)
from .dynamics import Algorithm, TrajectoryAborted, UpdateRule, run_trajectory
from .game_core import (
    BimatrixGame,
    BudgetExceededError,
    GameFormatError,
    GraphicalGame,
    RegionSpec,
    as_dual_point,
    load_game,
    uniform_dual_point,
)
from .lp import LPError
from .parallel import chunked_map, worker_count
from .volume_lab import accumulate_log_volume, ensemble_divergence

EXIT_OK, EXIT_INVALID, EXIT_ABORT = 0, 1, 2


class UsageError(ValueError):
    """Bad command line; reported like any other invalid input."""


# --------------------------------------------------------------------------
# reports


def _format_float(v: float) -> str | None:
    if not math.isfinite(v):
        return None
    text = format(v, ".17g")
    if not any(c in text for c in ".en"):
        text += ".0"
    return text


def _to_json(value, indent: int, level: int = 0) -> str:
    pad = " " * (indent * (level + 1))
    end = " " * (indent * level)
    if isinstance(value, np.ndarray):
        value = value.tolist()
    if isinstance(value, (np.bool_, bool)):
        return "true" if value else "false"
    if value is None:
        return "null"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        text = _format_float(float(value))
        return "null" if text is None else text
    if isinstance(value, str):
        return json.dumps(value)
    if isinstance(value, dict):
        if not value:
            return "{}"
        items = [f"{pad}{json.dumps(str(k))}: {_to_json(v, indent, level + 1)}"
                 for k, v in value.items()]
        return "{\n" + ",\n".join(items) + "\n" + end + "}"
    if isinstance(value, (list, tuple)):
        if not value:
            return "[]"
        if all(not isinstance(v, (list, tuple, dict, np.ndarray)) for v in value):
            return "[" + ", ".join(_to_json(v, indent, level + 1) for v in value) + "]"
        items = [pad + _to_json(v, indent, level + 1) for v in value]
        return "[\n" + ",\n".join(items) + "\n" + end + "]"
    raise TypeError(f"cannot serialize {type(value).__name__}")


def _csv_cell(v) -> str:
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        text = _format_float(float(v))
        return "nan" if text is None else text
    return str(v)


def render_report(result, fmt: str) -> str:
    """JSON for mappings; CSV for a mapping of column name -> equal-length column."""
    if fmt == "json":
        return _to_json(result, 2) + "\n"
    if fmt == "csv":
        columns = list(result.keys())
        data = [list(np.asarray(result[c]).tolist()) if isinstance(result[c], np.ndarray)
                else list(result[c]) for c in columns]
        lengths = {len(col) for col in data}
        if len(lengths) > 1:
            raise ValueError("csv report: columns have different lengths")
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(columns)
        for row in zip(*data):
            writer.writerow([_csv_cell(v) for v in row])
        return buf.getvalue()
    raise ValueError(f"format: expected 'json' or 'csv', got {fmt!r}")


def emit_report(result, fmt: str, path=None) -> None:
    """Write a report to ``path`` (or standard output when None or '-')."""
    text = render_report(result, fmt)
    if path is None or str(path) == "-":
        sys.stdout.write(text)
        sys.stdout.flush()
    else:
        Path(path).write_text(text, encoding="utf-8")


# --------------------------------------------------------------------------
# input helpers


def _read_json(path, what):
    try:
        return json.loads(Path(path).read_text(encoding="utf-8"))
    except FileNotFoundError:
        raise GameFormatError(f"{what}: file not found: {path}") from None
    except json.JSONDecodeError as exc:
        raise GameFormatError(f"{what}: malformed JSON ({exc.msg} at line {exc.lineno})") from None


def _load_game(path):
    if not Path(path).exists():
        raise GameFormatError(f"game: file not found: {path}")
    return load_game(path)


def _dual_point(data, counts, what):
    """A dual point from JSON: per-player lists, a flat list, or {"p": ...}."""
    if isinstance(data, dict):
        if "p" not in data:
            raise GameFormatError(f"{what}: expected key 'p'")
        data = data["p"]
    if not isinstance(data, list) or not data:
        raise GameFormatError(f"{what}: expected a list")
    try:
        if all(isinstance(v, (int, float)) for v in data):
            return as_dual_point(np.array(data, dtype=float), counts)
        return as_dual_point(data, counts)
    except (TypeError, ValueError) as exc:
        raise GameFormatError(f"{what}: {exc}") from None


def _start_point(spec, counts):
    if spec is None or spec == "uniform":
        return uniform_dual_point(counts)
    return _dual_point(_read_json(spec, "start"), counts, "start")


def _region(delta, counts):
    region = RegionSpec(delta)
    region.validate(counts)
    return region


def _rule(args) -> UpdateRule:
    name = args.rule
    if name == "ftrl":
        return UpdateRule(Algorithm.FTRL, args.epsilon, args.regularizer)
    return UpdateRule(Algorithm(name), args.epsilon)


def _counts(game):
    return tuple(int(n) for n in game.strategy_counts)


def _bimatrix(game, what):
    if not isinstance(game, BimatrixGame):
        raise GameFormatError(f"game: {what} needs a bimatrix game, got {type(game).__name__}")
    return game


# --------------------------------------------------------------------------
# subcommands


def cmd_decompose(args):
    game = _bimatrix(_load_game(args.game), "decompose")
    dec = decompose(game)
    fz, fc = chebyshev_fit(dec.Z), chebyshev_fit(dec.C)
    return {
        "Z": dec.Z, "C": dec.C,
        "r_Z": fz.r, "r_C": fc.r,
        "fit_Z": {"g": fz.g, "h": fz.h},
        "fit_C": {"g": fc.g, "h": fc.h},
        "potential": is_bimatrix_potential(game),
    }, "json"


def cmd_cfun(args):
    game = _load_game(args.game)
    counts = _counts(game)
    data = _read_json(args.points, "points")
    if isinstance(data, dict):
        data = data.get("points")
    if not isinstance(data, list):
        raise GameFormatError("points: expected a list of dual points")
    points = [_dual_point(p, counts, f"points[{n}]") for n, p in enumerate(data)]
    values = chunked_map(lambda p: float(c_value(game, p)), points)
    return {"index": list(range(len(points))), "C": values}, args.format


def cmd_certify(args):
    game = _load_game(args.game)
    counts = _counts(game)
    region = _region(args.delta, counts)
    algorithm = args.algorithm
    criterion = args.criterion
    if criterion == "potential":
        if algorithm != "omwu":
            raise UsageError("algorithm: the potential criterion certifies OMWU; use --algorithm omwu")
        if args.potential:
            P = np.array(_read_json(args.potential, "potential"), dtype=float)
        else:
            P = (extract_bimatrix_potential(game) if isinstance(game, BimatrixGame)
                 else extract_potential(game))
            if P is None:
                raise GameFormatError("game: not an exact potential game")
        certificate = cert.certify_potential_negativity(game, P, region, args.epsilon)
    else:
        if algorithm != "mwu":
            raise UsageError(f"algorithm: the {criterion} criterion certifies MWU; use --algorithm mwu")
        if criterion == "graphical":
            if not isinstance(game, GraphicalGame):
                raise GameFormatError("game: graphical criterion needs a graphical game")
            certificate = cert.certify_graphical_family(game, region, args.epsilon)
        elif criterion == "domination":
            certificate = cert.certify_mwu_chaos_domination(
                _bimatrix(game, "domination"), region, args.epsilon)
        else:
            certificate = cert.certify_mwu_chaos_lp(_bimatrix(game, "lp"), region, args.epsilon)
    if certificate is not None:
        return certificate.to_dict(), "json"
    sampled = cert.cbar_sample(game, region, args.samples, args.seed, mode=algorithm)
    return {"certified": False, "criterion": criterion, "algorithm": algorithm.upper(),
            "region_delta": region.delta, "sampled_min": sampled}, "json"


def cmd_simulate(args):
    game = _load_game(args.game)
    counts = _counts(game)
    region = _region(args.delta, counts) if args.delta is not None else None
    rule = _rule(args)
    p0 = _start_point(args.start, counts)
    record = run_trajectory(game, p0, rule, args.steps, region)
    table = {"t": list(range(record.steps + 1))}
    for i, n in enumerate(counts):
        offset = sum(counts[:i])
        for j in range(n):
            table[f"p{i}_{j}"] = record.points[:, offset + j]
    if region is not None:
        table["in_region"] = [bool(v) for v in record.in_region]
    return table, "csv"


def cmd_volume(args):
    game = _load_game(args.game)
    counts = _counts(game)
    region = _region(args.delta, counts)
    ledger = accumulate_log_volume(game, _start_point(args.start, counts), _rule(args),
                                   args.steps, region)
    if args.summary:
        window = ledger.in_region_window()
        emit_report({
            "algorithm": ledger.algorithm, "steps": args.steps, "exit_time": ledger.exit_time,
            "in_region_steps": window,
            "cumulative_at_window_end": float(ledger.cumulative[window]),
            "cumulative_final": float(ledger.cumulative[-1]),
        }, "json", args.summary)
    return {
        "t": list(range(args.steps)),
        "log_det": ledger.log_det,
        "cumulative": ledger.cumulative[1:],
        "in_region": [bool(v) for v in ledger.region_valid],
    }, "csv"


def cmd_lyapunov(args):
    game = _load_game(args.game)
    counts = _counts(game)
    region = _region(args.delta, counts)
    report = ensemble_divergence(game, _start_point(args.start, counts), _rule(args), args.steps,
                                 region, args.radius, args.ensemble, args.seed,
                                 cbar_samples=args.samples)
    if args.summary:
        emit_report({
            "fitted_gamma": report.fitted_gamma,
            "predicted_gamma": report.predicted_gamma,
            "cbar_estimate": report.cbar_estimate,
            "lambda_intercept": report.lambda_intercept,
            "window_end": report.window_end,
            "fit_start": report.fit_start,
            "epsilon": report.epsilon,
            "dimension": report.dimension,
            "ball_radius": report.ball_radius,
            "ensemble_size": args.ensemble,
            "seed": args.seed,
        }, "json", args.summary)
    return {"t": list(range(len(report.sup_distance))),
            "sup_distance": report.sup_distance}, "csv"


def cmd_equivalence(args):
    game = _load_game(args.game)
    if isinstance(game, GraphicalGame):
        game = game.to_normal_form()
    counts = _counts(game)
    p = _dual_point(_read_json(args.point, "point"), counts, "point")
    c_g = float(c_value(game, p))
    c_h = float(c_value(induced_graphical_game(game, p), p))
    return {"C_G": c_g, "C_H": c_h, "abs_difference": abs(c_g - c_h)}, "json"


def cmd_potential_check(args):
    game = _load_game(args.game)
    if isinstance(game, BimatrixGame):
        P = extract_bimatrix_potential(game, args.tol)
    else:
        P = extract_potential(game, args.tol)
    result = {"potential": P is not None}
    if args.potential:
        supplied = np.array(_read_json(args.potential, "potential"), dtype=float)
        result["supplied_is_potential"] = is_potential(game.to_normal_form(), supplied, args.tol)
    if P is not None:
        result["P"] = P
    return result, "json"


# --------------------------------------------------------------------------
# parser


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _positive_float(text):
    try:
        v = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected a number, got {text!r}") from None
    if not (v > 0 and math.isfinite(v)):
        raise argparse.ArgumentTypeError(f"expected a positive number, got {text!r}")
    return v


def _nonneg_int(text):
    try:
        v = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected an integer, got {text!r}") from None
    if v < 0:
        raise argparse.ArgumentTypeError(f"expected a nonnegative integer, got {v}")
    return v


def _add_dynamics_flags(p, steps_default):
    p.add_argument("--rule", choices=["mwu", "omwu", "omwu_surrogate", "ftrl"], default="mwu")
    p.add_argument("--regularizer", choices=["entropic", "squared_euclidean"],
                   default="entropic", help="FTRL regularizer")
    p.add_argument("--epsilon", type=_positive_float, default=0.01)
    p.add_argument("--steps", type=_nonneg_int, default=steps_default)
    p.add_argument("--start", default="uniform", help='JSON dual point file or "uniform"')


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="chaoscope", description="Volume expansion and chaos in learning in games.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("decompose", help="zero-sum/coordination split and LP radii")
    p.add_argument("--game", required=True)
    p.add_argument("--out")
    p.set_defaults(run=cmd_decompose)

    p = sub.add_parser("cfun", help="C at a list of dual points")
    p.add_argument("--game", required=True)
    p.add_argument("--points", required=True)
    p.add_argument("--format", choices=["csv", "json"], default="csv")
    p.add_argument("--out")
    p.set_defaults(run=cmd_cfun)

    p = sub.add_parser("certify", help="chaos certificate or sampled minimum")
    p.add_argument("--game", required=True)
    p.add_argument("--criterion", choices=["domination", "lp", "graphical", "potential"],
                   required=True)
    p.add_argument("--delta", type=_positive_float, required=True)
    p.add_argument("--epsilon", type=_positive_float, default=0.01)
    p.add_argument("--algorithm", choices=["mwu", "omwu"], default="mwu")
    p.add_argument("--potential", help="JSON potential tensor (extracted when omitted)")
    p.add_argument("--samples", type=_nonneg_int, default=100_000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out")
    p.set_defaults(run=cmd_certify)

    p = sub.add_parser("simulate", help="run a trajectory; CSV of t, p, region flag")
    p.add_argument("--game", required=True)
    _add_dynamics_flags(p, 1000)
    p.add_argument("--delta", type=_positive_float)
    p.add_argument("--out")
    p.set_defaults(run=cmd_simulate)

    p = sub.add_parser("volume", help="log-volume ledger along a trajectory")
    p.add_argument("--game", required=True)
    _add_dynamics_flags(p, 1000)
    p.add_argument("--delta", type=_positive_float, required=True)
    p.add_argument("--summary", help="JSON summary path")
    p.add_argument("--out")
    p.set_defaults(run=cmd_volume)

    p = sub.add_parser("lyapunov", help="divergence of a perturbed ensemble")
    p.add_argument("--game", required=True)
    _add_dynamics_flags(p, 20_000)
    p.add_argument("--delta", type=_positive_float, required=True)
    p.add_argument("--radius", type=_positive_float, default=1e-6)
    p.add_argument("--ensemble", type=_nonneg_int, default=64)
    p.add_argument("--samples", type=_nonneg_int, default=100_000, help="samples for the cbar estimate")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--summary", help="JSON summary path")
    p.add_argument("--out")
    p.set_defaults(run=cmd_lyapunov)

    p = sub.add_parser("equivalence", help="C_G against the induced graphical game at a point")
    p.add_argument("--game", required=True)
    p.add_argument("--point", required=True)
    p.add_argument("--out")
    p.set_defaults(run=cmd_equivalence)

    p = sub.add_parser("potential-check", help="exact potential test and extraction")
    p.add_argument("--game", required=True)
    p.add_argument("--potential")
    p.add_argument("--tol", type=_positive_float, default=1e-9)
    p.add_argument("--out")
    p.set_defaults(run=cmd_potential_check)
    return parser


def main(argv=None) -> int:
    try:
        worker_count()
        args = build_parser().parse_args(argv)
        result, fmt = args.run(args)
        emit_report(result, fmt, args.out)
        return EXIT_OK
    except TrajectoryAborted as exc:
        print(f"chaoscope: aborted: {exc} (last finite step {exc.last_finite_index})",
              file=sys.stderr)
        return EXIT_ABORT
    except (LPError, FloatingPointError) as exc:
        print(f"chaoscope: runtime error: {exc}", file=sys.stderr)
        return EXIT_ABORT
    except (ValueError, BudgetExceededError, OSError) as exc:
        print(f"chaoscope: error: {exc}", file=sys.stderr)
        return EXIT_INVALID


if __name__ == "__main__":
    sys.exit(main())
