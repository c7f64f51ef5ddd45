"""Command-line front end.

Exit codes: 0 success, 2 invalid input, 3 I/O failure, 4 numerical failure.
Every option can also come from a JSON file given with ``--config``;
explicit flags win over file values.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
from fractions import Fraction
from pathlib import Path

import numpy as np

from halfline import __version__, analytics, io
from halfline.phase import BoundaryTriple, LimitKind, classify, representative_params

EXIT_OK, EXIT_INPUT, EXIT_IO, EXIT_NUMERIC = 0, 2, 3, 4


class InputError(Exception):
    pass


class OutputError(Exception):
    pass


# helpers ---------------------------------------------------------------------


def _float(text) -> float:
    try:
        v = float(text)
    except (TypeError, ValueError):
        raise InputError(f"not a number: {text!r}") from None
    if not math.isfinite(v):
        raise InputError(f"not a finite number: {text!r}")
    return v


def _int(text) -> int:
    try:
        v = float(text)
    except (TypeError, ValueError):
        raise InputError(f"not an integer: {text!r}") from None
    if not v.is_integer():
        raise InputError(f"not an integer: {text!r}")
    return int(v)


def _int_list(text) -> list[int]:
    if isinstance(text, list):
        return [_int(v) for v in text]
    text = str(text).strip()
    return [_int(v) for v in text.split(",")] if text else []


def _check_output(path) -> Path | None:
    if path is None:
        return None
    path = Path(path)
    parent = path.parent if str(path.parent) else Path(".")
    if not parent.is_dir() or not os.access(parent, os.W_OK):
        raise OutputError(f"cannot write to {path}: directory missing or not writable")
    if path.is_dir():
        raise OutputError(f"{path} is a directory")
    return path


def _manifest(path: Path, command: str, config: dict, outputs: list, notes=()) -> None:
    doc = {
        "tool": "halfline",
        "version": __version__,
        "command": command,
        "config": config,
        "seed": config.get("seed"),
        "outputs": [str(p) for p in outputs],
        "reproduce": f"halfline {command} --config {path.name}.manifest.json",
    }
    if notes:
        doc["notes"] = list(notes)
    io.write_json(path.with_name(path.name + ".manifest.json"), doc)


def _emit_csv(path: Path | None, header, rows, command: str, config: dict, notes=()) -> None:
    for note in notes:
        print(f"halfline: warning: {note}", file=sys.stderr)
    text = io.csv_text(header, rows)
    if path is None:
        sys.stdout.write(text)
        return
    io.atomic_write_text(path, text)
    _manifest(path, command, config, [path], notes)


def _apply_threads(cfg: dict) -> None:
    from halfline.montecarlo import set_threads

    threads = cfg.get("threads")
    set_threads(None if threads is None else _int(threads))


# commands --------------------------------------------------------------------


def cmd_classify(cfg: dict) -> int:
    vals = [_float(cfg.get(k)) for k in ("alpha", "beta", "A", "B")]
    try:
        regime = classify(*vals)
    except ValueError as exc:
        raise InputError(str(exc)) from None
    print(io.json_text(regime.to_dict()), end="")
    return EXIT_OK


RETURN_METHODS = ("dp", "naive", "corrected", "asymptotic")


def _p_value(text):
    """Exact Fraction when asked for, float otherwise."""
    return Fraction(str(text)) if isinstance(text, str) and "/" in text else _float(text)


def cmd_returnprob(cfg: dict) -> int:
    p = _p_value(cfg.get("p"))
    K = _int(cfg.get("K"))
    p_kill = _float(cfg.get("p_kill", 0.0))
    method = cfg.get("method", "dp")
    methods = RETURN_METHODS if method == "all" else (method,)
    if any(m not in RETURN_METHODS for m in methods):
        raise InputError(f"unknown method {method!r}")
    if K < 0:
        raise InputError("K must be >= 0")
    if not 0 < p < 1 or p_kill < 0 or p + p_kill > 1:
        raise InputError("need 0 < p < 1 and 0 <= p_kill <= 1 - p")
    out = _check_output(cfg.get("out"))
    rows, notes = [], []
    for m in methods:
        table = analytics.return_probabilities(p, K, m, p_kill)
        rows += [(k, m, float(v)) for k, v in enumerate(table.values)]
        if table.disclaimer:
            notes.append(f"{m}: {table.disclaimer}")
    _emit_csv(out, ("k", "method", "F_k"), rows, "returnprob", cfg, notes)
    return EXIT_OK


def cmd_localtime(cfg: dict) -> int:
    p = _float(cfg.get("p"))
    n = _int(cfg.get("n"))
    p_kill = _float(cfg.get("p_kill", 0.0))
    method = cfg.get("method", "dp")
    if method not in RETURN_METHODS or method == "asymptotic":
        raise InputError(f"method must be dp, naive or corrected, got {method!r}")
    if n < 0 or not 0 < p < 1 or p_kill < 0 or p + p_kill > 1:
        raise InputError("need n >= 0, 0 < p < 1 and 0 <= p_kill <= 1 - p")
    compare = _int_list(cfg.get("compare", ""))
    if any(m < 1 for m in compare):
        raise InputError("comparison horizons must be >= 1")
    out = _check_output(cfg.get("out"))
    value = analytics.expected_local_time(p, n, method, p_kill)
    result = {"p": p, "n": n, "method": method, "pKill": p_kill, "expectedLocalTime": value}
    if n >= 1:
        bound = analytics.local_time_upper_bound(p + p_kill, n).value
        result.update(bound=bound, boundHolds=bound >= value)
    print(io.json_text(result), end="")
    if compare:
        rows = analytics.local_time_comparison(p, compare, p_kill)
        _emit_csv(out, ("n", "exact", "bound", "gap", "bound_holds"), rows, "localtime", cfg)
    elif out is not None:
        io.write_json(out, result)
        _manifest(out, "localtime", cfg, [out])
    return EXIT_OK


def _walk_params(cfg: dict):
    from halfline.walk import BoundaryParams

    vals = [_float(cfg.get(k)) for k in ("alpha", "beta", "A", "B")]
    try:
        return BoundaryParams(*vals, _int(cfg.get("N")))
    except ValueError as exc:
        raise InputError(str(exc)) from None


def cmd_simulate(cfg: dict) -> int:
    from halfline.montecarlo import EnsembleConfig, run_ensemble
    from halfline.walk import DEAD, simulate_path

    params = _walk_params(cfg)
    try:
        ecfg = EnsembleConfig(params, _float(cfg.get("x0", 0.5)), _float(cfg.get("t", 0.5)),
                              _int(cfg.get("replicates", 10_000)), _int(cfg.get("seed", 0)))
    except ValueError as exc:
        raise InputError(str(exc)) from None
    out = _check_output(cfg.get("out"))
    path_out = _check_output(cfg.get("path_out"))
    _apply_threads(cfg)
    run = run_ensemble(ecfg)
    final = run.final
    alive = final != DEAD
    n = final.size
    stats = {
        "survival": float(np.mean(alive)),
        "originAtom": float(np.mean(final == 0)),
        "meanPosition": float(np.mean(final[alive] / params.scaleN)) if alive.any() else float("nan"),
        "meanLocalTime": float(np.mean(run.local_time)),
    }
    rows = []
    for name, v in stats.items():
        se = math.sqrt(v * (1 - v) / n) if name in ("survival", "originAtom") else float("nan")
        rows.append((params.scaleN, name, v, se, n, ecfg.base_seed))
    _emit_csv(out, ("N", "statistic", "value", "stderr", "replicates", "seed"), rows, "simulate", cfg)
    if path_out is not None:
        path = simulate_path(params, ecfg.start, ecfg.steps, ecfg.base_seed, 0)
        states = [("cemetery" if c == DEAD else int(c)) for c in path.states]
        io.write_csv(path_out, ("k", "state"), list(enumerate(states)))
        _manifest(path_out, "simulate", cfg, [path_out])
    return EXIT_OK


def _target(cfg: dict):
    if cfg.get("regime"):
        try:
            return representative_params(LimitKind(cfg["regime"]))
        except (ValueError, KeyError):
            raise InputError(f"unknown regime {cfg['regime']!r}") from None
    vals = [cfg.get(k) for k in ("alpha", "beta", "A", "B")]
    if any(v is None for v in vals):
        raise InputError("give --regime or all of --alpha --beta --A --B")
    return tuple(_float(v) for v in vals)


def cmd_converge(cfg: dict) -> int:
    from halfline.montecarlo import SWEEP_COLUMNS, convergence_sweep, sweep_report
    from halfline.walk import BoundaryParams

    target = _target(cfg)
    Ns = _int_list(cfg.get("N", "50,100,200"))
    x0, t = _float(cfg.get("x0", 0.5)), _float(cfg.get("t", 0.5))
    reps, seed = _int(cfg.get("replicates", 100_000)), _int(cfg.get("seed", 0))
    stats = str(cfg.get("statistics", "ks")).split(",")
    try:
        for N in Ns:
            BoundaryParams(*target, N)
        if reps < 1 or t <= 0 or x0 < 0:
            raise ValueError("need replicates >= 1, t > 0, x0 >= 0")
    except ValueError as exc:
        raise InputError(str(exc)) from None
    out = _check_output(cfg.get("out"))
    json_out = _check_output(cfg.get("json"))
    _apply_threads(cfg)
    rows = convergence_sweep(target, Ns, x0, t, reps, seed)
    if "all" not in stats:
        rows = [r for r in rows if r.statistic in stats]
    _emit_csv(out, SWEEP_COLUMNS, [r.to_dict() for r in rows], "converge", cfg)
    if json_out is not None:
        io.write_json(json_out, sweep_report(rows))
        _manifest(json_out, "converge", cfg, [json_out])
    return EXIT_OK


def _terminal(cfg: dict):
    from halfline.generators import gaussian_bump

    name = cfg.get("f", "bump")
    if name == "one":
        return lambda x: np.ones_like(x)
    if name == "x":
        return lambda x: np.asarray(x, dtype=np.float64)
    if name == "bump":
        return gaussian_bump(_float(cfg.get("center", 1.0)), _float(cfg.get("width", 0.25)))
    raise InputError(f"unknown terminal function {name!r} (one, x, bump)")


def cmd_pde(cfg: dict) -> int:
    from halfline.reference import wentzell_solve

    try:
        triple = BoundaryTriple(*(_float(cfg.get(k)) for k in ("c1", "c2", "c3")))
    except ValueError as exc:
        raise InputError(str(exc)) from None
    t = _float(cfg.get("t", 1.0))
    f = _terminal(cfg)
    grid = {k: cfg[k] for k in ("L", "nx", "nt") if cfg.get(k) is not None}
    grid = {k: (_float(v) if k == "L" else _int(v)) for k, v in grid.items()}
    out = _check_output(cfg.get("out"))
    try:
        sol = wentzell_solve(triple, f, t, **grid)
    except ValueError as exc:
        raise InputError(str(exc)) from None
    if not np.all(np.isfinite(sol.final)):
        raise FloatingPointError("solver produced non-finite values")
    rows = list(zip(sol.x.tolist(), sol.final.tolist()))
    _emit_csv(out, ("x", "u"), rows, "pde", cfg)
    return EXIT_OK


COMMANDS = {
    "classify": cmd_classify,
    "returnprob": cmd_returnprob,
    "localtime": cmd_localtime,
    "simulate": cmd_simulate,
    "converge": cmd_converge,
    "pde": cmd_pde,
}


# parser ------------------------------------------------------------------------


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise InputError(message)


def _walk_flags(p, required=False):
    for name in ("alpha", "beta", "A", "B"):
        p.add_argument(f"--{name}", dest=name, required=False)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="halfline", description="Boundary random walks on the half-line and their limits.")
    parser.add_argument("--version", action="version", version=f"halfline {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def add(name, help_):
        p = sub.add_parser(name, help=help_)
        p.add_argument("--config", help="JSON file with option values")
        return p

    p = add("classify", "limit regime and boundary triple of (alpha, beta, A, B)")
    _walk_flags(p)

    p = add("returnprob", "table of return probabilities F_k")
    p.add_argument("--p")
    p.add_argument("--K")
    p.add_argument("--p-kill", dest="p_kill")
    p.add_argument("--method", choices=RETURN_METHODS + ("all",))
    p.add_argument("--out")

    p = add("localtime", "expected local time at the origin")
    p.add_argument("--p")
    p.add_argument("--n")
    p.add_argument("--p-kill", dest="p_kill")
    p.add_argument("--method", choices=("dp", "naive", "corrected"))
    p.add_argument("--compare", help="comma-separated horizons for a bound comparison table")
    p.add_argument("--out")

    p = add("simulate", "Monte Carlo summary of the rescaled walk at time t")
    _walk_flags(p)
    for name in ("N", "x0", "t", "replicates", "seed", "threads"):
        p.add_argument(f"--{name}")
    p.add_argument("--out")
    p.add_argument("--path-out", dest="path_out", help="CSV of the trajectory of replicate 0")

    p = add("converge", "distance to the limit law over a list of N")
    p.add_argument("--regime", choices=[k.value for k in LimitKind if k is not LimitKind.UNCLASSIFIED])
    _walk_flags(p)
    p.add_argument("--N", help="comma-separated list")
    for name in ("x0", "t", "replicates", "seed", "threads", "statistics"):
        p.add_argument(f"--{name}")
    p.add_argument("--out")
    p.add_argument("--json")

    p = add("pde", "solve the heat equation with a Wentzell boundary condition")
    for name in ("c1", "c2", "c3", "t", "L", "nx", "nt", "center", "width"):
        p.add_argument(f"--{name}")
    p.add_argument("--f", choices=("one", "x", "bump"))
    p.add_argument("--out")
    return parser


def _merge(args: argparse.Namespace) -> dict:
    cfg: dict = {}
    if args.config:
        try:
            with open(args.config, encoding="utf-8") as fh:
                loaded = json.load(fh)
        except OSError as exc:
            raise InputError(f"cannot read config: {exc}") from None
        except json.JSONDecodeError as exc:
            raise InputError(f"config is not valid JSON: {exc}") from None
        if not isinstance(loaded, dict):
            raise InputError("config must be a JSON object")
        # a manifest nests the options under "config"
        cfg.update(loaded.get("config", loaded) if "command" in loaded else loaded)
    cfg.update({k: v for k, v in vars(args).items() if v is not None and k != "config"})
    cfg.pop("command", None)
    return cfg


def main(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
        cfg = _merge(args)
        return COMMANDS[args.command](cfg)
    except InputError as exc:
        print(f"halfline: error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except (OutputError, OSError) as exc:
        print(f"halfline: I/O error: {exc}", file=sys.stderr)
        return EXIT_IO
    except (FloatingPointError, ArithmeticError, np.linalg.LinAlgError, RuntimeError) as exc:
        print(f"halfline: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
