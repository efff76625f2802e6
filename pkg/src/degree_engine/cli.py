"""Command-line front end: ``degree-engine <command> [options]``.

Exit codes: 0 success, 1 usage error, 2 not admissible, 3 oracle
disagreement, 4 any other failure (no certificate, lost path, failed checks).
"""

from __future__ import annotations

import argparse
import logging
import sys

import numpy as np

from .config import DEFAULT_CONFIG, DegreeConfig
from .domain import parse_box
from .errors import DegreeError, NotAdmissible, OracleDisagreement, ParseError
from .mapdef import MapDefinition, load_map_file, parse_map
from .report import dumps, to_plain

EXIT_OK, EXIT_USAGE, EXIT_NOT_ADMISSIBLE, EXIT_ORACLE, EXIT_FAILURE = 0, 1, 2, 3, 4


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    """argparse with usage errors mapped to exit code 1."""

    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--seed", type=int, default=None, help="RNG seed (default 0)")
    p.add_argument("--density", type=int, default=None, help="boundary samples per box edge")
    p.add_argument("--tol", action="append", default=[], metavar="KEY=VALUE",
                   help="override a numerical setting, e.g. --tol root_tol=1e-10 (repeatable)")
    p.add_argument("--no-oracle", action="store_true", help="skip the boundary-only cross-check")
    p.add_argument("--format", choices=("json", "table"), default="json")
    p.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")


def _map_args(p: argparse.ArgumentParser, required_box: bool = True) -> None:
    g = p.add_mutually_exclusive_group(required=True)
    g.add_argument("-m", "--map", help="components separated by ';', variables x1..xk")
    g.add_argument("-M", "--map-file", help="file with one component per line")
    p.add_argument("-b", "--box", required=required_box, help="box literal such as [-2,2]x[-2,2]")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="degree-engine", description="Brouwer degree of maps on boxes, and solvers built on it.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("degree", help="degree certificate of (f, box, y)")
    _map_args(p)
    p.add_argument("-y", "--target", default=None, help="comma-separated target (default 0)")
    p.add_argument("--weak", action="store_true", help="also check that doubling the box adds no roots")
    _common(p)

    p = sub.add_parser("verify-axioms", help="run the normalization/additivity/homotopy corpora")
    p.add_argument("--only", choices=("normalization", "additivity", "homotopy"))
    p.add_argument("--count", type=int, default=20, help="additivity instances (default 20)")
    p.add_argument("--inject-fault", action="store_true",
                   help="test hook: corrupt the dedup tolerance on subdivided boxes")
    _common(p)

    p = sub.add_parser("solve", help="continuation from f to f + h(., 1)")
    _map_args(p)
    p.add_argument("-H", "--perturbation", required=True, help="h(x, lambda), ';'-separated, with h(x, 0) = 0")
    _common(p)

    p = sub.add_parser("fixed-point", help="fixed point of f mapping the box boundary into the box")
    _map_args(p)
    _common(p)

    p = sub.add_parser("nontrivial", help="nontrivial zero when deg(f) differs from the index at 0")
    _map_args(p)
    _common(p)

    p = sub.add_parser("bifurcate", help="sign changes of det d_x f(lambda, 0) on [a, b]")
    g = p.add_mutually_exclusive_group(required=True)
    g.add_argument("-m", "--map", help="f(lambda, x) with variables x1..xk and parameter lambda")
    g.add_argument("-M", "--map-file")
    p.add_argument("-a", type=float, required=True, help="left end of the lambda interval")
    p.add_argument("-b", type=float, required=True, help="right end of the lambda interval")
    p.add_argument("--grid", type=int, default=None, help="lambda grid size (default 101)")
    _common(p)

    p = sub.add_parser("trace", help="trace the zero set of H(x, lambda) - alpha(lambda)")
    p.add_argument("-H", "--homotopy", required=True, help="H(x, lambda), ';'-separated")
    p.add_argument("--alpha", default=None, help="target path alpha(lambda), ';'-separated (default 0)")
    p.add_argument("-b", "--box", required=True)
    p.add_argument("--csv", default=None, metavar="PATH", help="write component polylines as CSV")
    p.add_argument("--check", action="store_true", help="also run the pairing check")
    _common(p)
    return parser


# ---------------------------------------------------------------------------


def _config(args) -> DegreeConfig:
    cfg = DEFAULT_CONFIG
    overrides = {}
    for item in args.tol:
        key, sep, value = item.partition("=")
        if not sep:
            raise UsageError(f"--tol expects KEY=VALUE, got {item!r}")
        overrides[key.strip()] = value.strip()
    try:
        cfg = cfg.with_overrides(overrides)
    except KeyError as e:
        raise UsageError(f"{e.args[0]}; known keys: {', '.join(DegreeConfig.field_names())}") from None
    except ValueError as e:
        raise UsageError(f"bad --tol value: {e}") from None
    changes = {}
    if args.seed is not None:
        changes["seed"] = args.seed
    if args.density is not None:
        if args.density < 2:
            raise UsageError("--density must be at least 2")
        changes["density"] = args.density
    if args.no_oracle:
        changes["oracle"] = False
    return cfg.replace(**changes)


def _load_map(args, params=None) -> MapDefinition:
    if args.map is not None:
        return parse_map(args.map, params=params)
    return load_map_file(args.map_file, params=params)


def _target(text: str | None, k: int) -> np.ndarray:
    if text is None:
        return np.zeros(k)
    try:
        y = np.array([float(v) for v in text.replace(" ", "").split(",") if v])
    except ValueError:
        raise UsageError(f"bad target {text!r}") from None
    if y.size != k:
        raise UsageError(f"target has {y.size} coordinate(s), map has {k}")
    return y


def _box(text: str, k: int):
    box = parse_box(text)
    if box.dim != k:
        raise UsageError(f"box has dimension {box.dim}, map has {k}")
    return box


def _table(obj, prefix: str = "") -> list[str]:
    lines = []
    if isinstance(obj, dict):
        for key, v in obj.items():
            name = f"{prefix}.{key}" if prefix else str(key)
            if isinstance(v, (dict, list)) and v and not _flat(v):
                lines += _table(v, name)
            else:
                lines.append(f"{name:<40} {dumps(v, indent=0).replace(chr(10), ' ')}")
    elif isinstance(obj, list):
        for i, v in enumerate(obj):
            lines += _table(v, f"{prefix}[{i}]")
    return lines


def _flat(v) -> bool:
    return isinstance(v, list) and all(isinstance(x, (int, float, str)) or x is None for x in v)


def _emit(result, fmt: str) -> None:
    if fmt == "json":
        sys.stdout.write(dumps(result) + "\n")
    else:
        sys.stdout.write("\n".join(_table(to_plain(result))) + "\n")


# ---------------------------------------------------------------------------


def cmd_degree(args, cfg):
    from .degree import degree, degree_weak

    f = _load_map(args)
    box = _box(args.box, f.dim)
    y = _target(args.target, f.dim)
    return (degree_weak if args.weak else degree)(f, box, y, cfg), EXIT_OK


def cmd_verify_axioms(args, cfg):
    from .axioms import run_axioms

    rep = run_axioms(cfg, args.only, args.count, args.inject_fault)
    return rep, EXIT_OK if rep.ok else EXIT_FAILURE


def cmd_solve(args, cfg):
    from .solvers import LAMBDA, continuation_solve

    f = _load_map(args)
    h = parse_map(args.perturbation, params={LAMBDA: 0.0})
    if h.dim != f.dim:
        raise UsageError(f"h has {h.dim} component(s), f has {f.dim}")
    return continuation_solve(f, h, _box(args.box, f.dim), cfg), EXIT_OK


def cmd_fixed_point(args, cfg):
    from .solvers import brouwer_fixed_point

    f = _load_map(args)
    return brouwer_fixed_point(f, _box(args.box, f.dim), cfg), EXIT_OK


def cmd_nontrivial(args, cfg):
    from .solvers import nontrivial_solution

    f = _load_map(args)
    return nontrivial_solution(f, _box(args.box, f.dim), cfg), EXIT_OK


def cmd_bifurcate(args, cfg):
    from .solvers import LAMBDA, BifurcationProblem, bifurcation_scan

    f = _load_map(args, params={LAMBDA: 0.0})
    try:
        prob = BifurcationProblem(f, args.a, args.b, args.grid or cfg.bif_grid)
    except ValueError as e:
        raise UsageError(str(e)) from None
    return bifurcation_scan(prob, cfg), EXIT_OK


def cmd_trace(args, cfg):
    from .arcs import pairing_check, trace_zero_set
    from .solvers import parse_homotopy

    try:
        h = parse_homotopy(args.homotopy, args.alpha, args.box)
    except ValueError as e:
        if isinstance(e, ParseError):
            raise
        raise UsageError(str(e)) from None
    rep = trace_zero_set(h, cfg)
    if args.csv:
        with open(args.csv, "w", encoding="utf-8", newline="") as fh:
            fh.write(rep.to_csv())
    if args.check:
        verdict = pairing_check(rep)
        out = rep.to_dict()
        out["pairing_check"] = verdict.to_dict()
        return out, EXIT_OK
    return rep, EXIT_OK


COMMANDS = {
    "degree": cmd_degree,
    "verify-axioms": cmd_verify_axioms,
    "solve": cmd_solve,
    "fixed-point": cmd_fixed_point,
    "nontrivial": cmd_nontrivial,
    "bifurcate": cmd_bifurcate,
    "trace": cmd_trace,
}


def _error_payload(command: str, exc: Exception) -> dict:
    from .report import envelope

    out = {"error": type(exc).__name__, "message": str(exc)}
    diag = getattr(exc, "diagnostics", None)
    if diag:
        out["diagnostics"] = diag
    return envelope(command, out)


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s", stream=sys.stderr)
    try:
        cfg = _config(args)
        result, code = COMMANDS[args.command](args, cfg)
    except (UsageError, ParseError, FileNotFoundError) as e:
        sys.stderr.write(f"degree-engine {args.command}: error: {e}\n")
        return EXIT_USAGE
    except NotAdmissible as e:
        code, result = EXIT_NOT_ADMISSIBLE, _error_payload(args.command, e)
    except OracleDisagreement as e:
        code, result = EXIT_ORACLE, _error_payload(args.command, e)
    except DegreeError as e:
        code, result = EXIT_FAILURE, _error_payload(args.command, e)
    _emit(result, args.format)
    return code


if __name__ == "__main__":
    sys.exit(main())
