"""Command-line driver.

Every command prints a text report and, when an output location is known
(``--out`` or the ``RADNF_OUT_DIR`` environment variable), writes
``<command>.json`` and ``<command>.txt`` atomically.  ``--out`` may name a
``.json`` file (the report goes next to it) or a directory.

Exit codes: 0 success, 1 usage error, 2 precondition violation, 3 numerical
non-convergence, 4 internal failure.
"""

from __future__ import annotations

import argparse
import json
import os
import random
import sys
import tempfile
from pathlib import Path

import numpy as np

from . import __version__
from .errors import NumericalError, PreconditionError, RadnfError
from .flows import (FlowParams, ProbeGrid, box_grid, limit_map_probe, linearization_residual, transport_residual,
                    transport_solve, wminus_map)
from .io import (certificate_to_json, jet_to_json, parse_flow_file, parse_symbol_file, principal_to_json,
                 symbol_to_json)
from .jets import JetCaps
from .lower import normalize_full
from .principal import normalize_principal
from .symbols import check_against_oracle, radial_check, random_jet, verify_hamilton_field

EXIT_OK, EXIT_USAGE, EXIT_PRECONDITION, EXIT_NUMERICAL, EXIT_INTERNAL = 0, 1, 2, 3, 4


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: error: {message}")


def _positive_int(text: str) -> int:
    try:
        v = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected an integer, got {text!r}") from None
    if v < 1:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {v}")
    return v


def _nonneg_int(text: str) -> int:
    try:
        v = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected an integer, got {text!r}") from None
    if v < 0:
        raise argparse.ArgumentTypeError(f"expected a non-negative integer, got {v}")
    return v


def _positive_float(text: str) -> float:
    try:
        v = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected a number, got {text!r}") from None
    if not v > 0 or v == float("inf"):
        raise argparse.ArgumentTypeError(f"expected a positive number, got {text}")
    return v


def _float(text: str) -> float:
    try:
        return float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected a number, got {text!r}") from None


def _floats(v) -> list[float]:
    return [float(x) for x in np.asarray(v, dtype=float).ravel()]


def _required(failure: str) -> str:
    """The condition a failure string negates (``≠`` and ``=`` swapped)."""
    return failure.replace("≠", "\0").replace("=", "≠").replace("\0", "=")


# commands

def cmd_check_radial(args) -> tuple[dict, str, int]:
    P = parse_symbol_file(args.file)
    rep = radial_check(P)
    data = {"in_class": rep.in_class, "failures": list(rep.failures), "lambda": jet_to_json(rep.lambda_factor),
            "symbol": symbol_to_json(P)}
    lines = [f"in_class: {str(rep.in_class).lower()}, lambda: {rep.lambda_factor}"]
    lines += [f"condition violated: {_required(f)} (found {f})" for f in rep.failures]
    return data, "\n".join(lines), EXIT_OK if rep.in_class else EXIT_PRECONDITION


def cmd_normalize_principal(args):
    P = parse_symbol_file(args.file, cap_fil=args.cap_fil, cap_y=args.cap_y)
    pc = normalize_principal(P.principal)
    data = {"symbol": symbol_to_json(P), "certificate": principal_to_json(pc)}
    lines = [f"caps: N={pc.caps.N}, M={pc.caps.M} (work y-cap {pc.work_caps.M})",
             f"lambda: {pc.lambda_factor}",
             f"elliptic factor: {pc.elliptic_factor.with_caps(pc.caps)}"]
    lines += [f"b_{l}: {b.with_caps(pc.caps)}" for l, b in sorted(pc.generators.items())]
    lines.append(f"replay: {'pass' if pc.replay_ok else 'FAIL'} (residual filtration {pc.replay_filtration})")
    return data, "\n".join(lines), EXIT_OK


def cmd_normalize_full(args):
    P = parse_symbol_file(args.file, cap_fil=args.cap_fil, cap_y=args.cap_y)
    cert = normalize_full(P, args.stages, routing=args.routing)
    data = {"symbol": symbol_to_json(P), "certificate": certificate_to_json(cert)}
    lines = [f"caps: N={cert.caps.N}, M={cert.caps.M}; stages 0..{cert.K}; routing {cert.routing}",
             f"p0: {cert.p0}"]
    for st in cert.stages:
        lines.append(f"stage {st.k}: b~ = {st.b_tilde.with_caps(cert.caps)}; f = {st.f.with_caps(cert.caps)}")
    for r in cert.replay:
        lines.append(f"replay order {r.order}: {'pass' if r.ok else 'FAIL'} (filtration {r.filtration})")
    return data, "\n".join(lines), EXIT_OK


def cmd_verify_hamilton(args):
    rng = random.Random(args.seed)
    caps = JetCaps(args.n, args.degree + 1, args.degree)
    matches, failures = 0, []
    for trial in range(args.trials):
        a = random_jet(rng, caps, args.degree, 5)
        b = random_jet(rng, caps, args.degree, 5)
        s, t = rng.randint(-2, 2), rng.randint(-2, 2)
        bad = verify_hamilton_field(a)
        try:
            check_against_oracle(a, s, b, t)
        except RadnfError:
            bad.append(f"bracket({s},{t})")
        if bad:
            failures.append({"trial": trial, "mismatches": bad})
        else:
            matches += 1
    data = {"n": args.n, "degree": args.degree, "trials": args.trials, "seed": args.seed, "matches": matches,
            "failures": failures}
    text = f"oracle matches: {matches}/{args.trials}"
    return data, text, EXIT_OK if matches == args.trials else EXIT_INTERNAL


def _flow_params(args) -> FlowParams:
    kw = {}
    if getattr(args, "tol", None) is not None:
        kw.update(abs_tol=args.tol, rel_tol=args.tol)
    if getattr(args, "T", None) is not None:
        kw["T_max"] = args.T
    return FlowParams(**kw)


def _params_json(p: FlowParams) -> dict:
    return {"abs_tol": p.abs_tol, "rel_tol": p.rel_tol, "T_max": p.T_max, "T_start": p.T_start,
            "fd_step": p.step_for_differences()}


def _box(ff, default=0.3):
    return ff.box or tuple((-default, default) for _ in range(ff.spec.k))


def cmd_flow_linearize(args):
    ff = parse_flow_file(args.file)
    params = _flow_params(args)
    box = _box(ff)
    points = ff.points or 9
    residual = linearization_residual(ff.spec, box, params, points)
    samples = []
    for x in box_grid(box, 3):
        w = wminus_map(ff.spec, x, params)
        samples.append({"x": _floats(x), "W": _floats(w.value), "cauchy": w.cauchy, "horizon": w.horizon})
    data = {"params": _params_json(params), "box": [list(b) for b in box], "points": points,
            "linearization_residual": residual, "samples": samples}
    lines = [f"linearization residual: {residual:.3e} over {points}^{ff.spec.k} grid",
             f"max Cauchy difference: {max(s['cauchy'] for s in samples):.3e}"]
    return data, "\n".join(lines), EXIT_OK


def cmd_transport_solve(args):
    ff = parse_flow_file(args.file)
    if ff.g is None:
        raise PreconditionError("flow file has no 'g:' terms")
    c = args.c if args.c is not None else ff.c
    if c is None:
        raise PreconditionError("no c given (use --c or 'c =' in the flow file)")
    params = _flow_params(args)
    box = _box(ff, 0.5)
    points = ff.points or 5
    rows, worst = [], 0.0
    for x in box_grid(box, points):
        f = transport_solve(ff.spec, ff.g, c, x, params, ff.direction)
        r = transport_residual(ff.spec, ff.g, c, x, params, ff.direction)
        worst = max(worst, r)
        rows.append({"x": _floats(x), "f": f, "residual": r})
    data = {"params": _params_json(params), "c": c, "direction": ff.direction, "values": rows,
            "max_residual": worst}
    return data, f"transport residual |Vf + cf - g|: max {worst:.3e} at {len(rows)} points", EXIT_OK


def cmd_limit_probe(args):
    ff = parse_flow_file(args.file)
    params = _flow_params(args)
    grid = ff.probe
    if grid is None:
        off = [i for i in range(ff.spec.k) if i not in ff.spec.L]
        if not off:
            raise PreconditionError("L is the whole space; nothing to probe")
        direction = [0.0] * ff.spec.k
        direction[off[0]] = 1.0
        grid = ProbeGrid(((0.0,) * ff.spec.k,), tuple(direction))
    rep = limit_map_probe(ff.spec, grid, params)
    finest = []
    for per_mesh in rep.derivatives:
        ok = [m for m in per_mesh if m is not None]
        finest.append(_floats(ok[-1][0]) if ok else None)
    data = {"params": _params_json(params), "stable": rep.stable, "drift": rep.drift, "jump": rep.jump,
            "nonconvergent_points": rep.nonconvergent_points, "tolerance": rep.tolerance,
            "base_points": [list(p) for p in grid.base_points], "direction": list(grid.direction),
            "derivative_estimates": finest}
    verdict = "stable" if rep.stable else "NOT stable"
    lines = [f"limit map derivative across L: {verdict}",
             f"drift {rep.drift:.3e}, one-sided jump {rep.jump:.3e}, non-convergent points {rep.nonconvergent_points}"]
    return data, "\n".join(lines), EXIT_OK


COMMANDS = {
    "check-radial": cmd_check_radial,
    "normalize-principal": cmd_normalize_principal,
    "normalize-full": cmd_normalize_full,
    "verify-hamilton": cmd_verify_hamilton,
    "flow-linearize": cmd_flow_linearize,
    "transport-solve": cmd_transport_solve,
    "limit-probe": cmd_limit_probe,
}


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="radnf", description="Radial-point normal forms: symbolic certificates and flow checks.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", metavar="command", parser_class=_Parser)
    sub.required = True

    def common(p):
        p.add_argument("--seed", type=int, default=0, help="random seed (default 0)")
        p.add_argument("--out", help="output .json file or directory (default: $RADNF_OUT_DIR)")

    p = sub.add_parser("check-radial", help="check the radial-class conditions")
    p.add_argument("file")
    common(p)
    for name, helptext in (("normalize-principal", "normalize the principal part to z"),
                           ("normalize-full", "normalize to z + p0(y)")):
        p = sub.add_parser(name, help=helptext)
        p.add_argument("file")
        p.add_argument("--cap-fil", type=_positive_int, help="filtration cap N")
        p.add_argument("--cap-y", type=_nonneg_int, help="y-degree cap M")
        if name == "normalize-full":
            p.add_argument("--stages", type=_nonneg_int, default=3, help="last stage index K (default 3)")
            p.add_argument("--routing", choices=("f_first", "b_first"), default="f_first")
        common(p)
    p = sub.add_parser("verify-hamilton", help="random checks of the chart formulas against the oracle")
    p.add_argument("--n", type=int, default=2, choices=(2, 3, 4))
    p.add_argument("--degree", type=_positive_int, default=3)
    p.add_argument("--trials", type=_positive_int, default=20)
    common(p)
    p = sub.add_parser("flow-linearize", help="W- map and conjugacy residual")
    p.add_argument("file")
    p.add_argument("--T", type=_positive_float, help="maximal horizon")
    p.add_argument("--tol", type=_positive_float, help="absolute and relative tolerance")
    common(p)
    p = sub.add_parser("transport-solve", help="solve V f + c f = g along trajectories")
    p.add_argument("file")
    p.add_argument("--c", type=_float)
    p.add_argument("--tol", type=_positive_float)
    common(p)
    p = sub.add_parser("limit-probe", help="smoothness probe of the forward limit map across L")
    p.add_argument("file")
    common(p)
    return parser


def _atomic_write(path: Path, text: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def output_paths(command: str, out: str | None) -> tuple[Path, Path] | None:
    if out is None:
        env = os.environ.get("RADNF_OUT_DIR")
        if not env:
            return None
        out_dir = Path(env)
        return out_dir / f"{command}.json", out_dir / f"{command}.txt"
    p = Path(out)
    if p.suffix == ".json":
        return p, p.with_suffix(".txt")
    return p / f"{command}.json", p / f"{command}.txt"


def dump_json(data: dict) -> str:
    return json.dumps(data, sort_keys=True, indent=2, ensure_ascii=False, allow_nan=False) + "\n"


def run_command(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except UsageError as exc:
        print(parser.format_usage().rstrip(), file=sys.stderr)
        print(exc, file=sys.stderr)
        return EXIT_USAGE
    except SystemExit as exc:  # --help / --version
        return int(exc.code or 0)
    try:
        data, text, code = COMMANDS[args.command](args)
    except (PreconditionError, OSError, UnicodeDecodeError) as exc:
        print(f"precondition violated: {exc}", file=sys.stderr)
        return EXIT_PRECONDITION
    except NumericalError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except Exception as exc:  # internal invariant broken
        print(f"internal error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_INTERNAL
    record = {"command": args.command, "exit_code": code, "result": data}
    print(text)
    paths = output_paths(args.command, args.out)
    if paths is not None:
        try:
            _atomic_write(paths[0], dump_json(record))
            _atomic_write(paths[1], text + "\n")
        except OSError as exc:
            print(f"cannot write output: {exc}", file=sys.stderr)
            return EXIT_PRECONDITION
    return code


def main() -> None:
    sys.exit(run_command())


if __name__ == "__main__":
    main()
