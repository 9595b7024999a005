"""Command-line interface (``abbundle``).

Exit codes::

    0  success
    2  bad arguments or unreadable/invalid input file
    3  path not in generic position, open path, or too close to a puncture
    4  non-flat scenario (``holonomy --numeric`` without ``--force``; ``flatcheck``)
    5  cocycle validation failure
    6  trivialization or certificate verification failure
    7  no walk reached the detector screen
    8  resource cap exceeded

Errors are printed to stderr as a single ``error[<code>]: <message>`` line.
The default seed comes from ``ABBUNDLE_SEED`` (else 0); ``--seed`` overrides.
"""
from __future__ import annotations

import argparse
import os
import sys

import numpy as np

from . import cocycle as cc
from . import covering as cov
from . import liegroups as lg
from . import propagator as pr
from .freegroup import RankError, Word, abelianize, format_word, parse_word
from .geometry import (
    DegeneratePositionError,
    OpenPathError,
    PathTooCoarseError,
    PlanePath,
    PunctureLayoutError,
    loop_for_word,
    winding_numbers,
    word_of_loop,
)
from .holonomy import (
    GridSpec,
    PunctureProximityError,
    holonomy_map,
    holonomy_of_loop,
    holonomy_of_word,
    verify_flatness,
    wilson_line,
)
from .scenario import load_scenario
from .section import parallel_transport
from .serialize import FormatError, complex_to_json, dumps, matrix_to_json, read_json, read_points_csv

EXIT_PARSE = 2
EXIT_GENERIC = 3
EXIT_NON_FLAT = 4
EXIT_INVALID = 5
EXIT_VERIFY = 6
EXIT_SAMPLES = 7
EXIT_CAP = 8

SEED_ENV = "ABBUNDLE_SEED"


class CliError(Exception):
    def __init__(self, code: int, message: str):
        super().__init__(message)
        self.code = code


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise CliError(EXIT_PARSE, message)


def default_seed() -> int:
    raw = os.environ.get(SEED_ENV, "")
    if not raw:
        return 0
    try:
        return int(raw)
    except ValueError:
        raise CliError(EXIT_PARSE, f"{SEED_ENV}={raw!r} is not an integer") from None


def _emit(text: str, out: str | None) -> None:
    if out is None or out == "-":
        sys.stdout.write(text)
    else:
        with open(out, "w") as fh:
            fh.write(text)


def _word(text: str, rank: int) -> Word:
    try:
        return parse_word(text, rank)
    except (ValueError, RankError) as exc:
        raise CliError(EXIT_PARSE, str(exc)) from exc


def _loop_from_csv(path) -> PlanePath:
    return PlanePath.loop(read_points_csv(path))


# -- subcommands -------------------------------------------------------------

def cmd_classify(args) -> int:
    cfg = load_scenario(args.scenario)
    s = cfg.scenario
    loop = _loop_from_csv(args.path)
    w = word_of_loop(loop, s.punctures, s.rank)
    doc = {"word": format_word(w), "abelianization": abelianize(w).tolist()}
    if args.winding:
        doc["winding"] = winding_numbers(loop, s.punctures).tolist()
    _emit(dumps(doc), args.output)
    return 0


def _group_json(g) -> dict:
    return {"group": g.tag, "matrix": matrix_to_json(g.matrix)}


def cmd_holonomy(args) -> int:
    cfg = load_scenario(args.scenario)
    s = cfg.scenario
    phi = holonomy_map(s)
    if (args.word is None) == (args.path is None):
        raise CliError(EXIT_PARSE, "give exactly one of --word or --path")
    if args.word is not None:
        w = _word(args.word, s.rank)
        exact = holonomy_of_word(phi, w)
        loop = loop_for_word(s.basepoint, s.punctures, w) if args.numeric else None
        doc = {"word": format_word(w), "exact": _group_json(exact)}
    else:
        loop = _loop_from_csv(args.path)
        exact = holonomy_of_loop(s, loop, phi)
        doc = {"word": format_word(word_of_loop(loop, s.punctures, s.rank)), "exact": _group_json(exact)}
    if args.numeric:
        if not s.is_abelian() and not args.force:
            raise CliError(
                EXIT_NON_FLAT,
                "fluxes do not commute; the numeric Wilson loop is not a class function (use --force)",
            )
        num = wilson_line(s, loop, args.steps)
        doc["numeric"] = _group_json(num)
        doc["steps"] = args.steps
        doc["distance"] = lg.distance(exact, num)
    _emit(dumps(doc), args.output)
    return 0


def cmd_cocycle(args) -> int:
    if args.cocycle_cmd == "gen":
        seed = default_seed() if args.seed is None else args.seed
        if args.n < 1:
            raise CliError(EXIT_PARSE, "--n must be >= 1")
        c = cc.random_cocycle(args.n, args.group, seed)
        _emit(dumps(c.to_dict()), args.output)
        return 0
    if args.cocycle_cmd == "validate":
        c = cc.Cocycle.from_dict(read_json(args.file))
        rep = cc.validate_cocycle(c)
        doc = {
            "ok": rep.ok,
            "max_residual": rep.max_residual,
            "violations": [str(v) for v in rep.violations],
        }
        _emit(dumps(doc), args.output)
        return 0 if rep.ok else EXIT_INVALID
    if args.cocycle_cmd == "trivialize":
        c = cc.Cocycle.from_dict(read_json(args.file))
        rep = cc.validate_cocycle(c)
        if not rep.ok:
            raise CliError(EXIT_INVALID, f"invalid cocycle: {rep.violations[0]}")
        triv = cc.trivialize(c, args.samples)
        _emit(dumps(cc.certificate(c, triv)), args.output)
        return 0
    # verify
    c, triv = cc.load_certificate(read_json(args.file))
    rep = cc.verify_trivialization(c, triv, args.tol)
    _emit(dumps(rep.to_dict()), args.output)
    if not rep.passed:
        raise CliError(
            EXIT_VERIFY,
            f"certificate rejected: residual {rep.max_residual:.3e} at {rep.worst_residual}, "
            f"gap {rep.max_gap:.3e} at {rep.worst_gap} (bound {rep.delta_max:.3e})",
        )
    return 0


def cmd_interfere(args) -> int:
    cfg = load_scenario(args.scenario)
    seed = args.seed if args.seed is not None else None
    ens = cfg.ensemble(seed, default_seed(), steps=args.steps, samples=args.samples)
    screen = cfg.screen_points()
    phi = holonomy_map(cfg.scenario)
    result = pr.interference_scan(ens, screen, phi, threads=args.threads)
    _emit(result.to_csv(), args.output)
    summary = result.summary()
    summary["seed"] = ens.seed
    summary["steps"] = ens.steps
    if args.baseline:
        zero = cfg.scenario.with_fluxes([lg.zero_algebra(cfg.scenario.group_tag)] * cfg.scenario.rank)
        base = pr.tables_intensities(result.tables, holonomy_map(zero))
        try:
            summary["fringe_shift"] = pr.fringe_shift(result.intensities, base, screen)
        except pr.FlatPatternError as exc:
            summary["fringe_shift"] = None
            summary["fringe_shift_error"] = str(exc)
    if args.summary:
        _emit(dumps(summary), args.summary)
    return 0


def _rank_of(args) -> int:
    if args.scenario is not None:
        return load_scenario(args.scenario).scenario.rank
    if args.rank is None:
        raise CliError(EXIT_PARSE, "give --rank or --scenario")
    return args.rank


def cmd_cover(args) -> int:
    if args.cover_cmd == "ball":
        rank = _rank_of(args)
        ball = cov.fiber_ball(rank, args.radius, args.cap)
        doc = {"rank": rank, "radius": args.radius, "count": len(ball)}
        if not args.count_only:
            doc["words"] = [str(v) for v in ball]
        _emit(dumps(doc), args.output)
        return 0
    if args.cover_cmd == "lift":
        rank = _rank_of(args)
        start = cov.TreeVertex(_word(args.start, rank))
        end = cov.lift_loop(_word(args.word, rank), start)
        _emit(dumps({"start": str(start), "end": str(end)}), args.output)
        return 0
    # monodromy
    if args.scenario is None:
        raise CliError(EXIT_PARSE, "monodromy needs --scenario")
    s = load_scenario(args.scenario).scenario
    w = _word(args.word, s.rank)
    g = cov.monodromy_holonomy(holonomy_map(s), cov.TreeVertex(w))
    _emit(dumps({"word": format_word(w), **_group_json(g)}), args.output)
    return 0


def cmd_flatcheck(args) -> int:
    s = load_scenario(args.scenario).scenario
    xmin, xmax, ymin, ymax = args.bounds
    rep = verify_flatness(s, GridSpec(xmin, xmax, ymin, ymax, args.n, args.n, args.plaquette))
    _emit(dumps(rep.to_dict()), args.output)
    if rep.non_flat:
        raise CliError(EXIT_NON_FLAT, f"NON-FLAT: commuting defect in {rep.commutators}")
    return 0


def cmd_transport(args) -> int:
    s = load_scenario(args.scenario).scenario
    pts = read_points_csv(args.path)
    path = PlanePath(pts, closed=bool(np.linalg.norm(pts[0] - pts[-1]) == 0))
    if args.z is None:
        z0 = np.zeros(s.dim, dtype=np.complex128)
        z0[0] = 1.0
    else:
        try:
            nums = [float(v) for v in args.z.split(",")]
        except ValueError as exc:
            raise CliError(EXIT_PARSE, f"bad --z: {exc}") from exc
        if len(nums) != 2 * s.dim:
            raise CliError(EXIT_PARSE, f"--z needs {2 * s.dim} numbers (re,im per component)")
        z0 = np.array(nums[0::2]) + 1j * np.array(nums[1::2])
    z = parallel_transport(s, z0, path, args.steps)
    _emit(dumps({"steps": args.steps, "z": [complex_to_json(v) for v in z]}), args.output)
    return 0


# -- parser ------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="abbundle", description="Loops, holonomy, cocycles and interference in the punctured plane.")
    sub = p.add_subparsers(dest="cmd", required=True, parser_class=_Parser)

    def out(sp):
        sp.add_argument("-o", "--output", help="output file (default stdout)")

    c = sub.add_parser("classify", help="homotopy class of a closed loop")
    c.add_argument("scenario")
    c.add_argument("path", help="CSV of x,y vertices")
    c.add_argument("--winding", action="store_true", help="also report winding numbers")
    out(c)
    c.set_defaults(func=cmd_classify)

    h = sub.add_parser("holonomy", help="holonomy of a word or loop")
    h.add_argument("scenario")
    h.add_argument("--word")
    h.add_argument("--path", help="CSV loop starting at the basepoint")
    h.add_argument("--numeric", action="store_true", help="also integrate the Wilson loop")
    h.add_argument("--steps", type=int, default=10000, help="midpoint sub-steps per path segment")
    h.add_argument("--force", action="store_true", help="allow --numeric on non-flat scenarios")
    out(h)
    h.set_defaults(func=cmd_holonomy)

    k = sub.add_parser("cocycle", help="cocycle generation, validation, trivialization")
    ksub = k.add_subparsers(dest="cocycle_cmd", required=True, parser_class=_Parser)
    g = ksub.add_parser("gen")
    g.add_argument("--n", type=int, required=True)
    g.add_argument("--group", choices=lg.TAGS, default="SU2")
    g.add_argument("--seed", type=int)
    out(g)
    v = ksub.add_parser("validate")
    v.add_argument("file")
    out(v)
    t = ksub.add_parser("trivialize")
    t.add_argument("file")
    t.add_argument("--samples", type=int, default=64)
    out(t)
    f = ksub.add_parser("verify")
    f.add_argument("file")
    f.add_argument("--tol", type=float, default=cc.CONSTRUCTION_TOL)
    out(f)
    k.set_defaults(func=cmd_cocycle)

    i = sub.add_parser("interfere", help="intensity on the screen from the walk propagator")
    i.add_argument("scenario")
    i.add_argument("--seed", type=int)
    i.add_argument("--steps", type=int, help="override walk length T")
    i.add_argument("--samples", type=int, help="override walk count")
    i.add_argument("--threads", type=int, default=1)
    i.add_argument("--baseline", action="store_true", help="report fringe shift against zero flux")
    i.add_argument("--summary", help="write summary JSON here")
    out(i)
    i.set_defaults(func=cmd_interfere)

    cv = sub.add_parser("cover", help="universal cover of the wedge of circles")
    csub = cv.add_subparsers(dest="cover_cmd", required=True, parser_class=_Parser)
    for name in ("lift", "ball", "monodromy"):
        sp = csub.add_parser(name)
        sp.add_argument("--scenario")
        sp.add_argument("--rank", type=int)
        out(sp)
        if name == "lift":
            sp.add_argument("--word", required=True)
            sp.add_argument("--start", default="e")
        elif name == "ball":
            sp.add_argument("--radius", type=int, required=True)
            sp.add_argument("--cap", type=int, default=cov.DEFAULT_BALL_CAP)
            sp.add_argument("--count-only", action="store_true")
        else:
            sp.add_argument("--word", required=True)
    cv.set_defaults(func=cmd_cover)

    fl = sub.add_parser("flatcheck", help="scan plaquette holonomies for curvature")
    fl.add_argument("scenario")
    fl.add_argument("--bounds", type=float, nargs=4, default=(-5.0, 5.0, -5.0, 5.0),
                    metavar=("XMIN", "XMAX", "YMIN", "YMAX"))
    fl.add_argument("--n", type=int, default=41)
    fl.add_argument("--plaquette", type=float, default=1e-2)
    out(fl)
    fl.set_defaults(func=cmd_flatcheck)

    tr = sub.add_parser("transport", help="parallel transport of a fiber vector")
    tr.add_argument("scenario")
    tr.add_argument("--path", required=True, help="CSV of x,y vertices")
    tr.add_argument("--z", help="initial vector as re,im,re,im,...")
    tr.add_argument("--steps", type=int, default=1000)
    out(tr)
    tr.set_defaults(func=cmd_transport)
    return p


_ERROR_CODES = (
    (cov.ResourceCapError, EXIT_CAP),
    (pr.InsufficientSamplesError, EXIT_SAMPLES),
    (cc.TrivializationError, EXIT_VERIFY),
    (cc.CocycleError, EXIT_INVALID),
    ((DegeneratePositionError, OpenPathError, PathTooCoarseError, PunctureProximityError), EXIT_GENERIC),
    ((FormatError, PunctureLayoutError, pr.LatticeError, RankError, lg.GroupError), EXIT_PARSE),
)


def main(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
        return args.func(args)
    except CliError as exc:
        code, msg = exc.code, str(exc)
    except Exception as exc:  # map library errors to the exit table
        for types, c in _ERROR_CODES:
            if isinstance(exc, types):
                code, msg = c, str(exc)
                break
        else:
            if isinstance(exc, (ValueError, OSError)):
                code, msg = EXIT_PARSE, str(exc)
            else:
                raise
    print(f"error[{code}]: {' '.join(msg.split())}", file=sys.stderr)
    return code


def run() -> None:
    sys.exit(main())


if __name__ == "__main__":
    run()
