"""Command-line interface.

Exit status: 0 valid / solvable, 2 obstructed, 1 error.
"""
from __future__ import annotations

import argparse
import json
import math
import sys
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from . import axial as ax
from .closure import DEFAULT_TOL, build_monodromy, solve_all, solve_closure
from .errors import InputError, ScrewCohomError, ValidationError
from .lattice import classify, enumerate_group, validate
from .orbits import enumerate_orbits
from .spectrum import (
    CoefficientField,
    ScrewMotion,
    TruncationSpec,
    evaluate_many,
    field_from_records,
    field_to_records,
    format_rational,
    koopman_minus_id,
    parse_rational,
    random_field,
    sample_haar,
)

EXIT_OK, EXIT_ERROR, EXIT_OBSTRUCTED = 0, 1, 2

Z90 = [[0, -1, 0], [1, 0, 0], [0, 0, 1]]


class CliError(Exception):
    pass


# -- canonical JSON -----------------------------------------------------------

def _encode(obj, out):
    if obj is None:
        out.append("null")
    elif obj is True:
        out.append("true")
    elif obj is False:
        out.append("false")
    elif isinstance(obj, (int, np.integer)):
        out.append(str(int(obj)))
    elif isinstance(obj, (float, np.floating)):
        x = float(obj)
        if not math.isfinite(x):
            raise ValueError(f"non-finite float {x!r} in output")
        text = format(x, ".17g")
        if not any(c in text for c in ".en"):
            text += ".0"
        out.append(text)
    elif isinstance(obj, str):
        out.append(json.dumps(obj))
    elif isinstance(obj, Fraction):
        out.append(json.dumps(format_rational(obj)))
    elif isinstance(obj, dict):
        out.append("{")
        for i, key in enumerate(sorted(obj)):
            if i:
                out.append(", ")
            out.append(json.dumps(str(key)) + ": ")
            _encode(obj[key], out)
        out.append("}")
    elif isinstance(obj, (list, tuple)):
        out.append("[")
        for i, item in enumerate(obj):
            if i:
                out.append(", ")
            _encode(item, out)
        out.append("]")
    else:
        raise TypeError(f"cannot serialize {type(obj).__name__}")


def dumps(obj) -> str:
    """Deterministic JSON: sorted keys, floats with 17 significant digits."""
    out = []
    _encode(obj, out)
    return "".join(out) + "\n"


# -- problem files ------------------------------------------------------------

@dataclass
class Problem:
    screw: ScrewMotion
    spec: TruncationSpec
    g: CoefficientField
    tol: float
    seed: int


def _int(value, where):
    if isinstance(value, bool) or not isinstance(value, int) or value < 0:
        raise InputError(f"{where}: expected a nonnegative integer, got {value!r}")
    return value


def parse_problem(data) -> Problem:
    if not isinstance(data, dict):
        raise InputError("problem file must be a JSON object")
    for key in ("R0", "t", "kmax", "lmax", "g"):
        if key not in data:
            raise InputError(f"missing field '{key}'")
    try:
        rot = validate(data["R0"])
    except ValidationError as exc:
        raise InputError(f"R0: {type(exc).__name__}: {exc}") from None
    t = data["t"]
    if not isinstance(t, list) or len(t) != 3:
        raise InputError("t: expected an array of 3 rational strings")
    comps = []
    for i, c in enumerate(t):
        try:
            comps.append(parse_rational(c))
        except InputError as exc:
            raise InputError(f"t[{i}]: {exc}") from None
    spec = TruncationSpec(_int(data["kmax"], "kmax"), _int(data["lmax"], "lmax"))
    g = field_from_records(spec, data["g"], where="g")
    tol = data.get("tol", DEFAULT_TOL)
    if isinstance(tol, bool) or not isinstance(tol, (int, float)) or not tol > 0:
        raise InputError(f"tol: expected a positive number, got {tol!r}")
    seed = data.get("seed", 0)
    if isinstance(seed, bool) or not isinstance(seed, int):
        raise InputError(f"seed: expected an integer, got {seed!r}")
    return Problem(ScrewMotion(tuple(comps), rot), spec, g, float(tol), seed)


def _read_json(path, what):
    try:
        with open(path) as fh:
            return json.load(fh)
    except OSError as exc:
        raise CliError(f"cannot read {what} {path}: {exc.strerror}") from None
    except json.JSONDecodeError as exc:
        raise CliError(f"{what} {path}: invalid JSON at line {exc.lineno}, column {exc.colno}: {exc.msg}") from None


def load_problem(path) -> Problem:
    return parse_problem(_read_json(path, "problem file"))


def problem_to_json(screw: ScrewMotion, spec: TruncationSpec, g: CoefficientField, tol=None, seed=None) -> dict:
    out = {
        "R0": screw.rotation.to_list(),
        "t": [format_rational(c) for c in screw.t],
        "kmax": spec.kmax,
        "lmax": spec.lmax,
        "g": field_to_records(g),
    }
    if tol is not None:
        out["tol"] = tol
    if seed is not None:
        out["seed"] = seed
    return out


def _write(path, text):
    try:
        with open(path, "w") as fh:
            fh.write(text)
    except OSError as exc:
        raise CliError(f"cannot write {path}: {exc.strerror}") from None


def _emit(args, payload, text=None):
    body = text if args.format == "text" and text is not None else dumps(payload)
    if getattr(args, "out", None) and args.command not in ("solve", "verify"):
        _write(args.out, body)
    else:
        sys.stdout.write(body)


def _tol(args, problem=None):
    if args.tol is not None:
        return args.tol
    return problem.tol if problem is not None else DEFAULT_TOL


# -- commands -----------------------------------------------------------------

def cmd_validate(args) -> int:
    try:
        prob = load_problem(args.problem)
    except (InputError, CliError) as exc:
        print(f"invalid: {exc}", file=sys.stderr)
        return EXIT_ERROR
    rot = prob.screw.rotation
    payload = {
        "valid": True,
        "order": rot.order,
        "classification": classify(rot),
        "t": [format_rational(c) for c in prob.screw.t],
        "kmax": prob.spec.kmax,
        "lmax": prob.spec.lmax,
        "coefficients": sum(int(np.count_nonzero(v)) for v in prob.g.blocks.values()),
    }
    text = (
        f"valid: R0 has order {rot.order} ({payload['classification']}); "
        f"t = ({', '.join(payload['t'])}); kmax = {prob.spec.kmax}, lmax = {prob.spec.lmax}; "
        f"{payload['coefficients']} nonzero coefficients\n"
    )
    _emit(args, payload, text)
    return EXIT_OK


def cmd_orbits(args) -> int:
    prob = load_problem(args.problem)
    orbits = enumerate_orbits(prob.spec, prob.screw)
    payload = {"count": len(orbits), "orbits": [o.to_json() for o in orbits]}
    lines = [f"{len(orbits)} orbits"] + [
        f"  {tuple(o.rep)}  L={o.length}  phase_sum={format_rational(o.phase_sum)}" for o in orbits
    ]
    _emit(args, payload, "\n".join(lines) + "\n")
    return EXIT_OK


def _report_text(report) -> str:
    lines = [f"{'solvable' if report.solvable else 'OBSTRUCTED'}: {len(report.records)} blocks reported, "
             f"{len(report.obstructions)} obstructed"]
    for r in report.obstructions:
        lines.append(f"  orbit {tuple(r.orbit_rep)} L={r.L} l={r.l} n={r.n} "
                     f"dim={r.obstruction_dim} norm={r.obstruction_norm:.6g}")
    return "\n".join(lines) + "\n"


def cmd_analyze(args) -> int:
    prob = load_problem(args.problem)
    outcome = solve_all(prob.g, prob.screw, _tol(args, prob), threads=args.threads)
    _emit(args, outcome.report.to_json(), _report_text(outcome.report))
    return EXIT_OK if outcome.report.solvable else EXIT_OBSTRUCTED


def cmd_solve(args) -> int:
    prob = load_problem(args.problem)
    tol = _tol(args, prob)
    outcome = solve_all(prob.g, prob.screw, tol, threads=args.threads)
    payload = outcome.report.to_json()
    if outcome.f is not None:
        payload["residual"] = (koopman_minus_id(outcome.f, prob.screw) - prob.g).norm()
        _write(args.out, dumps(field_to_records(outcome.f)))
        payload["solution"] = args.out
    text = _report_text(outcome.report)
    if args.report:
        _write(args.report, dumps(payload))
    sys.stdout.write(text if args.format == "text" else dumps(payload))
    return EXIT_OK if outcome.f is not None else EXIT_OBSTRUCTED


def verify_solution(prob: Problem, f: CoefficientField, tol: float, samples: int, seed: int,
                    with_oracle: bool = False) -> dict:
    """Residuals of a candidate solution; bounds scale with ``1 + ||g||``."""
    scale = 1.0 + prob.g.norm()
    coef = (koopman_minus_id(f, prob.screw) - prob.g).norm()
    out = {
        "coefficient_residual": coef,
        "coefficient_bound": 10.0 * tol * scale,
        "samples": samples,
    }
    ok = coef <= out["coefficient_bound"]
    if samples > 0:
        pts = sample_haar(seed, samples)
        moved = [prob.screw.apply(p) for p in pts]
        resid = evaluate_many(f, moved) - evaluate_many(f, pts) - evaluate_many(prob.g, pts)
        out["pointwise_residual"] = float(np.max(np.abs(resid)))
        out["pointwise_bound"] = 1000.0 * tol * scale
        ok = ok and out["pointwise_residual"] <= out["pointwise_bound"]
    if with_oracle:
        from .oracle import assemble_dense, compare

        op = assemble_dense(prob.spec, prob.screw)
        cmp = compare(prob.spec, prob.screw, prob.g, tol, op=op, strict=False)
        dense_res = op.weighted_norm(op.matrix @ op.vectorize(f) - op.vectorize(prob.g))
        out["oracle"] = cmp.to_json()
        out["oracle"]["dense_residual"] = dense_res
        ok = ok and cmp.agree and dense_res <= out["coefficient_bound"]
    out["ok"] = bool(ok)
    return out


def cmd_verify(args) -> int:
    prob = load_problem(args.problem)
    f = field_from_records(prob.spec, _read_json(args.solution, "solution file"), where="solution")
    seed = args.seed if args.seed is not None else prob.seed
    result = verify_solution(prob, f, _tol(args, prob), args.samples, seed, args.oracle)
    text = "\n".join(f"{k}: {v}" for k, v in sorted(result.items()) if k != "oracle") + "\n"
    body = text if args.format == "text" else dumps(result)
    if args.out:
        _write(args.out, body)
    sys.stdout.write(body)
    return EXIT_OK if result["ok"] else EXIT_ERROR


def _parse_t(text):
    parts = [p for p in text.split(",")]
    if len(parts) != 3:
        raise InputError(f"--t expects three comma-separated rationals, got {text!r}")
    return tuple(parse_rational(p) for p in parts)


def make_testcase(kind: str, seed: int, spec: TruncationSpec, screw: ScrewMotion | None = None,
                  decay: float = 0.0, axial: ax.AxialScrew | None = None) -> tuple[ScrewMotion, CoefficientField]:
    """Build a test problem; deterministic for a fixed seed."""
    if kind == "axial":
        screw = axial.screw()
        return screw, ax.axial_forcing(spec, axial, seed)
    f0 = random_field(spec, seed, decay)
    g = koopman_minus_id(f0, screw)
    if kind == "solvable":
        return screw, g
    if kind != "obstructed":
        raise InputError(f"unknown kind {kind!r}")
    candidates = []
    for orbit in enumerate_orbits(spec, screw):
        for ell in range(spec.lmax + 1):
            mono = build_monodromy(orbit, ell)
            if mono.resonant_multiplicity:
                candidates.append((orbit, ell, mono))
    rng = np.random.default_rng([seed, 1])
    orbit, ell, mono = candidates[int(rng.integers(len(candidates)))]
    n = int(rng.integers(-ell, ell + 1))
    v = solve_closure(mono, np.zeros(2 * ell + 1)).obstruction_basis[0]
    # G_0 enters the orbit forcing B with the identity, so <B, v> shifts by 1
    k0 = orbit.members[0]
    g = g.with_blocks({(k0, ell, n): g.block(k0, ell, n) + v})
    return screw, g


def cmd_make_testcase(args) -> int:
    spec = TruncationSpec(args.kmax, args.lmax)
    seed = args.seed if args.seed is not None else 0
    axial = None
    screw = None
    if args.kind == "axial":
        h, note = ax.parse_pitch(args.h)
        if note:
            print(note, file=sys.stderr)
        axial = ax.AxialScrew(args.p, args.q, h)
    else:
        try:
            r0 = validate(json.loads(args.R0))
        except json.JSONDecodeError:
            raise InputError(f"--R0 is not valid JSON: {args.R0!r}") from None
        screw = ScrewMotion(_parse_t(args.t), r0)
    screw, g = make_testcase(args.kind, seed, spec, screw, args.decay, axial)
    body = dumps(problem_to_json(screw, spec, g, tol=args.tol, seed=seed))
    if args.out:
        _write(args.out, body)
    else:
        sys.stdout.write(body)
    return EXIT_OK


def _parse_range(text):
    try:
        lo, hi = (int(v) for v in text.split(":"))
    except ValueError:
        raise InputError(f"--kz-range expects 'lo:hi', got {text!r}") from None
    if lo > hi:
        raise InputError("--kz-range: lo > hi")
    return lo, hi


def cmd_scan_axial(args) -> int:
    h, note = ax.parse_pitch(args.h)
    axial = ax.AxialScrew(args.p, args.q, h)
    lo, hi = _parse_range(args.kz_range)
    rows = ax.scan_rows(axial.p, axial.q, axial.h, range(lo, hi + 1), args.lmax)
    payload = {"p": axial.p, "q": axial.q, "h": format_rational(axial.h), "rows": rows}
    if note:
        payload["note"] = note
    status = EXIT_OK
    if args.end_to_end:
        spec = TruncationSpec(max(abs(lo), abs(hi)), args.lmax)
        seed = args.seed if args.seed is not None else 0
        report = ax.cross_check(axial, spec, _tol(args), seed=seed, threads=args.threads)
        payload["cross_check"] = report.to_json()
        status = EXIT_OK if report.ok else EXIT_ERROR
    lines = [f"p={axial.p} q={axial.q} h={format_rational(axial.h)}",
             f"{'kz':>4} {'p*kz*h':>10} {'resonant':>9}  obstructed m by l"]
    for r in rows:
        obs = "; ".join(f"l={ell}: {ms}" for ell, ms in r["obstructed_m"].items())
        lines.append(f"{r['kz']:>4} {r['p_kz_h']:>10} {str(r['resonant']):>9}  {obs}")
    if "cross_check" in payload:
        lines.append(f"end-to-end cross-check: {'ok' if payload['cross_check']['ok'] else 'MISMATCH'}")
    _emit(args, payload, "\n".join(lines) + "\n")
    return status


def cmd_group(args) -> int:
    group = enumerate_group()
    payload = [{"matrix": r.to_list(), "order": r.order, "classification": classify(r)} for r in group]
    lines = [f"{r.to_list()}  order {r.order}  {classify(r)}" for r in group]
    _emit(args, payload, "\n".join(lines) + "\n")
    return EXIT_OK


# -- argument parsing ---------------------------------------------------------

class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_ERROR, f"{self.prog}: error: {message}\n")


def build_parser() -> argparse.ArgumentParser:
    common = _Parser(add_help=False)
    common.add_argument("--tol", type=float, default=None, help="solvability / rank tolerance (default 1e-9)")
    common.add_argument("--seed", type=int, default=None)
    common.add_argument("--threads", type=int, default=None,
                        help="worker threads, 0 = auto (fallback: SCREWCOHOM_THREADS)")
    common.add_argument("--out", default=None, help="output path")
    common.add_argument("--format", choices=("json", "text"), default=None)

    parser = _Parser(prog="screwcohom", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("validate", parents=[common], help="check a problem file")
    p.add_argument("problem")
    p.set_defaults(func=cmd_validate, default_format="text")

    p = sub.add_parser("orbits", parents=[common], help="frequency orbit partition")
    p.add_argument("problem")
    p.set_defaults(func=cmd_orbits)

    p = sub.add_parser("analyze", parents=[common], help="solvability report")
    p.add_argument("problem")
    p.set_defaults(func=cmd_analyze)

    p = sub.add_parser("solve", parents=[common], help="solve and write the coefficient file of f")
    p.add_argument("problem")
    p.add_argument("--report", default=None, help="also write the report JSON here")
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("verify", parents=[common], help="residuals of a candidate solution")
    p.add_argument("problem")
    p.add_argument("solution")
    p.add_argument("--samples", type=int, default=100)
    p.add_argument("--oracle", action="store_true", help="also compare with the dense oracle")
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("make-testcase", parents=[common], help="generate a problem file")
    p.add_argument("--kind", choices=("solvable", "obstructed", "axial"), required=True)
    p.add_argument("--kmax", type=int, default=2)
    p.add_argument("--lmax", type=int, default=2)
    p.add_argument("--R0", default=json.dumps(Z90), help="rotation as a JSON 3x3 integer array")
    p.add_argument("--t", default="1/3,1/5,1/8", help="translation as 'a/b,c/d,e/f'")
    p.add_argument("--decay", type=float, default=0.0)
    p.add_argument("--p", type=int, default=4)
    p.add_argument("--q", type=int, default=1)
    p.add_argument("--h", default="1/8")
    p.set_defaults(func=cmd_make_testcase)

    p = sub.add_parser("scan-axial", parents=[common], help="resonance table for z-axis screws")
    p.add_argument("--p", type=int, required=True)
    p.add_argument("--q", type=int, default=1)
    p.add_argument("--h", required=True, help="pitch as 'a/b' (floats are approximated)")
    p.add_argument("--kz-range", default="-4:4")
    p.add_argument("--lmax", type=int, default=2)
    p.add_argument("--end-to-end", action="store_true", help="also cross-check with the general solver")
    p.set_defaults(func=cmd_scan_axial)

    p = sub.add_parser("group", parents=[common], help="list the 24 lattice rotations")
    p.set_defaults(func=cmd_group)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.format is None:
        args.format = getattr(args, "default_format", "json")
    try:
        return args.func(args)
    except (ScrewCohomError, CliError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
