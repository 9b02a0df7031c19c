"""Command line interface: ``pottstree <subcommand> [options]``.

Every subcommand writes CSV or JSON to ``--out`` (default stdout). Errors are
reported on stderr as one JSON line and give exit status 1.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import sys
from dataclasses import dataclass, field

import numpy as np

from . import __version__, bcond, dynamics, exactrec, tisgm
from .model import Configuration, ModelParams, ROOT, ball, format_addr, sphere


class UsageError(ValueError):
    pass


@dataclass
class RunSpec:
    command: str
    q: int
    k: int
    J: float | None
    theta: float | None
    out: str | None
    fmt: str
    options: dict = field(default_factory=dict)

    def params(self) -> ModelParams:
        if (self.J is None) == (self.theta is None):
            raise UsageError("give exactly one of --theta or --J")
        return ModelParams(q=self.q, k=self.k, J=self.J, theta=self.theta)

    def meta(self) -> dict:
        p = {"q": self.q, "k": self.k}
        if self.J is not None or self.theta is not None:
            params = self.params()
            p.update(J=params.J, theta=params.theta)
        p.update({key: val for key, val in sorted(self.options.items()) if _jsonable(val)})
        return {"tool": "pottstree", "version": __version__, "command": self.command, "parameters": p}


def _jsonable(val) -> bool:
    return isinstance(val, (int, float, str, bool, list)) or val is None


def _fmt(x):
    if isinstance(x, (float, np.floating)):
        return repr(float(x))
    return x


def _csv_text(header, rows, trailer=()) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([_fmt(x) for x in row])
    for line in trailer:
        buf.write(f"# {line}\n")
    return buf.getvalue()


def _json_text(spec: RunSpec, payload: dict) -> str:
    return json.dumps({"meta": spec.meta(), **payload}, indent=2, sort_keys=False) + "\n"


# ---------------------------------------------------------------- subcommands


def critical_thetas(q: int) -> list[float]:
    return sorted({*(tisgm.theta_crit(q, m) for m in range(1, q // 2 + 1)), float(q + 1)})


def phase_rows(q: int, theta_min: float, theta_max: float, steps: int) -> list[list]:
    if not 1 < theta_min < theta_max:
        raise UsageError("need 1 < theta_min < theta_max")
    if steps < 2:
        raise UsageError("steps must be >= 2")
    grid = list(np.linspace(theta_min, theta_max, steps))
    crit = [t for t in critical_thetas(q) if theta_min <= t <= theta_max]
    thetas = sorted(
        [t for t in grid if all(abs(t - c) > tisgm.THETA_TOL for c in crit)] + crit
    )
    return [[t, tisgm.count_tisgms(q, t), tisgm.regime_label(q, t)] for t in thetas]


def cmd_phase(spec: RunSpec) -> str:
    o = spec.options
    rows = phase_rows(spec.q, o["theta_min"], o["theta_max"], o["steps"])
    if spec.fmt == "json":
        return _json_text(spec, {"rows": [dict(zip(("theta", "count", "regime"), r)) for r in rows]})
    return _csv_text(["theta", "count", "regime_label"], rows)


def cmd_tisgm(spec: RunSpec) -> str:
    params = spec.params()
    params.require_classifiable()
    report = tisgm.enumerate_tisgms(params.q, params.theta)
    entries = []
    for d in report.descriptors:
        res = dynamics.residual(params, d.vector(params.q))
        entries.append(d.to_json(params.q, params.theta, residual=res))
    if spec.fmt == "json":
        return _json_text(
            spec,
            {"regime": report.regime, "count": report.count, "descriptors": entries},
        )
    rows = [
        [e["m"], e["branch"], " ".join(map(str, e["support"])), e["h"], e["residual"]]
        for e in entries
    ]
    return _csv_text(["m", "branch", "support", "h", "residual"], rows)


def cmd_fixedpoints(spec: RunSpec) -> str:
    params = spec.params()
    fps = dynamics.find_all_fixed_points(params)
    coords = [f"v{i}" for i in range(1, params.q)]
    if spec.fmt == "json":
        return _json_text(spec, {"fixed_points": [
            {"id": i, "coords": fp.location.tolist(), "residual": fp.residual,
             "stability": fp.stability, "spectral_radius": fp.spectral_radius,
             "descriptor": fp.descriptor.to_json(params.q, params.theta)}
            for i, fp in enumerate(fps)
        ]})
    rows = [
        [i, *fp.location, fp.residual, fp.stability, fp.spectral_radius]
        for i, fp in enumerate(fps)
    ]
    return _csv_text(["id", *coords, "residual", "stability", "spectral_radius"], rows)


def cmd_basin(spec: RunSpec) -> str:
    params = spec.params()
    o = spec.options
    m = o["m"]
    rows = []
    for v0 in o["v0"]:
        pred = dynamics.basin_predict(params, m, v0)
        res = dynamics.iterate(params, dynamics.on_line(params.q, m, v0), tol=o["tol"], max_iter=o["max_iter"])
        target = pred.vector(params.q)
        agree = bool(np.max(np.abs(res.limit - target)) < o["radius"])
        rows.append([v0, pred.label(), *res.limit, res.n_iter, int(agree)])
    header = ["v0_first", "predicted", *(f"limit_{i}" for i in range(1, params.q)), "iterations", "agree"]
    if spec.fmt == "json":
        return _json_text(spec, {"rows": [dict(zip(header, r)) for r in rows]})
    return _csv_text(header, rows)


def cmd_field(spec: RunSpec) -> str:
    params = spec.params()
    o = spec.options
    if params.q > 3 and o.get("slice") is None:
        raise UsageError("q > 3 needs --slice zero (other coordinates held at 0)")
    sample = dynamics.field_sample(params, o["lo"], o["hi"], o["n"], o["steps"])
    if spec.fmt == "json":
        return _json_text(spec, {"rows": [dict(zip(sample.header, r)) for r in sample.rows()]})
    return _csv_text(sample.header, sample.rows())


def _load_boundary(text: str, params: ModelParams):
    if text.startswith("@"):
        with open(text[1:]) as fh:
            text = fh.read()
    return bcond.parse_boundary_spec(text, params)


def _as_rule(obj):
    if isinstance(obj, bcond.SuccessorProfile):
        return obj.rule()
    return obj


def cmd_simulate(spec: RunSpec) -> str:
    params = spec.params()
    o = spec.options
    src = _load_boundary(o["boundary"], params)
    if isinstance(src, Configuration):
        depth = o["depth"]
        level = exactrec.level_ratios(params, depth, src, 1) if depth >= 1 else None
        marg = exactrec.root_marginal(params, depth, src)
        header = ["vertex", *(f"y_{l}" for l in range(1, params.q))]
        rows = [] if level is None else [[format_addr(v), *y] for v, y in sorted(level.values.items())]
        if spec.fmt == "json":
            return _json_text(spec, {"root_marginal": marg.tolist(),
                                     "level1": [dict(zip(header, r)) for r in rows]})
        return _csv_text(header, rows, [f"root_marginal: {json.dumps(marg.tolist())}"])
    res = bcond.empirical_classify(params, _as_rule(src), n_max=o["n_max"], tol=o["tol"])
    match = None if res.descriptor is None else res.descriptor.to_json(params.q, params.theta)
    traj = res.trajectory
    if spec.fmt == "json":
        return _json_text(spec, {
            "trajectory": [dict(zip(traj.csv_header(), r)) for r in traj.csv_rows()],
            "converged": res.converged,
            "limit": match if match is not None else "unresolved",
        })
    trailer = [f"limit: {json.dumps(match if match is not None else 'unresolved')}"]
    return _csv_text(traj.csv_header(), traj.csv_rows(), trailer)


def cmd_classify(spec: RunSpec) -> str:
    params = spec.params()
    o = spec.options
    src = _load_boundary(o["boundary"], params)
    if isinstance(src, Configuration):
        raise UsageError("classify needs a profile, rule or figure boundary")
    if isinstance(src, bcond.SuccessorRule):
        cv = bcond.measure_c_values(params, src, o["depth"])
        if not cv.strict:
            raise UsageError(
                f"rule is not strict (child counts vary between vertices); diagonal counts "
                f"{cv.diagonal_values()}; use simulate for an empirical limit"
            )
        profile = cv.profile
    else:
        profile = src
    pred = bcond.classify_boundary(params, profile)
    payload = {"profile": list(profile.c), "prediction": pred.to_json(params.q, params.theta),
               "label": pred.label()}
    if o.get("empirical"):
        emp = bcond.empirical_classify(params, _as_rule(src), n_max=o["n_max"], tol=o["tol"])
        payload["empirical"] = (
            "unresolved" if emp.descriptor is None else emp.descriptor.to_json(params.q, params.theta)
        )
        payload["agree"] = emp.descriptor == pred
    if spec.fmt == "json":
        return _json_text(spec, payload)
    header = ["profile", "label", "m", "branch", "support", "h"]
    row = [" ".join(map(str, profile.c)), pred.label(), pred.m, pred.branch,
           " ".join(map(str, pred.support)), pred.h]
    if "empirical" in payload:
        emp_label = payload["empirical"] if emp.descriptor is None else emp.descriptor.label()
        header += ["empirical", "agree"]
        row += [emp_label, int(payload["agree"])]
    return _csv_text(header, [row])


def oracle_report(params: ModelParams, depth: int, samples: int, seed: int) -> dict:
    """Largest relative gap between recursion and enumeration over random boundaries."""
    if depth < 1:
        raise UsageError("oracle needs depth >= 1")
    rng = np.random.default_rng(seed)
    outer = sphere(params, depth + 1)
    worst_root = worst_cyl = 0.0
    for _ in range(samples):
        omega = Configuration(params.q, dict(zip(outer, rng.integers(1, params.q + 1, len(outer)).tolist())))
        table = exactrec.brute_force_distribution(params, depth, omega)
        rec = exactrec.root_marginal(params, depth, omega)
        brute = table.marginal(ROOT)
        worst_root = max(worst_root, float(np.max(np.abs(rec - brute) / brute)))
        if depth >= 2:
            brute_cyl = table.cylinder_masses(ball(params, 1))
            for colors, p in exactrec.cylinder_table(params, depth, omega, 1).items():
                b = brute_cyl[colors]
                worst_cyl = max(worst_cyl, abs(p - b) / b)
    return {
        "states": params.q ** len(ball(params, depth)),
        "samples": samples,
        "max_rel_error_root": worst_root,
        "max_rel_error_cylinder": worst_cyl if depth >= 2 else None,
    }


def cmd_oracle(spec: RunSpec) -> str:
    params = spec.params()
    o = spec.options
    rep = oracle_report(params, o["depth"], o["samples"], o["seed"])
    if spec.fmt == "json":
        return _json_text(spec, rep)
    return _csv_text(list(rep), [list(rep.values())])


COMMANDS = {
    "phase": cmd_phase,
    "tisgm": cmd_tisgm,
    "simulate": cmd_simulate,
    "classify": cmd_classify,
    "oracle": cmd_oracle,
    "dynamics:fixedpoints": cmd_fixedpoints,
    "dynamics:basin": cmd_basin,
    "dynamics:field": cmd_field,
}


# ---------------------------------------------------------------- parsing


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--q", type=int, required=True)
    common.add_argument("--k", type=int, default=2)
    temp = common.add_mutually_exclusive_group()
    temp.add_argument("--theta", type=float)
    temp.add_argument("--J", type=float)
    common.add_argument("--out", help="output file (default stdout)")
    common.add_argument("--format", choices=("csv", "json"), default="csv")

    parser = argparse.ArgumentParser(prog="pottstree", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"pottstree {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("phase", parents=[common], help="TISGM count over a theta sweep")
    p.add_argument("--theta-min", type=float, required=True)
    p.add_argument("--theta-max", type=float, required=True)
    p.add_argument("--steps", type=int, default=101)

    sub.add_parser("tisgm", parents=[common], help="list all TISGMs at one theta")

    p = sub.add_parser("dynamics", help="fixed points, basins and vector field of G")
    dsub = p.add_subparsers(dest="mode", required=True)
    dsub.add_parser("fixedpoints", parents=[common])
    b = dsub.add_parser("basin", parents=[common])
    b.add_argument("--m", type=int, required=True)
    b.add_argument("--v0", type=float, nargs="+", required=True)
    b.add_argument("--tol", type=float, default=1e-12)
    b.add_argument("--max-iter", type=int, default=10**5)
    b.add_argument("--radius", type=float, default=dynamics.MATCH_RADIUS)
    f = dsub.add_parser("field", parents=[common])
    f.add_argument("--lo", type=float, default=-4.0)
    f.add_argument("--hi", type=float, default=4.0)
    f.add_argument("--n", type=int, default=41)
    f.add_argument("--steps", type=int, default=10**4)
    f.add_argument("--slice", choices=("zero",))

    for name, text in (("simulate", "exact recursion under a boundary condition"),
                       ("classify", "limiting measure predicted for a boundary condition")):
        p = sub.add_parser(name, parents=[common], help=text)
        p.add_argument("boundary", help="boundary spec as JSON text or @file")
        p.add_argument("--depth", type=int, default=4)
        p.add_argument("--n-max", type=int, default=200)
        p.add_argument("--tol", type=float, default=1e-9)
        if name == "classify":
            p.add_argument("--empirical", action="store_true")

    p = sub.add_parser("oracle", parents=[common], help="recursion vs brute-force enumeration")
    p.add_argument("--depth", type=int, default=2)
    p.add_argument("--samples", type=int, default=1)
    p.add_argument("--seed", type=int, default=0)
    return parser


def parse_spec(argv) -> RunSpec:
    args = vars(build_parser().parse_args(argv))
    command = args.pop("command")
    mode = args.pop("mode", None)
    if mode:
        command = f"{command}:{mode}"
    return RunSpec(
        command=command,
        q=args.pop("q"),
        k=args.pop("k"),
        J=args.pop("J"),
        theta=args.pop("theta"),
        out=args.pop("out"),
        fmt=args.pop("format"),
        options=args,
    )


def run(spec: RunSpec) -> str:
    if spec.q < 2:
        raise UsageError("q must be >= 2")
    return COMMANDS[spec.command](spec)


def main(argv=None) -> int:
    spec = parse_spec(argv)
    try:
        text = run(spec)
    except Exception as err:  # reported as a structured line, never a traceback
        sys.stderr.write(json.dumps({"error": type(err).__name__, "message": str(err)}) + "\n")
        return 1
    if spec.out:
        with open(spec.out, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return 0


if __name__ == "__main__":
    sys.exit(main())
