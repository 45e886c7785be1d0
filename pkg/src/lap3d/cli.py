"""Command-line harness: scenario registry dispatch, per-stage runs with
persisted reports, plot-data emission, and the pipeline orchestrator.

Commands: geometry, decay, dyadic, opnorm, solve, pipeline, scenarios.
Exit codes: 0 = all verdicts pass/recorded, 2 = an assumption failure was
detected (still a successful run), 1 = execution error.
"""

from __future__ import annotations

import argparse
import csv
import datetime
import hashlib
import json
import math
import os
import sys
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from . import __version__
from .dyadic import TRIAL_FAMILY_VERSION as STRICHARTZ_FAMILY
from .dyadic import build_profile, graph_patch, kernel_estimate_scan
from .extension import TRIAL_FAMILY_VERSION as OPNORM_FAMILY
from .extension import (
    VERTEX_A,
    VERTEX_B,
    VERTEX_B_PRIME,
    VERTEX_C,
    VERTEX_C_PRIME,
    ExponentPair,
    classify_exponents,
    opnorm_scan,
)
from .fields import GridField
from .geometry import check_assumptions
from .mesh import decay_scan, load_mesh, mesh_level_set
from .scenarios import REGISTRY, Scenario, get_scenario
from .solver import limiting_absorption
from .symbols import format_symbol, parse_symbol


def _fmt(x) -> str:
    """Lossless, deterministic text form for numeric CSV fields."""
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, (float, np.floating)):
        return repr(float(x))
    return str(x)


def _sha256(text: str) -> str:
    return hashlib.sha256(text.encode()).hexdigest()


def read_config(path: str | None) -> dict[str, str]:
    """Structured key-value text: one `key = value` per line, # comments."""
    cfg: dict[str, str] = {}
    if path is None:
        return cfg
    with open(path) as fh:
        for lineno, raw in enumerate(fh, 1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ValueError(f"{path}:{lineno}: expected 'key = value'")
            k, v = line.split("=", 1)
            cfg[k.strip()] = v.strip()
    return cfg


def config_hash(cfg: dict[str, str]) -> str:
    canon = "\n".join(f"{k}={cfg[k]}" for k in sorted(cfg))
    return _sha256(canon)


def config_seed(cfg: dict[str, str]) -> int:
    return int(config_hash(cfg)[:8], 16)


@dataclass
class RunManifest:
    command: str
    config_hash: str
    symbol_hash: str
    grid: dict
    started: str
    finished: str = ""
    schema: int = 1
    module_versions: dict = field(default_factory=dict)
    verdicts: dict = field(default_factory=dict)
    artifacts: list = field(default_factory=list)

    def finish(self):
        self.finished = _now()
        return self

    def to_json(self) -> str:
        return json.dumps(self.__dict__, indent=2, sort_keys=True, default=str)


def _now() -> str:
    return datetime.datetime.now(datetime.timezone.utc).isoformat()


def _new_manifest(args, sc: Scenario | None, cfg: dict) -> RunManifest:
    sym_text = format_symbol(sc.symbol) if sc is not None else ""
    return RunManifest(
        command=" ".join(sys.argv),
        config_hash=config_hash(cfg),
        symbol_hash=_sha256(sym_text),
        grid={"scenario": sc.name if sc else None},
        started=_now(),
        module_versions={
            "lap3d": __version__,
            "strichartz_trials": STRICHARTZ_FAMILY,
            "opnorm_trials": OPNORM_FAMILY,
        },
    )


def _write_csv(path, header, rows):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        for row in rows:
            w.writerow([_fmt(x) for x in row])


def _write_json(path, payload):
    with open(path, "w") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True, default=str)
        fh.write("\n")


# --- stages -----------------------------------------------------------------------


def _geometry_report(symbol, box, interval, resolution, outdir: str) -> dict:
    rep = check_assumptions(symbol, box, interval, resolution)
    curve_rows = []
    for c in rep.curves:
        tang = c.tangential if len(c.tangential) == len(c.nodes) else \
            np.zeros(len(c.nodes), dtype=bool)
        for node, w, z, t in zip(c.nodes, c.w, c.Z, tang):
            curve_rows.append((c.a, *node, *w, *z, int(t)))
    _write_csv(
        os.path.join(outdir, "degenerate_curves.csv"),
        ["a", "x", "y", "z", "wx", "wy", "wz", "Zx", "Zy", "Zz",
         "tangential_flag"],
        curve_rows,
    )
    _write_csv(
        os.path.join(outdir, "tangential_points.csv"),
        ["xi1", "xi2", "xi3"],
        [tuple(p) for p in rep.tangential_points],
    )
    payload = {
        "C0": rep.C0, "C1": rep.C1, "C2": rep.C2, "C3": rep.C3, "C4": rep.C4,
        "verdicts": rep.verdicts,
        "curves": [
            {"closed": c.closed, "length": c.length(), "nodes": len(c.nodes)}
            for c in rep.curves
        ],
        "tangential_count": len(rep.tangential_points),
    }
    _write_json(os.path.join(outdir, "geometry.json"), payload)
    return {"verdicts": rep.verdicts, "all_pass": rep.all_pass()}


def stage_geometry(sc: Scenario, outdir: str) -> dict:
    return _geometry_report(sc.symbol, sc.box, sc.interval, sc.resolution,
                            outdir)


def _decay_report(symbol, level, box, mesh_h, outdir: str,
                  directions: int = 64, rmin: float = 4.0,
                  rmax: float | None = None) -> dict:
    mesh = mesh_level_set(symbol, level, box, mesh_h)
    cap = 0.5 * math.pi / mesh.h
    if rmax is None:
        rmax = 128.0 if 128.0 <= cap else \
            2.0 ** math.floor(math.log2(cap / rmin)) * rmin
    rep = decay_scan(mesh, directions=directions, rmin=rmin, rmax=rmax)
    _write_csv(
        os.path.join(outdir, "decay_curve.csv"),
        ["wx", "wy", "wz", "R", "abs_mu", "alpha_fit"],
        rep.rows(),
    )
    _write_json(
        os.path.join(outdir, "decay.json"),
        {"alpha_min": rep.alpha_min, "fit_residual": rep.fit_residual,
         "rmax": rmax, "directions": len(rep.directions)},
    )
    return {"alpha_min": rep.alpha_min}


def stage_decay(sc: Scenario, outdir: str) -> dict:
    return _decay_report(sc.symbol, sc.level, sc.box, sc.mesh_h, outdir)


def stage_dyadic(sc: Scenario, outdir: str) -> dict:
    if sc.patch_point is None:
        return {"skipped": "scenario has no validated graph patch"}
    profile = build_profile()
    patch = graph_patch(sc.symbol, np.asarray(sc.patch_point), sc.patch_radius,
                        level=sc.level)
    deltas = 2.0 ** -np.arange(4, 8)
    scan = kernel_estimate_scan(patch, deltas, x3_samples=12, nodes_cap=600)
    _write_csv(
        os.path.join(outdir, "kernel_scan.csv"),
        ["delta", "max_abs_K"],
        list(zip(scan.deltas, scan.max_abs)),
    )
    _write_json(
        os.path.join(outdir, "dyadic.json"),
        {"kernel_exponent": scan.exponent,
         "profile_umax": profile.u.max(),
         "cone_constant": scan.cone_constant},
    )
    return {"kernel_exponent": scan.exponent}


_DEFAULT_PAIRS = (
    ExponentPair(Fraction(3, 4), Fraction(3, 20)),
    ExponentPair(*VERTEX_B),
    ExponentPair(*VERTEX_B_PRIME),
)


def stage_opnorm(sc: Scenario, outdir: str, seed: int, trials: int = 50) -> dict:
    mesh = mesh_level_set(sc.symbol, sc.level, sc.box, sc.mesh_h)
    rows = opnorm_scan(mesh, None, _DEFAULT_PAIRS, trials=trials,
                       symbol=sc.symbol, seed=seed)
    _write_csv(
        os.path.join(outdir, "opnorm.csv"),
        ["inv_p", "inv_q", "classification", "best_ratio", "trial_id"],
        [(str(r.pair.inv_p), str(r.pair.inv_q), r.classification,
          r.best_ratio, r.trial_id) for r in rows],
    )
    return {"best_ratios": {f"{r.pair.inv_p},{r.pair.inv_q}": r.best_ratio
                            for r in rows}}


def _export_solution(u: GridField, out_base: str, symbol_hash: str) -> list[str]:
    raw_path = out_base + ".u.c64"
    u.values.astype("<c8").tofile(raw_path)
    sidecar = out_base + ".u.json"
    _write_json(sidecar, {
        "dtype": "complex64-little-endian",
        "dims": list(u.dims),
        "spacing": list(map(float, u.spacing)),
        "origin": list(map(float, u.origin)),
        "symbol_hash": symbol_hash,
    })
    return [raw_path, sidecar]


def stage_solve(sc: Scenario, outdir: str, symbol_hash: str,
                grid: int | None = None) -> dict:
    n = grid or sc.grid
    w = sc.rhs_width
    f = GridField.centered_box(
        lambda P: np.exp(-np.sum(P**2, axis=-1) / (2 * w**2)), n, sc.half_length
    )
    run = limiting_absorption(sc.symbol, f, delta0=sc.delta0, steps=sc.steps,
                              sign=-1, keep_iterates=False)
    _write_csv(
        os.path.join(outdir, "norms_vs_delta.csv"),
        ["delta", "residual_l2", "u_l2"],
        [(d, r, nrm[2.0]) for d, r, nrm in
         zip(run.delta_schedule, run.residual_norms, run.norms)],
    )
    artifacts = _export_solution(run.final, os.path.join(outdir, "solve"),
                                 symbol_hash)
    payload = {
        "residual_slope": run.residual_slope,
        "cauchy_gaps": list(map(float, run.cauchy_gaps)),
        "cauchy_warning": run.cauchy_warning,
        "delta_schedule": list(map(float, run.delta_schedule)),
    }
    _write_json(os.path.join(outdir, "solve.json"), payload)
    return {"residual_slope": run.residual_slope,
            "cauchy_warning": run.cauchy_warning, "artifacts": artifacts}


STAGES = {
    "geometry": stage_geometry,
    "decay": stage_decay,
    "dyadic": stage_dyadic,
    "opnorm": stage_opnorm,
    "solve": stage_solve,
}

STAGE_ORDER = ("geometry", "decay", "dyadic", "opnorm", "solve")


class StageError(RuntimeError):
    def __init__(self, stage: str, cause: BaseException):
        super().__init__(f"stage {stage!r} failed: {cause!r}")
        self.stage = stage
        self.cause = cause


def run_pipeline(sc: Scenario, stages, outdir: str, cfg: dict) -> RunManifest:
    """Execute stages in canonical order, persist per-stage outputs, and
    aggregate verdicts; a stage error is propagated with its stage name and
    earlier outputs are retained."""
    os.makedirs(outdir, exist_ok=True)
    manifest = _new_manifest(None, sc, cfg)
    seed = config_seed(cfg)
    order = [st for st in STAGE_ORDER if st in set(stages)]
    unknown = set(stages) - set(STAGE_ORDER)
    if unknown:
        raise ValueError(f"unknown stages: {sorted(unknown)}")
    for st in order:
        try:
            if st == "opnorm":
                result = stage_opnorm(sc, outdir, seed)
            elif st == "solve":
                result = stage_solve(sc, outdir, manifest.symbol_hash)
            else:
                result = STAGES[st](sc, outdir)
        except Exception as exc:
            manifest.verdicts[st] = {"error": repr(exc)}
            manifest.finish()
            _write_json(os.path.join(outdir, "report.json"), manifest.__dict__)
            raise StageError(st, exc) from exc
        manifest.verdicts[st] = result
    manifest.finish()
    for name in sorted(os.listdir(outdir)):
        if name != "report.json":
            manifest.artifacts.append(os.path.join(outdir, name))
    _write_json(os.path.join(outdir, "report.json"), manifest.__dict__)
    return manifest


# --- plot data ---------------------------------------------------------------------

_PENTAGON = (
    ("A", VERTEX_A),
    ("B", VERTEX_B),
    ("C", VERTEX_C),
    ("B_prime", VERTEX_B_PRIME),
    ("C_prime", VERTEX_C_PRIME),
)


def emit_plotdata(outdir: str) -> list[str]:
    """Pentagon vertex table with exact rationals and classifications."""
    os.makedirs(outdir, exist_ok=True)
    path = os.path.join(outdir, "pentagon.csv")
    rows = []
    for name, (ip, iq) in _PENTAGON:
        verdict = classify_exponents(ExponentPair(ip, iq))
        rows.append((name, str(ip), str(iq), verdict.classification))
    _write_csv(path, ["vertex", "inv_p", "inv_q", "classification"], rows)
    return [path]


# --- argument parsing ---------------------------------------------------------------


def _build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="lap3d")
    ap.add_argument("--config", default=None, help="key = value text file")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("geometry")
    p.add_argument("--scenario", default=None)
    p.add_argument("--symbol", default=None, help="file with a symbol expression")
    p.add_argument("--box", default=None, help="x0,x1,y0,y1,z0,z1")
    p.add_argument("--interval", default=None, help="a0,a1")
    p.add_argument("--resolution", type=int, default=20)
    p.add_argument("--out", default="lap3d-out")

    p = sub.add_parser("decay")
    p.add_argument("--scenario", default=None)
    p.add_argument("--symbol", default=None, help="file with a symbol expression")
    p.add_argument("--level", type=float, default=0.0)
    p.add_argument("--box", default=None, help="x0,x1,y0,y1,z0,z1")
    p.add_argument("--mesh-h", type=float, default=None)
    p.add_argument("--directions", type=int, default=64)
    p.add_argument("--rmin", type=float, default=4.0)
    p.add_argument("--rmax", type=float, default=None)
    p.add_argument("--out", default="lap3d-out")

    p = sub.add_parser("dyadic")
    p.add_argument("--scenario", required=True)
    p.add_argument("--out", default="lap3d-out")

    p = sub.add_parser("opnorm")
    p.add_argument("--scenario", default=None)
    p.add_argument("--mesh", default=None, help=".npz mesh archive")
    p.add_argument("--pairs", default=None,
                   help="file: lines 'num_p/den_p num_q/den_q'")
    p.add_argument("--trials", type=int, default=50)
    p.add_argument("--out", default="lap3d-out")

    p = sub.add_parser("solve")
    p.add_argument("--scenario", default=None)
    p.add_argument("--symbol", default=None, help="file with a symbol expression")
    p.add_argument("--rhs", default="gaussian",
                   help="gaussian or file:PATH (raw little-endian complex64)")
    p.add_argument("--grid", type=int, default=128)
    p.add_argument("--box", type=float, default=16.0 * math.pi,
                   help="half-length of the centered cube")
    p.add_argument("--delta0", type=float, default=0.125)
    p.add_argument("--steps", type=int, default=6)
    p.add_argument("--sign", choices=["+", "-"], default="-")
    p.add_argument("--rhs-width", type=float, default=5.0)
    p.add_argument("--out", default="run.json")

    p = sub.add_parser("pipeline")
    p.add_argument("--scenario", required=True)
    p.add_argument("--stages", default=",".join(STAGE_ORDER))
    p.add_argument("--out", default="lap3d-out")
    p.add_argument("--plotdata", action="store_true")

    sub.add_parser("scenarios")
    return ap


def _apply_thread_cap():
    cap = os.environ.get("LAP3D_THREADS")
    if not cap:
        return
    try:
        import numba

        numba.set_num_threads(max(1, int(cap)))
    except Exception:
        pass


def _load_symbol(path):
    if path is None:
        raise ValueError("need --scenario NAME or --symbol FILE")
    with open(path) as fh:
        return parse_symbol(fh.read())


def _parse_box(text):
    if text is None:
        raise ValueError("need --box x0,x1,y0,y1,z0,z1")
    vals = [float(v) for v in text.split(",")]
    if len(vals) != 6:
        raise ValueError("--box needs 6 comma-separated numbers")
    return np.array(vals).reshape(3, 2)


def _parse_interval(text):
    if text is None:
        raise ValueError("need --interval a0,a1")
    a0, a1 = (float(v) for v in text.split(","))
    return (a0, a1)


def _read_pairs(path) -> list[ExponentPair]:
    pairs = []
    with open(path) as fh:
        for line in fh:
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            ip, iq = line.split()
            pairs.append(ExponentPair(Fraction(ip), Fraction(iq)))
    return pairs


def _cmd_opnorm(args, seed: int) -> dict:
    pairs = _read_pairs(args.pairs) if args.pairs else list(_DEFAULT_PAIRS)
    if args.mesh:
        mesh = load_mesh(args.mesh)
        symbol = None
    elif args.scenario:
        sc = get_scenario(args.scenario)
        mesh = mesh_level_set(sc.symbol, sc.level, sc.box, sc.mesh_h)
        symbol = sc.symbol
    else:
        raise ValueError("opnorm needs --scenario NAME or --mesh FILE")
    rows = opnorm_scan(mesh, None, pairs, trials=args.trials, symbol=symbol,
                       seed=seed)
    _write_csv(
        os.path.join(args.out, "opnorm.csv"),
        ["inv_p", "inv_q", "classification", "best_ratio", "trial_id"],
        [(str(r.pair.inv_p), str(r.pair.inv_q), r.classification,
          r.best_ratio, r.trial_id) for r in rows],
    )
    return {"best_ratios": {f"{r.pair.inv_p},{r.pair.inv_q}": r.best_ratio
                            for r in rows}}


def _cmd_solve(args, cfg) -> int:
    if args.symbol:
        with open(args.symbol) as fh:
            symbol = parse_symbol(fh.read())
        name = os.path.basename(args.symbol)
    elif args.scenario:
        sc = get_scenario(args.scenario)
        symbol = sc.symbol
        name = sc.name
    else:
        raise ValueError("solve needs --symbol FILE or --scenario NAME")
    n, L = args.grid, args.box
    if args.rhs == "gaussian":
        w = args.rhs_width
        f = GridField.centered_box(
            lambda P: np.exp(-np.sum(P**2, axis=-1) / (2 * w**2)), n, L
        )
    elif args.rhs.startswith("file:"):
        vals = np.fromfile(args.rhs[5:], dtype="<c8").astype(complex)
        if vals.size != n**3:
            raise ValueError(f"rhs file has {vals.size} entries, grid needs {n**3}")
        f = GridField.centered_box(lambda P: np.zeros(P.shape[:-1]), n, L)
        f = f.copy_with(vals.reshape((n, n, n)))
    else:
        raise ValueError("--rhs must be 'gaussian' or 'file:PATH'")
    run = limiting_absorption(symbol, f, delta0=args.delta0, steps=args.steps,
                              sign=-1 if args.sign == "-" else 1,
                              keep_iterates=False)
    manifest = RunManifest(
        command=" ".join(sys.argv),
        config_hash=config_hash(cfg),
        symbol_hash=_sha256(format_symbol(symbol)),
        grid={"n": n, "half_length": L, "scenario_or_symbol": name},
        started=_now(),
        module_versions={"lap3d": __version__},
    )
    out_base = args.out[:-5] if args.out.endswith(".json") else args.out
    manifest.artifacts = _export_solution(run.final, out_base,
                                          manifest.symbol_hash)
    manifest.verdicts["solve"] = {
        "residual_slope": run.residual_slope,
        "cauchy_warning": run.cauchy_warning,
    }
    manifest.finish()
    with open(args.out, "w") as fh:
        fh.write(manifest.to_json() + "\n")
    return 0


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    _apply_thread_cap()
    try:
        cfg = read_config(args.config)
        if args.command == "scenarios":
            for name in sorted(REGISTRY):
                print(name)
            return 0
        if args.command == "solve":
            return _cmd_solve(args, cfg)
        if args.command == "pipeline":
            sc = get_scenario(args.scenario)
            stages = [s.strip() for s in args.stages.split(",") if s.strip()]
            manifest = run_pipeline(sc, stages, args.out, cfg)
            if args.plotdata:
                emit_plotdata(args.out)
            geo = manifest.verdicts.get("geometry", {})
            failed = any(v == "fail" for v in geo.get("verdicts", {}).values())
            return 2 if failed else 0
        os.makedirs(args.out, exist_ok=True)
        seed = config_seed(cfg)
        if args.command == "geometry":
            if args.scenario:
                result = stage_geometry(get_scenario(args.scenario), args.out)
            else:
                result = _geometry_report(
                    _load_symbol(args.symbol), _parse_box(args.box),
                    _parse_interval(args.interval), args.resolution, args.out)
        elif args.command == "decay":
            if args.scenario:
                result = stage_decay(get_scenario(args.scenario), args.out)
            else:
                box = _parse_box(args.box)
                extent = min(hi - lo for lo, hi in box)
                mesh_h = args.mesh_h if args.mesh_h else extent / 40.0
                result = _decay_report(
                    _load_symbol(args.symbol), args.level, box, mesh_h,
                    args.out, directions=args.directions, rmin=args.rmin,
                    rmax=args.rmax)
        elif args.command == "opnorm":
            result = _cmd_opnorm(args, seed)
        else:
            result = STAGES[args.command](get_scenario(args.scenario), args.out)
        print(json.dumps(result, sort_keys=True, default=str))
        if args.command == "geometry" and not result.get("all_pass", True):
            return 2
        return 0
    except Exception as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
