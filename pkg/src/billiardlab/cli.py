"""Command-line front end: ``billiardlab <command> [--config FILE] [--out DIR] [--seed N] [--jobs N]``.

Config files are flat JSON objects with ``"version": 1``; unknown keys are
rejected.  Recognised keys (defaults in brackets):

  boundary          "circle" | "oval" | "profile"            ["oval"]
  oval_eps, oval_k  oval r = 1 + oval_eps cos(oval_k psi)      [0.3, 2]
  profile_cos, profile_sin  coefficient lists for "profile"
  profile_file      path to {"cos": [...], "sin": [...]}
  kappa, eps, m_w, t1, t2, l_min, l_max, ... SuspensionConfig fields
  phase_coords      "lazutkin" | "billiard"                    ["lazutkin"]
  phase_orbits, phase_steps, phase_l_min, phase_l_max          [12, 400, 1e-5, 1e-3]
  phase_v_min, phase_v_max  angles for billiard coordinates    [0.05, 1.5]
  verify_points     x samples per action in main-theorem runs  [16]
  omega_min, omega_max, omega_count  beta grid (rationals)     [1e-3, 0.2, 40]
  alpha_count       c samples for alpha                        [30]
  q_cap, restarts   Mather approximation limits                [377, 3]
  resonances        rotation numbers for gap reports           [0.5]

Outputs (17 significant digits, fixed column order):

  boundary-info  boundary.json
  phase          phase.csv      orbit,step,x,l  (or orbit,step,s,v)
  verify         verify_<stage>.json (+ verification.csv for main-theorem)
  suspend        suspension_report.json, verification.csv
  mather         beta.csv omega,beta,err; alpha.csv c,alpha;
                 mather_set_<k>.csv x,momentum,gap_flag; mather_report.json

Exit codes: 0 success, 2 configuration error, 3 numerical failure or a
failed verification.
"""
from __future__ import annotations

import argparse
import json
import math
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import fields
from pathlib import Path

import numpy as np

from . import mather
from .billiard import BilliardState, orbit, write_orbit_csv
from .boundary import RadiusProfile, build_curve
from .errors import BilliardLabError, ClosureViolation, ConfigError, NonConvex
from .generating import LazutkinGF
from .lazutkin import LazutkinState, build_chart, lazutkin_orbit, verify_expansion_order, write_phase_csv
from .suspension import construct
from .suspension.config import SuspensionConfig
from .suspension.hamiltonian import TableHamiltonian

CONFIG_VERSION = 1
EXIT_OK, EXIT_CONFIG, EXIT_NUMERIC = 0, 2, 3

RUN_DEFAULTS = {
    "version": CONFIG_VERSION,
    "boundary": "oval",
    "oval_eps": 0.3,
    "oval_k": 2,
    "profile_cos": None,
    "profile_sin": None,
    "profile_file": None,
    "phase_coords": "lazutkin",
    "phase_orbits": 12,
    "phase_steps": 400,
    "phase_l_min": 1e-5,
    "phase_l_max": 1e-3,
    "phase_v_min": 0.05,
    "phase_v_max": 1.5,
    "verify_points": 16,
    "omega_min": 1e-3,
    "omega_max": 0.2,
    "omega_count": 40,
    "alpha_count": 30,
    "q_cap": mather.Q_CAP,
    "restarts": 3,
    "resonances": [0.5],
}
SUSPENSION_KEYS = {f.name for f in fields(SuspensionConfig)}


# -- configuration -----------------------------------------------------------------------------------

def load_config(path=None):
    """Merge a flat JSON file over the defaults; returns (run dict, SuspensionConfig)."""
    data = {}
    if path is not None:
        try:
            data = json.loads(Path(path).read_text())
        except OSError as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from exc
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config {path} is not valid JSON: {exc}") from exc
        if not isinstance(data, dict):
            raise ConfigError("config must be a JSON object")
        if data.get("version") != CONFIG_VERSION:
            raise ConfigError(f"config needs \"version\": {CONFIG_VERSION}")
    unknown = set(data) - set(RUN_DEFAULTS) - SUSPENSION_KEYS
    if unknown:
        raise ConfigError(f"unknown config keys: {sorted(unknown)}")
    run = dict(RUN_DEFAULTS)
    run.update({k: v for k, v in data.items() if k in RUN_DEFAULTS})
    scfg = SuspensionConfig.from_dict({k: v for k, v in data.items() if k in SUSPENSION_KEYS})
    _check_run(run)
    return run, scfg


def _check_run(run):
    if run["boundary"] not in ("circle", "oval", "profile"):
        raise ConfigError(f"unknown boundary {run['boundary']!r}")
    if run["phase_coords"] not in ("lazutkin", "billiard"):
        raise ConfigError(f"unknown phase_coords {run['phase_coords']!r}")
    for key in ("phase_orbits", "phase_steps", "omega_count", "alpha_count", "q_cap", "restarts", "verify_points"):
        if not isinstance(run[key], int) or run[key] < 1:
            raise ConfigError(f"{key} must be a positive integer")
    if not 0.0 < run["phase_l_min"] <= run["phase_l_max"]:
        raise ConfigError("need 0 < phase_l_min <= phase_l_max")
    if not 0.0 < run["phase_v_min"] <= run["phase_v_max"] < math.pi:
        raise ConfigError("need 0 < phase_v_min <= phase_v_max < pi")
    if not 0.0 < run["omega_min"] < run["omega_max"] < 1.0:
        raise ConfigError("need 0 < omega_min < omega_max < 1")
    if not isinstance(run["resonances"], list) or not all(0.0 < float(w) < 1.0 for w in run["resonances"]):
        raise ConfigError("resonances must be a list of rotation numbers in (0, 1)")


def boundary_from(run):
    kind = run["boundary"]
    try:
        if kind == "circle":
            profile = RadiusProfile.circle()
        elif kind == "oval":
            k = int(run["oval_k"])
            profile = RadiusProfile((1.0,) + (0.0,) * (k - 1) + (float(run["oval_eps"]),))
        elif run["profile_file"] is not None:
            profile = RadiusProfile.load(run["profile_file"])
        elif run["profile_cos"] is not None:
            profile = RadiusProfile.from_json({"cos": run["profile_cos"], "sin": run["profile_sin"] or []})
        else:
            raise ConfigError("boundary 'profile' needs profile_file or profile_cos")
        return build_curve(profile)
    except (NonConvex, ClosureViolation) as exc:
        raise ConfigError(str(exc)) from exc


# -- deterministic output ----------------------------------------------------------------------------

def _json_text(obj, indent=0):
    pad = "  " * (indent + 1)
    end = "  " * indent
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = [f"{pad}{json.dumps(str(k))}: {_json_text(v, indent + 1)}" for k, v in sorted(obj.items())]
        return "{\n" + ",\n".join(items) + "\n" + end + "}"
    if isinstance(obj, (list, tuple)):
        if not obj:
            return "[]"
        return "[" + ", ".join(_json_text(v, indent + 1) for v in obj) + "]"
    if isinstance(obj, (bool, np.bool_)):
        return "true" if obj else "false"
    if obj is None:
        return "null"
    if isinstance(obj, (int, np.integer)):
        return str(int(obj))
    if isinstance(obj, (float, np.floating)):
        v = float(obj)
        if math.isnan(v) or math.isinf(v):
            return json.dumps(str(v))
        return format(v, ".17g")
    return json.dumps(str(obj))


def write_json(obj, path):
    Path(path).write_text(_json_text(obj) + "\n")


# -- commands ----------------------------------------------------------------------------------------

def cmd_boundary_info(run, scfg, args):
    curve = boundary_from(run)
    chart = build_chart(curve)
    s = np.linspace(0.0, 1.0, 8, endpoint=False)
    info = {"boundary": run["boundary"], "curve": curve.summary(), "chart": chart.summary(),
            "radius_of_curvature_samples": np.asarray(curve.radius_of_curvature(s)).tolist(),
            "profile_cos": list(curve.profile.cos), "profile_sin": list(curve.profile.sin)}
    write_json(info, args.out / "boundary.json")
    print(_json_text(info))
    return EXIT_OK


def _lazutkin_orbit_cell(cell):
    chart, x, l, n = cell
    return lazutkin_orbit(chart, LazutkinState(x, l), n)


def _billiard_orbit_cell(cell):
    curve, s, v, n = cell
    return orbit(curve, BilliardState(s, v), n)


def _map(fn, cells, jobs):
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as ex:
            return list(ex.map(fn, cells))
    return [fn(c) for c in cells]


def cmd_phase(run, scfg, args):
    curve = boundary_from(run)
    n, steps = run["phase_orbits"], run["phase_steps"]
    rng = np.random.default_rng(args.seed)
    starts = rng.uniform(0.0, 1.0, n)
    path = args.out / "phase.csv"
    if run["phase_coords"] == "lazutkin":
        chart = build_chart(curve)
        ls = np.geomspace(run["phase_l_min"], run["phase_l_max"], n)
        orbits = _map(_lazutkin_orbit_cell, [(chart, float(x), float(l), steps) for x, l in zip(starts, ls)], args.jobs)
        write_phase_csv(path, orbits)
    else:
        vs = np.linspace(run["phase_v_min"], run["phase_v_max"], n)
        orbits = _map(_billiard_orbit_cell, [(curve, float(s), float(v), steps) for s, v in zip(starts, vs)], args.jobs)
        write_orbit_csv(path, orbits)
    print(f"wrote {path}")
    return EXIT_OK


def _stage_expansion(run, scfg, args):
    curve = boundary_from(run)
    s_points = np.linspace(0.0, 1.0, 4, endpoint=False)
    reports = [verify_expansion_order(curve, float(s)) for s in s_points]
    slopes = [r[k] for r in reports for k in ("s_slope", "v_slope", "h_slope") if r[k] is not None]
    worst = min(slopes) if slopes else None
    passed = worst is None or worst >= 3.9
    summary = [{k: r[k] for k in ("s", "s_slope", "v_slope", "h_slope", "exact")} for r in reports]
    return {"stage": "expansion", "min_slope": worst, "threshold": 3.9, "points": summary}, passed


def _stage_suspension(run, scfg, args):
    curve = boundary_from(run)
    chart = build_chart(curve)
    hhat = construct.piecewise_hamiltonian(chart, scfg)
    rng = np.random.default_rng(args.seed)
    x = rng.uniform(0.0, 1.0, 200)
    l = 10.0 ** rng.uniform(-6.0, -3.0, 200)
    _, _, _, _, dx, dl = construct.conjugation_errors(hhat, chart, x, l, rtol=scfg.ode_rtol)
    ls = np.geomspace(1e-6, 1e-3, 7)
    expo, sups = construct.remainder_exponent(TableHamiltonian(hhat.rt), ls)
    passed = bool(dx.max() < 1e-6 and dl.max() < 1e-5 and abs(expo - 2.5) <= 0.1)
    return {"stage": "suspension", "max_dx": float(dx.max()), "max_dl_rel": float(dl.max()),
            "dx_threshold": 1e-6, "dl_threshold": 1e-5, "remainder_exponent": expo,
            "remainder_sup": sups, "config": scfg.to_dict()}, passed


def _stage_positivity(run, scfg, args):
    chart = build_chart(boundary_from(run))
    hhat = construct.piecewise_hamiltonian(chart, scfg)
    smooth = construct.mollify_and_blend(hhat, scfg, check=False)
    rep = construct.positivity_check({"start": smooth.window, "end": smooth.mirror}, scfg, raise_on_fail=False)
    rep["stage"] = "positivity"
    rep["config"] = scfg.to_dict()
    return rep, bool(rep["margin"] > 0.0)


def _main_theorem(run, scfg, args):
    chart = build_chart(boundary_from(run))
    report, rows = construct.verify_main_theorem(chart, scfg, n_x=run["verify_points"], seed=args.seed)
    ce = report["conjugation_error"]
    passed = bool(ce["max_dx"] < 1e-5 and ce["max_dl_rel"] < 1e-5
                  and abs(report["remainder_exponent"] - 2.5) <= 0.1
                  and report["periodicity_error"] == 0.0
                  and report["positivity_margin"] is not None and report["positivity_margin"] > 0.0)
    report["passed"] = passed
    return report, rows, passed


def cmd_verify(run, scfg, args):
    stage = args.stage
    if stage in ("suspension", "positivity", "main-theorem"):
        scfg.validate()
    if stage == "expansion":
        report, passed = _stage_expansion(run, scfg, args)
    elif stage == "suspension":
        report, passed = _stage_suspension(run, scfg, args)
    elif stage == "positivity":
        report, passed = _stage_positivity(run, scfg, args)
    else:
        report, rows, passed = _main_theorem(run, scfg, args)
        construct.write_verification_csv(rows, args.out / "verification.csv")
    report["passed"] = passed
    name = f"verify_{stage.replace('-', '_')}.json"
    write_json(report, args.out / name)
    print(f"{stage}: {'PASS' if passed else 'FAIL'} ({args.out / name})")
    return EXIT_OK if passed else EXIT_NUMERIC


def cmd_suspend(run, scfg, args):
    scfg.validate()
    report, rows, passed = _main_theorem(run, scfg, args)
    construct.write_verification_csv(rows, args.out / "verification.csv")
    write_json(report, args.out / "suspension_report.json")
    print(f"suspension: {'PASS' if passed else 'FAIL'} ({args.out / 'suspension_report.json'})")
    return EXIT_OK if passed else EXIT_NUMERIC


def cmd_mather(run, scfg, args):
    curve = boundary_from(run)
    gf = LazutkinGF(build_chart(curve))
    grid = mather.rational_grid(run["omega_min"], run["omega_max"], run["omega_count"])
    if grid.size < 2:
        raise ConfigError("omega grid is empty")
    omegas = np.concatenate([[0.0], grid])
    table = mather.beta_table(gf, omegas, q_cap=run["q_cap"], seed=args.seed, jobs=args.jobs)
    lo, hi = table.slope_range()
    cs = np.geomspace(max(hi * 1e-3, 1e-300), hi, run["alpha_count"])
    atab = mather.alpha_table(table, cs)
    mather.write_beta_csv(table, args.out / "beta.csv")
    mather.write_alpha_csv(atab, args.out / "alpha.csv")
    report = {"boundary": run["boundary"], "beta_convex": table.convex,
              "alpha_convex": bool(np.all(atab.convexity_flags())),
              "fenchel_gap": mather.fenchel_gap(table, atab)}
    passed = report["beta_convex"] and report["fenchel_gap"] >= -1e-9
    try:
        report["degeneracy"] = mather.beta_degeneracy_check(table)
        passed = passed and report["degeneracy"]["passed"]
    except BilliardLabError as exc:
        report["degeneracy"] = {"error": str(exc)}
        passed = False
    if run["boundary"] == "circle":
        bref = mather.circle_beta(table.omega)
        valid = cs <= 2.0 / math.pi**2
        aref = mather.circle_alpha(cs[valid])
        report["circle"] = {"beta_max_abs_error": float(np.max(np.abs(table.beta - bref))),
                            "alpha_max_rel_error": float(np.max(np.abs(atab.alpha[valid] / aref - 1.0)))}
        passed = passed and report["circle"]["alpha_max_rel_error"] < 1e-2
    gaps = []
    for k, w in enumerate(run["resonances"]):
        ms = mather.gap_measure(gf, float(w), q_cap=run["q_cap"], restarts=run["restarts"], seed=args.seed)
        mather.write_mather_set_csv(ms, args.out / f"mather_set_{k}.csv")
        gaps.append({"omega": float(w), "p": ms.p, "q": ms.q, "largest_gap": ms.largest_gap,
                     "barrier": ms.barrier, "status": ms.status,
                     "gap_history": [list(h) for h in ms.gap_history],
                     "graph_violation": ms.graph_violation()})
    report["gaps"] = gaps
    report["passed"] = bool(passed)
    write_json(report, args.out / "mather_report.json")
    print(f"mather: {'PASS' if passed else 'FAIL'} ({args.out / 'mather_report.json'})")
    return EXIT_OK if passed else EXIT_NUMERIC


COMMANDS = {
    "boundary-info": cmd_boundary_info,
    "phase": cmd_phase,
    "verify": cmd_verify,
    "suspend": cmd_suspend,
    "mather": cmd_mather,
}


def build_parser():
    parser = argparse.ArgumentParser(prog="billiardlab", description=__doc__,
                                     formatter_class=argparse.RawDescriptionHelpFormatter)
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="flat JSON config file")
    common.add_argument("--out", default=".", help="output directory (created if missing)")
    common.add_argument("--seed", type=int, default=0, help="seed for random samples and restarts")
    common.add_argument("--jobs", type=int, default=1, help="worker processes for sweeps")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        p = sub.add_parser(name, parents=[common], description=__doc__,
                           formatter_class=argparse.RawDescriptionHelpFormatter)
        if name == "verify":
            p.add_argument("--stage", required=True,
                           choices=["expansion", "suspension", "positivity", "main-theorem"])
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        run, scfg = load_config(args.config)
        if args.jobs < 1:
            raise ConfigError("--jobs must be at least 1")
        args.out = Path(args.out)
        os.makedirs(args.out, exist_ok=True)
        return COMMANDS[args.command](run, scfg, args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (BilliardLabError, FloatingPointError, ArithmeticError) as exc:
        print(f"numerical failure: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
