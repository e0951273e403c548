"""Acceptance criteria 1-10, one PASS/FAIL line each.

Run on its own with ``pytest -s tests/test_acceptance.py`` to see the summary
lines interleaved with the pytest output; they are printed uncaptured anyway.
"""
import json
import math
import time

import numpy as np
import pytest

from billiardlab import boundary, cli, lazutkin, mather
from billiardlab.billiard import BilliardState, generating_h, reflect
from billiardlab.generating import CubicGF, CutoffGF, LazutkinGF
from billiardlab.suspension import construct
from billiardlab.suspension.lagrangian import (
    InterpolatingLagrangian, lagrangian, legendre_hamiltonian, minimize_path, path_action,
)

pytestmark = pytest.mark.acceptance


@pytest.fixture
def verdict(capsys):
    def report(n, ok, detail):
        with capsys.disabled():
            print(f"\nacceptance {n:>2}: {'PASS' if ok else 'FAIL'}  {detail}")
        assert ok, detail
    return report


def test_1_circle_exactness(circle_curve, verdict):
    rng = np.random.default_rng(0)
    s = rng.uniform(0.0, 1.0, 1000)
    v = rng.uniform(0.01, math.pi - 0.01, 1000)
    t0 = time.perf_counter()
    out = reflect(circle_curve, BilliardState(s, v))
    dt = time.perf_counter() - t0
    ds = np.abs((out.s - s - v / math.pi + 0.5) % 1.0 - 0.5)
    err = max(ds.max(), np.abs(out.v - v).max())
    verdict(1, err < 1e-10 and dt < 1.0, f"max error {err:.2e}, {dt:.3f} s")


def _partials_error(curve, rng):
    s = rng.uniform(0.0, 1.0, 100)
    sp = s + rng.uniform(0.02, 0.98, 100)
    c = generating_h(curve, s, sp)
    h = 1e-5

    def fd(f):
        # fourth-order central difference
        return (-f(2 * h) + 8 * f(h) - 8 * f(-h) + f(-2 * h)) / (12 * h)

    d1 = fd(lambda e: generating_h(curve, s + e, sp).h)
    d2 = fd(lambda e: generating_h(curve, s, sp + e).h)
    e1 = np.abs(d1 - np.cos(c.v)) / np.abs(np.cos(c.v))
    e2 = np.abs(d2 + np.cos(c.v_plus)) / np.abs(np.cos(c.v_plus))
    return float(max(e1.max(), e2.max()))


def test_2_generating_partials(circle_curve, oval_curve, verdict):
    rng = np.random.default_rng(2)
    errs = {name: _partials_error(curve, rng) for name, curve in (("circle", circle_curve), ("oval", oval_curve))}
    verdict(2, max(errs.values()) < 1e-6, ", ".join(f"{k} rel {v:.1e}" for k, v in errs.items()))


def test_3_expansion_orders(oval_curve, oval_chart, verdict):
    t0 = time.perf_counter()
    slopes = []
    for s in (0.0, 0.13, 0.37):
        rep = lazutkin.verify_expansion_order(oval_curve, s, chart=oval_chart)
        slopes += [rep["s_slope"], rep["v_slope"], rep["h_slope"]]
    dt = time.perf_counter() - t0
    worst = min(slopes)
    verdict(3, worst >= 3.9 and dt < 10.0, f"min slope {worst:.3f}, {dt:.2f} s")


def test_4_integrable_suspension(verdict):
    g = CubicGF()
    v = np.geomspace(1e-4, 0.5, 25)
    lerr = max(float(np.max(np.abs(lagrangian(g, x, v, t) / (v**3 / 6) - 1)))
               for x in (0.0, 0.3) for t in (0.0, 0.5, 0.9))
    lagr = InterpolatingLagrangian(g)
    l = np.geomspace(1e-8, 1e-2, 25)
    H = legendre_hamiltonian(lagr, 0.2, l, 0.4).H
    herr = float(np.max(np.abs(H / (2 * math.sqrt(2) / 3 * l**1.5) - 1)))
    verdict(4, max(lerr, herr) < 1e-10, f"L rel {lerr:.1e}, H rel {herr:.1e}")


def test_5_variational_identity(oval_chart, verdict):
    g = CutoffGF(LazutkinGF(oval_chart), 0.1)
    lagr = InterpolatingLagrangian(g)
    x, X = 0.2, 0.23
    rng = np.random.default_rng(5)
    start = np.linspace(x, X, 51)
    start[1:-1] += 0.2 * (X - x) / 50 * rng.uniform(-1, 1, 49)
    assert path_action(lagr, start) > float(g(x, X))
    res = minimize_path(lagr, x, X, start=start)
    rel = abs(res.action / float(g(x, X)) - 1)
    verdict(5, rel < 1e-6 and res.deviation < 1e-8, f"action rel {rel:.1e}, deviation {res.deviation:.1e}")


@pytest.mark.slow
def test_6_suspension_reproduces_map(circle_chart, oval_chart, circle_suspension, oval_suspension, build_seconds, verdict):
    parts, ok, total = [], True, 0.0
    for name, chart, susp in (("circle", circle_chart, circle_suspension), ("oval", oval_chart, oval_suspension)):
        t0 = time.perf_counter()
        rep, _ = construct.verify_main_theorem(chart, susp.config, susp=susp)
        total += time.perf_counter() - t0 + build_seconds.get(name, 0.0)
        ce = rep["conjugation_error"]
        ok &= (ce["max_dx"] < 1e-5 and ce["max_dl_rel"] < 1e-5
               and abs(rep["remainder_exponent"] - 2.5) <= 0.1 and rep["periodicity_error"] == 0.0)
        parts.append(f"{name} dx {ce['max_dx']:.1e} dl {ce['max_dl_rel']:.1e} "
                     f"exp {rep['remainder_exponent']:.3f} per {rep['periodicity_error']:.0e}")
    ok &= total < 300.0
    verdict(6, bool(ok), "; ".join(parts) + f"; {total:.0f} s incl. build")


@pytest.mark.slow
def test_7_positivity(circle_suspension, oval_suspension, verdict):
    margins = {n: s.positivity["margin"] for n, s in (("circle", circle_suspension), ("oval", oval_suspension))}
    verdict(7, min(margins.values()) > 0.0, ", ".join(f"{k} margin {v:.3f}" for k, v in margins.items()))


def test_8_mather_benchmarks(circle_chart, verdict):
    gf = LazutkinGF(circle_chart)
    t0 = time.perf_counter()
    bench = np.array([1 / 3, 1 / 5, 1 / 8])
    berr = float(max(abs(mather.beta_at(gf, w).beta - mather.circle_beta(w)) for w in bench))
    small = mather.beta_at(gf, 0.01).beta / 0.01**3 * 6 - 1
    grid = np.concatenate([[0.0], mather.rational_grid(1e-3, 0.2, 40)])
    table = mather.beta_table(gf, grid)
    lo, hi = table.slope_range()
    cs = np.geomspace(hi * 1e-3, min(hi, 2 / math.pi**2), 30)
    aerr = float(np.max(np.abs(mather.alpha_table(table, cs).alpha / mather.circle_alpha(cs) - 1)))
    dt = time.perf_counter() - t0
    ok = berr < 1e-8 and abs(small) < 0.02 and aerr < 1e-2 and table.convex and dt < 120
    verdict(8, ok, f"beta err {berr:.1e}, beta/w^3 vs 1/6 {small:+.2%}, alpha rel {aerr:.1e}, "
                   f"convex {table.convex}, {dt:.1f} s")


@pytest.mark.slow
def test_9_gap_detection(circle_chart, oval_chart, verdict):
    strong = LazutkinGF(oval_chart)
    ms = mather.gap_measure(strong, 0.5, q_cap=377)
    # the exact (1, 2) orbit sits on the symmetry axis; spacing is judged on the approximant set
    spread = ms.largest_gap * ms.q
    gaps = [g for _, g in ms.gap_history]
    circ = mather.gap_measure(LazutkinGF(circle_chart), 0.5, q_cap=40)
    ok = (not ms.degenerate and spread > 2.0 and min(gaps[1:]) > 0.2 and circ.degenerate
          and circ.status == "degenerate: invariant curve")
    verdict(9, ok, f"oval q={ms.q} largest gap {ms.largest_gap:.3f} ({spread:.0f}/q), "
                   f"history {', '.join(f'{g:.3f}' for g in gaps)}; circle {circ.status}")


def _cli_outputs(tmp_path, tag, jobs):
    out = tmp_path / tag
    cfg = tmp_path / "config.json"
    cfg.write_text(json.dumps({"version": 1, "omega_min": 2e-3, "omega_max": 0.1, "omega_count": 12,
                               "alpha_count": 8, "q_cap": 60, "phase_steps": 100}))
    for cmd in (["phase"], ["boundary-info"], ["mather"], ["verify", "--stage", "expansion"]):
        code = cli.main(cmd + ["--config", str(cfg), "--out", str(out), "--seed", "7", "--jobs", str(jobs)])
        assert code == 0, cmd
    return {p.name: p.read_bytes() for p in sorted(out.iterdir())}


def test_10_determinism(tmp_path, verdict):
    a = _cli_outputs(tmp_path, "a", 1)
    b = _cli_outputs(tmp_path, "b", 1)
    c = _cli_outputs(tmp_path, "c", 4)
    ok = a == b == c
    verdict(10, ok, f"{len(a)} files byte-identical across runs and --jobs 1/4" if ok else "outputs differ")
