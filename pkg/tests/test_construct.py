import csv
import json
import math

import numpy as np
import pytest

from billiardlab.errors import ConfigError, PositivityViolation
from billiardlab.generating import modified_map
from billiardlab.lazutkin import LazutkinState, lazutkin_map
from billiardlab.suspension import SuspensionConfig
from billiardlab.suspension import construct

pytestmark = pytest.mark.slow


def test_config_defaults_and_validation():
    c = SuspensionConfig()
    assert (c.kappa, c.m_w) == (0.15, 0.05)
    assert c.t1 == pytest.approx(0.2) and c.t2 == pytest.approx(0.25)
    with pytest.raises(ConfigError):
        SuspensionConfig(kappa=0.3)
    with pytest.raises(ConfigError):
        SuspensionConfig(t1=0.2, t2=0.23)
    with pytest.raises(ConfigError):
        SuspensionConfig(m_w=0.2)
    with pytest.raises(ConfigError):
        SuspensionConfig.from_dict({"kappa": 0.1, "nope": 1})
    assert SuspensionConfig.from_dict(c.to_dict()) == c


def test_segments(oval_suspension):
    H = oval_suspension.smoothed
    t1, t2 = H.t1, H.t2
    assert [H.segment(t) for t in (0.0, t1, 0.5 * (t1 + t2), 0.5, 1 - 0.5 * (t1 + t2), 1.0)] == [
        "mollified", "mollified", "blend", "piecewise", "mirror", "mollified"]


def test_periodic_and_smooth_joints(oval_suspension):
    H = oval_suspension.smoothed
    assert construct.periodicity_error(H) == 0.0
    for jump in construct.joint_jumps(H).values():
        assert jump["value"] < 1e-5
        assert jump["time_derivative"] < 1e-3


def test_positivity(oval_suspension, circle_suspension):
    for s in (oval_suspension, circle_suspension):
        rep = s.positivity
        assert rep["min_ratio_sqrt_l"] > 0.5
        assert rep["margin"] > 0
        assert rep["min_exact_sqrt_l"] > 0


def test_convexity_near_table_top(oval_suspension):
    win = oval_suspension.smoothed.window
    top = oval_suspension.config.l_top
    X = np.linspace(0, 1, 16, endpoint=False)
    for t in np.linspace(win.t1, win.t2, 5):
        ratio, _ = win.convexity(X, np.full_like(X, top), t)
        assert np.all(ratio * math.sqrt(top) > 0.5)


def test_positivity_violation_raised():
    class Flat:
        def convexity(self, X, l, t):
            return 0.1 / np.sqrt(l), 0.1 / np.sqrt(l)

    cfg = SuspensionConfig(pos_nx=4, pos_nl=4, pos_nt=2)
    rep = construct.positivity_check({"flat": Flat()}, cfg, raise_on_fail=False)
    assert rep["margin"] == pytest.approx(-0.4)
    with pytest.raises(PositivityViolation):
        construct.positivity_check({"flat": Flat()}, cfg)


def test_boundary_circle_fixed_by_flow(circle_suspension):
    xf, lf, *_ = construct.conjugation_errors(circle_suspension.smoothed, circle_suspension.chart,
                                              np.array([0.25, 0.75]), np.zeros(2))
    np.testing.assert_array_equal(xf, [0.25, 0.75])
    np.testing.assert_array_equal(lf, 0.0)


def test_half_period_agrees_with_piecewise(oval_suspension):
    dx, dl = construct.half_period_agreement(oval_suspension, np.array([0.1, 0.6]), np.array([1e-5, 1e-3]))
    assert dx < 1e-8 and dl < 1e-6


def test_report_and_csv_writers(circle_suspension, tmp_path):
    report, rows = construct.verify_main_theorem(circle_suspension.chart, circle_suspension.config,
                                                 susp=circle_suspension, n_x=2, ls=[1e-5, 1e-3])
    assert report["conjugation_error"]["points"] == 4
    assert report["conjugation_error"]["max_dx"] < 1e-5
    construct.write_report(report, tmp_path / "r.json")
    assert json.loads((tmp_path / "r.json").read_text())["config"]["kappa"] == 0.15
    construct.write_verification_csv(rows, tmp_path / "v.csv")
    with open(tmp_path / "v.csv") as fh:
        table = list(csv.reader(fh))
    assert table[0] == ["x0", "l0", "x_flow", "l_flow", "x_map", "l_map", "dx", "dl_rel"]
    assert len(table) == 5


@pytest.mark.parametrize("x,l", [(0.1, 1e-4), (0.55, 5e-4)])
def test_circulation_of_exact_maps(oval_chart, x, l):
    lmap = lambda a, b: lazutkin_map(oval_chart, LazutkinState(a, b))  # noqa: E731
    r = 0.2 * l
    assert abs(construct.circulation(lmap, x, l, r)) < 1e-8
    assert abs(construct.circulation(modified_map(oval_chart, 0.15), x, l, r)) < 1e-8
    # a map that is not area preserving has circulation of the order of its area defect
    squash = lambda a, b: (a + np.sqrt(2 * b), 0.9 * b)  # noqa: E731
    assert abs(construct.circulation(squash, x, l, r)) > 0.05 * math.pi * r * r
