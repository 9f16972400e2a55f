"""Closed-form interaction times against the bisection oracle and asymptotics."""

import numpy as np
import pytest

from puriflab import (
    Schedule,
    interaction_predicate,
    interaction_time_bisect,
    interaction_time_ve,
    interaction_time_vp,
    order_report,
)
from puriflab.interaction import loglog_regression_slope, write_order_report


def test_predicate_basic_cases():
    assert interaction_predicate(0.0, 1.0, 0.0, 1.0)  # identical
    assert not interaction_predicate(0.0, 1.0, 10.0, 1.0)  # 10 > 6
    assert interaction_predicate(0.0, 1.0, 6.0, 1.0)  # boundary inclusive
    with pytest.raises(ValueError):
        interaction_predicate(0.0, -1.0, 1.0, 1.0)


def test_vp_time_hand_value():
    # beta1=0.1, beta2=9.95, h=0.3: (-0.1 + sqrt(0.01 + 39.8 ln 1.01)) / 19.9
    # = 0.0269949..., confirmed by the bisection oracle to 1e-12
    t = interaction_time_vp(0.3, 0.1, 9.95)
    assert t == pytest.approx(0.0269949, abs=1e-6)
    assert t == pytest.approx(0.027, abs=1e-5)


def test_vp_time_vanishes_with_h():
    assert interaction_time_vp(1e-9, 0.1, 9.95) < 1e-15


def test_vp_time_beta2_zero_branch():
    t = interaction_time_vp(0.3, 0.5, 0.0)
    assert t == pytest.approx(np.log1p(0.01) / 0.5, rel=1e-12)


def test_ve_time_hand_value():
    # ln(10)/ln(5000)
    t = interaction_time_ve(0.3, 0.01, 50.0)
    assert t == pytest.approx(np.log(10) / np.log(5000), rel=1e-12)
    assert t == pytest.approx(0.27034, abs=1e-5)


def test_ve_time_boundaries():
    assert interaction_time_ve(3 * 50.0, 0.01, 50.0) == pytest.approx(1.0, rel=1e-12)
    # h -> 3 sigma_min from above gives t -> 0
    assert interaction_time_ve(0.03 * (1 + 1e-9), 0.01, 50.0) == pytest.approx(0.0, abs=1e-9)
    with pytest.raises(ValueError):
        interaction_time_ve(0.02, 0.01, 50.0)


def test_vp_closed_form_agrees_with_bisection_grid():
    rng = np.random.default_rng(1)
    for _ in range(20):
        beta1 = rng.uniform(0.05, 0.5)
        beta2 = rng.uniform(1.0, 15.0)
        h = rng.uniform(0.05, 2.0)
        sched = Schedule.vp(beta1=beta1, beta2=beta2)
        closed = interaction_time_vp(h, beta1, beta2)
        oracle = interaction_time_bisect(sched, h, tol=1e-12)
        assert abs(closed - oracle) < 1e-8


def test_ve_closed_form_agrees_with_bisection_grid():
    rng = np.random.default_rng(2)
    for _ in range(20):
        sigma_min = rng.uniform(0.005, 0.05)
        sigma_max = rng.uniform(10.0, 80.0)
        h = rng.uniform(4 * sigma_min, 2.0)
        sched = Schedule.ve(sigma_min=sigma_min, sigma_max=sigma_max)
        closed = interaction_time_ve(h, sigma_min, sigma_max)
        oracle = interaction_time_bisect(sched, h, tol=1e-13)
        assert abs(closed - oracle) < 1e-10


def test_bisection_tolerance_contract():
    sched = Schedule.vp()
    coarse = interaction_time_bisect(sched, 0.3, tol=1e-2)
    fine = interaction_time_bisect(sched, 0.3, tol=1e-10)
    assert abs(coarse - fine) <= 1e-2


def test_bisection_no_root_error():
    # far-apart points never interact within [0, t_max] for a weak schedule
    sched = Schedule.vp(beta1=0.01, beta2=0.0)
    with pytest.raises(ValueError):
        interaction_time_bisect(sched, 1000.0, tol=1e-8)


def test_times_monotone_in_h():
    hs = np.linspace(0.05, 2.0, 40)
    t_vp = [interaction_time_vp(h, 0.1, 9.95) for h in hs]
    t_ve = [interaction_time_ve(h, 0.01, 50.0) for h in hs]
    assert np.all(np.diff(t_vp) > 0)
    assert np.all(np.diff(t_ve) > 0)


def test_vp_quadratic_order_limit():
    # t * 9 beta1 / h^2 -> 1: the quantitative form of the second-order claim
    ratio = interaction_time_vp(1e-3, 0.1, 9.95) * 9 * 0.1 / 1e-6
    assert abs(ratio - 1.0) < 1e-3


def test_ve_linear_regime_near_lower_boundary():
    # close to h = 3 sigma_min the exact formula linearizes in h
    sigma_min, sigma_max = 0.01, 50.0
    slope_const = 1.0 / (3 * sigma_min * np.log(sigma_max / sigma_min))
    for h in (0.0301, 0.0305):
        t = interaction_time_ve(h, sigma_min, sigma_max)
        lin = (h - 3 * sigma_min) * slope_const
        assert t == pytest.approx(lin, rel=2e-2)


def test_order_report_slopes_and_flag():
    h = np.geomspace(1e-3, 1e-2, 10)
    rep = order_report(h)
    inner = rep["slope_vp"][1:-1]
    assert np.all(np.abs(inner - 2.0) < 0.02)
    # regression slope over the small-h decade
    assert abs(loglog_regression_slope(h, rep["t_vp"]) - 2.0) < 0.02

    mid = np.linspace(0.05, 1.0, 20)
    rep2 = order_report(mid)
    assert rep2["ve_exceeds_vp"] is True
    assert np.all(rep2["t_ve"] > rep2["t_vp"])


def test_order_report_single_point():
    rep = order_report(np.array([0.3]))
    assert np.isnan(rep["slope_vp"][0]) and np.isnan(rep["slope_ve"][0])
    assert rep["t_vp"][0] > 0


def test_order_report_csv_round_trip(tmp_path):
    import csv

    rep = order_report(np.linspace(0.05, 0.5, 7))
    path = tmp_path / "order.csv"
    write_order_report(str(path), rep)
    with open(path) as fh:
        rows = list(csv.reader(fh))
    assert rows[0] == ["h", "t_vp", "t_ve", "slope_vp", "slope_ve"]
    assert len(rows) == 8
    assert float(rows[1][1]) == pytest.approx(rep["t_vp"][0])
    assert rows[1][3] == ""  # endpoint slope is empty


def test_order_report_validation():
    with pytest.raises(ValueError):
        order_report(np.array([]))
    with pytest.raises(ValueError):
        order_report(np.array([0.3, 0.2]))
