"""Interaction times of diffused point masses under the three-sigma criterion.

Two univariate Gaussians interact once |mu1 - mu2| <= 3*sigma1 + 3*sigma2.
For data at +-h the diffused marginals first interact at a closed-form time:
quadratic in h for VP (through ln(1 + h^2/9)) and logarithmic in h for VE.
A bisection solver on the raw boundary condition serves as the independent
oracle for both closed forms.
"""

from __future__ import annotations

import csv
import math

import numpy as np

from .schedules import VE, VP, Schedule


def interaction_predicate(mu1: float, sigma1: float, mu2: float, sigma2: float) -> bool:
    """True iff |mu1 - mu2| <= 3*sigma1 + 3*sigma2 (boundary inclusive)."""
    if sigma1 < 0 or sigma2 < 0:
        raise ValueError("standard deviations must be nonnegative")
    return abs(mu1 - mu2) <= 3.0 * (sigma1 + sigma2)


def interaction_time_vp(h: float, beta1: float, beta2: float) -> float:
    """First interaction time of VP-diffused points at +-h.

    Solves beta2 t^2 + beta1 t = ln(1 + h^2/9); the positive quadratic root
    (-beta1 + sqrt(beta1^2 + 4 beta2 L)) / (2 beta2), or L/beta1 when
    beta2 = 0.
    """
    if h <= 0:
        raise ValueError("h must be positive")
    if beta1 < 0 or beta2 < 0 or (beta1 == 0 and beta2 == 0):
        raise ValueError("need beta1 > 0 or beta2 > 0, both nonnegative")
    big_l = math.log1p(h * h / 9.0)
    if beta2 == 0:
        return big_l / beta1
    return (-beta1 + math.sqrt(beta1 * beta1 + 4.0 * beta2 * big_l)) / (2.0 * beta2)


def interaction_time_ve(h: float, sigma_min: float, sigma_max: float) -> float:
    """First interaction time of VE-diffused points at +-h.

    Solves h = 3*sigma(t) for the log-linear scale:
    t = ln((h/3)/sigma_min) / ln(sigma_max/sigma_min); requires h > 3*sigma_min,
    otherwise the distributions already interact at t = 0.
    """
    if sigma_min <= 0 or sigma_max <= sigma_min:
        raise ValueError("need 0 < sigma_min < sigma_max")
    if h <= 3.0 * sigma_min:
        raise ValueError("no positive interaction time: h must exceed 3*sigma_min")
    return math.log((h / 3.0) / sigma_min) / math.log(sigma_max / sigma_min)


def interaction_time_bisect(schedule: Schedule, h: float, tol: float = 1e-10) -> float:
    """Bisection oracle on the raw boundary condition of the three-sigma rule.

    VP: sqrt(alpha_t)*h = 3*sqrt(1 - alpha_t) (means at +-sqrt(alpha)h, std
    sqrt(1-alpha) each).  VE: h = 3*sigma(t).  Solves to absolute tolerance
    tol on t within (0, t_max].
    """
    if tol <= 0:
        raise ValueError("tol must be positive")
    if h <= 0:
        raise ValueError("h must be positive")
    if schedule.kind == VP:

        def gap(t: float) -> float:
            a = schedule.alpha(t)
            return math.sqrt(a) * h - 3.0 * math.sqrt(max(1.0 - a, 0.0))

    elif schedule.kind == VE:

        def gap(t: float) -> float:
            return h - 3.0 * schedule.sigma(t)

    else:
        raise ValueError("interaction times are defined for VP and VE schedules")

    lo, hi = 0.0, schedule.t_max
    if gap(lo) <= 0 or gap(hi) > 0:
        raise ValueError("no sign change on [0, t_max]: no interaction time in range")
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if gap(mid) > 0:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def order_report(
    h_grid: np.ndarray,
    vp_schedule: Schedule | None = None,
    ve_schedule: Schedule | None = None,
) -> dict[str, np.ndarray | bool]:
    """Interaction times over an ascending h grid with local log-log slopes.

    Slopes are centered finite differences in (ln h, ln t); the endpoints are
    NaN.  Also flags whether the VE time exceeds the VP time at every h.
    """
    h = np.asarray(h_grid, dtype=float)
    if h.ndim != 1 or h.size == 0:
        raise ValueError("h_grid must be a nonempty 1-d ascending sequence")
    if np.any(np.diff(h) <= 0):
        raise ValueError("h_grid must be strictly ascending")
    vp_schedule = vp_schedule or Schedule.vp()
    ve_schedule = ve_schedule or Schedule.ve()

    t_vp = np.array([interaction_time_vp(v, vp_schedule.beta1, vp_schedule.beta2) for v in h])
    # VE has no positive interaction time below 3*sigma_min; report NaN there
    t_ve = np.array(
        [
            interaction_time_ve(v, ve_schedule.sigma_min, ve_schedule.sigma_max)
            if v > 3.0 * ve_schedule.sigma_min
            else np.nan
            for v in h
        ]
    )

    def centered_slopes(t: np.ndarray) -> np.ndarray:
        s = np.full_like(t, np.nan)
        if len(t) >= 3:
            with np.errstate(invalid="ignore"):
                s[1:-1] = (np.log(t[2:]) - np.log(t[:-2])) / (np.log(h[2:]) - np.log(h[:-2]))
        return s

    defined = np.isfinite(t_ve)
    return {
        "h": h,
        "t_vp": t_vp,
        "t_ve": t_ve,
        "slope_vp": centered_slopes(t_vp),
        "slope_ve": centered_slopes(t_ve),
        "ve_exceeds_vp": bool(np.all(t_ve[defined] > t_vp[defined])) if defined.any() else False,
    }


def write_order_report(path: str, report: dict) -> None:
    """CSV columns: h, t_vp, t_ve, slope_vp, slope_ve (empty cell for NaN)."""

    def cell(v: float) -> str:
        return "" if not np.isfinite(v) else repr(float(v))

    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["h", "t_vp", "t_ve", "slope_vp", "slope_ve"])
        for i in range(len(report["h"])):
            writer.writerow(
                [
                    repr(float(report["h"][i])),
                    cell(report["t_vp"][i]),
                    cell(report["t_ve"][i]),
                    cell(report["slope_vp"][i]),
                    cell(report["slope_ve"][i]),
                ]
            )


def loglog_regression_slope(h: np.ndarray, t: np.ndarray) -> float:
    """Least-squares slope of ln t against ln h."""
    lx, ly = np.log(np.asarray(h, float)), np.log(np.asarray(t, float))
    return float(np.polyfit(lx, ly, 1)[0])
