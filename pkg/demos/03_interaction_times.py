"""Interaction times: why VE keeps diffused points distinguishable longer.

Two points at +-h stop being distinguishable (their diffused Gaussians
"interact" under the three-sigma rule) after a schedule-dependent time:
quadratic in h for VP, logarithmic (locally linear) for VE.  The closed
forms are checked against a bisection solver on the raw overlap condition.
"""

import numpy as np

from puriflab import (
    Schedule,
    interaction_time_bisect,
    interaction_time_ve,
    interaction_time_vp,
    order_report,
)

vp, ve = Schedule.vp(), Schedule.ve()

print("closed form vs bisection oracle at h = 0.3:")
t_vp = interaction_time_vp(0.3, vp.beta1, vp.beta2)
t_ve = interaction_time_ve(0.3, ve.sigma_min, ve.sigma_max)
print(f"  vp: closed={t_vp:.10f}  bisect={interaction_time_bisect(vp, 0.3, 1e-12):.10f}")
print(f"  ve: closed={t_ve:.10f}  bisect={interaction_time_bisect(ve, 0.3, 1e-13):.10f}")

print("\nsmall-h order (local log-log slopes, centered differences):")
rep = order_report(np.geomspace(1e-3, 1e-2, 8))
for i in range(len(rep["h"])):
    s = rep["slope_vp"][i]
    slope = f"{s:.4f}" if np.isfinite(s) else "   --"
    print(f"  h={rep['h'][i]:.5f}  t_vp={rep['t_vp'][i]:.3e}  slope={slope}")
print("  -> the VP interaction time shrinks like h^2")

print("\nmoderate h: the VE time dominates pointwise")
rep = order_report(np.linspace(0.05, 1.0, 6))
for i in range(len(rep["h"])):
    print(f"  h={rep['h'][i]:.3f}  t_vp={rep['t_vp'][i]:.5f}  t_ve={rep['t_ve'][i]:.5f}")
print(f"  ve exceeds vp everywhere: {rep['ve_exceeds_vp']}")
print(
    "\ninterpretation: under VP two nearby points become indistinguishable"
    "\nalmost immediately, so only small purification levels carry usable"
    "\nsignal; VE (and EDM) keep the gap open much longer."
)
