"""Strong-order comparison of the Euler-Maruyama and Heun steppers.

Integrates the linear test problem dx = -x dt from 0 to 1 (exact answer
1/e) on shrinking grids and reports the log-log error slopes: first order
for Euler-Maruyama, second order for Heun.
"""

import numpy as np

from puriflab import integrate_sde

drift = lambda x, t: -x
ns = np.array([25, 50, 100, 200, 400])

print(f"{'n':>6} {'euler error':>14} {'heun error':>14}")
errors = {"euler": [], "heun": []}
for n in ns:
    times = np.linspace(0.0, 1.0, n + 1)
    row = []
    for method in ("euler", "heun"):
        x = integrate_sde(drift, times, np.array([1.0]), method=method, final_euler=True)
        errors[method].append(abs(float(x[0]) - np.exp(-1.0)))
        row.append(errors[method][-1])
    print(f"{n:>6} {row[0]:>14.3e} {row[1]:>14.3e}")

for method in ("euler", "heun"):
    slope = -np.polyfit(np.log(ns), np.log(errors[method]), 1)[0]
    print(f"{method}: global error slope = {slope:.3f}")

print(
    "\nHeun costs two drift evaluations per step but buys a whole order of"
    "\naccuracy; purification robustness, however, turns out to be nearly"
    "\ninsensitive to this choice (see the solver-compare experiment)."
)
