"""Numerical integrators for the mixed reverse process and probability-flow ODE.

The reverse process interpolates between the deterministic probability-flow
ODE (lam=0) and the full reverse SDE (lam=1):

    dX_t = [f(X_t,t) - (1+lam^2)/2 * g^2(t) * score(X_t,t)] dt + lam g(t) dW,

integrated backwards from t_star to t_min.  Both an Euler-Maruyama and a
stochastic Heun scheme are provided; Heun injects the noise first and then
applies a deterministic predictor-corrector to the drift, falling back to
the bare predictor on the final step.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .gmm import ScoreFn
from .schedules import Schedule

EULER = "euler"
HEUN = "heun"

DriftFn = Callable[[np.ndarray, float], np.ndarray]


class SolverDivergedError(RuntimeError):
    """Raised when the state turns non-finite; carries the offending step index."""

    def __init__(self, step: int):
        super().__init__(f"integration diverged at step {step}")
        self.step = step


@dataclass(frozen=True)
class SolverConfig:
    method: str = HEUN
    n_steps: int = 100
    t_star: float = 0.3
    t_min: float = 1e-3
    lam: float = 0.0  # randomness strength in [0, 1]

    def __post_init__(self) -> None:
        if self.method not in (EULER, HEUN):
            raise ValueError(f"method must be '{EULER}' or '{HEUN}'")
        if self.n_steps < 1:
            raise ValueError("n_steps must be >= 1")
        if not 0.0 < self.t_min < self.t_star:
            raise ValueError("need 0 < t_min < t_star")
        if not 0.0 <= self.lam <= 1.0:
            raise ValueError("lambda must lie in [0, 1]")


def mixed_reverse_drift(
    schedule: Schedule, score_fn: ScoreFn, x: np.ndarray, t: float, lam: float
) -> np.ndarray:
    """Drift of the mixed reverse process: f - (1+lam^2)/2 * g^2 * score."""
    g = schedule.diffusion_coefficient(t)
    return schedule.drift_coefficient(x, t) - 0.5 * (1.0 + lam * lam) * g * g * score_fn(x, t)


def integrate_sde(
    drift_fn: DriftFn,
    times: np.ndarray,
    x0: np.ndarray,
    *,
    method: str = HEUN,
    lam: float = 0.0,
    noise_amp: Callable[[float], float] | None = None,
    rng: np.random.Generator | None = None,
    noise: np.ndarray | None = None,
    final_euler: bool = True,
    on_diverge: str = "raise",
) -> np.ndarray:
    """Step x0 along a monotone time grid under drift_fn plus scaled white noise.

    Per step from t_i to t_{i+1} (h = t_{i+1} - t_i, either sign):
      euler:  x <- x + drift(x, t_i) h + lam * noise_amp(t_i) * sqrt(|h|) * z
      heun:   inject the noise first, then predict with the drift at t_i and
              correct with the average drift at t_i and t_{i+1}; the last step
              uses the predictor alone when final_euler is set.

    Noise is drawn from rng in grid order, or taken from a pre-generated
    array of shape (n_steps,) + x0.shape; no randomness is consumed when
    lam == 0.  on_diverge='nan' freezes non-finite rows of a batch as NaN
    instead of raising.
    """
    x = np.array(x0, dtype=float, copy=True)
    n_steps = len(times) - 1
    use_noise = lam > 0.0
    if use_noise and noise_amp is None:
        raise ValueError("noise_amp is required when lam > 0")
    if use_noise and noise is None and rng is None:
        raise ValueError("an rng or pre-generated noise is required when lam > 0")
    bad = np.zeros(x.shape[0], dtype=bool) if (on_diverge == "nan" and x.ndim == 2) else None

    for i in range(n_steps):
        t, t_next = float(times[i]), float(times[i + 1])
        h = t_next - t
        if use_noise:
            z = noise[i] if noise is not None else rng.standard_normal(x.shape)
            kick = lam * noise_amp(t) * np.sqrt(abs(h)) * z
        else:
            kick = 0.0

        if method == EULER:
            x_new = x + drift_fn(x, t) * h + kick
        else:
            x_base = x + kick
            d1 = drift_fn(x_base, t)
            x_pred = x_base + h * d1
            if final_euler and i == n_steps - 1:
                x_new = x_pred
            else:
                d2 = drift_fn(x_pred, t_next)
                x_new = x_base + 0.5 * h * (d1 + d2)

        if bad is not None:
            row_ok = np.all(np.isfinite(x_new), axis=-1)
            newly_bad = ~row_ok & ~bad
            x_new[newly_bad | bad] = np.nan
            bad |= newly_bad
            x = x_new
        else:
            if not np.all(np.isfinite(x_new)):
                raise SolverDivergedError(i)
            x = x_new
    return x


def integrate_reverse(
    schedule: Schedule,
    score_fn: ScoreFn,
    x_start: np.ndarray,
    cfg: SolverConfig,
    rng: np.random.Generator | None = None,
    *,
    noise: np.ndarray | None = None,
    on_diverge: str = "raise",
) -> np.ndarray:
    """Integrate the mixed reverse process from t_star down to t_min.

    x_start is the state at t_star; accepts a single point (d,) or a batch
    (n, d).  With lam = 0 the result is fully deterministic and no rng is
    consumed.
    """
    times = schedule.time_grid(cfg.t_star, cfg.t_min, cfg.n_steps)

    def drift(x: np.ndarray, t: float) -> np.ndarray:
        return mixed_reverse_drift(schedule, score_fn, x, t, cfg.lam)

    return integrate_sde(
        drift,
        times,
        x_start,
        method=cfg.method,
        lam=cfg.lam,
        noise_amp=schedule.diffusion_coefficient,
        rng=rng,
        noise=noise,
        final_euler=True,
        on_diverge=on_diverge,
    )


def integrate_forward_ode(
    schedule: Schedule,
    score_fn: ScoreFn,
    x0: np.ndarray,
    cfg: SolverConfig,
    *,
    on_diverge: str = "raise",
) -> np.ndarray:
    """Integrate the probability-flow ODE forward from t_min to t_star.

    Deterministic by construction; cfg.lam is ignored (forced to 0).
    """
    times = schedule.time_grid(cfg.t_star, cfg.t_min, cfg.n_steps)[::-1]

    def drift(x: np.ndarray, t: float) -> np.ndarray:
        return mixed_reverse_drift(schedule, score_fn, x, t, 0.0)

    return integrate_sde(
        drift, times, x0, method=cfg.method, lam=0.0, final_euler=False, on_diverge=on_diverge
    )
