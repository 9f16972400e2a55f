"""Forward diffusion schedules: variance-preserving, variance-exploding, and EDM.

Each schedule defines the drift f(x,t) and diffusion g(t) of the forward SDE

    dX_t = f(X_t, t) dt + g(t) dW_t,   t in [0, t_max],

its exact conditional law X_t | X_0 (a Gaussian with a scalar std), cheap
reparameterized forward sampling, and the reverse-time step grid used by the
integrators.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

VP = "vp"
VE = "ve"
EDM = "edm"

_KINDS = (VP, VE, EDM)


@dataclass(frozen=True)
class Schedule:
    """Parameters of one forward diffusion.

    VP uses the linear-in-t noise rate beta(t) = beta1 + 2*beta2*t, so the
    accumulated rate is int_0^t beta = beta1*t + beta2*t^2 and
    alpha(t) = exp(-(beta1*t + beta2*t^2)).  VE uses the log-linear scale
    sigma(t) = sigma_min^(1-t) * sigma_max^t.  EDM uses sigma(t) = t with a
    rho-warped step grid.
    """

    kind: str
    beta1: float = 0.1
    beta2: float = 9.95
    sigma_min: float = 0.01
    sigma_max: float = 50.0
    rho: float = 7.0
    t_max: float = 1.0

    def __post_init__(self) -> None:
        if self.kind not in _KINDS:
            raise ValueError(f"kind must be one of {_KINDS}, got {self.kind!r}")
        if self.t_max <= 0:
            raise ValueError("t_max must be positive")
        if self.kind == VP:
            if self.beta1 < 0 or self.beta2 < 0:
                raise ValueError("beta1 and beta2 must be nonnegative")
            if self.beta1 + 2.0 * self.beta2 * 0.0 <= 0 and self.beta2 == 0:
                raise ValueError("beta(t) must be positive on [0, t_max]")
            if self.beta1 <= 0 and self.beta2 <= 0:
                raise ValueError("beta(t) must be positive on [0, t_max]")
        else:
            if self.sigma_min <= 0 or self.sigma_max <= 0:
                raise ValueError("sigma_min and sigma_max must be positive")
            if not self.sigma_min < self.sigma_max:
                raise ValueError("sigma_min must be smaller than sigma_max")
            if self.rho < 1:
                raise ValueError("rho must be >= 1")

    # -- constructors with the conventional defaults ---------------------

    @classmethod
    def vp(cls, beta1: float = 0.1, beta2: float = 9.95, t_max: float = 1.0) -> "Schedule":
        return cls(kind=VP, beta1=beta1, beta2=beta2, t_max=t_max)

    @classmethod
    def ve(cls, sigma_min: float = 0.01, sigma_max: float = 50.0, t_max: float = 1.0) -> "Schedule":
        return cls(kind=VE, sigma_min=sigma_min, sigma_max=sigma_max, t_max=t_max)

    @classmethod
    def edm(cls, sigma_min: float = 0.002, sigma_max: float = 80.0, rho: float = 7.0) -> "Schedule":
        # sigma(t) = t, so time runs up to sigma_max.
        return cls(kind=EDM, sigma_min=sigma_min, sigma_max=sigma_max, rho=rho, t_max=sigma_max)

    # -- basic scalar functions ------------------------------------------

    def _check_time(self, t: float) -> float:
        t = float(t)
        if not 0.0 <= t <= self.t_max + 1e-12:
            raise ValueError(f"time {t} outside [0, {self.t_max}]")
        return t

    def beta(self, t: float) -> float:
        """VP noise rate beta(t) = beta1 + 2*beta2*t."""
        if self.kind != VP:
            raise ValueError("beta(t) is defined for VP schedules only")
        return self.beta1 + 2.0 * self.beta2 * float(t)

    def alpha(self, t: float) -> float:
        """VP mean-square contraction alpha(t) = exp(-(beta1*t + beta2*t^2))."""
        if self.kind != VP:
            raise ValueError("alpha(t) is defined for VP schedules only")
        t = float(t)
        return math.exp(-(self.beta1 * t + self.beta2 * t * t))

    def sigma(self, t: float) -> float:
        """Conditional noise scale for VE/EDM schedules."""
        t = float(t)
        if self.kind == VE:
            return self.sigma_min ** (1.0 - t) * self.sigma_max**t
        if self.kind == EDM:
            return t
        raise ValueError("sigma(t) is defined for VE/EDM schedules only")

    # -- SDE coefficients ---------------------------------------------------

    def drift_coefficient(self, x: np.ndarray, t: float) -> np.ndarray:
        """Forward drift f(x,t): -beta(t)*x/2 for VP, zero for VE/EDM."""
        t = self._check_time(t)
        x = np.asarray(x, dtype=float)
        if self.kind == VP:
            return -0.5 * self.beta(t) * x
        return np.zeros_like(x)

    def diffusion_coefficient(self, t: float) -> float:
        """Forward noise amplitude g(t).

        VP: sqrt(beta(t)).  VE: sigma(t)*sqrt(2*ln(sigma_max/sigma_min)),
        which equals sqrt(d sigma^2/dt).  EDM: sqrt(2t).  At t=0 the VE
        value is the right limit of the same closed form.
        """
        t = self._check_time(t)
        if self.kind == VP:
            return math.sqrt(self.beta(t))
        if self.kind == VE:
            return self.sigma(t) * math.sqrt(2.0 * math.log(self.sigma_max / self.sigma_min))
        return math.sqrt(2.0 * t)

    # -- conditional law and sampling ----------------------------------------

    def conditional_moments(self, x0: np.ndarray, t: float) -> tuple[np.ndarray, float]:
        """Mean and scalar std of X_t | X_0 = x0.

        VP: (sqrt(alpha)*x0, sqrt(1-alpha)).  VE: (x0, sigma(t)).  EDM: (x0, t).
        """
        t = self._check_time(t)
        x0 = np.asarray(x0, dtype=float)
        if self.kind == VP:
            a = self.alpha(t)
            return math.sqrt(a) * x0, math.sqrt(max(1.0 - a, 0.0))
        return x0, self.sigma(t)

    def sample_forward(self, x0: np.ndarray, t: float, rng: np.random.Generator) -> np.ndarray:
        """Reparameterized draw of X_t | X_0 = x0: mean + std * z, z ~ N(0, I)."""
        mean, std = self.conditional_moments(x0, t)
        if std == 0.0:
            return mean.copy()
        return mean + std * rng.standard_normal(mean.shape)

    # -- reverse-time step grid -----------------------------------------------

    def time_grid(self, t_star: float, t_min: float, n_steps: int) -> np.ndarray:
        """Strictly decreasing grid of n_steps+1 times from t_star to t_min.

        VP/VE grids are uniform.  EDM grids are rho-warped in sigma-space
        (identical to time because sigma(t)=t):
        sigma_i = (s_hi^(1/rho) + (i/n)*(s_lo^(1/rho) - s_hi^(1/rho)))^rho.
        """
        if n_steps < 1:
            raise ValueError("n_steps must be >= 1")
        if not 0.0 < t_min < t_star:
            raise ValueError("need 0 < t_min < t_star")
        if t_star > self.t_max + 1e-12:
            raise ValueError(f"t_star {t_star} exceeds t_max {self.t_max}")
        if self.kind == EDM:
            inv = 1.0 / self.rho
            hi = self.sigma(t_star) ** inv
            lo = self.sigma(t_min) ** inv
            frac = np.arange(n_steps + 1, dtype=float) / n_steps
            times = (hi + frac * (lo - hi)) ** self.rho
        else:
            times = np.linspace(t_star, t_min, n_steps + 1)
        times[0] = t_star
        times[-1] = t_min
        return times
