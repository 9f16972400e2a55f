"""Isotropic Gaussian mixtures: data distribution, exact scores, datasets.

The mixture plays two roles: it generates the benchmark data, and because
its diffused marginals stay Gaussian mixtures in closed form, it supplies
the exact time-dependent score that replaces a learned score network.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy.special import logsumexp

from .schedules import VP, Schedule

ScoreFn = Callable[[np.ndarray, float], np.ndarray]


@dataclass(frozen=True)
class GaussianMixture:
    """Mixture of isotropic Gaussians with optional per-component class labels."""

    weights: np.ndarray  # (k,)
    means: np.ndarray  # (k, d)
    variances: np.ndarray  # (k,)
    labels: np.ndarray | None = None  # (k,) integer class ids

    def __post_init__(self) -> None:
        w = np.asarray(self.weights, dtype=float)
        m = np.atleast_2d(np.asarray(self.means, dtype=float))
        v = np.asarray(self.variances, dtype=float)
        if w.ndim != 1 or m.shape[0] != w.shape[0] or v.shape != w.shape:
            raise ValueError("weights, means, variances must have matching component counts")
        if np.any(w <= 0):
            raise ValueError("weights must be positive")
        if abs(w.sum() - 1.0) > 1e-12:
            raise ValueError("weights must sum to 1 within 1e-12")
        if np.any(v <= 0):
            raise ValueError("variances must be positive")
        lab = self.labels
        if lab is not None:
            lab = np.asarray(lab, dtype=int)
            if lab.shape != w.shape:
                raise ValueError("labels must have one entry per component")
        object.__setattr__(self, "weights", w)
        object.__setattr__(self, "means", m)
        object.__setattr__(self, "variances", v)
        object.__setattr__(self, "labels", lab)

    @property
    def dim(self) -> int:
        return self.means.shape[1]

    @property
    def n_components(self) -> int:
        return self.means.shape[0]

    # -- densities -----------------------------------------------------------

    def _component_log_densities(self, x: np.ndarray) -> np.ndarray:
        """log N(x; mu_i, v_i I) for every component, shape (..., k)."""
        x = np.asarray(x, dtype=float)
        d = self.dim
        sq = np.sum((x[..., None, :] - self.means) ** 2, axis=-1)  # (..., k)
        return -0.5 * sq / self.variances - 0.5 * d * np.log(2.0 * np.pi * self.variances)

    def log_density(self, x: np.ndarray) -> np.ndarray | float:
        """log sum_i w_i N(x; mu_i, v_i I), computed with log-sum-exp."""
        lp = self._component_log_densities(x) + np.log(self.weights)
        out = logsumexp(lp, axis=-1)
        return float(out) if np.ndim(out) == 0 else out

    def responsibilities(self, x: np.ndarray) -> np.ndarray:
        """Posterior component probabilities r_i(x), shape (..., k)."""
        lp = self._component_log_densities(x) + np.log(self.weights)
        lp = lp - logsumexp(lp, axis=-1, keepdims=True)
        return np.exp(lp)

    def score(self, x: np.ndarray) -> np.ndarray:
        """Gradient of log_density: sum_i r_i(x) (mu_i - x) / v_i."""
        x = np.asarray(x, dtype=float)
        r = self.responsibilities(x)  # (..., k)
        pull = (self.means - x[..., None, :]) / self.variances[:, None]  # (..., k, d)
        return np.sum(r[..., None] * pull, axis=-2)

    # -- forward diffusion of the mixture --------------------------------------

    def diffuse(self, schedule: Schedule, t: float) -> "GaussianMixture":
        """Marginal mixture of X_t when X_0 follows this mixture.

        VP: component i becomes N(sqrt(alpha)*mu_i, (alpha*v_i + 1-alpha) I);
        VE/EDM: N(mu_i, (v_i + sigma(t)^2) I).  Weights and labels carry over.
        """
        if schedule.kind == VP:
            a = schedule.alpha(schedule._check_time(t))
            means = np.sqrt(a) * self.means
            variances = a * self.variances + (1.0 - a)
        else:
            s = schedule.sigma(schedule._check_time(t))
            means = self.means
            variances = self.variances + s * s
        return GaussianMixture(self.weights, means, variances, self.labels)

    def sample(self, n: int, rng: np.random.Generator) -> tuple[np.ndarray, np.ndarray]:
        """n i.i.d. draws; returns (points (n,d), component indices (n,))."""
        idx = rng.choice(self.n_components, size=n, p=self.weights)
        z = rng.standard_normal((n, self.dim))
        pts = self.means[idx] + np.sqrt(self.variances[idx])[:, None] * z
        return pts, idx


def make_score_fn(gmm: GaussianMixture, schedule: Schedule) -> ScoreFn:
    """Exact score (x, t) -> grad log q_t(x) of the diffused mixture."""

    def score_fn(x: np.ndarray, t: float) -> np.ndarray:
        return gmm.diffuse(schedule, t).score(x)

    return score_fn


@dataclass(frozen=True)
class LabeledDataset:
    """Points with integer class labels, regenerable bit-exactly from its seed."""

    points: np.ndarray  # (n, d)
    labels: np.ndarray  # (n,)
    seed: int

    def __post_init__(self) -> None:
        pts = np.asarray(self.points, dtype=float)
        if pts.ndim == 1:
            pts = pts.reshape(0, 0) if pts.size == 0 else pts.reshape(1, -1)
        lab = np.asarray(self.labels, dtype=int)
        if pts.shape[0] != lab.shape[0]:
            raise ValueError("points and labels must have equal length")
        object.__setattr__(self, "points", pts)
        object.__setattr__(self, "labels", lab)

    def __len__(self) -> int:
        return self.points.shape[0]

    def to_csv(self, path: str) -> None:
        """One row per point: d coordinates then the integer label."""
        with open(path, "w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh)
            for x, y in zip(self.points, self.labels):
                writer.writerow([repr(float(c)) for c in x] + [int(y)])

    @classmethod
    def from_csv(cls, path: str, seed: int = -1) -> "LabeledDataset":
        pts, labels = [], []
        with open(path, newline="", encoding="utf-8") as fh:
            for row in csv.reader(fh):
                if not row:
                    continue
                pts.append([float(c) for c in row[:-1]])
                labels.append(int(row[-1]))
        if not pts:
            return cls(np.zeros((0, 0)), np.zeros(0, dtype=int), seed)
        return cls(np.asarray(pts), np.asarray(labels), seed)


def sample_dataset(gmm: GaussianMixture, n: int, seed: int) -> LabeledDataset:
    """n labeled i.i.d. draws from a labeled mixture, deterministic in seed."""
    if gmm.labels is None:
        raise ValueError("sample_dataset requires a mixture with component labels")
    if n < 0:
        raise ValueError("n must be nonnegative")
    rng = np.random.default_rng(np.random.SeedSequence(seed))
    pts, idx = gmm.sample(n, rng)
    return LabeledDataset(pts, gmm.labels[idx], seed)
