"""Threat models: gray-box PGD, black-box SPSA, and adaptive BPDA+EOT.

All attacks maximize the classification loss inside an lp ball of radius
eps.  PGD differentiates the raw classifier only; SPSA queries an arbitrary
pipeline as a black box; BPDA+EOT attacks through a stochastic purifier by
averaging classifier gradients at purified points and treating the purifier
Jacobian as identity.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .gmm import ScoreFn
from .mlp import MlpClassifier, cross_entropy_from_logits, loss_and_input_gradient
from .purify import PurifierConfig, purify

PGD = "pgd"
SPSA = "spsa"
BPDA_EOT = "bpda_eot"

LINF = "linf"
L2 = "l2"


@dataclass(frozen=True)
class AttackSpec:
    kind: str = PGD
    norm: str = LINF
    eps: float = 1.0
    step_size: float | None = None  # defaults to eps / 10
    n_steps: int = 40
    spsa_delta: float = 0.01
    spsa_samples: int = 128
    spsa_lr: float = 0.01
    eot_samples: int = 15
    seed: int = 0

    def __post_init__(self) -> None:
        if self.kind not in (PGD, SPSA, BPDA_EOT):
            raise ValueError(f"kind must be one of {(PGD, SPSA, BPDA_EOT)}")
        if self.norm not in (LINF, L2):
            raise ValueError(f"norm must be '{LINF}' or '{L2}'")
        if self.eps <= 0:
            raise ValueError("eps must be positive")
        if self.step_size is not None and self.step_size <= 0:
            raise ValueError("step_size must be positive")
        if min(self.n_steps, self.spsa_samples, self.eot_samples) < 0:
            raise ValueError("iteration and sample counts must be nonnegative")
        if self.spsa_delta <= 0 or self.spsa_lr <= 0:
            raise ValueError("spsa_delta and spsa_lr must be positive")

    @property
    def alpha(self) -> float:
        return self.eps / 10.0 if self.step_size is None else self.step_size


def project(delta: np.ndarray, norm: str, eps: float) -> np.ndarray:
    """Project perturbations onto the eps-ball, row-wise for batches."""
    if eps <= 0:
        raise ValueError("eps must be positive")
    delta = np.asarray(delta, dtype=float)
    if norm == LINF:
        return np.clip(delta, -eps, eps)
    nrm = np.linalg.norm(delta, axis=-1, keepdims=True)
    scale = np.where(nrm > eps, eps / np.maximum(nrm, 1e-300), 1.0)
    return delta * scale


def _ascent_direction(grad: np.ndarray, norm: str) -> np.ndarray:
    """Steepest-ascent unit direction for the chosen geometry."""
    if norm == LINF:
        return np.sign(grad)
    nrm = np.linalg.norm(grad, axis=-1, keepdims=True)
    return np.where(nrm > 0, grad / np.maximum(nrm, 1e-300), 0.0)


def pgd_attack(
    clf: MlpClassifier,
    x: np.ndarray,
    y: np.ndarray,
    spec: AttackSpec,
    rng: np.random.Generator | None = None,
) -> np.ndarray:
    """Projected gradient ascent on the raw classifier's loss, delta_0 = 0.

    No random start, so the attack is deterministic; rng is accepted for
    interface symmetry and never consumed.
    """
    x = np.atleast_2d(np.asarray(x, dtype=float))
    y = np.atleast_1d(np.asarray(y, dtype=int))
    delta = np.zeros_like(x)
    for _ in range(spec.n_steps):
        _, grad = loss_and_input_gradient(clf, x + delta, y)
        delta = project(delta + spec.alpha * _ascent_direction(grad, spec.norm), spec.norm, spec.eps)
    return x + delta


def spsa_gradient(
    loss_fn: Callable[[np.ndarray], np.ndarray],
    x: np.ndarray,
    delta: float,
    n_samples: int,
    rng: np.random.Generator,
) -> np.ndarray:
    """Simultaneous-perturbation estimate of grad loss at x.

    Averages [loss(x + delta v) - loss(x - delta v)] / (2 delta) * v over
    Rademacher vectors v (whose elementwise reciprocal is v itself).
    loss_fn maps a (n, d) batch to (n,) losses; x may be (d,) or (n, d).
    """
    if delta <= 0 or n_samples < 1:
        raise ValueError("delta must be positive and n_samples >= 1")
    x = np.asarray(x, dtype=float)
    single = x.ndim == 1
    xb = x[None, :] if single else x
    est = np.zeros_like(xb)
    for _ in range(n_samples):
        v = rng.integers(0, 2, size=xb.shape) * 2.0 - 1.0
        diff = loss_fn(xb + delta * v) - loss_fn(xb - delta * v)
        est += (diff / (2.0 * delta))[:, None] * v
    est /= n_samples
    return est[0] if single else est


def spsa_attack(
    model_fn: Callable[[np.ndarray], np.ndarray],
    x: np.ndarray,
    y: np.ndarray,
    spec: AttackSpec,
    rng: np.random.Generator,
) -> np.ndarray:
    """Black-box ascent with SPSA gradient estimates of the pipeline's loss.

    model_fn maps a (n, d) batch to (n, classes) logits and may hide an
    arbitrary stochastic pipeline.
    """
    x = np.atleast_2d(np.asarray(x, dtype=float))
    y = np.atleast_1d(np.asarray(y, dtype=int))

    def loss_fn(pts: np.ndarray) -> np.ndarray:
        return cross_entropy_from_logits(model_fn(pts), y)

    delta = np.zeros_like(x)
    for _ in range(spec.n_steps):
        grad = spsa_gradient(loss_fn, x + delta, spec.spsa_delta, spec.spsa_samples, rng)
        delta = project(
            delta + spec.spsa_lr * _ascent_direction(grad, spec.norm), spec.norm, spec.eps
        )
    return x + delta


def bpda_eot_attack(
    clf: MlpClassifier,
    purifier_cfg: PurifierConfig,
    score_fn: ScoreFn,
    x: np.ndarray,
    y: np.ndarray,
    spec: AttackSpec,
    rng: np.random.Generator,
) -> np.ndarray:
    """Adaptive attack through the stochastic purifier.

    Each iteration draws K independent purifications of the current point,
    takes the classifier's input gradient at every purified point, and uses
    their average as the surrogate gradient (the purifier's Jacobian is
    approximated by identity), then ascends and projects as PGD does.
    """
    x = np.atleast_2d(np.asarray(x, dtype=float))
    y = np.atleast_1d(np.asarray(y, dtype=int))
    n, d = x.shape
    k = spec.eot_samples
    delta = np.zeros_like(x)
    for _ in range(spec.n_steps):
        cur = x + delta
        if purifier_cfg.is_identity:
            purified = np.tile(cur, (k, 1))
        else:
            purified = purify(np.tile(cur, (k, 1)), purifier_cfg, score_fn, rng)
        _, grads = loss_and_input_gradient(clf, purified, np.tile(y, k))
        surrogate = grads.reshape(k, n, d).mean(axis=0)
        delta = project(
            delta + spec.alpha * _ascent_direction(surrogate, spec.norm), spec.norm, spec.eps
        )
    return x + delta


def eot_surrogate_gradient(
    clf: MlpClassifier,
    purifier_cfg: PurifierConfig,
    score_fn: ScoreFn,
    x: np.ndarray,
    y: int,
    k: int,
    rng: np.random.Generator,
) -> np.ndarray:
    """One EOT surrogate gradient at a single point (exposed for variance studies)."""
    x = np.asarray(x, dtype=float)
    purified = purify(np.tile(x, (k, 1)), purifier_cfg, score_fn, rng)
    _, grads = loss_and_input_gradient(clf, purified, np.full(k, y))
    return grads.mean(axis=0)
