"""The seeded synthetic benchmark and its frozen calibration manifest.

Data are four isotropic Gaussians at (+-1.5, +-1.5) with variance 0.09 and
XOR class assignment, so the classes are not linearly separable and a small
net plus gradient attacks are exercised nontrivially.  The attack budget and
the purifier operating point used in hard assertions are not invented: they
are frozen from a one-time seeded calibration run into the manifest shipped
with the package.
"""

from __future__ import annotations

import json
from functools import lru_cache
from importlib import resources

import numpy as np

from .gmm import GaussianMixture, LabeledDataset, sample_dataset
from .mlp import (
    MlpClassifier,
    TrainConfig,
    init_classifier,
    logit_margin_and_gradient,
    predict,
    train,
)

# fixed benchmark seeds; the manifest records them as well
TRAIN_SEED = 7101
EVAL_SEED = 7102
INIT_SEED = 7103
N_TRAIN = 4000
N_EVAL = 2000

DEFAULT_ARCH = (2, 16, 16, 2)
DEFAULT_TRAIN = TrainConfig(learning_rate=0.2, epochs=200, batch_size=64, seed=7104)

MANIFEST_NAME = "acceptance_manifest.json"


def xor_gmm() -> GaussianMixture:
    """Four components at (+-1.5, +-1.5), variance 0.09, XOR class labels."""
    means = np.array([[1.5, 1.5], [-1.5, 1.5], [-1.5, -1.5], [1.5, -1.5]])
    labels = np.array([0, 1, 0, 1])  # same class on each diagonal
    return GaussianMixture(np.full(4, 0.25), means, np.full(4, 0.09), labels)


def train_dataset(n: int = N_TRAIN, seed: int = TRAIN_SEED) -> LabeledDataset:
    return sample_dataset(xor_gmm(), n, seed)


def eval_dataset(n: int = N_EVAL, seed: int = EVAL_SEED) -> LabeledDataset:
    return sample_dataset(xor_gmm(), n, seed)


@lru_cache(maxsize=4)
def _trained(arch: tuple[int, ...], cfg: TrainConfig, n_train: int, data_seed: int):
    clf = init_classifier(arch, seed=INIT_SEED)
    trained, trace = train(clf, train_dataset(n_train, data_seed), cfg)
    return trained, trace


def benchmark_classifier(
    arch: tuple[int, ...] = DEFAULT_ARCH,
    cfg: TrainConfig = DEFAULT_TRAIN,
    n_train: int = N_TRAIN,
    data_seed: int = TRAIN_SEED,
) -> MlpClassifier:
    """The benchmark's trained classifier (cached per process)."""
    return _trained(arch, cfg, n_train, data_seed)[0]


def margin_stats(clf: MlpClassifier, dataset: LabeledDataset) -> dict[str, float]:
    """Median logit margin and median sup-norm of its input gradient.

    Restricted to correctly classified points so the margin is positive;
    these are the statistics the attack budget is calibrated from.
    """
    ok = predict(clf, dataset.points) == dataset.labels
    margin, grad = logit_margin_and_gradient(clf, dataset.points[ok], dataset.labels[ok])
    return {
        "median_margin": float(np.median(margin)),
        "median_grad_linf": float(np.median(np.max(np.abs(grad), axis=-1))),
    }


def calibrate_epsilon_logit(clf: MlpClassifier, dataset: LabeledDataset) -> float:
    """First-order margin budget: 0.5 * median margin / median ||grad||_inf.

    With a saturated net this linearization overshoots the true flip
    distance (the margin surface is flat near the data and steep near the
    boundary), so the frozen budget uses the input-space statistic below;
    this one is kept because its two documented properties (raw robust
    accuracy < 0.30, clean accuracy >= 0.97) hold on the benchmark.
    """
    stats = margin_stats(clf, dataset)
    return 0.5 * stats["median_margin"] / stats["median_grad_linf"]


def flip_distances(
    clf: MlpClassifier,
    dataset: LabeledDataset,
    eps_grid: np.ndarray | None = None,
    pgd_steps: int = 40,
) -> np.ndarray:
    """Per-point input-space margin: smallest Linf budget at which PGD flips it.

    Points that survive the largest budget get +inf.  This is the
    saturation-robust margin statistic behind the frozen attack budget.
    """
    from .attacks import AttackSpec, pgd_attack

    if eps_grid is None:
        eps_grid = np.arange(0.5, 2.61, 0.1)
    flip_at = np.full(len(dataset), np.inf)
    for eps in eps_grid:
        spec = AttackSpec(kind="pgd", norm="linf", eps=float(eps), n_steps=pgd_steps)
        adv = pgd_attack(clf, dataset.points, dataset.labels, spec)
        flipped = predict(clf, adv) != dataset.labels
        flip_at = np.where(flipped & np.isinf(flip_at), eps, flip_at)
    return flip_at


def calibrate_epsilon(
    clf: MlpClassifier, dataset: LabeledDataset, factor: float = 1.3
) -> tuple[float, float]:
    """Frozen-budget recipe: factor * median input-space flip distance.

    Returns (eps, median flip distance).  factor = 1.3 puts the benchmark in
    the recoverable regime: most points are pushed just past the boundary,
    the raw classifier drops well below 30% robust accuracy, and the
    purifier can still pull points back to their home mode.
    """
    d = flip_distances(clf, dataset)
    med = float(np.median(d[np.isfinite(d)]))
    return factor * med, med


def load_manifest() -> dict:
    """The frozen calibration manifest shipped as package data."""
    text = resources.files(__package__).joinpath(MANIFEST_NAME).read_text(encoding="utf-8")
    return json.loads(text)


def write_manifest(manifest: dict, path: str) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
        fh.write("\n")
