"""Experiment runners: sweeps, attack evaluation, theory report, CSV emission.

Every run writes three artifacts next to the requested output path: the CSV
of result rows, an effective-config echo (all defaults resolved, enough to
re-run exactly), and a plain-text summary.  Purified accuracies are averaged
over n_seeds derived evaluation seeds; the per-point purification streams
are content-keyed, so the same seeds give common random numbers across sweep
cells and the cell-to-cell comparisons are low-variance.
"""

from __future__ import annotations

import csv
import dataclasses
import hashlib
import time
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import benchmark
from .attacks import bpda_eot_attack, pgd_attack, spsa_attack
from .config import ExperimentConfig, serialize_config
from .gmm import GaussianMixture, LabeledDataset, make_score_fn, sample_dataset
from .interaction import loglog_regression_slope, order_report, write_order_report
from .mlp import (
    MlpClassifier,
    TrainConfig,
    accuracy,
    init_classifier,
    load_classifier,
    predict_logits,
    save_classifier,
    train,
)
from .purify import PurifierConfig, make_batch_purifier
from .schedules import Schedule

CSV_COLUMNS = (
    "experiment",
    "schedule",
    "lambda",
    "t_star",
    "n_steps",
    "method",
    "attack",
    "eps",
    "standard_accuracy",
    "robust_accuracy_unpurified",
    "robust_accuracy",
    "wall_time_seconds",
    "seed",
)


@dataclass
class ResultRow:
    experiment: str
    seed: int
    schedule: str = ""
    lam: float | None = None
    t_star: float | None = None
    n_steps: int | None = None
    method: str = ""
    attack: str = ""
    eps: float | None = None
    standard_accuracy: float | None = None
    robust_accuracy_unpurified: float | None = None
    robust_accuracy: float | None = None
    wall_time_seconds: float = 0.0

    def as_csv(self) -> list[str]:
        def num(v) -> str:
            return "" if v is None else repr(float(v))

        return [
            self.experiment,
            self.schedule,
            num(self.lam),
            num(self.t_star),
            "" if self.n_steps is None else str(self.n_steps),
            self.method,
            self.attack,
            num(self.eps),
            num(self.standard_accuracy),
            num(self.robust_accuracy_unpurified),
            num(self.robust_accuracy),
            f"{self.wall_time_seconds:.3f}",
            str(self.seed),
        ]


def write_rows(path: str, rows: list[ResultRow]) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(CSV_COLUMNS)
        for row in rows:
            writer.writerow(row.as_csv())


def eval_seeds(global_seed: int, n_seeds: int) -> list[int]:
    """Derived purification-evaluation seeds, shared across sweep cells."""
    return [
        int(np.random.SeedSequence([global_seed, 90210, k]).generate_state(1)[0])
        for k in range(n_seeds)
    ]


def attack_rng(cfg: ExperimentConfig) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence([cfg.seed, cfg.attack.seed, 1717]))


# ---------------------------------------------------------------------------
# shared pipeline pieces


def _train_config(cfg: ExperimentConfig) -> TrainConfig:
    c = cfg.classifier
    return TrainConfig(
        learning_rate=c.learning_rate,
        epochs=c.epochs,
        batch_size=c.batch_size,
        seed=c.train_seed,
    )


def _classifier_cache_key(cfg: ExperimentConfig) -> str:
    c, d = cfg.classifier, cfg.data
    text = f"{d.train_seed}|{d.n_train}|{c.hidden}|{c.activation}|{c.learning_rate}|{c.epochs}|{c.batch_size}|{c.train_seed}|{c.init_seed}"
    return hashlib.sha256(text.encode()).hexdigest()[:12]


def train_or_load_classifier(cfg: ExperimentConfig, cache_dir: str | Path) -> MlpClassifier:
    """Trained classifier, cached beside the outputs keyed by data + train config."""
    cache = Path(cache_dir) / f"clf_{_classifier_cache_key(cfg)}.txt"
    if cache.exists():
        return load_classifier(str(cache))
    arch = (2, *cfg.classifier.hidden, 2)
    ds = sample_dataset(benchmark.xor_gmm(), cfg.data.n_train, cfg.data.train_seed)
    clf, _ = train(
        init_classifier(arch, cfg.classifier.activation, cfg.classifier.init_seed),
        ds,
        _train_config(cfg),
    )
    cache.parent.mkdir(parents=True, exist_ok=True)
    save_classifier(clf, str(cache))
    return clf


@dataclass
class Pipeline:
    gmm: GaussianMixture
    clf: MlpClassifier
    clean: LabeledDataset
    seeds: list[int]

    def adversarial(self, cfg: ExperimentConfig, eps: float | None = None) -> LabeledDataset:
        """Gray-box PGD on the raw classifier; eps = 0 means no perturbation."""
        spec_eps = cfg.attack.eps if eps is None else eps
        if spec_eps == 0.0:
            return self.clean
        spec = dataclasses.replace(cfg.attack.spec(spec_eps), kind="pgd")
        adv = pgd_attack(self.clf, self.clean.points, self.clean.labels, spec)
        return LabeledDataset(adv, self.clean.labels, self.clean.seed)

    def mean_accuracy(self, dataset: LabeledDataset, purifier_cfg: PurifierConfig | None) -> float:
        if purifier_cfg is None:
            return accuracy(self.clf, dataset)
        purifier = make_batch_purifier(purifier_cfg, make_score_fn(self.gmm, purifier_cfg.schedule))
        return float(np.mean([accuracy(self.clf, dataset, purifier, seed=s) for s in self.seeds]))


def build_pipeline(cfg: ExperimentConfig, out_dir: str | Path) -> Pipeline:
    gmm = benchmark.xor_gmm()
    clean = sample_dataset(gmm, cfg.n_eval, cfg.data.eval_seed)
    clf = train_or_load_classifier(cfg, out_dir)
    return Pipeline(gmm, clf, clean, eval_seeds(cfg.seed, cfg.n_seeds))


def _purifier_at(cfg: ExperimentConfig, **overrides) -> PurifierConfig:
    base = dict(
        schedule=cfg.purifier.schedule,
        t_star=cfg.purifier.t_star,
        t_min=cfg.purifier.t_min,
        n_steps=cfg.purifier.n_steps,
        method=cfg.purifier.method,
        lam=cfg.purifier.lam,
        forward_mode=cfg.purifier.forward_mode,
    )
    base.update(overrides)
    return PurifierConfig(**base)


# ---------------------------------------------------------------------------
# experiment runners


def run_lambda_sweep(cfg: ExperimentConfig, out_dir: str | Path) -> tuple[list[ResultRow], list[str]]:
    pipe = build_pipeline(cfg, out_dir)
    adv = pipe.adversarial(cfg)
    rows, summary = [], []
    for lam in sorted(cfg.sweep.lambda_grid):
        t0 = time.perf_counter()
        pur = _purifier_at(cfg, lam=lam)
        std = pipe.mean_accuracy(pipe.clean, pur)
        rob = pipe.mean_accuracy(adv, pur)
        rows.append(
            ResultRow(
                cfg.experiment,
                cfg.seed,
                schedule=cfg.schedule.kind,
                lam=lam,
                t_star=pur.t_star,
                n_steps=pur.n_steps,
                method=pur.method,
                attack="pgd",
                eps=cfg.attack.eps,
                standard_accuracy=std,
                robust_accuracy=rob,
                wall_time_seconds=time.perf_counter() - t0,
            )
        )
    robs = [r.robust_accuracy for r in rows]
    best = rows[int(np.argmax(robs))]
    interior = 0.0 < best.lam < 1.0
    summary.append(f"best robust accuracy {best.robust_accuracy:.4f} at lambda={best.lam}")
    summary.append(f"interior lambda attains the maximum: {interior}")
    soft_ok = all(r.robust_accuracy <= r.standard_accuracy + 1e-12 for r in rows)
    summary.append(f"soft check robust <= standard on every row: {soft_ok}")
    return rows, summary


def run_time_sweep(cfg: ExperimentConfig, out_dir: str | Path) -> tuple[list[ResultRow], list[str]]:
    pipe = build_pipeline(cfg, out_dir)
    adv = pipe.adversarial(cfg)
    raw_rob = pipe.mean_accuracy(adv, None)
    rows, summary = [], []
    argmax = {}
    for sched in (Schedule.vp(), Schedule.ve()):
        for t_star in cfg.sweep.t_grid:
            t0 = time.perf_counter()
            pur = _purifier_at(cfg, schedule=sched, t_star=float(t_star))
            std = pipe.mean_accuracy(pipe.clean, pur)
            rob = pipe.mean_accuracy(adv, pur)
            rows.append(
                ResultRow(
                    cfg.experiment,
                    cfg.seed,
                    schedule=sched.kind,
                    lam=pur.lam,
                    t_star=float(t_star),
                    n_steps=pur.n_steps,
                    method=pur.method,
                    attack="pgd",
                    eps=cfg.attack.eps,
                    standard_accuracy=std,
                    robust_accuracy=rob,
                    wall_time_seconds=time.perf_counter() - t0,
                )
            )
        here = [r for r in rows if r.schedule == sched.kind]
        best = here[int(np.argmax([r.robust_accuracy for r in here]))]
        argmax[sched.kind] = best.t_star
        summary.append(
            f"{sched.kind}: argmax t*={best.t_star:.4f} robust={best.robust_accuracy:.4f}"
        )
    summary.append(f"unpurified robust accuracy: {raw_rob:.4f}")
    summary.append(f"ve argmax t* >= vp argmax t*: {argmax['ve'] >= argmax['vp']}")
    return rows, summary


def run_solver_compare(cfg: ExperimentConfig, out_dir: str | Path) -> tuple[list[ResultRow], list[str]]:
    pipe = build_pipeline(cfg, out_dir)
    adv = pipe.adversarial(cfg)
    rows, summary = [], []
    for method in ("euler", "heun"):
        for n_steps in cfg.sweep.step_grid:
            t0 = time.perf_counter()
            pur = _purifier_at(cfg, method=method, n_steps=int(n_steps))
            std = pipe.mean_accuracy(pipe.clean, pur)
            rob = pipe.mean_accuracy(adv, pur)
            rows.append(
                ResultRow(
                    cfg.experiment,
                    cfg.seed,
                    schedule=cfg.schedule.kind,
                    lam=pur.lam,
                    t_star=pur.t_star,
                    n_steps=int(n_steps),
                    method=method,
                    attack="pgd",
                    eps=cfg.attack.eps,
                    standard_accuracy=std,
                    robust_accuracy=rob,
                    wall_time_seconds=time.perf_counter() - t0,
                )
            )
    by = {(r.method, r.n_steps): r.robust_accuracy for r in rows}
    gaps = [abs(by[("euler", n)] - by[("heun", n)]) for n in cfg.sweep.step_grid]
    summary.append(f"max |EM - Heun| robust gap: {max(gaps):.4f}")
    lo, hi = min(cfg.sweep.step_grid), max(cfg.sweep.step_grid)
    summary.append(
        f"heun robust at {lo} vs {hi} steps: {by[('heun', lo)]:.4f} vs {by[('heun', hi)]:.4f}"
    )
    return rows, summary


def run_step_sweep(cfg: ExperimentConfig, out_dir: str | Path) -> tuple[list[ResultRow], list[str]]:
    pipe = build_pipeline(cfg, out_dir)
    adv = pipe.adversarial(cfg)
    rows, summary = [], []
    for n_steps in cfg.sweep.insensitivity_grid:
        t0 = time.perf_counter()
        pur = _purifier_at(cfg, n_steps=int(n_steps))
        std = pipe.mean_accuracy(pipe.clean, pur)
        rob = pipe.mean_accuracy(adv, pur)
        rows.append(
            ResultRow(
                cfg.experiment,
                cfg.seed,
                schedule=cfg.schedule.kind,
                lam=pur.lam,
                t_star=pur.t_star,
                n_steps=int(n_steps),
                method=pur.method,
                attack="pgd",
                eps=cfg.attack.eps,
                standard_accuracy=std,
                robust_accuracy=rob,
                wall_time_seconds=time.perf_counter() - t0,
            )
        )
    robs = [r.robust_accuracy for r in rows]
    summary.append(f"robust accuracy spread over step grid: {max(robs) - min(robs):.4f}")
    return rows, summary


def run_attack_eval(cfg: ExperimentConfig, out_dir: str | Path) -> tuple[list[ResultRow], list[str]]:
    pipe = build_pipeline(cfg, out_dir)
    pur = _purifier_at(cfg)
    score_fn = make_score_fn(pipe.gmm, pur.schedule)
    rows, summary = [], []
    kind = cfg.attack.kind

    if kind == "pgd":
        std = pipe.mean_accuracy(pipe.clean, pur)
        for eps in cfg.attack.eps_grid:
            t0 = time.perf_counter()
            adv = pipe.adversarial(cfg, eps=float(eps))
            raw = pipe.mean_accuracy(adv, None)
            rob = pipe.mean_accuracy(adv, pur)
            rows.append(
                ResultRow(
                    cfg.experiment,
                    cfg.seed,
                    schedule=cfg.schedule.kind,
                    lam=pur.lam,
                    t_star=pur.t_star,
                    n_steps=pur.n_steps,
                    method=pur.method,
                    attack=kind,
                    eps=float(eps),
                    standard_accuracy=std,
                    robust_accuracy_unpurified=raw,
                    robust_accuracy=rob,
                    wall_time_seconds=time.perf_counter() - t0,
                )
            )
        raw_list = [r.robust_accuracy_unpurified for r in rows]
        summary.append(
            f"unpurified robust monotone nonincreasing in eps: {all(b <= a + 1e-12 for a, b in zip(raw_list, raw_list[1:]))}"
        )
    else:
        # adaptive and black-box attacks run on a fixed seeded subset
        t0 = time.perf_counter()
        sub_idx = np.random.default_rng(np.random.SeedSequence([cfg.data.eval_seed, 512512])).choice(
            len(pipe.clean), size=min(cfg.attack.subset, len(pipe.clean)), replace=False
        )
        x, y = pipe.clean.points[sub_idx], pipe.clean.labels[sub_idx]
        subset = LabeledDataset(x, y, cfg.data.eval_seed)
        spec = cfg.attack.spec()
        rng = attack_rng(cfg)
        if kind == "spsa":
            purifier = make_batch_purifier(pur, score_fn)
            counter = iter(range(10**9))

            def model_fn(pts: np.ndarray) -> np.ndarray:
                return predict_logits(pipe.clf, purifier(pts, seed=cfg.seed + next(counter)))

            adv_pts = spsa_attack(model_fn, x, y, spec, rng)
        else:
            adv_pts = bpda_eot_attack(pipe.clf, pur, score_fn, x, y, spec, rng)
        adv = LabeledDataset(adv_pts, y, cfg.data.eval_seed)
        std = pipe.mean_accuracy(subset, pur)
        raw = pipe.mean_accuracy(adv, None)
        rob = pipe.mean_accuracy(adv, pur)
        rows.append(
            ResultRow(
                cfg.experiment,
                cfg.seed,
                schedule=cfg.schedule.kind,
                lam=pur.lam,
                t_star=pur.t_star,
                n_steps=pur.n_steps,
                method=pur.method,
                attack=kind,
                eps=cfg.attack.eps,
                standard_accuracy=std,
                robust_accuracy_unpurified=raw,
                robust_accuracy=rob,
                wall_time_seconds=time.perf_counter() - t0,
            )
        )
        summary.append(f"{kind} evaluated on a fixed seeded subset of {len(subset)} points")

    for r in rows:
        summary.append(
            f"eps={r.eps:.4f}: standard={r.standard_accuracy:.4f} "
            f"raw_robust={r.robust_accuracy_unpurified:.4f} purified_robust={r.robust_accuracy:.4f}"
        )
    return rows, summary


def run_theory(cfg: ExperimentConfig, out_dir: str | Path) -> tuple[list[ResultRow], list[str]]:
    h = np.asarray(sorted(set(cfg.sweep.h_grid)), dtype=float)
    report = order_report(h)
    write_order_report(str(Path(out_dir) / Path(cfg.out).name), report)

    summary = []
    small = (h >= 1e-3) & (h <= 1e-2)
    if small.sum() >= 2:
        slope = loglog_regression_slope(h[small], report["t_vp"][small])
        summary.append(f"vp log-log slope on h in [1e-3, 1e-2]: {slope:.4f}")
    mid = (h >= 0.05) & (h <= 1.0)
    if mid.any():
        exceeds = bool(np.all(report["t_ve"][mid] > report["t_vp"][mid]))
        summary.append(f"ve interaction time exceeds vp pointwise on h in [0.05, 1]: {exceeds}")
    return [], summary


RUNNERS = {
    "lambda-sweep": run_lambda_sweep,
    "time-sweep": run_time_sweep,
    "solver-compare": run_solver_compare,
    "step-sweep": run_step_sweep,
    "attack-eval": run_attack_eval,
    "theory": run_theory,
}


def run(cfg: ExperimentConfig) -> list[ResultRow]:
    """Execute the configured experiment; writes CSV + echo + summary files."""
    out_path = Path(cfg.out)
    out_dir = out_path.parent if str(out_path.parent) else Path(".")
    out_dir.mkdir(parents=True, exist_ok=True)

    rows, summary = RUNNERS[cfg.experiment](cfg, out_dir)
    if cfg.experiment != "theory":
        write_rows(str(out_path), rows)

    echo_path = out_path.with_suffix(".effective.ini")
    echo_path.write_text(serialize_config(cfg), encoding="utf-8")
    summary_path = out_path.with_suffix(".summary.txt")
    summary_path.write_text("\n".join(summary) + "\n", encoding="utf-8")
    return rows
