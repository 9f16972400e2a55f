"""Experiment configuration: plain-text INI sections with strict validation.

The grammar is bracketed section headers with `key = value` lines and `#`
comments.  Every knob has a documented default; `auto` values (attack budget,
sweep grids, purification level) are resolved at load time -- against the
frozen calibration manifest where applicable -- so the effective-config echo
is always fully numeric and sufficient to re-run a result exactly.
"""

from __future__ import annotations

import configparser
import dataclasses
import io
import warnings
from dataclasses import dataclass

import numpy as np

from . import benchmark
from .attacks import AttackSpec
from .purify import FORWARD_ODE, FORWARD_STOCHASTIC, PurifierConfig
from .schedules import EDM, VE, VP, Schedule

EXPERIMENTS = (
    "lambda-sweep",
    "time-sweep",
    "solver-compare",
    "theory",
    "attack-eval",
    "step-sweep",
)


class ConfigError(ValueError):
    """Validation failure; the message names the offending field."""


@dataclass(frozen=True)
class DataConfig:
    eval_seed: int = benchmark.EVAL_SEED
    train_seed: int = benchmark.TRAIN_SEED
    n_train: int = benchmark.N_TRAIN


@dataclass(frozen=True)
class ClassifierConfig:
    hidden: tuple[int, ...] = (16, 16)
    activation: str = "tanh"
    learning_rate: float = 0.2
    epochs: int = 200
    batch_size: int = 64
    train_seed: int = 7104
    init_seed: int = benchmark.INIT_SEED


@dataclass(frozen=True)
class AttackConfig:
    kind: str = "pgd"
    norm: str = "linf"
    eps: float = 0.0  # resolved from the manifest when 'auto'
    step_size: float = 0.0  # resolved to eps/10 when 'auto'
    n_steps: int = 40
    eps_grid: tuple[float, ...] = ()
    spsa_delta: float = 0.01
    spsa_samples: int = 128
    spsa_lr: float = 0.0  # resolved to eps/10 when 'auto'
    eot_samples: int = 15
    subset: int = 512
    seed: int = 0

    def spec(self, eps: float | None = None) -> AttackSpec:
        eps = self.eps if eps is None else eps
        return AttackSpec(
            kind=self.kind,
            norm=self.norm,
            eps=eps,
            step_size=self.step_size * (eps / self.eps) if self.eps else self.step_size,
            n_steps=self.n_steps,
            spsa_delta=self.spsa_delta,
            spsa_samples=self.spsa_samples,
            spsa_lr=self.spsa_lr,
            eot_samples=self.eot_samples,
            seed=self.seed,
        )


@dataclass(frozen=True)
class SweepConfig:
    lambda_grid: tuple[float, ...] = (0.0, 0.25, 0.5, 0.75, 1.0)
    t_grid: tuple[float, ...] = ()
    step_grid: tuple[int, ...] = (25, 50, 100)
    insensitivity_grid: tuple[int, ...] = (25, 50, 100, 200)
    h_grid: tuple[float, ...] = ()


@dataclass(frozen=True)
class ExperimentConfig:
    experiment: str
    seed: int
    n_eval: int
    n_seeds: int
    out: str
    data: DataConfig
    schedule: Schedule
    purifier: PurifierConfig
    attack: AttackConfig
    classifier: ClassifierConfig
    sweep: SweepConfig


# ---------------------------------------------------------------------------
# parsing helpers

_SCHEDULE_DEFAULTS = {
    VP: dict(beta1=0.1, beta2=9.95, sigma_min=0.01, sigma_max=50.0, rho=7.0, t_max=1.0),
    VE: dict(beta1=0.1, beta2=9.95, sigma_min=0.01, sigma_max=50.0, rho=7.0, t_max=1.0),
    EDM: dict(beta1=0.1, beta2=9.95, sigma_min=0.002, sigma_max=80.0, rho=7.0, t_max=80.0),
}

_KNOWN_KEYS = {
    "experiment": {"kind", "seed", "n_eval", "n_seeds", "out"},
    "data": {"eval_seed", "train_seed", "n_train"},
    "schedule": {"kind", "beta1", "beta2", "sigma_min", "sigma_max", "rho", "t_max"},
    "purifier": {"t_star", "t_min", "n_steps", "method", "lambda", "forward_mode"},
    "attack": {
        "kind",
        "norm",
        "eps",
        "step_size",
        "n_steps",
        "eps_grid",
        "spsa_delta",
        "spsa_samples",
        "spsa_lr",
        "eot_samples",
        "subset",
        "seed",
    },
    "classifier": {
        "hidden",
        "activation",
        "learning_rate",
        "epochs",
        "batch_size",
        "train_seed",
        "init_seed",
    },
    "sweep": {"lambda_grid", "t_grid", "step_grid", "insensitivity_grid", "h_grid"},
}


class _Section:
    def __init__(self, name: str, raw: dict[str, str]):
        self.name = name
        self.raw = raw

    def get(self, key: str, default: str) -> str:
        return self.raw.get(key, default)

    def get_float(self, key: str, default: float) -> float:
        try:
            return float(self.get(key, repr(default)))
        except ValueError as exc:
            raise ConfigError(f"{self.name}.{key}: not a number ({exc})") from None

    def get_int(self, key: str, default: int) -> int:
        try:
            return int(self.get(key, str(default)))
        except ValueError:
            raise ConfigError(f"{self.name}.{key}: not an integer") from None

    def get_floats(self, key: str, default: str) -> tuple[float, ...]:
        text = self.get(key, default).strip()
        if text == "":
            return ()
        try:
            return tuple(float(tok) for tok in text.split(","))
        except ValueError:
            raise ConfigError(f"{self.name}.{key}: not a comma-separated number list") from None

    def get_ints(self, key: str, default: str) -> tuple[int, ...]:
        return tuple(int(v) for v in self.get_floats(key, default))


def _read_ini(text: str) -> dict[str, dict[str, str]]:
    parser = configparser.ConfigParser(inline_comment_prefixes=("#",), interpolation=None)
    try:
        parser.read_string(text)
    except configparser.Error as exc:
        # configparser messages carry the offending line number
        raise ConfigError(f"parse error: {exc}") from None
    return {s: dict(parser.items(s)) for s in parser.sections()}


def _check_unknown(sections: dict[str, dict[str, str]], strict: bool) -> None:
    problems = []
    for name, keys in sections.items():
        if name not in _KNOWN_KEYS:
            problems.append(f"unknown section [{name}]")
            continue
        for key in keys:
            if key not in _KNOWN_KEYS[name]:
                problems.append(f"unknown key {name}.{key}")
    if problems:
        msg = "; ".join(problems)
        if strict:
            raise ConfigError(msg)
        warnings.warn(f"ignoring {msg}", RuntimeWarning)


def loads_config(text: str, strict: bool = False, experiment: str | None = None) -> ExperimentConfig:
    """Parse config text; `experiment` (e.g. the CLI subcommand) overrides the file."""
    sections = _read_ini(text)
    _check_unknown(sections, strict)

    def sec(name: str) -> _Section:
        return _Section(name, sections.get(name, {}))

    exp = sec("experiment")
    kind = experiment or exp.get("kind", "")
    if not kind:
        raise ConfigError("experiment.kind: required (or pass a CLI subcommand)")
    if kind not in EXPERIMENTS:
        raise ConfigError(f"experiment.kind: {kind!r} not one of {EXPERIMENTS}")
    file_kind = exp.get("kind", kind)
    if experiment is not None and file_kind != experiment:
        raise ConfigError(
            f"experiment.kind: config says {file_kind!r} but the subcommand is {experiment!r}"
        )

    manifest = benchmark.load_manifest()

    # schedule (kind decides the remaining defaults)
    sch = sec("schedule")
    sch_kind = sch.get("kind", manifest["purifier"]["schedule_kind"])
    if sch_kind not in (VP, VE, EDM):
        raise ConfigError(f"schedule.kind: {sch_kind!r} not one of {(VP, VE, EDM)}")
    dflt = _SCHEDULE_DEFAULTS[sch_kind]
    t_max_default = dflt["t_max"]
    if sch_kind == EDM and "sigma_max" in sch.raw:
        t_max_default = sch.get_float("sigma_max", dflt["sigma_max"])
    try:
        schedule = Schedule(
            kind=sch_kind,
            beta1=sch.get_float("beta1", dflt["beta1"]),
            beta2=sch.get_float("beta2", dflt["beta2"]),
            sigma_min=sch.get_float("sigma_min", dflt["sigma_min"]),
            sigma_max=sch.get_float("sigma_max", dflt["sigma_max"]),
            rho=sch.get_float("rho", dflt["rho"]),
            t_max=sch.get_float("t_max", t_max_default),
        )
    except ValueError as exc:
        raise ConfigError(f"schedule: {exc}") from None

    # purifier; t_star defaults to the calibrated level for the manifest's
    # schedule kind and to the 0.3*T ratio otherwise
    pur = sec("purifier")
    if sch_kind == manifest["purifier"]["schedule_kind"]:
        t_star_default = float(manifest["purifier"]["t_star"])
        lam_default = float(manifest["purifier"]["lambda"])
    else:
        t_star_default = 0.3 * schedule.t_max
        lam_default = float(manifest["purifier"]["lambda"])
    lam = pur.get_float("lambda", lam_default)
    if not 0.0 <= lam <= 1.0:
        raise ConfigError(f"purifier.lambda: {lam} outside [0, 1]")
    try:
        purifier = PurifierConfig(
            schedule=schedule,
            t_star=pur.get_float("t_star", t_star_default),
            t_min=pur.get_float("t_min", 1e-3),
            n_steps=pur.get_int("n_steps", 100),
            method=pur.get("method", "heun"),
            lam=lam,
            forward_mode=pur.get("forward_mode", FORWARD_STOCHASTIC),
        )
    except ValueError as exc:
        raise ConfigError(f"purifier: {exc}") from None
    if purifier.forward_mode not in (FORWARD_STOCHASTIC, FORWARD_ODE):
        raise ConfigError("purifier.forward_mode: must be 'stochastic' or 'ode'")

    # attack with manifest-resolved budget
    att = sec("attack")
    eps_raw = att.get("eps", "auto")
    eps = float(manifest["attack"]["eps"]) if eps_raw == "auto" else float(eps_raw)
    if eps <= 0:
        raise ConfigError(f"attack.eps: {eps} must be positive")
    step_raw = att.get("step_size", "auto")
    step_size = eps / 10.0 if step_raw == "auto" else float(step_raw)
    spsa_lr_raw = att.get("spsa_lr", "auto")
    spsa_lr = eps / 10.0 if spsa_lr_raw == "auto" else float(spsa_lr_raw)
    grid_raw = att.get("eps_grid", "auto")
    if grid_raw == "auto":
        eps_grid = tuple(eps * f for f in (0.25, 0.5, 1.0, 2.0))
    else:
        eps_grid = _Section("attack", {"eps_grid": grid_raw}).get_floats("eps_grid", "")
    attack = AttackConfig(
        kind=att.get("kind", "pgd"),
        norm=att.get("norm", "linf"),
        eps=eps,
        step_size=step_size,
        n_steps=att.get_int("n_steps", 40),
        eps_grid=eps_grid,
        spsa_delta=att.get_float("spsa_delta", 0.01),
        spsa_samples=att.get_int("spsa_samples", 128),
        spsa_lr=spsa_lr,
        eot_samples=att.get_int("eot_samples", 15),
        subset=att.get_int("subset", 512),
        seed=att.get_int("seed", 0),
    )
    try:
        attack.spec()
    except ValueError as exc:
        raise ConfigError(f"attack: {exc}") from None

    # classifier
    cls = sec("classifier")
    hidden = cls.get_ints("hidden", "16,16")
    if any(h < 1 for h in hidden):
        raise ConfigError("classifier.hidden: widths must be positive")
    activation = cls.get("activation", "tanh")
    if activation not in ("tanh", "relu"):
        raise ConfigError(f"classifier.activation: {activation!r} not 'tanh' or 'relu'")
    classifier = ClassifierConfig(
        hidden=hidden,
        activation=activation,
        learning_rate=cls.get_float("learning_rate", 0.2),
        epochs=cls.get_int("epochs", 200),
        batch_size=cls.get_int("batch_size", 64),
        train_seed=cls.get_int("train_seed", 7104),
        init_seed=cls.get_int("init_seed", benchmark.INIT_SEED),
    )
    if classifier.learning_rate < 0:
        raise ConfigError("classifier.learning_rate: must be nonnegative")
    if classifier.epochs < 1 or classifier.batch_size < 1:
        raise ConfigError("classifier.epochs/batch_size: must be positive")

    # data
    dat = sec("data")
    data = DataConfig(
        eval_seed=dat.get_int("eval_seed", benchmark.EVAL_SEED),
        train_seed=dat.get_int("train_seed", benchmark.TRAIN_SEED),
        n_train=dat.get_int("n_train", benchmark.N_TRAIN),
    )
    if data.n_train < 1:
        raise ConfigError("data.n_train: must be positive")

    # sweep grids, resolved to concrete numbers
    swp = sec("sweep")
    lambda_grid = swp.get_floats("lambda_grid", "0,0.25,0.5,0.75,1.0")
    if any(not 0.0 <= v <= 1.0 for v in lambda_grid):
        raise ConfigError("sweep.lambda_grid: entries must lie in [0, 1]")
    t_raw = swp.get("t_grid", "auto")
    if t_raw == "auto":
        # ten levels over (t_min, T] for the T=1 schedules of the time sweep
        t_grid = tuple(float(v) for v in np.linspace(purifier.t_min, 1.0, 11)[1:])
    else:
        t_grid = swp.get_floats("t_grid", "")
    h_raw = swp.get("h_grid", "auto")
    if h_raw == "auto":
        h_grid = tuple(float(v) for v in np.geomspace(1e-3, 1e-2, 12)) + tuple(
            float(v) for v in np.linspace(0.05, 1.0, 20)
        )
    else:
        h_grid = swp.get_floats("h_grid", "")
    if kind == "theory" and len(h_grid) == 0:
        raise ConfigError("sweep.h_grid: must be nonempty for the theory report")
    sweep = SweepConfig(
        lambda_grid=lambda_grid,
        t_grid=t_grid,
        step_grid=swp.get_ints("step_grid", "25,50,100"),
        insensitivity_grid=swp.get_ints("insensitivity_grid", "25,50,100,200"),
        h_grid=h_grid,
    )

    n_eval = exp.get_int("n_eval", 2000)
    n_seeds = exp.get_int("n_seeds", 5)
    if n_eval < 1:
        raise ConfigError("experiment.n_eval: must be >= 1")
    if n_seeds < 1:
        raise ConfigError("experiment.n_seeds: must be >= 1")

    return ExperimentConfig(
        experiment=kind,
        seed=exp.get_int("seed", 0),
        n_eval=n_eval,
        n_seeds=n_seeds,
        out=exp.get("out", "results.csv"),
        data=data,
        schedule=schedule,
        purifier=purifier,
        attack=attack,
        classifier=classifier,
        sweep=sweep,
    )


def load_config(path: str, strict: bool = False, experiment: str | None = None) -> ExperimentConfig:
    with open(path, encoding="utf-8") as fh:
        return loads_config(fh.read(), strict=strict, experiment=experiment)


def default_config(experiment: str, **overrides) -> ExperimentConfig:
    """All-defaults config for an experiment kind."""
    cfg = loads_config("", experiment=experiment)
    return replace_config(cfg, **overrides) if overrides else cfg


def replace_config(cfg: ExperimentConfig, **overrides) -> ExperimentConfig:
    return dataclasses.replace(cfg, **overrides)


# ---------------------------------------------------------------------------
# serialization (the effective-config echo)


def _fmt(v) -> str:
    if isinstance(v, float):
        return repr(float(v))
    if isinstance(v, tuple):
        return ",".join(_fmt(x) for x in v)
    return str(v)


def serialize_config(cfg: ExperimentConfig) -> str:
    """Fully populated INI text; reparses to an equal ExperimentConfig."""
    out = io.StringIO()
    out.write("# effective configuration (all defaults resolved)\n")
    out.write("[experiment]\n")
    out.write(f"kind = {cfg.experiment}\nseed = {cfg.seed}\n")
    out.write(f"n_eval = {cfg.n_eval}\nn_seeds = {cfg.n_seeds}\nout = {cfg.out}\n\n")

    s = cfg.schedule
    out.write("[schedule]\n")
    out.write(f"kind = {s.kind}\nbeta1 = {_fmt(s.beta1)}\nbeta2 = {_fmt(s.beta2)}\n")
    out.write(f"sigma_min = {_fmt(s.sigma_min)}\nsigma_max = {_fmt(s.sigma_max)}\n")
    out.write(f"rho = {_fmt(s.rho)}\nt_max = {_fmt(s.t_max)}\n\n")

    p = cfg.purifier
    out.write("[purifier]\n")
    out.write(f"t_star = {_fmt(p.t_star)}\nt_min = {_fmt(p.t_min)}\nn_steps = {p.n_steps}\n")
    out.write(f"method = {p.method}\nlambda = {_fmt(p.lam)}\nforward_mode = {p.forward_mode}\n\n")

    a = cfg.attack
    out.write("[attack]\n")
    out.write(f"kind = {a.kind}\nnorm = {a.norm}\neps = {_fmt(a.eps)}\n")
    out.write(f"step_size = {_fmt(a.step_size)}\nn_steps = {a.n_steps}\n")
    out.write(f"eps_grid = {_fmt(a.eps_grid)}\n")
    out.write(f"spsa_delta = {_fmt(a.spsa_delta)}\nspsa_samples = {a.spsa_samples}\n")
    out.write(f"spsa_lr = {_fmt(a.spsa_lr)}\neot_samples = {a.eot_samples}\n")
    out.write(f"subset = {a.subset}\nseed = {a.seed}\n\n")

    c = cfg.classifier
    out.write("[classifier]\n")
    out.write(f"hidden = {_fmt(c.hidden)}\nactivation = {c.activation}\n")
    out.write(f"learning_rate = {_fmt(c.learning_rate)}\nepochs = {c.epochs}\n")
    out.write(f"batch_size = {c.batch_size}\ntrain_seed = {c.train_seed}\n")
    out.write(f"init_seed = {c.init_seed}\n\n")

    d = cfg.data
    out.write("[data]\n")
    out.write(f"eval_seed = {d.eval_seed}\ntrain_seed = {d.train_seed}\nn_train = {d.n_train}\n\n")

    w = cfg.sweep
    out.write("[sweep]\n")
    out.write(f"lambda_grid = {_fmt(w.lambda_grid)}\nt_grid = {_fmt(w.t_grid)}\n")
    out.write(f"step_grid = {_fmt(w.step_grid)}\n")
    out.write(f"insensitivity_grid = {_fmt(w.insensitivity_grid)}\nh_grid = {_fmt(w.h_grid)}\n")
    return out.getvalue()
