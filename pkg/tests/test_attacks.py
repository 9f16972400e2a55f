"""Attack contracts: projections, budgets, estimator exactness, adaptivity."""

import numpy as np
import pytest

from puriflab import (
    AttackSpec,
    MlpClassifier,
    PurifierConfig,
    Schedule,
    accuracy,
    bpda_eot_attack,
    make_batch_purifier,
    make_score_fn,
    pgd_attack,
    predict_logits,
    project,
    spsa_attack,
    spsa_gradient,
)
from puriflab.attacks import eot_surrogate_gradient
from puriflab.benchmark import benchmark_classifier, eval_dataset, load_manifest, xor_gmm
from puriflab.gmm import LabeledDataset
from scipy.special import softmax

GMM = xor_gmm()


def manifest_eps():
    return float(load_manifest()["attack"]["eps"])


# -- projection -------------------------------------------------------------


def test_project_inside_ball_unchanged():
    d = np.array([0.05, -0.02])
    np.testing.assert_array_equal(project(d, "linf", 0.1), d)
    np.testing.assert_array_equal(project(d, "l2", 1.0), d)


def test_project_linf_clamps():
    np.testing.assert_allclose(project(np.array([0.5, -0.03]), "linf", 0.1), [0.1, -0.03])


def test_project_l2_rescales():
    np.testing.assert_allclose(project(np.array([3.0, 4.0]), "l2", 1.0), [0.6, 0.8], rtol=1e-12)


def test_project_batched_rows():
    d = np.array([[3.0, 4.0], [0.1, 0.0]])
    out = project(d, "l2", 1.0)
    np.testing.assert_allclose(out[0], [0.6, 0.8], rtol=1e-12)
    np.testing.assert_array_equal(out[1], d[1])


# -- PGD ---------------------------------------------------------------------


def test_pgd_constant_classifier_no_move():
    clf = MlpClassifier((2, 2), [np.zeros((2, 2))], [np.zeros(2)])
    x = np.array([[0.5, -0.5]])
    out = pgd_attack(clf, x, np.array([0]), AttackSpec(eps=0.3, n_steps=10))
    np.testing.assert_array_equal(out, x)


def test_pgd_linear_single_step_closed_form():
    # one Linf step: delta = alpha * sign((p - onehot)^T W)
    w = np.array([[0.7, -0.2], [0.1, 0.4]])
    clf = MlpClassifier((2, 2), [w.copy()], [np.zeros(2)])
    x = np.array([0.5, -1.5])
    y = 1
    p = softmax(w @ x)
    grad = (p - np.eye(2)[y]) @ w
    spec = AttackSpec(eps=1.0, step_size=0.25, n_steps=1)
    out = pgd_attack(clf, x, np.array([y]), spec)
    np.testing.assert_allclose(out[0], x + 0.25 * np.sign(grad), rtol=1e-12)


def test_pgd_budget_feasible_both_norms():
    clf = benchmark_classifier()
    ev = eval_dataset(200)
    for norm in ("linf", "l2"):
        spec = AttackSpec(norm=norm, eps=0.9, n_steps=25)
        adv = pgd_attack(clf, ev.points, ev.labels, spec)
        delta = adv - ev.points
        if norm == "linf":
            assert np.abs(delta).max() <= 0.9 + 1e-9
        else:
            assert np.linalg.norm(delta, axis=-1).max() <= 0.9 + 1e-9


def test_pgd_calibrated_epsilon_breaks_raw_classifier():
    # the first-order margin recipe: raw robust < 0.30 while clean >= 0.97
    from puriflab.benchmark import calibrate_epsilon_logit

    clf = benchmark_classifier()
    ev = eval_dataset()
    assert accuracy(clf, ev) >= 0.97
    eps = calibrate_epsilon_logit(clf, ev)
    adv = pgd_attack(clf, ev.points, ev.labels, AttackSpec(eps=eps, n_steps=40))
    assert accuracy(clf, LabeledDataset(adv, ev.labels, 0)) < 0.30


def test_pgd_monotone_in_eps():
    clf = benchmark_classifier()
    ev = eval_dataset(500)
    eps = manifest_eps()
    accs = []
    for e in (eps / 4, eps / 2, eps, 2 * eps):
        adv = pgd_attack(clf, ev.points, ev.labels, AttackSpec(eps=e, n_steps=40))
        accs.append(accuracy(clf, LabeledDataset(adv, ev.labels, 0)))
    assert all(b <= a + 1e-12 for a, b in zip(accs, accs[1:]))


def test_pgd_iteration_saturation():
    # purified robust accuracy varies < 2 points across 10/20/40/100 iterations
    clf = benchmark_classifier()
    ev = eval_dataset(1000)
    eps = manifest_eps()
    man = load_manifest()["purifier"]
    pcfg = PurifierConfig(
        Schedule.edm(), t_star=man["t_star"], t_min=man["t_min"], n_steps=man["n_steps"],
        method=man["method"], lam=man["lambda"],
    )
    purifier = make_batch_purifier(pcfg, make_score_fn(GMM, pcfg.schedule))
    accs = []
    for iters in (10, 20, 40, 100):
        adv = pgd_attack(clf, ev.points, ev.labels, AttackSpec(eps=eps, n_steps=iters))
        ds = LabeledDataset(adv, ev.labels, 0)
        accs.append(np.mean([accuracy(clf, ds, purifier, seed=s) for s in (1, 2, 3)]))
    assert max(accs) - min(accs) < 0.02


# -- SPSA ---------------------------------------------------------------------


def test_spsa_constant_loss_zero_gradient():
    g = spsa_gradient(lambda x: np.ones(len(x)), np.zeros((3, 2)), 0.01, 16, np.random.default_rng(0))
    np.testing.assert_array_equal(g, np.zeros((3, 2)))


def test_spsa_quadratic_cosine_similarity():
    loss = lambda x: 0.5 * np.sum(x * x, axis=-1)
    x = np.array([1.0, 2.0])
    g = spsa_gradient(loss, x, 1e-3, 256, np.random.default_rng(1))
    cos = g @ x / (np.linalg.norm(g) * np.linalg.norm(x))
    assert cos > 0.9


def test_spsa_exact_in_expectation_for_linear_loss():
    # estimator mean over 1e4 samples within 4 SE per coordinate of a
    a = np.array([0.7, -1.3, 2.1])
    loss = lambda x: x @ a
    n = 10_000
    rng = np.random.default_rng(2)
    ests = np.empty((n, 3))
    for i in range(n):
        ests[i] = spsa_gradient(loss, np.zeros(3), 0.5, 1, rng)
    se = ests.std(axis=0) / np.sqrt(n)
    assert np.all(np.abs(ests.mean(axis=0) - a) < 4 * se)


def test_spsa_zero_steps_returns_input():
    clf = benchmark_classifier()
    x = np.array([[1.0, 1.0]])
    spec = AttackSpec(kind="spsa", eps=0.5, n_steps=0)
    out = spsa_attack(lambda p: predict_logits(clf, p), x, np.array([0]), spec,
                      np.random.default_rng(0))
    np.testing.assert_array_equal(out, x)


def test_spsa_deterministic_in_seed():
    clf = benchmark_classifier()
    ev = eval_dataset(20)
    spec = AttackSpec(kind="spsa", eps=0.9, n_steps=5, spsa_samples=32, spsa_lr=0.09)
    model = lambda p: predict_logits(clf, p)
    a = spsa_attack(model, ev.points, ev.labels, spec, np.random.default_rng(9))
    b = spsa_attack(model, ev.points, ev.labels, spec, np.random.default_rng(9))
    np.testing.assert_array_equal(a, b)


def test_spsa_matches_pgd_drop_on_raw_classifier():
    # >= 80% of the white-box accuracy drop at equal eps
    clf = benchmark_classifier()
    ev = eval_dataset(400)
    eps = manifest_eps()
    clean = accuracy(clf, ev)
    adv_p = pgd_attack(clf, ev.points, ev.labels, AttackSpec(eps=eps, n_steps=40))
    acc_p = accuracy(clf, LabeledDataset(adv_p, ev.labels, 0))
    spec = AttackSpec(kind="spsa", eps=eps, n_steps=40, spsa_samples=256, spsa_lr=eps / 10)
    adv_s = spsa_attack(lambda p: predict_logits(clf, p), ev.points, ev.labels, spec,
                        np.random.default_rng(3))
    acc_s = accuracy(clf, LabeledDataset(adv_s, ev.labels, 0))
    assert (clean - acc_s) >= 0.8 * (clean - acc_p)
    assert np.abs(adv_s - ev.points).max() <= eps + 1e-9


# -- BPDA + EOT ----------------------------------------------------------------


def test_bpda_identity_purifier_reduces_to_pgd():
    clf = benchmark_classifier()
    ev = eval_dataset(50)
    eps = 0.8
    ident = PurifierConfig(Schedule.vp(), t_star=1e-3, t_min=1e-3)
    spec = AttackSpec(kind="bpda_eot", eps=eps, n_steps=15, eot_samples=1)
    adv_b = bpda_eot_attack(clf, ident, make_score_fn(GMM, Schedule.vp()), ev.points, ev.labels,
                            spec, np.random.default_rng(0))
    adv_p = pgd_attack(clf, ev.points, ev.labels, AttackSpec(eps=eps, n_steps=15))
    np.testing.assert_array_equal(adv_b, adv_p)


def test_bpda_budget_feasible():
    clf = benchmark_classifier()
    ev = eval_dataset(32)
    man = load_manifest()["purifier"]
    pcfg = PurifierConfig(Schedule.edm(), t_star=man["t_star"], t_min=man["t_min"],
                          n_steps=20, method=man["method"], lam=man["lambda"])
    spec = AttackSpec(kind="bpda_eot", eps=0.9, n_steps=10, eot_samples=4)
    adv = bpda_eot_attack(clf, pcfg, make_score_fn(GMM, pcfg.schedule), ev.points, ev.labels,
                          spec, np.random.default_rng(1))
    assert np.abs(adv - ev.points).max() <= 0.9 + 1e-9


def test_eot_variance_scales_inverse_k():
    # var of the surrogate gradient across repeats ~ c/K: log-log slope -1 +- 0.2
    clf = benchmark_classifier()
    pcfg = PurifierConfig(Schedule.edm(), t_star=0.45, t_min=1e-3, n_steps=20, lam=0.75)
    score = make_score_fn(GMM, pcfg.schedule)
    x = np.array([1.2, 0.9])
    rng = np.random.default_rng(17)
    ks = np.array([1, 2, 4, 8, 16])
    variances = []
    for k in ks:
        grads = np.stack(
            [eot_surrogate_gradient(clf, pcfg, score, x, 0, int(k), rng) for _ in range(160)]
        )
        variances.append(grads.var(axis=0).sum())
    slope = np.polyfit(np.log(ks), np.log(variances), 1)[0]
    assert -1.2 <= slope <= -0.8, slope


def test_bpda_strength_close_to_pgd_transfer():
    # the adaptive attack is approximately as strong as gray-box transfer on
    # this mode-snapping benchmark (strict dominance does not hold here; see
    # the decisions ledger): purified robust under BPDA stays within 4 points
    clf = benchmark_classifier()
    ev = eval_dataset(160)
    eps = manifest_eps()
    man = load_manifest()["purifier"]
    pcfg = PurifierConfig(Schedule.edm(), t_star=man["t_star"], t_min=man["t_min"],
                          n_steps=man["n_steps"], method=man["method"], lam=man["lambda"])
    score = make_score_fn(GMM, pcfg.schedule)
    purifier = make_batch_purifier(pcfg, score)
    spec = AttackSpec(kind="bpda_eot", eps=eps, n_steps=40, eot_samples=15)
    adv_b = bpda_eot_attack(clf, pcfg, score, ev.points, ev.labels, spec, np.random.default_rng(2))
    adv_p = pgd_attack(clf, ev.points, ev.labels, AttackSpec(eps=eps, n_steps=40))
    seeds = (1, 2, 3, 4, 5)
    rob_b = np.mean([accuracy(clf, LabeledDataset(adv_b, ev.labels, 0), purifier, s) for s in seeds])
    rob_p = np.mean([accuracy(clf, LabeledDataset(adv_p, ev.labels, 0), purifier, s) for s in seeds])
    assert rob_b <= rob_p + 0.04


def test_attack_spec_validation():
    with pytest.raises(ValueError):
        AttackSpec(eps=-1.0)
    with pytest.raises(ValueError):
        AttackSpec(norm="l1")
    with pytest.raises(ValueError):
        AttackSpec(kind="fgsm")
    assert AttackSpec(eps=2.0).alpha == pytest.approx(0.2)
