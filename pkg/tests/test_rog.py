import numpy as np
import pytest
from scipy.linalg import cho_factor

from pda.bundle_io import BundleMeta, FeatureBundle
from pda.errors import SchemaError, StateError
from pda.mcd import McdConfig, regularize
from pda.pseudo_label import labeling_from_logits
from pda.rog import RoGModel, fit_rog, rog_posterior


def forced_bundle(features, pseudo, num_classes, labels=None):
    """Bundle whose logits force the given pseudo-labels with high confidence."""
    features = np.asarray(features, dtype=np.float64)
    pseudo = np.asarray(pseudo)
    logits = np.full((features.shape[0], num_classes), -10.0)
    logits[np.arange(features.shape[0]), pseudo] = 10.0
    meta = BundleMeta(num_classes=num_classes, feature_dim=features.shape[1],
                      domain="test", backbone="none")
    return FeatureBundle(features=features, logits=logits, meta=meta,
                         labels=None if labels is None else np.asarray(labels, np.int64))


def two_cluster_bundle(n_per=60, seed=50, separation=8.0, dim=2):
    rng = np.random.default_rng(seed)
    a = rng.standard_normal((n_per, dim))
    b = rng.standard_normal((n_per, dim)) + separation
    features = np.vstack([a, b])
    pseudo = np.repeat([0, 1], n_per)
    return forced_bundle(features, pseudo, 2)


def posterior_loop_oracle(model, features):
    """Direct quadratic-form evaluation, one example and class at a time."""
    reg = regularize(model.tied_cov)
    inv = np.linalg.inv(reg)
    out = np.zeros((features.shape[0], model.num_classes))
    for i, x in enumerate(features):
        scores = {}
        for l in range(model.num_classes):
            if not model.present[l]:
                continue
            diff = x - model.means[l]
            scores[l] = model.log_priors[l] - 0.5 * diff @ inv @ diff
        peak = max(scores.values())
        exps = {l: np.exp(s - peak) for l, s in scores.items()}
        total = sum(exps.values())
        for l, e in exps.items():
            out[i, l] = e / total
    return out


def manual_model(means, tied_cov, log_priors=None, present=None):
    means = np.asarray(means, dtype=np.float64)
    c = means.shape[0]
    if log_priors is None:
        log_priors = np.full(c, -np.log(c))
    if present is None:
        present = np.ones(c, dtype=bool)
    return RoGModel(means=means, tied_cov=np.asarray(tied_cov, dtype=np.float64),
                    precision_factor=cho_factor(np.asarray(tied_cov), lower=True),
                    log_priors=np.asarray(log_priors, dtype=np.float64),
                    present=np.asarray(present, dtype=bool))


def test_h_equals_n_reduces_to_lda_fit():
    bundle = two_cluster_bundle()
    labeling = labeling_from_logits(bundle.logits)
    model = fit_rog(bundle, labeling, McdConfig(h_fraction=1.0))
    feats_a, feats_b = bundle.features[:60], bundle.features[60:]
    np.testing.assert_allclose(model.means[0], feats_a.mean(axis=0), atol=1e-9)
    np.testing.assert_allclose(model.means[1], feats_b.mean(axis=0), atol=1e-9)
    pooled = (60 * np.cov(feats_a, rowvar=False, ddof=1)
              + 60 * np.cov(feats_b, rowvar=False, ddof=1)) / 120
    np.testing.assert_allclose(model.tied_cov, pooled, rtol=0, atol=1e-9)
    np.testing.assert_allclose(np.exp(model.log_priors).sum(), 1.0, atol=1e-9)


def test_robust_means_resist_injected_outliers():
    rng = np.random.default_rng(51)
    n = 100
    clean = rng.standard_normal((n, 2))
    contaminated = clean.copy()
    contaminated[:10] = 50.0 + rng.standard_normal((10, 2))  # 10% gross outliers
    other = rng.standard_normal((n, 2)) + 8.0
    features = np.vstack([contaminated, other])
    pseudo = np.repeat([0, 1], n)
    bundle = forced_bundle(features, pseudo, 2)
    model = fit_rog(bundle, labeling_from_logits(bundle.logits), McdConfig(seed=51))

    clean_mean = clean[10:].mean(axis=0)  # the uncontaminated members
    nonrobust_mean = contaminated.mean(axis=0)  # plain LDA oracle fit
    robust_dev = np.linalg.norm(model.means[0] - clean_mean)
    nonrobust_dev = np.linalg.norm(nonrobust_mean - clean_mean)
    assert robust_dev <= 0.25 * nonrobust_dev
    # spec-level bound: mean moves < 10% of the outlier displacement
    assert robust_dev < 0.1 * nonrobust_dev or robust_dev < 0.5


def test_single_member_class_fallback():
    rng = np.random.default_rng(52)
    big_a = rng.standard_normal((30, 2))
    big_b = rng.standard_normal((30, 2)) + 6.0
    lone = np.array([[100.0, -100.0]])
    features = np.vstack([big_a, big_b, lone])
    pseudo = np.array([0] * 30 + [1] * 30 + [2])
    bundle = forced_bundle(features, pseudo, 3)
    model = fit_rog(bundle, labeling_from_logits(bundle.logits), McdConfig(h_fraction=1.0))
    np.testing.assert_array_equal(model.means[2], lone[0])
    # tied scatter comes only from the two big classes
    pooled = (30 * np.cov(big_a, rowvar=False, ddof=1)
              + 30 * np.cov(big_b, rowvar=False, ddof=1)) / 60
    np.testing.assert_allclose(model.tied_cov, pooled, rtol=0, atol=1e-9)


def test_all_small_classes_use_sample_covariances():
    rng = np.random.default_rng(53)
    # D = 8 with 6-member classes: nobody reaches D+2 = 10
    features = rng.standard_normal((12, 8))
    pseudo = np.repeat([0, 1], 6)
    bundle = forced_bundle(features, pseudo, 2)
    model = fit_rog(bundle, labeling_from_logits(bundle.logits), McdConfig())
    np.testing.assert_allclose(model.means[0], features[:6].mean(axis=0), atol=1e-12)
    assert np.isfinite(model.tied_cov).all()
    probs = rog_posterior(model, features)
    np.testing.assert_allclose(probs.sum(axis=1), 1.0, atol=1e-9)


def test_all_singleton_classes_is_state_error():
    features = np.array([[0.0, 0.0], [5.0, 5.0]])
    bundle = forced_bundle(features, [0, 1], 2)
    with pytest.raises(StateError):
        fit_rog(bundle, labeling_from_logits(bundle.logits), McdConfig())


def test_posterior_peak_at_class_mean():
    model = manual_model([[0.0, 0.0], [4.0, 0.0]], np.eye(2))
    probs = rog_posterior(model, np.array([[0.0, 0.0]]))
    assert probs[0, 0] > 0.5


def test_identity_covariance_reduces_to_nearest_mean():
    rng = np.random.default_rng(54)
    means = rng.standard_normal((5, 3))
    model = manual_model(means, np.eye(3))
    x = rng.standard_normal((200, 3))
    probs = rog_posterior(model, x)
    nearest = np.argmin(((x[:, None, :] - means[None]) ** 2).sum(-1), axis=1)
    np.testing.assert_array_equal(probs.argmax(axis=1), nearest)


def test_posterior_matches_quadratic_form_oracle():
    rng = np.random.default_rng(55)
    bundle = two_cluster_bundle(seed=55)
    model = fit_rog(bundle, labeling_from_logits(bundle.logits), McdConfig(seed=55))
    x = rng.standard_normal((40, 2)) * 3
    probs = rog_posterior(model, x)
    np.testing.assert_allclose(probs.sum(axis=1), 1.0, rtol=0, atol=1e-9)
    np.testing.assert_allclose(probs, posterior_loop_oracle(model, x), atol=1e-8)


def test_posterior_shared_shift_invariance():
    rng = np.random.default_rng(56)
    means = rng.standard_normal((4, 3))
    cov = np.eye(3) * 0.5 + 0.1
    model = manual_model(means, cov)
    x = rng.standard_normal((50, 3))
    shift = np.array([13.0, -7.0, 2.5])
    shifted = manual_model(means + shift, cov)
    np.testing.assert_allclose(rog_posterior(model, x),
                               rog_posterior(shifted, x + shift), rtol=0, atol=1e-9)


def test_absent_class_gets_zero_posterior():
    rng = np.random.default_rng(57)
    features = np.vstack([rng.standard_normal((20, 2)),
                          rng.standard_normal((20, 2)) + 5])
    pseudo = np.repeat([0, 2], 20)  # class 1 never predicted
    bundle = forced_bundle(features, pseudo, 3)
    model = fit_rog(bundle, labeling_from_logits(bundle.logits), McdConfig(h_fraction=1.0))
    assert not model.present[1]
    probs = rog_posterior(model, features)
    assert (probs[:, 1] == 0).all()
    np.testing.assert_allclose(probs.sum(axis=1), 1.0, atol=1e-9)


def test_priors_follow_pseudo_label_proportions():
    rng = np.random.default_rng(58)
    features = np.vstack([rng.standard_normal((30, 2)),
                          rng.standard_normal((10, 2)) + 9])
    pseudo = np.array([0] * 30 + [1] * 10)
    bundle = forced_bundle(features, pseudo, 2)
    labeling = labeling_from_logits(bundle.logits)
    model = fit_rog(bundle, labeling, McdConfig(h_fraction=1.0))
    np.testing.assert_allclose(np.exp(model.log_priors), [0.75, 0.25], atol=1e-12)
    uniform = fit_rog(bundle, labeling, McdConfig(h_fraction=1.0), uniform_priors=True)
    np.testing.assert_allclose(np.exp(uniform.log_priors), [0.5, 0.5], atol=1e-12)


def test_posterior_dimension_mismatch():
    model = manual_model([[0.0, 0.0]], np.eye(2), log_priors=[0.0])
    with pytest.raises(SchemaError):
        rog_posterior(model, np.zeros((3, 5)))


def test_fit_determinism():
    bundle = two_cluster_bundle(seed=59)
    labeling = labeling_from_logits(bundle.logits)
    cfg = McdConfig(seed=7, exhaustive_threshold=0)
    m1 = fit_rog(bundle, labeling, cfg)
    m2 = fit_rog(bundle, labeling, cfg)
    assert m1.means.tobytes() == m2.means.tobytes()
    assert m1.tied_cov.tobytes() == m2.tied_cov.tobytes()
