import numpy as np
import pytest

from pda.bundle_io import BundleMeta, FeatureBundle, validate_bundle


def random_bundle(n=12, d=4, c=3, seed=0, with_labels=True, dtype=np.float64):
    """A small valid bundle with N(0,1) features and logits."""
    rng = np.random.default_rng(seed)
    features = rng.standard_normal((n, d)).astype(dtype)
    logits = rng.standard_normal((n, c)).astype(dtype)
    labels = rng.integers(0, c, size=n).astype(np.int64) if with_labels else None
    meta = BundleMeta(num_classes=c, feature_dim=d, domain="test", backbone="none")
    bundle = FeatureBundle(features=features, logits=logits, labels=labels, meta=meta)
    validate_bundle(bundle)
    return bundle


@pytest.fixture
def small_bundle():
    return random_bundle()
