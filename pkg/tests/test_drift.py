import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import random_graph
from oracles import ecdf_sup, kolmogorov_series
from graphcf.drift import detect, detect_per_class, error_sample, error_sample_by_class, ks_statistic, ks_two_sample
from graphcf.explainer import Explainer
from graphcf.gae import GaeModel, reconstruction_error
from graphcf.graph import Snapshot

samples = st.lists(st.floats(-1e3, 1e3, allow_nan=False), min_size=1, max_size=30)


def test_identical_samples():
    a = [0.3, 0.1, 0.7, 0.7, 2.0]
    d, p = ks_two_sample(a, list(a))
    assert d == 0.0 and p > 0.999


def test_disjoint_supports():
    assert ks_two_sample([0, 0, 0, 0], [1, 1, 1, 1])[0] == 1.0


def test_against_brute_force_and_series():
    rng = np.random.default_rng(0)
    for _ in range(20):
        a = rng.normal(size=20)
        b = rng.normal(0.4, 1.2, size=20)
        d, p = ks_two_sample(a, b)
        assert d == ecdf_sup(a, b)
        assert abs(p - min(1.0, kolmogorov_series(math.sqrt(10.0) * d))) < 1e-6


def test_empty_sample_rejected():
    with pytest.raises(ValueError):
        ks_two_sample([], [1.0])


@settings(max_examples=100, deadline=None)
@given(samples, samples)
def test_statistic_range_and_symmetry(a, b):
    d = ks_statistic(a, b)
    assert 0.0 <= d <= 1.0
    assert d == ks_statistic(b, a)


int_samples = st.lists(st.integers(-1000, 1000).map(float), min_size=1, max_size=30)


@settings(max_examples=100, deadline=None)
@given(int_samples, int_samples)
def test_statistic_invariant_under_increasing_map(a, b):
    # exact in float64 on this range, so strictly increasing after rounding too
    f = lambda xs: [x**3 + 7.0 * x - 2.0 for x in xs]  # noqa: E731
    assert ks_statistic(a, b) == ks_statistic(f(a), f(b))


def test_detect_same_sample_no_drift():
    a = list(np.random.default_rng(1).random(40))
    rep = detect(a, a)
    assert not rep.drifted and rep.sample_sizes == (40, 40)


def test_zero_significance_never_drifts():
    assert not detect([0.0] * 30, [1.0] * 30, significance=0.0).drifted


def test_drifted_iff_p_below_level():
    rng = np.random.default_rng(2)
    for shift in (0.0, 0.3, 0.6, 1.0):
        rep = detect(rng.normal(size=40), rng.normal(shift, size=40), significance=0.05)
        assert rep.drifted == (rep.p_value < 0.05)


def test_callback_fires_only_on_drift():
    seen = []
    detect([0.0] * 30, [1.0] * 30, on_drift=seen.append, t=4)
    detect([0.0] * 30, [0.0] * 30, on_drift=seen.append)
    assert len(seen) == 1 and seen[0].t == 4


def test_detect_is_pure():
    rng = np.random.default_rng(3)
    a, b = rng.random(25), rng.random(25)
    assert detect(a, b) == detect(a, b)


def test_false_positive_rate_on_same_distribution():
    fired = 0
    for seed in range(20):
        rng = np.random.default_rng(seed)
        fired += detect(rng.normal(size=50), rng.normal(size=50)).drifted
    assert fired <= 2


def test_per_class_mode_skips_empty():
    reps = detect_per_class({0: [0.1, 0.2], 1: []}, {0: [0.1, 0.3], 1: [0.5]})
    assert set(reps) == {0}


# -- error samples ---------------------------------------------------------------------


def _snapshot(rng, n=6):
    return Snapshot(0, tuple((random_graph(rng, 6, 0.4, f"g{i}"), i % 2) for i in (3, 1, 5, 0, 2, 4)[:n]))


def test_zero_models_give_ln2(rng):
    ex = Explainer(GaeModel.zeros(0), GaeModel.zeros(1))
    assert error_sample(ex, _snapshot(rng)) == pytest.approx([math.log(2)] * 6)


def test_singleton_snapshot(rng):
    ex = Explainer(GaeModel.init(0, 1), GaeModel.init(1, 2))
    assert len(error_sample(ex, _snapshot(rng, 1))) == 1


def test_error_sample_matches_recomputation(rng):
    f0, f1 = GaeModel.init(0, 1), GaeModel.init(1, 2)
    ex = Explainer(f0, f1)
    snap = _snapshot(rng)
    by_id = snap.by_id()
    ids = sorted(by_id)
    # routed by given labels (t = 0 path)
    labels = snap.labels
    expected = [reconstruction_error((f0, f1)[labels[i]], by_id[i]) for i in ids]
    assert error_sample(ex, snap, labels) == pytest.approx(expected, rel=1e-14)
    # routed by the lower error (inferred path)
    expected = [min(reconstruction_error(f0, by_id[i]), reconstruction_error(f1, by_id[i])) for i in ids]
    assert error_sample(ex, snap) == pytest.approx(expected, rel=1e-14)
    split = error_sample_by_class(ex, snap, labels)
    assert len(split[0]) + len(split[1]) == 6
