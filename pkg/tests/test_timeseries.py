import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from causalwind.errors import ParameterError, UndefinedScoreError
from causalwind.timeseries import (Metric, dba_barycenter, dtw, dtw_path, kmeans, pairwise_distances, silhouette,
                                   silhouette_from_distances, soft_dtw, soft_dtw_divergence, soft_dtw_grad,
                                   softdtw_barycenter)


def all_warping_paths(n, m):
    """Every monotone path from (0,0) to (n-1,m-1) with steps (1,0),(0,1),(1,1)."""
    def extend(path):
        i, j = path[-1]
        if (i, j) == (n - 1, m - 1):
            yield path
            return
        for di, dj in ((1, 0), (0, 1), (1, 1)):
            if i + di < n and j + dj < m:
                yield from extend(path + [(i + di, j + dj)])
    yield from extend([(0, 0)])


def brute_dtw(a, b):
    a, b = np.atleast_2d(np.asarray(a, float).T).T, np.atleast_2d(np.asarray(b, float).T).T
    return min(sum(float(np.linalg.norm(a[i] - b[j])) for i, j in p) for p in all_warping_paths(len(a), len(b)))


def naive_silhouette(d, labels):
    n = len(labels)
    total = 0.0
    for i in range(n):
        same = [j for j in range(n) if labels[j] == labels[i] and j != i]
        if not same:
            continue
        a = sum(d[i][j] for j in same) / len(same)
        b = math.inf
        for c in set(labels) - {labels[i]}:
            other = [j for j in range(n) if labels[j] == c]
            b = min(b, sum(d[i][j] for j in other) / len(other))
        total += (b - a) / max(a, b) if max(a, b) > 0 else 0.0
    return total / n


def series():
    return st.lists(st.floats(-10, 10, allow_nan=False), min_size=1, max_size=6)


@settings(max_examples=100, deadline=None)
@given(series(), series())
def test_dtw_equals_exhaustive_paths(a, b):
    assert dtw(a, b) == pytest.approx(brute_dtw(a, b), rel=1e-12, abs=1e-12)


def test_dtw_small_cases():
    assert dtw([0, 1, 2], [0, 1, 2]) == 0
    assert dtw([0, 0, 1], [0, 1, 1]) == 0
    assert dtw([1], [4, 6]) == 8
    assert dtw(np.zeros((3, 3)), np.ones((2, 3))) == pytest.approx(3 * math.sqrt(3))


@settings(max_examples=50, deadline=None)
@given(series(), series())
def test_dtw_symmetric_and_path_consistent(a, b):
    assert dtw(a, b) == pytest.approx(dtw(b, a), abs=1e-12)
    cost, path = dtw_path(a, b)
    assert cost == pytest.approx(dtw(a, b), abs=1e-12)
    assert path[0] == (0, 0) and path[-1] == (len(a) - 1, len(b) - 1)
    steps = {(i2 - i1, j2 - j1) for (i1, j1), (i2, j2) in zip(path, path[1:])}
    assert steps <= {(1, 0), (0, 1), (1, 1)}
    assert sum(abs(a[i] - b[j]) for i, j in path) == pytest.approx(cost, abs=1e-9)


@settings(max_examples=30, deadline=None)
@given(st.lists(st.floats(-10, 10, allow_nan=False), min_size=1, max_size=20))
def test_dtw_self_distance_zero(a):
    assert dtw(a, a) == 0


def test_dtw_rejects_mismatched_dims():
    with pytest.raises(ParameterError):
        dtw(np.zeros((3, 2)), np.zeros((3, 3)))


def test_soft_dtw_tends_to_dtw():
    rng = np.random.default_rng(0)
    for _ in range(10):
        a, b = rng.normal(size=(5, 2)), rng.normal(size=(4, 2))
        assert soft_dtw(a, b, 1e-6) == pytest.approx(dtw(a, b), abs=1e-3)


def test_soft_dtw_below_dtw():
    rng = np.random.default_rng(1)
    a, b = rng.normal(size=(6, 3)), rng.normal(size=(7, 3))
    assert soft_dtw(a, b, 1.0) <= dtw(a, b)
    with pytest.raises(ParameterError):
        soft_dtw(a, b, 0.0)


def test_soft_dtw_gradient_finite_difference():
    rng = np.random.default_rng(2)
    z, x = rng.normal(size=(5, 3)), rng.normal(size=(6, 3))
    v, g = soft_dtw_grad(z, x, 0.5)
    assert v == pytest.approx(soft_dtw(z, x, 0.5))
    h = 1e-6
    num = np.zeros_like(z)
    for idx in np.ndindex(z.shape):
        zp, zm = z.copy(), z.copy()
        zp[idx] += h
        zm[idx] -= h
        num[idx] = (soft_dtw(zp, x, 0.5) - soft_dtw(zm, x, 0.5)) / (2 * h)
    np.testing.assert_allclose(g, num, rtol=1e-5, atol=1e-6)


def test_soft_dtw_divergence_zero_on_identity():
    a = np.random.default_rng(3).normal(size=(8, 3))
    assert soft_dtw_divergence(a, a, 1.0) == 0
    assert soft_dtw_divergence(a, a + 1.0, 1.0) > 0


def test_pairwise_matrix_properties():
    rng = np.random.default_rng(4)
    xs = [rng.normal(size=(rng.integers(3, 8), 3)) for _ in range(5)]
    for metric in ("dtw", Metric("softdtw", 0.5)):
        d = pairwise_distances(xs, metric)
        np.testing.assert_array_equal(d, d.T)
        assert np.all(np.diag(d) == 0)
    d = pairwise_distances(xs)
    assert d[1, 3] == dtw(xs[1], xs[3])


def test_dba_cost_never_increases():
    rng = np.random.default_rng(5)
    base = np.cumsum(rng.normal(size=(30, 3)), axis=0)
    xs = [base + rng.normal(scale=0.3, size=base.shape) for _ in range(6)]
    z, costs = dba_barycenter(xs, xs[0], max_iters=10, return_costs=True)
    assert all(c2 <= c1 for c1, c2 in zip(costs, costs[1:]))
    assert sum(dtw(z, x) for x in xs) == pytest.approx(costs[-1])
    assert costs[-1] <= sum(dtw(xs[0], x) for x in xs)


def test_dba_of_identical_series_is_that_series():
    x = np.arange(12, dtype=float).reshape(4, 3)
    np.testing.assert_allclose(dba_barycenter([x, x, x], x), x)


def test_softdtw_barycenter_not_worse_than_init():
    rng = np.random.default_rng(6)
    xs = [rng.normal(size=(10, 2)) + 3 for _ in range(4)]
    z = softdtw_barycenter(xs, xs[0], 1.0)
    assert sum(soft_dtw(z, x) for x in xs) <= sum(soft_dtw(xs[0], x) for x in xs)


def two_blobs(rng, n=4, length=20):
    t = np.linspace(0, 1, length)[:, None]
    a = [np.hstack([t * 1.0, t * 0, t * 0]) + rng.normal(scale=0.01, size=(length, 3)) for _ in range(n)]
    b = [np.hstack([t * 20.0, t * 5, t * 0]) + rng.normal(scale=0.01, size=(length, 3)) for _ in range(n)]
    return a + b


@pytest.mark.parametrize("metric", ["dtw", Metric("softdtw", 0.1)])
def test_kmeans_recovers_blobs(metric):
    xs = two_blobs(np.random.default_rng(7))
    model = kmeans(xs, 2, metric, seed=1)
    labels = list(model.assignments)
    assert len(set(labels[:4])) == 1 and len(set(labels[4:])) == 1 and labels[0] != labels[4]
    assert model.inertia == pytest.approx(model.inertia_history[-1])


def test_kmeans_deterministic_and_validates():
    xs = two_blobs(np.random.default_rng(8))
    a, b = kmeans(xs, 2, seed=3), kmeans(xs, 2, seed=3)
    np.testing.assert_array_equal(a.assignments, b.assignments)
    assert a.inertia == b.inertia
    with pytest.raises(ParameterError):
        kmeans(xs[:1], 2)


def test_kmeans_identical_series_has_no_empty_cluster():
    x = np.zeros((5, 3))
    model = kmeans([x, x, x, x], 2)
    assert set(model.assignments.tolist()) == {0, 1}


@settings(max_examples=60, deadline=None)
@given(st.integers(2, 10).flatmap(lambda n: st.tuples(
    st.lists(st.lists(st.floats(-5, 5, allow_nan=False), min_size=3, max_size=3), min_size=n, max_size=n),
    st.lists(st.integers(0, 2), min_size=n, max_size=n))))
def test_silhouette_matches_naive(data):
    pts, labels = data
    if len(set(labels)) < 2:
        return
    pts = np.array(pts)
    d = np.linalg.norm(pts[:, None] - pts[None], axis=2)
    assert silhouette_from_distances(d, labels) == pytest.approx(naive_silhouette(d, labels), abs=1e-12)


def test_silhouette_label_permutation_invariant():
    rng = np.random.default_rng(9)
    xs = [rng.normal(size=(6, 3)) + (i % 3) for i in range(9)]
    labels = [i % 3 for i in range(9)]
    s = silhouette(xs, labels)
    for perm in itertools.permutations(range(3)):
        assert silhouette(xs, [perm[c] for c in labels]) == pytest.approx(s, abs=1e-12)


def test_silhouette_bounds_and_undefined():
    with pytest.raises(UndefinedScoreError):
        silhouette_from_distances(np.zeros((3, 3)), [0, 0, 0])
    # two tight far-apart pairs give nearly 1
    d = np.array([[0, 1e-9, 10, 10], [1e-9, 0, 10, 10], [10, 10, 0, 1e-9], [10, 10, 1e-9, 0]])
    assert silhouette_from_distances(d, [0, 0, 1, 1]) == pytest.approx(1.0, abs=1e-9)
    assert silhouette_from_distances(d, [0, 1, 0, 1]) < 0


def test_spec_hand_examples():
    assert dtw([0, 0, 0], [1, 1, 1]) == 3.0
    assert soft_dtw([0, 0, 0], [1, 1, 1], 1e-6) == pytest.approx(3.0, abs=1e-3)
    np.testing.assert_allclose(dba_barycenter([[0, 0], [2, 2]], [1, 1]), [[1], [1]])


def test_soft_dtw_non_increasing_in_gamma():
    rng = np.random.default_rng(10)
    for _ in range(3):
        a, b = rng.normal(size=(6, 2)), rng.normal(size=(5, 2))
        vals = [soft_dtw(a, b, g) for g in (1e-3, 0.01, 0.1, 0.5, 1.0, 2.0)]
        assert all(v2 <= v1 for v1, v2 in zip(vals, vals[1:]))


def test_kmeans_far_bundles_match_nearest_neighbour_split():
    rng = np.random.default_rng(11)
    xs = [np.full((8, 1), v) for v in np.r_[rng.uniform(-1, 1, 5), rng.uniform(99, 101, 5)]]
    labels = kmeans(xs, 2, seed=2).assignments
    truth = np.array([0] * 5 + [1] * 5)
    assert np.array_equal(labels, truth) or np.array_equal(labels, 1 - truth)
