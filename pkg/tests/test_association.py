import itertools
import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from sklearn.metrics import silhouette_score

from uavswarm.association import (EmptySubSwarmError, Partition, SingleClusterError, TooFewUavsError, centroids,
                                  ceta_partition, cluster_benchmark, cutoff_distance, density_stats, fcm_partition,
                                  higher_density_distances, kmeans_partition, local_densities, match_targets,
                                  reassociate, reassociation_needed, silhouette, sse)
from uavswarm.scenarios import uniform_instances


def _line(n, spacing=1.0):
    return np.column_stack([np.arange(n) * spacing, np.zeros(n), np.zeros(n)])


def _blobs(rng, centers, n_each=5, spread=0.5):
    return np.vstack([np.asarray(c) + rng.uniform(-spread, spread, (n_each, 3)) for c in centers])


def _partition(labels, x):
    labels = np.asarray(labels)
    k = labels.max() + 1
    return Partition(labels=labels, centers=np.zeros(k, int), centroids=centroids(x, labels, k),
                     sizes=np.bincount(labels), target_of=np.arange(k))


def _delta_oracle(x, rho):
    # canonical order: density descending, index ascending
    order = sorted(range(len(x)), key=lambda i: (-rho[i], i))
    out = np.empty(len(x))
    for pos, i in enumerate(order):
        if pos == 0:
            out[i] = max(np.linalg.norm(x[i] - x[j]) for j in range(len(x)) if j != i)
        else:
            out[i] = min(np.linalg.norm(x[i] - x[j]) for j in order[:pos])
    return out


# cutoff distance

def test_cutoff_two_uavs():
    assert cutoff_distance(np.array([[0, 0, 0], [3, 4, 0.0]])) == pytest.approx(5.0)
    with pytest.raises(TooFewUavsError):
        cutoff_distance(np.zeros((1, 3)))


def test_cutoff_hundred_point_line():
    x = _line(100)
    pairs = sorted(abs(i - j) for i, j in itertools.combinations(range(100), 2))
    assert len(pairs) == 4950
    assert cutoff_distance(x) == pytest.approx(pairs[math.ceil(0.02 * 4950) - 1])


# densities

def test_local_density_examples():
    assert list(local_densities(np.array([[0, 0, 0], [5, 0, 0.0]]), 2.0)) == [0, 0]
    assert list(local_densities(_line(5), 1.5)) == [1, 2, 2, 2, 1]
    assert list(local_densities(_line(3), 1.0)) == [0, 0, 0]  # exactly d_c is not counted


@given(st.integers(0, 2**31), st.floats(0.1, 5.0), st.floats(0.1, 5.0))
def test_density_monotone_in_cutoff(seed, a, b):
    x = np.random.default_rng(seed).uniform(0, 10, (15, 3))
    lo, hi = sorted((a, b))
    assert np.all(local_densities(x, lo) <= local_densities(x, hi))


def test_delta_collinear_endpoint_and_peak():
    x = _line(5)
    rho = local_densities(x, 1.5)
    delta = higher_density_distances(x, rho)
    assert delta[0] == pytest.approx(1.0)
    assert delta[4] == pytest.approx(1.0)
    # UAV 1 is first in canonical order among the densest
    assert delta[1] == pytest.approx(3.0)


def test_delta_unique_densest_gets_max_distance():
    x = np.array([[0, 0, 0], [0.5, 0, 0], [-0.5, 0, 0], [0, 0.5, 0], [0, -0.5, 0], [9, 0, 0.0]])
    rho = local_densities(x, 0.8)
    top = int(np.argmax(rho))
    assert np.sum(rho == rho[top]) == 1
    delta = higher_density_distances(x, rho)
    assert delta[top] == pytest.approx(np.max(np.linalg.norm(x - x[top], axis=1)))


@given(st.integers(0, 2**31))
def test_delta_matches_tie_rule_oracle(seed):
    rng = np.random.default_rng(seed)
    x = rng.uniform(0, 10, (12, 3))
    rho = rng.integers(0, 3, 12)  # heavy ties
    np.testing.assert_allclose(higher_density_distances(x, rho), _delta_oracle(x, rho), rtol=1e-12)


@given(st.integers(0, 2**31), st.integers(1, 6))
def test_eta_and_centers(seed, m):
    x = np.random.default_rng(seed).uniform(0, 50, (20, 3))
    part = ceta_partition(x, m)
    s = part.stats
    np.testing.assert_array_equal(s.eta, s.rho * s.delta)
    top = sorted(range(20), key=lambda i: (-s.eta[i], -s.delta[i], i))[:m]
    np.testing.assert_array_equal(part.centers, top)
    assert part.passes == 1
    assert part.sizes.sum() == 20
    assert set(part.labels) <= set(range(m))


# partitions

def test_n_equals_m_every_uav_its_own_centre():
    x = np.random.default_rng(1).uniform(0, 10, (6, 3))
    part = ceta_partition(x, 6)
    assert sorted(part.centers) == list(range(6))
    np.testing.assert_array_equal(part.labels[part.centers], np.arange(6))
    with pytest.raises(TooFewUavsError):
        ceta_partition(x, 7)


@pytest.mark.parametrize("method", ["ceta", "kmeans", "fcm"])
def test_far_blobs_recover_membership(rng, method):
    x = _blobs(rng, [(0, 0, 0), (100, 0, 0)])
    if method == "ceta":
        part = ceta_partition(x, 2)
    elif method == "kmeans":
        part, _ = kmeans_partition(x, 2)
    else:
        part, _ = fcm_partition(x, 2)
    truth = np.repeat([0, 1], 5)
    # brute force: each UAV's label matches its blob's label up to relabelling
    assert len(set(zip(part.labels, truth))) == 2


def test_ceta_assignment_is_nearest_centre(rng):
    x = rng.uniform(0, 100, (40, 3))
    part = ceta_partition(x, 4)
    for i in range(40):
        d = [np.linalg.norm(x[i] - x[c]) for c in part.centers]
        assert d[part.labels[i]] == pytest.approx(min(d))


def test_kmeans_converged_input_one_iteration():
    x = np.repeat(np.array([[0, 0, 0], [10, 0, 0], [0, 10, 0.0]]), 4, axis=0)
    _, it = kmeans_partition(x, 3)
    assert it == 1


def test_fcm_low_fuzziness_matches_kmeans(rng):
    x = _blobs(rng, [(0, 0, 0), (30, 0, 0), (0, 30, 0)], n_each=8)
    pk, _ = kmeans_partition(x, 3)
    pf, _ = fcm_partition(x, 3, fuzziness=1.05)
    assert len(set(zip(pk.labels, pf.labels))) == 3


@given(st.integers(0, 2**31), st.floats(-100, 100), st.floats(-100, 100), st.floats(-100, 100))
def test_translation_invariance(seed, dx, dy, dz):
    x = np.random.default_rng(seed).uniform(0, 20, (25, 3))
    shift = np.array([dx, dy, dz])
    a = ceta_partition(x, 3)
    b = ceta_partition(x + shift, 3)
    np.testing.assert_array_equal(a.labels, b.labels)
    assert sse(x + shift, b) == pytest.approx(sse(x, a), rel=1e-9)
    assert silhouette(x + shift, b) == pytest.approx(silhouette(x, a), rel=1e-9, abs=1e-12)


# centroids, matching

def test_centroid_examples(rng):
    x = np.array([[0, 0, 0], [2, 0, 0], [5, 5, 5.0]])
    c = centroids(x, [0, 0, 1])
    np.testing.assert_allclose(c, [[1, 0, 0], [5, 5, 5]])
    y = rng.normal(size=(10, 3))
    np.testing.assert_allclose(centroids(y, np.zeros(10, int))[0], y.sum(axis=0) / 10)
    with pytest.raises(EmptySubSwarmError):
        centroids(x, [0, 0, 2], 3)


def test_match_targets_examples():
    assert list(match_targets([[0, 0, 0]], [[5, 5, 5]])) == [0]
    got = match_targets([[0, 0, 0], [10, 10, 0]], [[1, 1, 0], [9, 9, 0]])
    assert list(got) == [0, 1]
    # square with exact ties resolves by index order, stably
    c = [[0, 0, 0], [1, 1, 0]]
    t = [[1, 0, 0], [0, 1, 0]]
    assert list(match_targets(c, t)) == [0, 1]
    assert list(match_targets(c, t)) == list(match_targets(c, t))


@given(st.integers(0, 2**31), st.integers(1, 6))
def test_match_targets_is_permutation(seed, m):
    rng = np.random.default_rng(seed)
    perm = match_targets(rng.uniform(0, 10, (m, 3)), rng.uniform(0, 10, (m, 3)))
    assert sorted(perm) == list(range(m))


def test_reassociation_trigger():
    x = np.array([[0, 0, 0], [1, 0, 0], [20, 0, 0], [21, 0, 0.0]])
    targets = np.array([[0, 5, 0], [20, 5, 0.0]])
    part = reassociate(x, targets)
    assert not reassociation_needed(part, part.centroids, targets)
    swapped = targets[::-1]
    assert reassociation_needed(part, part.centroids, swapped)
    assert not reassociation_needed(part, part.centroids, targets[:1])


@given(st.integers(0, 2**31), st.integers(2, 5))
def test_reassociation_quiescent(seed, m):
    rng = np.random.default_rng(seed)
    x = rng.uniform(0, 50, (20, 3))
    t = rng.uniform(0, 50, (m, 3))
    part = reassociate(x, t)
    assert not reassociation_needed(part, part.centroids, t)


# metrics

def test_sse_examples(rng):
    x = np.array([[0, 0, 0], [2, 0, 0.0]])
    assert sse(x, _partition([0, 0], x)) == pytest.approx(2.0)
    y = np.array([[1, 1, 1]] * 3, dtype=float)
    assert sse(y, _partition([0, 0, 0], y)) == 0.0
    z = rng.uniform(0, 10, (12, 3))
    labels = np.arange(12) % 3
    want = sum(np.sum((z[labels == k] - z[labels == k].mean(axis=0)) ** 2) for k in range(3))
    assert sse(z, _partition(labels, z)) == pytest.approx(want)


def test_silhouette_hand_value():
    x = np.array([[0, 0, 0], [0, 1, 0], [10, 0, 0], [10, 1, 0.0]])
    b = (10 + math.sqrt(101)) / 2
    assert silhouette(x, _partition([0, 0, 1, 1], x)) == pytest.approx((b - 1) / b, rel=1e-12)
    assert silhouette(x, _partition([0, 0, 1, 1], x)) == pytest.approx(0.9003, abs=1e-4)


def test_silhouette_zero_when_a_equals_b():
    # regular tetrahedron: every distance equal
    x = np.array([[1, 1, 1], [1, -1, -1], [-1, 1, -1], [-1, -1, 1.0]])
    assert silhouette(x, _partition([0, 0, 1, 1], x)) == pytest.approx(0.0, abs=1e-12)


def test_silhouette_single_cluster_error():
    x = np.random.default_rng(0).uniform(size=(5, 3))
    with pytest.raises(SingleClusterError):
        silhouette(x, _partition([0] * 5, x))


@given(st.integers(0, 2**31), st.integers(2, 6))
def test_silhouette_matches_sklearn(seed, m):
    rng = np.random.default_rng(seed)
    x = rng.uniform(0, 10, (30, 3))
    labels = np.concatenate([np.arange(m), rng.integers(0, m, 30 - m)])
    ours = silhouette(x, _partition(labels, x))
    # sklearn also scores singletons as 0
    assert ours == pytest.approx(silhouette_score(x, labels), abs=1e-12)


def test_benchmark_shapes():
    inst = uniform_instances(4, 30, seed=1)
    rows, raw = cluster_benchmark(inst, 3)
    assert [r.method for r in rows] == ["ceta", "kmeans", "fcm"]
    assert raw["ceta"].shape == (4, 3)
    assert np.all(raw["ceta"][:, 2] == 1)


@pytest.mark.parametrize("method,reported", [("kmeans", 19.0), ("fcm", 70.0)])
def test_baseline_iteration_counts_near_reported(method, reported):
    # reported means on 100-UAV uniform layouts, 5 clusters; accept +-50 %
    _, raw = cluster_benchmark(uniform_instances(100, 100, seed=0), 5, seed=0)
    mean_it = raw[method][:, 2].mean()
    assert 0.5 * reported <= mean_it <= 1.5 * reported, f"{method} mean iterations {mean_it:.2f}"
