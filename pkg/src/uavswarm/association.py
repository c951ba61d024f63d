"""Sub-swarm division and target matching.

The density-peak partition (``ceta_partition``) picks the ``M`` UAVs with the
largest ``rho * delta`` as sub-swarm centres and assigns everyone else to the
nearest centre in a single pass. k-means and fuzzy c-means are the baselines.
"""

from __future__ import annotations

from dataclasses import dataclass, field
import math

import numpy as np
from scipy.spatial.distance import cdist, pdist, squareform
from sklearn.cluster import KMeans


class TooFewUavsError(ValueError):
    pass


class EmptySubSwarmError(ValueError):
    pass


class SingleClusterError(ValueError):
    pass


@dataclass
class DensityStats:
    rho: np.ndarray
    delta: np.ndarray
    eta: np.ndarray
    d_c: float


@dataclass
class Partition:
    labels: np.ndarray
    centers: np.ndarray
    centroids: np.ndarray
    sizes: np.ndarray
    target_of: np.ndarray
    passes: int = 1
    stats: DensityStats | None = field(default=None, repr=False)

    @property
    def n_clusters(self) -> int:
        return len(self.sizes)

    def assigned_targets(self) -> np.ndarray:
        return self.target_of[self.labels]


def _positions(x) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    return x.reshape(len(x), -1)


def cutoff_distance(positions, fraction: float = 0.02) -> float:
    x = _positions(positions)
    if len(x) < 2:
        raise TooFewUavsError("need at least two UAVs for a pairwise distance")
    d = np.sort(pdist(x))
    k = max(math.ceil(fraction * len(d)) - 1, 0)
    return float(d[k])


def local_densities(positions, d_c: float) -> np.ndarray:
    if not d_c > 0:
        raise ValueError("cutoff distance must be > 0")
    d = squareform(pdist(_positions(positions)))
    np.fill_diagonal(d, np.inf)
    return np.sum(d < d_c, axis=1).astype(int)


def density_order(rho) -> np.ndarray:
    """Canonical order: density descending, index ascending on ties."""
    rho = np.asarray(rho)
    return np.lexsort((np.arange(len(rho)), -rho))


def higher_density_distances(positions, rho) -> np.ndarray:
    x = _positions(positions)
    d = squareform(pdist(x))
    order = density_order(rho)
    delta = np.empty(len(x))
    first = order[0]
    delta[first] = np.max(np.delete(d[first], first)) if len(x) > 1 else 0.0
    for k in range(1, len(order)):
        i = order[k]
        delta[i] = np.min(d[i, order[:k]])
    return delta


def density_stats(positions, d_c: float | None = None) -> DensityStats:
    if d_c is None:
        d_c = cutoff_distance(positions)
    rho = local_densities(positions, d_c)
    delta = higher_density_distances(positions, rho)
    return DensityStats(rho=rho, delta=delta, eta=rho * delta, d_c=d_c)


def centroids(positions, labels, n_clusters: int | None = None) -> np.ndarray:
    x = _positions(positions)
    labels = np.asarray(labels)
    k = int(labels.max()) + 1 if n_clusters is None else n_clusters
    sizes = np.bincount(labels, minlength=k)
    if np.any(sizes == 0):
        raise EmptySubSwarmError(f"sub-swarm(s) {np.flatnonzero(sizes == 0).tolist()} are empty")
    out = np.zeros((k, x.shape[1]))
    np.add.at(out, labels, x)
    return out / sizes[:, None]


def _finish(x, labels, k, centers, passes, stats=None) -> Partition:
    labels = np.asarray(labels, dtype=int)
    return Partition(
        labels=labels,
        centers=np.asarray(centers, dtype=int),
        centroids=centroids(x, labels, k),
        sizes=np.bincount(labels, minlength=k),
        target_of=np.arange(k),
        passes=passes,
        stats=stats,
    )


def ceta_partition(positions, m_clusters: int, d_c: float | None = None) -> Partition:
    """One-pass density-peak partition into ``m_clusters`` sub-swarms (no target matching)."""
    x = _positions(positions)
    n = len(x)
    if n < 2 or m_clusters > n:
        raise TooFewUavsError(f"cannot split {n} UAVs into {m_clusters} sub-swarms")
    if m_clusters < 1:
        raise ValueError("need at least one sub-swarm")
    stats = density_stats(x, d_c)
    # eta ties (e.g. every rho zero on a small swarm) fall back to delta, then index
    rank = np.lexsort((np.arange(n), -stats.delta, -stats.eta))
    centers = rank[:m_clusters]
    # the single assignment pass
    d = cdist(x, x[centers])
    labels = np.argmin(d, axis=1)
    labels[centers] = np.arange(m_clusters)
    return _finish(x, labels, m_clusters, centers, passes=1, stats=stats)


def kmeans_partition(positions, m_clusters: int, seed: int = 0, max_iter: int = 100) -> tuple[Partition, int]:
    x = _positions(positions)
    if len(x) < 2 or m_clusters > len(x):
        raise TooFewUavsError(f"cannot split {len(x)} UAVs into {m_clusters} sub-swarms")
    km = KMeans(n_clusters=m_clusters, init="k-means++", n_init=1, max_iter=max_iter, tol=0.0,
                random_state=seed, algorithm="lloyd").fit(x)
    labels = km.labels_
    centers = np.argmin(cdist(km.cluster_centers_, x), axis=1)
    return _finish(x, labels, m_clusters, centers, passes=int(km.n_iter_)), int(km.n_iter_)


def fcm_partition(positions, m_clusters: int, fuzziness: float = 2.0, tol: float = 1e-5,
                  max_iter: int = 300, seed: int = 0) -> tuple[Partition, int]:
    """Fuzzy c-means; hard labels by maximum membership."""
    x = _positions(positions)
    n = len(x)
    if n < 2 or m_clusters > n:
        raise TooFewUavsError(f"cannot split {n} UAVs into {m_clusters} sub-swarms")
    if not fuzziness > 1:
        raise ValueError("fuzziness must be > 1")
    rng = np.random.default_rng(seed)
    u = rng.random((n, m_clusters))
    u /= u.sum(axis=1, keepdims=True)
    expo = 2.0 / (fuzziness - 1.0)
    it = 0
    for it in range(1, max_iter + 1):
        w = u ** fuzziness
        c = (w.T @ x) / w.sum(axis=0)[:, None]
        d = np.fmax(cdist(x, c), 1e-12)
        inv = d ** (-expo)
        u_new = inv / inv.sum(axis=1, keepdims=True)
        delta = np.max(np.abs(u_new - u))
        u = u_new
        if delta < tol:
            break
    labels = np.argmax(u, axis=1)
    # a hard-labelled cluster can come out empty; reseat it on the UAV it owns most
    for k in range(m_clusters):
        if not np.any(labels == k):
            sizes = np.bincount(labels, minlength=m_clusters)
            cand = np.flatnonzero(sizes[labels] > 1)
            labels[cand[np.argmax(u[cand, k])]] = k
    centers = np.argmin(cdist(c, x), axis=1)
    return _finish(x, labels, m_clusters, centers, passes=it), it


def match_targets(centroid_positions, target_positions) -> np.ndarray:
    """Greedy globally-closest matching; returns ``target_of[sub_swarm]``."""
    c = _positions(centroid_positions)
    t = _positions(target_positions)
    if len(c) != len(t):
        raise ValueError("need as many centroids as targets")
    d = cdist(c, t)
    b_idx, a_idx = np.meshgrid(np.arange(len(c)), np.arange(len(t)), indexing="ij")
    order = np.lexsort((a_idx.ravel(), b_idx.ravel(), d.ravel()))
    target_of = np.full(len(c), -1)
    used = np.zeros(len(t), dtype=bool)
    for flat in order:
        b, a = divmod(int(flat), len(t))
        if target_of[b] < 0 and not used[a]:
            target_of[b] = a
            used[a] = True
    return target_of


def reassociate(positions, target_positions, method: str = "ceta", seed: int = 0) -> Partition:
    m = len(target_positions)
    if method == "ceta":
        part = ceta_partition(positions, m)
    elif method == "kmeans":
        part, _ = kmeans_partition(positions, m, seed=seed)
    elif method == "fcm":
        part, _ = fcm_partition(positions, m, seed=seed)
    else:
        raise ValueError(f"unknown association method {method!r}")
    part.target_of = match_targets(part.centroids, target_positions)
    return part


def reassociation_needed(partition: Partition, centroid_positions, target_positions) -> bool:
    """True when some sub-swarm is not chasing the target nearest its centroid.

    When two centroids share a nearest target no permutation can satisfy every
    sub-swarm; the trigger then fires only if the current matching differs from
    what a fresh greedy match would choose, so a reassociation is never
    immediately re-triggered.
    """
    c = _positions(centroid_positions)
    t = _positions(target_positions)
    if len(t) == 1:
        return False
    d = cdist(c, t)
    nearest = np.argmin(d, axis=1)
    current = np.asarray(partition.target_of)
    # ties in distance count as "nearest"
    off = d[np.arange(len(c)), current] > d[np.arange(len(c)), nearest]
    if not np.any(off):
        return False
    return not np.array_equal(current, match_targets(c, t))


def sse(positions, partition: Partition) -> float:
    x = _positions(positions)
    r = centroids(x, partition.labels, partition.n_clusters)
    return float(np.sum((x - r[partition.labels]) ** 2))


def silhouette(positions, partition: Partition) -> float:
    x = _positions(positions)
    labels = np.asarray(partition.labels)
    ks = np.unique(labels)
    if len(ks) < 2:
        raise SingleClusterError("silhouette needs at least two sub-swarms")
    d = squareform(pdist(x))
    n = len(x)
    onehot = (labels[:, None] == ks[None, :]).astype(float)
    sizes = onehot.sum(axis=0)
    sums = d @ onehot  # summed distance from each UAV to every cluster
    own = np.searchsorted(ks, labels)
    own_size = sizes[own]
    a = np.where(own_size > 1, sums[np.arange(n), own] / np.maximum(own_size - 1, 1), 0.0)
    mean_other = sums / sizes[None, :]
    mean_other[np.arange(n), own] = np.inf
    b = mean_other.min(axis=1)
    s = np.where(own_size > 1, (b - a) / np.maximum(a, b), 0.0)
    return float(np.mean(s))


@dataclass
class BenchRow:
    method: str
    sse_mean: float
    sse_std: float
    sc_mean: float
    sc_std: float
    iterations_mean: float
    max_passes: int


def cluster_benchmark(instances, m_clusters: int, seed: int = 0) -> tuple[list[BenchRow], dict[str, np.ndarray]]:
    """SSE, silhouette and iteration counts of the three partitioners on every layout.

    Returns the summary rows and the raw per-instance ``[sse, sc, iterations]`` arrays.
    """
    raw = {"ceta": [], "kmeans": [], "fcm": []}
    for j, x in enumerate(instances):
        part = ceta_partition(x, m_clusters)
        raw["ceta"].append((sse(x, part), silhouette(x, part), part.passes))
        part, it = kmeans_partition(x, m_clusters, seed=seed + j)
        raw["kmeans"].append((sse(x, part), silhouette(x, part), it))
        part, it = fcm_partition(x, m_clusters, seed=seed + j)
        raw["fcm"].append((sse(x, part), silhouette(x, part), it))
    rows = []
    arrays = {}
    for name, vals in raw.items():
        a = np.array(vals, dtype=float)
        arrays[name] = a
        rows.append(BenchRow(name, a[:, 0].mean(), a[:, 0].std(), a[:, 1].mean(), a[:, 1].std(), a[:, 2].mean(),
                             int(a[:, 2].max())))
    return rows, arrays
