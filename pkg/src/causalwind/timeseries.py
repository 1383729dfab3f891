"""DTW / soft-DTW distances, barycenters, time-series k-means and silhouette.

Series are 2-D float arrays of shape ``(length, dim)``; 1-D input is treated
as a univariate series. Local cost is the Euclidean distance between points.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numba as nb
import numpy as np
from scipy.optimize import minimize

from .errors import ParameterError, UndefinedScoreError
from .seeding import make_rng


def as_series(a) -> np.ndarray:
    arr = np.asarray(a, dtype=float)
    if arr.ndim == 1:
        arr = arr[:, None]
    if arr.ndim != 2 or arr.shape[0] < 1:
        raise ParameterError("series must be non-empty with shape (length, dim)")
    if not np.all(np.isfinite(arr)):
        raise ParameterError("series contains non-finite values")
    return np.ascontiguousarray(arr)


def _pair(a, b):
    a, b = as_series(a), as_series(b)
    if a.shape[1] != b.shape[1]:
        raise ParameterError(f"dimensionality mismatch: {a.shape[1]} vs {b.shape[1]}")
    return a, b


@nb.njit(cache=True)
def _cost_matrix(a, b):
    n, m, d = a.shape[0], b.shape[0], a.shape[1]
    c = np.empty((n, m))
    for i in range(n):
        for j in range(m):
            s = 0.0
            for k in range(d):
                diff = a[i, k] - b[j, k]
                s += diff * diff
            c[i, j] = math.sqrt(s)
    return c


@nb.njit(cache=True)
def _dtw_accumulate(c):
    n, m = c.shape
    acc = np.full((n + 1, m + 1), np.inf)
    acc[0, 0] = 0.0
    for i in range(1, n + 1):
        for j in range(1, m + 1):
            best = acc[i - 1, j - 1]
            if acc[i - 1, j] < best:
                best = acc[i - 1, j]
            if acc[i, j - 1] < best:
                best = acc[i, j - 1]
            acc[i, j] = c[i - 1, j - 1] + best
    return acc


@nb.njit(cache=True)
def _dtw_value(a, b):
    n, m, d = a.shape[0], b.shape[0], a.shape[1]
    prev = np.full(m + 1, np.inf)
    cur = np.full(m + 1, np.inf)
    prev[0] = 0.0
    for i in range(n):
        cur[0] = np.inf
        for j in range(m):
            s = 0.0
            for k in range(d):
                diff = a[i, k] - b[j, k]
                s += diff * diff
            best = prev[j]
            if prev[j + 1] < best:
                best = prev[j + 1]
            if cur[j] < best:
                best = cur[j]
            cur[j + 1] = math.sqrt(s) + best
        prev, cur = cur, prev
    return prev[m]


@nb.njit(cache=True)
def _dtw_backtrack(acc):
    i, j = acc.shape[0] - 1, acc.shape[1] - 1
    cap = i + j
    path_i = np.empty(cap, dtype=np.int64)
    path_j = np.empty(cap, dtype=np.int64)
    n = 0
    path_i[n] = i - 1
    path_j[n] = j - 1
    n += 1
    while i > 1 or j > 1:
        diag, up, left = acc[i - 1, j - 1], acc[i - 1, j], acc[i, j - 1]
        # Prefer the diagonal on ties.
        if diag <= up and diag <= left:
            i -= 1
            j -= 1
        elif up <= left:
            i -= 1
        else:
            j -= 1
        path_i[n] = i - 1
        path_j[n] = j - 1
        n += 1
    return path_i[:n][::-1].copy(), path_j[:n][::-1].copy()


def dtw(a, b) -> float:
    """Unconstrained DTW with steps (1,0), (0,1), (1,1)."""
    a, b = _pair(a, b)
    return float(_dtw_value(a, b))


def dtw_path(a, b):
    """Return ``(cost, path)`` where ``path`` is a list of ``(i, j)`` index pairs."""
    a, b = _pair(a, b)
    acc = _dtw_accumulate(_cost_matrix(a, b))
    pi, pj = _dtw_backtrack(acc)
    return float(acc[-1, -1]), list(zip(pi.tolist(), pj.tolist()))


@nb.njit(cache=True)
def _softmin3(a, b, c, gamma):
    m = min(a, min(b, c))
    if m == np.inf:
        return np.inf
    s = math.exp(-(a - m) / gamma) + math.exp(-(b - m) / gamma) + math.exp(-(c - m) / gamma)
    return m - gamma * math.log(s)


@nb.njit(cache=True)
def _soft_dtw_forward(c, gamma):
    n, m = c.shape
    r = np.full((n + 2, m + 2), np.inf)
    r[0, 0] = 0.0
    for i in range(1, n + 1):
        for j in range(1, m + 1):
            r[i, j] = c[i - 1, j - 1] + _softmin3(r[i - 1, j - 1], r[i - 1, j], r[i, j - 1], gamma)
    return r


@nb.njit(cache=True)
def _soft_dtw_backward(c, r, gamma):
    """Expected alignment matrix ``dR[n,m] / dC``."""
    n, m = c.shape
    cp = np.zeros((n + 2, m + 2))
    cp[1:n + 1, 1:m + 1] = c
    e = np.zeros((n + 2, m + 2))
    r = r.copy()
    for i in range(1, n + 1):
        r[i, m + 1] = -np.inf
    for j in range(1, m + 1):
        r[n + 1, j] = -np.inf
    r[n + 1, m + 1] = r[n, m]
    e[n + 1, m + 1] = 1.0
    for j in range(m, 0, -1):
        for i in range(n, 0, -1):
            a = math.exp((r[i + 1, j] - r[i, j] - cp[i + 1, j]) / gamma)
            b = math.exp((r[i, j + 1] - r[i, j] - cp[i, j + 1]) / gamma)
            cc = math.exp((r[i + 1, j + 1] - r[i, j] - cp[i + 1, j + 1]) / gamma)
            e[i, j] = e[i + 1, j] * a + e[i, j + 1] * b + e[i + 1, j + 1] * cc
    return e[1:n + 1, 1:m + 1]


@nb.njit(cache=True)
def _soft_dtw_value_grad(z, x, gamma):
    c = _cost_matrix(z, x)
    r = _soft_dtw_forward(c, gamma)
    e = _soft_dtw_backward(c, r, gamma)
    n, m, d = z.shape[0], x.shape[0], z.shape[1]
    g = np.zeros((n, d))
    for i in range(n):
        for j in range(m):
            if c[i, j] > 0.0:
                w = e[i, j] / c[i, j]
                for k in range(d):
                    g[i, k] += w * (z[i, k] - x[j, k])
    return r[n, m], g


def _check_gamma(gamma):
    if not gamma > 0:
        raise ParameterError("soft-DTW gamma must be > 0")


def soft_dtw(a, b, gamma: float = 1.0) -> float:
    """Soft-DTW: the DTW recursion with ``min`` replaced by ``-gamma * logsumexp(-x / gamma)``."""
    _check_gamma(gamma)
    a, b = _pair(a, b)
    r = _soft_dtw_forward(_cost_matrix(a, b), float(gamma))
    return float(r[a.shape[0], b.shape[0]])


def soft_dtw_grad(z, x, gamma: float = 1.0):
    """Value of ``soft_dtw(z, x)`` and its gradient with respect to ``z``."""
    _check_gamma(gamma)
    z, x = _pair(z, x)
    v, g = _soft_dtw_value_grad(z, x, float(gamma))
    return float(v), g


def soft_dtw_divergence(a, b, gamma: float = 1.0) -> float:
    """``sdtw(a, b) - (sdtw(a, a) + sdtw(b, b)) / 2``; zero for identical series."""
    return soft_dtw(a, b, gamma) - 0.5 * (soft_dtw(a, a, gamma) + soft_dtw(b, b, gamma))


@dataclass(frozen=True)
class Metric:
    name: str = "dtw"
    gamma: float = 1.0

    def __post_init__(self):
        if self.name not in ("dtw", "softdtw"):
            raise ParameterError(f"unknown metric {self.name!r}")
        if self.name == "softdtw":
            _check_gamma(self.gamma)

    def distance(self, a, b) -> float:
        if self.name == "dtw":
            return dtw(a, b)
        return soft_dtw_divergence(a, b, self.gamma)

    def to_dict(self):
        return {"name": self.name, "gamma": self.gamma} if self.name == "softdtw" else {"name": self.name}


def _metric(metric) -> Metric:
    if isinstance(metric, Metric):
        return metric
    if metric is None:
        return Metric()
    if isinstance(metric, str):
        return Metric(metric)
    return Metric(**metric)


def cross_distances(xs, ys, metric="dtw") -> np.ndarray:
    metric = _metric(metric)
    xs = [as_series(x) for x in xs]
    ys = [as_series(y) for y in ys]
    out = np.empty((len(xs), len(ys)))
    if metric.name == "dtw":
        for i, x in enumerate(xs):
            for j, y in enumerate(ys):
                out[i, j] = _dtw_value(x, y)
        return out
    g = float(metric.gamma)
    self_x = [_soft_dtw_forward(_cost_matrix(x, x), g)[-2, -2] for x in xs]
    self_y = [_soft_dtw_forward(_cost_matrix(y, y), g)[-2, -2] for y in ys]
    for i, x in enumerate(xs):
        for j, y in enumerate(ys):
            out[i, j] = _soft_dtw_forward(_cost_matrix(x, y), g)[-2, -2] - 0.5 * (self_x[i] + self_y[j])
    return out


def pairwise_distances(series_set, metric="dtw") -> np.ndarray:
    """Symmetric distance matrix with an exact-zero diagonal."""
    metric = _metric(metric)
    xs = [as_series(x) for x in series_set]
    n = len(xs)
    out = np.zeros((n, n))
    if metric.name == "softdtw":
        g = float(metric.gamma)
        selfs = [_soft_dtw_forward(_cost_matrix(x, x), g)[-2, -2] for x in xs]
    for i in range(n):
        for j in range(i + 1, n):
            if metric.name == "dtw":
                d = _dtw_value(xs[i], xs[j])
            else:
                d = _soft_dtw_forward(_cost_matrix(xs[i], xs[j]), g)[-2, -2] - 0.5 * (selfs[i] + selfs[j])
            out[i, j] = out[j, i] = d
    return out


@nb.njit(cache=True)
def _dba_refine(z, flat, offsets):
    """One DBA pass over series packed as ``flat[offsets[s]:offsets[s+1]]``.

    Returns the refined barycenter and the summed DTW cost of the input ``z``.

    For fixed alignments the objective separates per barycenter point into a
    sum of Euclidean distances to its aligned points. Each point takes the best
    of {current value, arithmetic mean, one Weiszfeld step}, so the summed
    DTW cost cannot increase.
    """
    length, dim = z.shape
    n_series = offsets.shape[0] - 1
    cap = n_series * length + flat.shape[0]
    pair_i = np.empty(cap, dtype=np.int64)
    pair_j = np.empty(cap, dtype=np.int64)
    n_pairs = 0
    total = 0.0
    for s in range(n_series):
        x = flat[offsets[s]:offsets[s + 1]]
        acc = _dtw_accumulate(_cost_matrix(z, x))
        total += acc[length, x.shape[0]]
        pi, pj = _dtw_backtrack(acc)
        for p in range(pi.shape[0]):
            pair_i[n_pairs] = pi[p]
            pair_j[n_pairs] = offsets[s] + pj[p]
            n_pairs += 1

    mean = np.zeros((length, dim))
    count = np.zeros(length)
    wnum = np.zeros((length, dim))
    wden = np.zeros(length)
    for p in range(n_pairs):
        i, j = pair_i[p], pair_j[p]
        d = 0.0
        for k in range(dim):
            mean[i, k] += flat[j, k]
            diff = flat[j, k] - z[i, k]
            d += diff * diff
        count[i] += 1.0
        d = math.sqrt(d)
        if d > 0.0:
            for k in range(dim):
                wnum[i, k] += flat[j, k] / d
            wden[i] += 1.0 / d
    for i in range(length):
        for k in range(dim):
            mean[i, k] /= count[i]
            wnum[i, k] = wnum[i, k] / wden[i] if wden[i] > 0.0 else z[i, k]

    costs = np.zeros((length, 3))
    for p in range(n_pairs):
        i, j = pair_i[p], pair_j[p]
        d0 = 0.0
        d1 = 0.0
        d2 = 0.0
        for k in range(dim):
            x = flat[j, k]
            d0 += (x - z[i, k]) ** 2
            d1 += (x - mean[i, k]) ** 2
            d2 += (x - wnum[i, k]) ** 2
        costs[i, 0] += math.sqrt(d0)
        costs[i, 1] += math.sqrt(d1)
        costs[i, 2] += math.sqrt(d2)
    out = z.copy()
    for i in range(length):
        best = 0
        for c in range(1, 3):
            if costs[i, c] < costs[i, best]:
                best = c
        for k in range(dim):
            if best == 1:
                out[i, k] = mean[i, k]
            elif best == 2:
                out[i, k] = wnum[i, k]
    return out, total


def _pack(xs):
    offsets = np.zeros(len(xs) + 1, dtype=np.int64)
    offsets[1:] = np.cumsum([len(x) for x in xs])
    return np.ascontiguousarray(np.concatenate(xs, axis=0)), offsets


def dba_barycenter(series_set, init, max_iters: int = 10, tol: float = 1e-6, return_costs: bool = False):
    """DTW barycenter averaging started from ``init``.

    Stops after ``max_iters`` refinements or when the relative decrease of
    the summed DTW cost drops below ``tol``.
    """
    xs = [as_series(x) for x in series_set]
    if not xs:
        raise ParameterError("cannot average an empty set of series")
    z = as_series(init).copy()
    if any(x.shape[1] != z.shape[1] for x in xs):
        raise ParameterError("dimensionality mismatch")
    flat, offsets = _pack(xs)
    cand, cost = _dba_refine(z, flat, offsets)
    costs = [cost]
    for _ in range(max_iters):
        if cost == 0.0:
            break
        next_cand, cand_cost = _dba_refine(cand, flat, offsets)
        if cand_cost > cost:
            break
        improvement = (cost - cand_cost) / cost
        z, cost = cand, cand_cost
        costs.append(cost)
        cand = next_cand
        if improvement < tol:
            break
    return (z, costs) if return_costs else z


def softdtw_barycenter(series_set, init, gamma: float = 1.0, max_iters: int = 30, tol: float = 1e-6):
    """Minimize the summed soft-DTW to ``series_set`` with L-BFGS, starting at ``init``."""
    _check_gamma(gamma)
    xs = [as_series(x) for x in series_set]
    if not xs:
        raise ParameterError("cannot average an empty set of series")
    z0 = as_series(init).copy()
    shape = z0.shape

    def objective(flat):
        z = flat.reshape(shape)
        total, grad = 0.0, np.zeros(shape)
        for x in xs:
            v, g = _soft_dtw_value_grad(z, x, float(gamma))
            total += v
            grad += g
        return total, grad.ravel()

    res = minimize(objective, z0.ravel(), jac=True, method="L-BFGS-B", tol=tol, options={"maxiter": max_iters})
    z = res.x.reshape(shape)
    return z if objective(z.ravel())[0] <= objective(z0.ravel())[0] else z0


@dataclass
class ClusterModel:
    k: int
    assignments: np.ndarray
    centroids: list
    inertia: float
    metric: Metric
    inertia_history: list = field(default_factory=list)
    n_iter: int = 0


def _assign(dist):
    labels = np.argmin(dist, axis=1)
    return labels, float(dist[np.arange(len(labels)), labels].sum())


def _reseed_empty(labels, dist, centroids, xs, k):
    """Move the series farthest from its centroid into each empty cluster."""
    labels = labels.copy()
    for c in range(k):
        if np.any(labels == c):
            continue
        counts = np.bincount(labels, minlength=k)
        own = dist[np.arange(len(labels)), labels].copy()
        own[counts[labels] <= 1] = -np.inf
        i = int(np.argmax(own))
        labels[i] = c
        centroids[c] = xs[i].copy()
        dist[:, c] = np.inf
        dist[i, c] = 0.0
    return labels


def _lloyd(xs, k, metric, init_idx, max_iters, barycenter_iters, tol):
    centroids = [xs[i].copy() for i in init_idx]
    dist = cross_distances(xs, centroids, metric)
    labels, _ = _assign(dist)
    labels = _reseed_empty(labels, dist, centroids, xs, k)
    inertia = float(dist[np.arange(len(labels)), labels].sum())
    history = [inertia]
    it = 0
    for it in range(1, max_iters + 1):
        for c in range(k):
            members = [xs[i] for i in np.flatnonzero(labels == c)]
            if metric.name == "dtw":
                centroids[c] = dba_barycenter(members, centroids[c], max_iters=barycenter_iters)
            else:
                centroids[c] = softdtw_barycenter(members, centroids[c], metric.gamma, max_iters=barycenter_iters)
        dist = cross_distances(xs, centroids, metric)
        new_labels, _ = _assign(dist)
        new_labels = _reseed_empty(new_labels, dist, centroids, xs, k)
        new_inertia = float(dist[np.arange(len(new_labels)), new_labels].sum())
        history.append(new_inertia)
        converged = np.array_equal(new_labels, labels) or inertia - new_inertia <= tol * max(inertia, 1e-300)
        labels, inertia = new_labels, new_inertia
        if converged:
            break
    return ClusterModel(k, labels, centroids, inertia, metric, history, it)


def kmeans(series_set, k: int, metric="dtw", n_init: int = 5, max_iters: int = 50, seed: int = 0,
           barycenter_iters: int = 10, tol: float = 1e-6) -> ClusterModel:
    """Lloyd k-means under DTW (DBA centroids) or soft-DTW (gradient barycenters).

    Each of ``n_init`` restarts draws ``k`` distinct series as initial
    centroids from a stream derived from ``(seed, restart)``; the restart with
    the lowest inertia wins, earliest first on ties.
    """
    metric = _metric(metric)
    xs = [as_series(x) for x in series_set]
    n = len(xs)
    if k < 1:
        raise ParameterError("k must be >= 1")
    if n < k:
        raise ParameterError(f"need at least k={k} series, got {n}")
    best = None
    for r in range(max(1, n_init)):
        init_idx = make_rng(seed, r).choice(n, size=k, replace=False)
        model = _lloyd(xs, k, metric, init_idx, max_iters, barycenter_iters, tol)
        if best is None or model.inertia < best.inertia:
            best = model
    return best


def silhouette_from_distances(dist, labels) -> float:
    """Mean silhouette over samples; members of singleton clusters score 0."""
    dist = np.asarray(dist, dtype=float)
    labels = np.asarray(labels)
    clusters = np.unique(labels)
    if len(clusters) < 2:
        raise UndefinedScoreError("silhouette needs at least two clusters")
    n = len(labels)
    members = {c: np.flatnonzero(labels == c) for c in clusters}
    s = np.zeros(n)
    for i in range(n):
        own = members[labels[i]]
        if len(own) == 1:
            continue
        a = dist[i, own].sum() / (len(own) - 1)
        b = min(dist[i, idx].mean() for c, idx in members.items() if c != labels[i])
        denom = max(a, b)
        s[i] = (b - a) / denom if denom > 0 else 0.0
    return float(s.mean())


def silhouette(series_set, assignments, metric="dtw") -> float:
    return silhouette_from_distances(pairwise_distances(series_set, metric), assignments)
