"""Clustering of a phase's training records.

The default clusterer is EM over a diagonal-covariance Gaussian mixture;
Lloyd's k-means is the pluggable alternative. Both emit a ``ClusterModel``
so that :func:`assign` works the same way for either.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import logsumexp

from .data import Dataset

VARIANCE_FLOOR = 1e-6
DEFAULT_TOL = 1e-6
DEFAULT_MAX_ITERS = 200
MIN_CLUSTER_SIZE = 5

EM = "EM"
KMEANS = "KMeans"


class ClusteringError(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class FeatureMatrix:
    values: np.ndarray
    # (attribute name, category) per dim; category is None for numeric dims
    encoding_map: tuple[tuple[str, str | None], ...]
    center: np.ndarray  # per dim; 0 for one-hot dims
    scale: np.ndarray   # per dim; 1 for one-hot dims

    @property
    def rows(self) -> int:
        return self.values.shape[0]

    @property
    def dims(self) -> int:
        return self.values.shape[1]

    def to_original(self, point: np.ndarray) -> np.ndarray:
        """Undo standardization of an encoded point (e.g. a cluster mean)."""
        return np.asarray(point) * self.scale + self.center


def encode(P: Dataset) -> FeatureMatrix:
    """Standardize numeric attributes and one-hot encode categorical ones."""
    if len(P) == 0:
        raise ClusteringError("cannot encode an empty dataset")
    codes = P.codes()
    cols, enc, center, scale = [], [], [], []
    for j, attr in enumerate(P.schema.attributes):
        col = codes[:, j]
        if attr.is_numeric:
            mu = col.mean()
            sd = col.std()
            if sd > 0:
                cols.append((col - mu) / sd)
                center.append(mu)
                scale.append(sd)
            else:
                cols.append(np.zeros_like(col))
                center.append(mu)
                scale.append(0.0)
            enc.append((attr.name, None))
        else:
            for k, cat in enumerate(attr.categories):
                cols.append((col == k).astype(float))
                enc.append((attr.name, cat))
                center.append(0.0)
                scale.append(1.0)
    values = np.column_stack(cols) if cols else np.zeros((len(P), 0))
    return FeatureMatrix(values, tuple(enc), np.array(center), np.array(scale))


@dataclass(frozen=True, eq=False)
class ClusterModel:
    weights: np.ndarray     # (m,)
    means: np.ndarray       # (m, dims)
    variances: np.ndarray   # (m, dims)
    converged: bool
    final_log_likelihood: float
    algorithm: str
    log_likelihood_trace: tuple[float, ...] = ()
    iterations: int = 0

    @property
    def m(self) -> int:
        return len(self.weights)

    @property
    def dims(self) -> int:
        return self.means.shape[1]


def _check_input(X: FeatureMatrix, m: int) -> np.ndarray:
    if m < 1:
        raise ClusteringError("m must be >= 1")
    if m > X.rows:
        raise ClusteringError(f"cannot fit {m} clusters to {X.rows} rows")
    x = np.asarray(X.values, dtype=float)
    if not np.all(np.isfinite(x)):
        raise ClusteringError("feature matrix contains non-finite values")
    return x


def _initial_rows(x: np.ndarray, m: int, rng: np.random.Generator) -> np.ndarray:
    """Pick m distinct rows by seeded D^2 sampling (k-means++ seeding).

    The first row is uniform; each further row is drawn with probability
    proportional to its squared distance from the closest row already
    chosen, so duplicates of chosen rows are never drawn while distinct
    rows remain.
    """
    n = len(x)
    chosen = [int(rng.integers(n))]
    d2 = ((x - x[chosen[0]]) ** 2).sum(axis=1)
    while len(chosen) < m:
        total = d2.sum()
        if total > 0:
            i = int(rng.choice(n, p=d2 / total))
        else:
            # fewer distinct rows than m: fall back to unchosen duplicates
            rest = np.setdiff1d(np.arange(n), chosen)
            i = int(rng.choice(rest))
        chosen.append(i)
        d2 = np.minimum(d2, ((x - x[i]) ** 2).sum(axis=1))
    return np.array(chosen)


def _log_joint(x: np.ndarray, weights, means, variances) -> np.ndarray:
    """log(weight_j * N(x | mean_j, diag(var_j))) for every row and component."""
    with np.errstate(divide="ignore"):
        log_w = np.log(weights)
    log_norm = -0.5 * np.sum(np.log(2.0 * np.pi * variances), axis=1)  # (m,)
    sq = (x[:, None, :] - means[None, :, :]) ** 2 / variances[None, :, :]
    return log_w[None, :] + log_norm[None, :] - 0.5 * sq.sum(axis=2)


def em_fit(
    X: FeatureMatrix,
    m: int,
    max_iters: int = DEFAULT_MAX_ITERS,
    tol: float = DEFAULT_TOL,
    seed: int = 0,
    variance_floor: float = VARIANCE_FLOOR,
) -> ClusterModel:
    """Fit a diagonal Gaussian mixture with EM.

    Means start at m distinct rows drawn with ``seed``, variances at the
    per-dim sample variance and weights uniform. Iteration stops once the
    log-likelihood improves by less than ``tol`` or after ``max_iters``
    M-steps. The returned parameters are the ones whose log-likelihood is
    ``final_log_likelihood``.
    """
    x = _check_input(X, m)
    n, d = x.shape
    rng = np.random.default_rng(seed)
    means = x[_initial_rows(x, m, rng)].copy()
    base_var = np.maximum(x.var(axis=0), variance_floor) if n > 1 else np.ones(d)
    base_var = np.maximum(base_var, variance_floor)
    variances = np.tile(base_var, (m, 1))
    weights = np.full(m, 1.0 / m)

    trace = []
    converged = False
    iterations = 0
    while True:
        log_joint = _log_joint(x, weights, means, variances)
        log_px = logsumexp(log_joint, axis=1)
        ll = float(log_px.sum())
        if not math.isfinite(ll):
            raise ClusteringError("EM produced a non-finite log-likelihood")
        if trace and ll - trace[-1] < tol:
            trace.append(ll)
            converged = True
            break
        trace.append(ll)
        if iterations >= max_iters:
            break
        resp = np.exp(log_joint - log_px[:, None])
        nk = resp.sum(axis=0)
        live = nk > 1e-12
        new_means = means.copy()
        new_vars = variances.copy()
        new_means[live] = (resp[:, live].T @ x) / nk[live, None]
        for j in np.flatnonzero(live):
            diff = x - new_means[j]
            new_vars[j] = resp[:, j] @ (diff * diff) / nk[j]
        # the floored variance is still the constrained maximizer, so the
        # log-likelihood stays monotone
        new_vars = np.maximum(new_vars, variance_floor)
        weights = nk / nk.sum()
        means, variances = new_means, new_vars
        iterations += 1

    return ClusterModel(
        weights=weights,
        means=means,
        variances=variances,
        converged=converged,
        final_log_likelihood=trace[-1],
        algorithm=EM,
        log_likelihood_trace=tuple(trace),
        iterations=iterations,
    )


def kmeans_fit(
    X: FeatureMatrix, m: int, max_iters: int = DEFAULT_MAX_ITERS, seed: int = 0
) -> ClusterModel:
    x = _check_input(X, m)
    rng = np.random.default_rng(seed)
    centers = x[_initial_rows(x, m, rng)].copy()
    labels = None
    converged = False
    iterations = 0
    for iterations in range(1, max_iters + 1):
        new_labels = _nearest(x, centers)
        if labels is not None and np.array_equal(new_labels, labels):
            converged = True
            break
        labels = new_labels
        for j in range(m):
            members = labels == j
            if members.any():
                centers[j] = x[members].mean(axis=0)
    weights = np.full(m, 1.0 / m)
    variances = np.ones_like(centers)
    ll = float(logsumexp(_log_joint(x, weights, centers, variances), axis=1).sum())
    return ClusterModel(
        weights=weights,
        means=centers,
        variances=variances,
        converged=converged,
        final_log_likelihood=ll,
        algorithm=KMEANS,
        log_likelihood_trace=(ll,),
        iterations=iterations,
    )


def _nearest(x: np.ndarray, centers: np.ndarray) -> np.ndarray:
    d2 = ((x[:, None, :] - centers[None, :, :]) ** 2).sum(axis=2)
    return np.argmin(d2, axis=1)  # first minimum wins ties


def responsibilities(model: ClusterModel, X: FeatureMatrix) -> np.ndarray:
    """Posterior component probabilities, one row per data row."""
    log_joint = _log_joint(X.values, model.weights, model.means, model.variances)
    return np.exp(log_joint - logsumexp(log_joint, axis=1)[:, None])


def assign_all(model: ClusterModel, x: np.ndarray) -> np.ndarray:
    x = np.atleast_2d(np.asarray(x, dtype=float))
    if x.shape[1] != model.dims:
        raise ClusteringError(f"row has {x.shape[1]} dims, model expects {model.dims}")
    if model.algorithm == KMEANS:
        return _nearest(x, model.means)
    return np.argmax(_log_joint(x, model.weights, model.means, model.variances), axis=1)


def assign(model: ClusterModel, x) -> int:
    """Cluster index of one encoded row; ties go to the lowest index."""
    x = np.asarray(x, dtype=float)
    if x.ndim != 1:
        raise ClusteringError("assign expects a single row")
    return int(assign_all(model, x)[0])


def cluster_membership(
    model: ClusterModel, X: FeatureMatrix, min_cluster_size: int = MIN_CLUSTER_SIZE
) -> dict[int, list[int]]:
    """Row indices per surviving cluster after merging undersized clusters.

    The smallest undersized cluster (lowest index on ties) is folded into the
    remaining cluster whose mean is nearest, repeatedly, until every cluster
    has at least ``min_cluster_size`` rows or only one cluster is left.
    """
    labels = assign_all(model, X.values)
    groups = {j: [] for j in range(model.m)}
    for row, j in enumerate(labels):
        groups[int(j)].append(row)
    while len(groups) > 1:
        small = [j for j in groups if len(groups[j]) < min_cluster_size]
        if not small:
            break
        src = min(small, key=lambda j: (len(groups[j]), j))
        others = [j for j in groups if j != src]
        dist = [float(np.sum((model.means[src] - model.means[j]) ** 2)) for j in others]
        dst = others[int(np.argmin(dist))]
        groups[dst] = sorted(groups[dst] + groups.pop(src))
    return dict(sorted(groups.items()))


def partition_by_cluster(
    P: Dataset,
    model: ClusterModel,
    min_cluster_size: int = MIN_CLUSTER_SIZE,
    features: FeatureMatrix | None = None,
) -> list[Dataset]:
    X = features if features is not None else encode(P)
    members = cluster_membership(model, X, min_cluster_size)
    return [P.take(rows) for rows in members.values()]


def fit_clusterer(
    X: FeatureMatrix,
    algorithm: str,
    m: int,
    max_iters: int = DEFAULT_MAX_ITERS,
    tol: float = DEFAULT_TOL,
    seed: int = 0,
) -> ClusterModel:
    # small phases may have fewer rows than requested clusters
    m = min(m, X.rows)
    if algorithm == EM:
        return em_fit(X, m, max_iters=max_iters, tol=tol, seed=seed)
    if algorithm == KMEANS:
        return kmeans_fit(X, m, max_iters=max_iters, seed=seed)
    raise ClusteringError(f"unknown clusterer {algorithm!r}")
