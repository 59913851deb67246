"""State-space clustering: Lloyd's k-means over normalized, weighted
feature vectors, plus the per-cluster turn averages.

The algorithm is pinned down exactly so that an independent
reimplementation reproduces it bit for bit under the same seed:

* per-feature min-max normalization from the dataset, then each
  feature scaled by its weight (a degenerate feature normalizes to 0);
* initial centroids are k distinct dataset points drawn with
  ``numpy.random.default_rng(seed).choice(n, size=k, replace=False)``;
* assignment by squared Euclidean distance, ties to the lowest cluster
  id; centroid update by arithmetic mean;
* an empty cluster is reseeded to the point currently farthest from
  its assigned centroid (one point per empty cluster, farthest first);
* stop when assignments are stable and no reseeding happened, or after
  ``max_iter`` iterations.

The *cluster turn* of a cluster is the running mean of the turn
numbers games spend in it: within one episode, each maximal run of
consecutive turns [a..b] in the cluster contributes the sample
(a+b)/2, and samples are folded into a cross-episode running mean.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .features import FeatureVector

MODEL_SCHEMA = "kbrl-cluster-model-v1"


class SchemaVersionError(Exception):
    pass


@dataclass
class ClusterModel:
    k: int
    seed: int
    feature_names: tuple
    weights: tuple
    norm_min: tuple
    norm_max: tuple
    centroids: tuple  # k tuples in normalized-weighted space
    inertia: float
    iterations: int
    cluster_turns: dict = field(default_factory=dict)  # cluster -> [mean, count]

    def transform(self, values) -> np.ndarray:
        """Raw feature values -> normalized, weighted coordinates."""
        x = np.asarray(values, dtype=float)
        if x.shape[-1] != len(self.feature_names):
            raise ValueError(
                f"expected {len(self.feature_names)} features, got {x.shape[-1]}"
            )
        lo = np.asarray(self.norm_min)
        span = np.asarray(self.norm_max) - lo
        safe = np.where(span > 0, span, 1.0)
        normed = np.where(span > 0, (x - lo) / safe, 0.0)
        return normed * np.asarray(self.weights)

    def cluster_turn(self, cluster: int) -> float:
        entry = self.cluster_turns.get(cluster)
        if entry is None:
            raise KeyError(f"cluster {cluster} has no recorded turns")
        return entry[0]

    def to_json(self) -> str:
        return json.dumps(
            {
                "schema": MODEL_SCHEMA,
                "k": self.k,
                "seed": self.seed,
                "feature_names": list(self.feature_names),
                "weights": list(self.weights),
                "norm_min": list(self.norm_min),
                "norm_max": list(self.norm_max),
                "centroids": [list(c) for c in self.centroids],
                "inertia": self.inertia,
                "iterations": self.iterations,
                "cluster_turns": {
                    str(c): list(v) for c, v in sorted(self.cluster_turns.items())
                },
            },
            sort_keys=True,
        )

    @classmethod
    def from_json(cls, text: str) -> "ClusterModel":
        doc = json.loads(text)
        if doc.get("schema") != MODEL_SCHEMA:
            raise SchemaVersionError(
                f"expected {MODEL_SCHEMA}, got {doc.get('schema')!r}"
            )
        return cls(
            k=doc["k"],
            seed=doc["seed"],
            feature_names=tuple(doc["feature_names"]),
            weights=tuple(doc["weights"]),
            norm_min=tuple(doc["norm_min"]),
            norm_max=tuple(doc["norm_max"]),
            centroids=tuple(tuple(c) for c in doc["centroids"]),
            inertia=doc["inertia"],
            iterations=doc["iterations"],
            cluster_turns={int(c): list(v) for c, v in doc["cluster_turns"].items()},
        )

    def save(self, path: str | Path) -> None:
        Path(path).write_text(self.to_json(), encoding="utf-8")

    @classmethod
    def load(cls, path: str | Path) -> "ClusterModel":
        return cls.from_json(Path(path).read_text(encoding="utf-8"))


def _as_matrix(dataset) -> tuple[np.ndarray, tuple, tuple]:
    if not dataset:
        raise ValueError("empty dataset")
    first = dataset[0]
    if isinstance(first, FeatureVector):
        names_len = len(first.values)
        weights = first.weights
        rows = [fv.values for fv in dataset]
        for fv in dataset:
            if fv.weights != weights or len(fv.values) != names_len:
                raise ValueError("inconsistent feature vectors in dataset")
    else:
        rows = list(dataset)
        weights = None
    return np.asarray(rows, dtype=float), weights


def fit_clusters(dataset, k: int, max_iter: int = 300, seed: int = 0,
                 feature_names=None, weights=None) -> ClusterModel:
    """Fit Lloyd's k-means on the normalized dataset; deterministic under seed."""
    x, vec_weights = _as_matrix(dataset)
    n, dim = x.shape
    if k < 1:
        raise ValueError("k must be >= 1")
    if k > n:
        raise ValueError(f"k={k} exceeds dataset size {n}")
    if weights is None:
        weights = vec_weights if vec_weights is not None else tuple([1.0] * dim)
    if feature_names is None:
        feature_names = tuple(f"f{i}" for i in range(dim))
    if len(weights) != dim or len(feature_names) != dim:
        raise ValueError("feature_names/weights do not match the data dimension")

    lo = x.min(axis=0)
    hi = x.max(axis=0)
    span = hi - lo
    safe = np.where(span > 0, span, 1.0)
    xn = np.where(span > 0, (x - lo) / safe, 0.0) * np.asarray(weights)

    rng = np.random.default_rng(seed)
    centroids = xn[rng.choice(n, size=k, replace=False)].copy()

    assign = np.full(n, -1, dtype=int)
    iterations = 0
    for iterations in range(1, max_iter + 1):
        dists = ((xn[:, None, :] - centroids[None, :, :]) ** 2).sum(axis=2)
        new_assign = dists.argmin(axis=1)
        point_dist = dists[np.arange(n), new_assign]

        reseeded = False
        counts = np.bincount(new_assign, minlength=k)
        used: set[int] = set()
        for j in range(k):
            if counts[j] > 0:
                continue
            order = np.argsort(-point_dist, kind="stable")
            pick = next(int(i) for i in order if int(i) not in used)
            used.add(pick)
            centroids[j] = xn[pick]
            new_assign[pick] = j
            point_dist[pick] = 0.0
            counts = np.bincount(new_assign, minlength=k)
            reseeded = True

        stable = bool((new_assign == assign).all()) and not reseeded
        assign = new_assign
        for j in range(k):
            members = xn[assign == j]
            if len(members):
                centroids[j] = members.mean(axis=0)
        if stable:
            break

    dists = ((xn[:, None, :] - centroids[None, :, :]) ** 2).sum(axis=2)
    assign = dists.argmin(axis=1)
    inertia = float(dists[np.arange(n), assign].sum())

    return ClusterModel(
        k=k,
        seed=seed,
        feature_names=tuple(feature_names),
        weights=tuple(float(w) for w in weights),
        norm_min=tuple(float(v) for v in lo),
        norm_max=tuple(float(v) for v in hi),
        centroids=tuple(tuple(float(v) for v in row) for row in centroids),
        inertia=inertia,
        iterations=iterations,
    )


def assignments(model: ClusterModel, dataset) -> np.ndarray:
    x, _ = _as_matrix(dataset)
    xn = model.transform(x)
    centroids = np.asarray(model.centroids)
    dists = ((xn[:, None, :] - centroids[None, :, :]) ** 2).sum(axis=2)
    return dists.argmin(axis=1)


def assign_cluster(vector: FeatureVector, model: ClusterModel) -> int:
    """Closest centroid by Euclidean distance; ties break to the lowest id."""
    xn = model.transform(vector.values)
    centroids = np.asarray(model.centroids)
    dists = ((centroids - xn) ** 2).sum(axis=1)
    return int(dists.argmin())


def update_cluster_turns(model: ClusterModel, episode) -> ClusterModel:
    """Fold an episode's per-turn cluster runs into the running turn means."""
    runs: list[tuple[int, int, int]] = []  # (cluster, first_turn, last_turn)
    for turn, cluster in episode.turn_clusters:
        if cluster is None:
            continue
        if runs and runs[-1][0] == cluster and runs[-1][2] == turn - 1:
            runs[-1] = (cluster, runs[-1][1], turn)
        else:
            runs.append((cluster, turn, turn))
    for cluster, first, last in runs:
        sample = (first + last) / 2.0
        mean, count = model.cluster_turns.get(cluster, (0.0, 0))
        model.cluster_turns[cluster] = [
            (mean * count + sample) / (count + 1), count + 1,
        ]
    return model
