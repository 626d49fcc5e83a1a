"""TF-IDF vectorization, mini-batch k-means, elbow-based k selection, and
stratified sampling for annotation."""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np
import scipy.sparse as sp

from .base import ConfigurationError, Estimator, token_lists
from .serialize import load_model_file, save_model_file

log = logging.getLogger(__name__)


class TfidfEncoder(Estimator):
    """Term frequency x smoothed inverse document frequency with L2 rows.

    idf_t = ln((1 + D) / (1 + df_t)) + 1. Rows that end up all-zero (tokens
    entirely out of vocabulary) are left as zero vectors.
    """

    def __init__(self):
        pass

    def fit(self, docs: Sequence) -> "TfidfEncoder":
        lists = token_lists(docs)
        df: dict[str, int] = {}
        for tokens in lists:
            for tok in set(tokens):
                df[tok] = df.get(tok, 0) + 1
        if not df:
            raise ConfigurationError("TF-IDF vocabulary is empty")
        vocab = sorted(df)
        self.vocabulary_ = {t: i for i, t in enumerate(vocab)}
        self.doc_count_ = len(lists)
        self.idf_ = np.array(
            [math.log((1 + self.doc_count_) / (1 + df[t])) + 1.0 for t in vocab],
            dtype=np.float64,
        )
        return self

    def transform(self, docs: Sequence) -> sp.csr_matrix:
        self._check_fitted("vocabulary_")
        lists = token_lists(docs)
        indptr = [0]
        indices: list[int] = []
        data: list[float] = []
        for tokens in lists:
            counts: dict[int, int] = {}
            for tok in tokens:
                col = self.vocabulary_.get(tok)
                if col is not None:
                    counts[col] = counts.get(col, 0) + 1
            row = sorted(counts.items())
            vals = np.array([c * self.idf_[col] for col, c in row], dtype=np.float64)
            norm = math.sqrt(float((vals * vals).sum()))
            if norm > 0:
                vals = vals / norm
            indices.extend(col for col, _ in row)
            data.extend(vals.tolist())
            indptr.append(len(indices))
        return sp.csr_matrix(
            (np.array(data), np.array(indices, dtype=np.int32), np.array(indptr, dtype=np.int32)),
            shape=(len(lists), len(self.vocabulary_)),
        )

    def fit_transform(self, docs: Sequence) -> sp.csr_matrix:
        return self.fit(docs).transform(docs)


def zero_rows(matrix: sp.csr_matrix) -> np.ndarray:
    """Indices of all-zero rows (documents with no in-vocabulary tokens)."""
    return np.flatnonzero(np.diff(matrix.indptr) == 0)


def _squared_distances(matrix, centroid_matrix) -> np.ndarray:
    """Pairwise squared euclidean distances, rows x centroids."""
    dots = matrix @ centroid_matrix.T
    dots = dots.toarray() if sp.issparse(dots) else np.asarray(dots)
    row_sq = (
        np.asarray(matrix.multiply(matrix).sum(axis=1)).ravel()
        if sp.issparse(matrix)
        else (np.asarray(matrix) ** 2).sum(axis=1)
    )
    cent_sq = (centroid_matrix ** 2).sum(axis=1)
    return np.maximum(row_sq[:, None] - 2.0 * dots + cent_sq[None, :], 0.0)


class MiniBatchKMeans(Estimator):
    """Mini-batch k-means with k-means++ seeding and cumulative-count updates.

    Each iteration draws a batch without replacement, assigns it to the
    nearest centroids and moves every touched centroid to the running mean of
    all points it has absorbed (per-centroid learning rate 1/count). Training
    stops when the total centroid shift drops below tol. Final labels and
    inertia come from one full nearest-centroid pass; clusters that end up
    empty are re-seeded from the point farthest from its assigned centroid.
    """

    def __init__(self, n_clusters=8, batch_size=1024, max_iters=100, tol=1e-4, seed=0):
        self.n_clusters = n_clusters
        self.batch_size = batch_size
        self.max_iters = max_iters
        self.tol = tol
        self.seed = seed

    def fit(self, matrix) -> "MiniBatchKMeans":
        n_rows = matrix.shape[0]
        if self.n_clusters < 1:
            raise ConfigurationError(f"n_clusters must be >= 1, got {self.n_clusters}")
        if self.n_clusters > n_rows:
            raise ConfigurationError(
                f"n_clusters={self.n_clusters} exceeds the number of rows ({n_rows})"
            )
        rng = np.random.default_rng(self.seed)
        centroids = self._kmeans_pp(matrix, rng)
        counts = np.zeros(self.n_clusters, dtype=np.int64)

        for _ in range(self.max_iters):
            batch_n = min(self.batch_size, n_rows)
            batch_idx = rng.choice(n_rows, size=batch_n, replace=False)
            batch = matrix[batch_idx]
            assign = np.argmin(_squared_distances(batch, centroids), axis=1)
            previous = centroids.copy()
            for c in np.unique(assign):
                members = batch[assign == c]
                member_sum = np.asarray(members.sum(axis=0)).ravel()
                new_count = counts[c] + members.shape[0]
                centroids[c] = (centroids[c] * counts[c] + member_sum) / new_count
                counts[c] = new_count
            shift = math.sqrt(float(((centroids - previous) ** 2).sum()))
            if shift < self.tol:
                break

        labels = np.argmin(_squared_distances(matrix, centroids), axis=1)
        labels, centroids = self._fix_empty(matrix, labels, centroids)
        dist = _squared_distances(matrix, centroids)
        self.centroids_ = centroids
        self.labels_ = labels
        self.inertia_ = float(dist[np.arange(n_rows), labels].sum())
        self.cluster_ratios_ = np.bincount(labels, minlength=self.n_clusters) / n_rows
        return self

    def predict(self, matrix) -> np.ndarray:
        self._check_fitted("centroids_")
        return np.argmin(_squared_distances(matrix, self.centroids_), axis=1)

    def fit_predict(self, matrix) -> np.ndarray:
        return self.fit(matrix).labels_

    def _kmeans_pp(self, matrix, rng) -> np.ndarray:
        """Greedy k-means++: each new centroid is the best of several
        D^2-weighted candidate points (2 + log2(k) local trials)."""
        n_rows, n_cols = matrix.shape
        trials = 2 + int(math.log2(self.n_clusters)) if self.n_clusters > 1 else 1
        centroids = np.zeros((self.n_clusters, n_cols), dtype=np.float64)
        first = int(rng.integers(0, n_rows))
        centroids[0] = _dense_row(matrix, first)
        d2 = _squared_distances(matrix, centroids[0:1]).ravel()
        for c in range(1, self.n_clusters):
            total = d2.sum()
            if total <= 0:
                candidates = rng.integers(0, n_rows, size=trials)
            else:
                candidates = rng.choice(n_rows, size=trials, p=d2 / total)
            best_idx, best_d2, best_potential = None, None, np.inf
            for idx in candidates:
                cand = _dense_row(matrix, int(idx))
                cand_d2 = np.minimum(d2, _squared_distances(matrix, cand[None, :]).ravel())
                potential = cand_d2.sum()
                if potential < best_potential:
                    best_idx, best_d2, best_potential = int(idx), cand_d2, potential
            centroids[c] = _dense_row(matrix, best_idx)
            d2 = best_d2
        return centroids

    def _fix_empty(self, matrix, labels, centroids):
        for _ in range(self.n_clusters):
            sizes = np.bincount(labels, minlength=self.n_clusters)
            empty = np.flatnonzero(sizes == 0)
            if empty.size == 0:
                break
            dist = _squared_distances(matrix, centroids)
            assigned = dist[np.arange(matrix.shape[0]), labels]
            farthest = int(np.argmax(assigned))
            centroids[empty[0]] = _dense_row(matrix, farthest)
            labels = np.argmin(_squared_distances(matrix, centroids), axis=1)
        return labels, centroids

    def save(self, path, extra_meta: dict | None = None, config_hash: str = "") -> None:
        self._check_fitted("centroids_")
        meta = {
            "format": "tweetkit-kmeans/1",
            "n_clusters": self.n_clusters,
            "batch_size": self.batch_size,
            "max_iters": self.max_iters,
            "tol": self.tol,
            "seed": self.seed,
            "inertia": self.inertia_,
            "config_hash": config_hash,
        }
        if extra_meta:
            meta.update(extra_meta)
        save_model_file(path, meta, {
            "centroids": self.centroids_,
            "labels": self.labels_.astype(np.int64),
            "cluster_ratios": self.cluster_ratios_,
        })

    @classmethod
    def load(cls, path) -> tuple["MiniBatchKMeans", dict]:
        meta, arrays = load_model_file(path)
        if meta.get("format") != "tweetkit-kmeans/1":
            raise ValueError(f"{path}: not a tweetkit k-means model file")
        model = cls(
            n_clusters=meta["n_clusters"], batch_size=meta["batch_size"],
            max_iters=meta["max_iters"], tol=meta["tol"], seed=meta["seed"],
        )
        model.centroids_ = arrays["centroids"]
        model.labels_ = arrays["labels"]
        model.cluster_ratios_ = arrays["cluster_ratios"]
        model.inertia_ = meta["inertia"]
        return model, meta


def _dense_row(matrix, idx) -> np.ndarray:
    row = matrix[idx]
    return np.asarray(row.todense()).ravel() if sp.issparse(row) else np.asarray(row, dtype=np.float64).ravel()


@dataclass
class ElbowCurve:
    candidate_ks: list[int]
    inertias: list[float]
    chosen_k: int


def elbow_select(matrix, candidate_ks: Sequence[int], seed: int = 0,
                 batch_size: int = 1024, max_iters: int = 100,
                 monotone_rtol: float = 0.05) -> ElbowCurve:
    """Pick k by the max-distance-to-chord knee of the inertia curve.

    Runs one mini-batch k-means per candidate (each with a seed derived from
    (seed, k)), then selects the candidate whose (k, inertia) point lies
    farthest from the chord joining the first and last curve points. The full
    curve is returned so a human can override the choice.
    """
    ks = list(candidate_ks)
    if len(ks) < 3:
        raise ConfigurationError("elbow selection needs at least 3 candidate ks")
    if ks != sorted(ks) or len(set(ks)) != len(ks):
        raise ConfigurationError("candidate ks must be strictly ascending")

    inertias = []
    for k in ks:
        model = MiniBatchKMeans(
            n_clusters=k, batch_size=batch_size, max_iters=max_iters,
            seed=_derive_seed(seed, k),
        ).fit(matrix)
        inertias.append(model.inertia_)

    for i in range(1, len(inertias)):
        if inertias[i] > inertias[i - 1] * (1 + monotone_rtol):
            log.warning(
                "inertia curve is non-monotone at k=%d (%.6g -> %.6g); "
                "knee computed anyway", ks[i], inertias[i - 1], inertias[i],
            )
    x1, y1 = float(ks[0]), inertias[0]
    x2, y2 = float(ks[-1]), inertias[-1]
    chord_len = math.hypot(x2 - x1, y2 - y1)
    best_idx, best_dist = 0, -1.0
    for i, (k, inertia) in enumerate(zip(ks, inertias)):
        if chord_len == 0:
            dist = 0.0
        else:
            dist = abs((y2 - y1) * k - (x2 - x1) * inertia + x2 * y1 - y2 * x1) / chord_len
        if dist > best_dist + 1e-12:
            best_dist, best_idx = dist, i
    if best_dist <= 1e-12:
        log.warning("inertia curve has no knee (all chord distances ~0); "
                    "falling back to the first candidate k=%d", ks[0])
    return ElbowCurve(candidate_ks=ks, inertias=inertias, chosen_k=ks[best_idx])


def _derive_seed(seed: int, k: int) -> int:
    return int(np.random.SeedSequence(entropy=seed, spawn_key=(k,)).generate_state(1)[0])


def stratified_sample(
    labels: Mapping[str, int],
    per_cluster_n: int,
    seed: int = 0,
) -> dict[int, list[str]]:
    """Sample up to per_cluster_n tweet ids uniformly without replacement per cluster.

    Undersized clusters contribute all their members. Deterministic for a
    given seed and input.
    """
    if per_cluster_n < 1:
        raise ConfigurationError(f"per_cluster_n must be >= 1, got {per_cluster_n}")
    by_cluster: dict[int, list[str]] = {}
    for tweet_id, cluster in labels.items():
        by_cluster.setdefault(int(cluster), []).append(tweet_id)
    rng = np.random.default_rng(seed)
    sample: dict[int, list[str]] = {}
    for cluster in sorted(by_cluster):
        members = by_cluster[cluster]
        if len(members) <= per_cluster_n:
            sample[cluster] = list(members)
        else:
            picks = rng.choice(len(members), size=per_cluster_n, replace=False)
            sample[cluster] = [members[i] for i in picks]
    return sample
