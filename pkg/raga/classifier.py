from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from functools import cached_property

import numpy as np
from scipy.special import softmax

from .exceptions import InsufficientTrainingError
from .features import FeatureSet

logger = logging.getLogger(__name__)

BC_FLOOR = 1e-12
MAX_DISTANCE = -math.log(BC_FLOOR)  # ~27.631

BHATTACHARYYA = "db"
MANHATTAN = "l1"
METRICS = (BHATTACHARYYA, MANHATTAN)

PROBABILITY_TOLERANCE = 1e-6


def _same_shape(f, g) -> tuple[np.ndarray, np.ndarray]:
    f = np.asarray(f, dtype=np.float64)
    g = np.asarray(g, dtype=np.float64)
    if f.shape != g.shape:
        raise ValueError(f"shape mismatch: {f.shape} vs {g.shape}")
    return f, g


def bhattacharyya(f, g) -> float:
    f, g = _same_shape(f, g)
    bc = float(np.sum(np.sqrt(f * g)))
    return -math.log(max(bc, BC_FLOOR))


def manhattan(f, g) -> float:
    f, g = _same_shape(f, g)
    return float(np.sum(np.abs(f - g)))


def normalize_metric(metric: str) -> str:
    key = (metric or "").strip().lower()
    aliases = {"db": BHATTACHARYYA, "bhattacharyya": BHATTACHARYYA, "l1": MANHATTAN, "manhattan": MANHATTAN}
    if key not in aliases:
        raise ValueError(f"unknown metric {metric!r}; use db or l1")
    return aliases[key]


@dataclass(frozen=True)
class KnnModel:
    feature_index: int
    feature_name: str
    ids: tuple[str, ...]
    features: np.ndarray  # (N, D), one renormalized feature per row
    labels: np.ndarray  # (N,) label indices
    n_labels: int
    k: int = 5
    metric: str = BHATTACHARYYA

    def __post_init__(self):
        if self.k < 1:
            raise ValueError("k must be >= 1")
        if self.features.ndim != 2 or self.features.shape[0] != len(self.ids):
            raise ValueError("features must hold one flattened row per training id")
        if self.labels.shape != (len(self.ids),):
            raise ValueError("labels must hold one entry per training id")
        if self.metric not in METRICS:
            raise ValueError(f"unknown metric {self.metric!r}")

    @cached_property
    def _roots(self) -> np.ndarray:
        return np.sqrt(self.features)

    @cached_property
    def _id_rank(self) -> np.ndarray:
        order = sorted(range(len(self.ids)), key=lambda i: self.ids[i])
        rank = np.empty(len(self.ids), dtype=np.int64)
        rank[order] = np.arange(len(self.ids))
        return rank

    def distances(self, feature) -> np.ndarray:
        q = np.asarray(feature, dtype=np.float64).reshape(-1)
        if q.shape[0] != self.features.shape[1]:
            raise ValueError(
                f"feature {self.feature_name} expects {self.features.shape[1]} values, got {q.shape[0]}"
            )
        if self.metric == BHATTACHARYYA:
            bc = self._roots @ np.sqrt(q)
            return -np.log(np.maximum(bc, BC_FLOOR))
        return np.abs(self.features - q).sum(axis=1)

    def neighbours(self, feature, exclude_id: str | None = None) -> np.ndarray:
        """Row indices of the k nearest items, nearest first; ties by recording id."""
        d = self.distances(feature)
        order = np.lexsort((self._id_rank, d))
        if exclude_id is not None:
            order = order[[self.ids[i] != exclude_id for i in order]]
        if order.shape[0] < self.k:
            raise InsufficientTrainingError(
                f"model {self.feature_name} has {order.shape[0]} usable training items, needs k={self.k}"
            )
        return order[: self.k]


def knn_predict(model: KnnModel, feature, exclude_id: str | None = None) -> np.ndarray:
    chosen = model.neighbours(feature, exclude_id=exclude_id)
    votes = np.bincount(model.labels[chosen], minlength=model.n_labels)
    return votes / float(model.k)


def _check_stack_rows(stacks: np.ndarray) -> None:
    sums = stacks.sum(axis=-1)
    if np.any(np.abs(sums - 1.0) > PROBABILITY_TOLERANCE):
        raise ValueError("every model output must be a probability vector")


def mean_log_likelihood(stacks, labels, weights) -> float:
    stacks = np.asarray(stacks, dtype=np.float64)
    labels = np.asarray(labels, dtype=np.int64)
    true_probs = stacks[np.arange(stacks.shape[0]), :, labels]
    p = true_probs @ softmax(np.asarray(weights, dtype=np.float64))
    return float(np.mean(np.log(np.maximum(p, BC_FLOOR))))


def fit_ensemble_weights(stacks, labels, learning_rate: float = 0.1, iterations: int = 500) -> np.ndarray:
    """
    Single-layer combiner: one logit per model, softmax-normalized, shared
    across classes. Full-batch gradient ascent on the mean log-likelihood of
    the true labels, starting from the uniform average.
    """
    stacks = np.asarray(stacks, dtype=np.float64)
    labels = np.asarray(labels, dtype=np.int64)
    if stacks.ndim != 3 or stacks.shape[0] == 0 or stacks.shape[1] == 0:
        raise ValueError("need a non-empty (recordings, models, labels) stack")
    if labels.shape != (stacks.shape[0],):
        raise ValueError("one true label per recording is required")
    _check_stack_rows(stacks)

    true_probs = stacks[np.arange(stacks.shape[0]), :, labels]  # (N, M)
    w = np.zeros(stacks.shape[1])
    for _ in range(iterations):
        a = softmax(w)
        p = np.maximum(true_probs @ a, BC_FLOOR)
        # d/dw_j mean log p = a_j * (mean_n S_nj / p_n - 1)
        grad = a * ((true_probs / p[:, None]).mean(axis=0) - 1.0)
        w = w + learning_rate * grad

    logger.debug(
        "combiner fitted: log-likelihood %.6f -> %.6f",
        mean_log_likelihood(stacks, labels, np.zeros_like(w)),
        mean_log_likelihood(stacks, labels, w),
    )
    return w


def ensemble_predict(stack, weights) -> tuple[np.ndarray, int]:
    stack = np.asarray(stack, dtype=np.float64)
    weights = np.asarray(weights, dtype=np.float64)
    if stack.ndim != 2 or weights.shape != (stack.shape[0],):
        raise ValueError(f"stack {stack.shape} does not match {weights.shape[0]} weights")
    _check_stack_rows(stack)
    probs = softmax(weights) @ stack
    # argmax returns the first maximum, i.e. vocabulary order on ties
    return probs, int(np.argmax(probs))


@dataclass(frozen=True)
class TrainedEnsemble:
    models: tuple[KnnModel, ...]
    weights: np.ndarray
    labels: tuple[str, ...]

    def __post_init__(self):
        if len(self.labels) < 2:
            raise ValueError("an ensemble needs at least two labels")
        if self.weights.shape != (len(self.models),):
            raise ValueError("one weight per model is required")

    @property
    def feature_names(self) -> tuple[str, ...]:
        return tuple(m.feature_name for m in self.models)

    def stack(self, features: FeatureSet, exclude_id: str | None = None) -> np.ndarray:
        return model_stack(self.models, features, exclude_id=exclude_id)

    def predict(self, features: FeatureSet) -> tuple[np.ndarray, str]:
        probs, best = ensemble_predict(self.stack(features), self.weights)
        return probs, self.labels[best]


def build_models(
    ids, feature_sets: list[FeatureSet], label_indices, n_labels: int, *,
    k: int, metric: str, feature_names,
) -> tuple[KnnModel, ...]:
    """One KNN model per named feature, each over all training recordings."""
    if not feature_sets:
        raise ValueError("no training recordings")
    label_indices = np.asarray(label_indices, dtype=np.int64)
    models = []
    for name in feature_names:
        idx = feature_sets[0].index(name)
        matrix = np.stack([fs.normalized[idx].reshape(-1) for fs in feature_sets])
        models.append(
            KnnModel(
                feature_index=idx,
                feature_name=name,
                ids=tuple(ids),
                features=matrix,
                labels=label_indices,
                n_labels=n_labels,
                k=k,
                metric=metric,
            )
        )
    return tuple(models)


def model_stack(models, features: FeatureSet, exclude_id: str | None = None) -> np.ndarray:
    """(M, n_labels) KNN outputs of every model for one recording."""
    return np.stack([knn_predict(m, features.normalized[m.feature_index], exclude_id) for m in models])
