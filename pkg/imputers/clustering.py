"""
k-medoids クラスタリング

事前計算した距離行列上の PAM 型スワップ探索。
各反復で全 (medoid, 非 medoid) スワップを評価し、最もコストを下げる1つだけを適用する。
"""

from dataclasses import dataclass
from typing import Sequence

import numpy as np
from sklearn.metrics import silhouette_score

from imputers.errors import DataError
from imputers.metric import DistanceMatrix

DEFAULT_MAX_ITER = 100


@dataclass(frozen=True)
class ClusterModel:
    """medoid と割り当て"""

    medoids: tuple[int, ...]  # オブジェクト添字の昇順
    assignment: tuple[int, ...]  # オブジェクトごとのクラスタ番号（medoids の位置）
    cost: float
    n_iter: int = 0
    cost_history: tuple[float, ...] = ()

    @property
    def k(self) -> int:
        return len(self.medoids)

    def cluster_of(self, i: int) -> int:
        return self.assignment[i]

    def members(self, c: int) -> list[int]:
        return [i for i, a in enumerate(self.assignment) if a == c]

    @property
    def labels(self) -> np.ndarray:
        return np.asarray(self.assignment, dtype=np.int64)


def _assign(values: np.ndarray, medoids: np.ndarray) -> tuple[np.ndarray, float]:
    """最寄り medoid への割り当て（同距離は小さい medoid、medoid は自分自身）"""
    labels = np.argmin(values[:, medoids], axis=1)
    labels[medoids] = np.arange(medoids.size)
    cost = float(values[np.arange(values.shape[0]), medoids[labels]].sum())
    return labels, cost


def _swap_search(
    values: np.ndarray, medoids: np.ndarray, max_iter: int
) -> tuple[np.ndarray, list[float], int]:
    n = values.shape[0]
    k = medoids.size
    _, cost = _assign(values, medoids)
    history = [cost]
    iterations = 0

    while iterations < max_iter:
        candidates = np.setdiff1d(np.arange(n), medoids)
        if candidates.size == 0:
            break

        to_medoids = values[:, medoids]
        best_cost, best_swap = cost, None
        for p in range(k):
            if k > 1:
                rest = np.delete(to_medoids, p, axis=1).min(axis=1)
            else:
                rest = np.full(n, np.inf)
            costs = np.minimum(rest[:, None], values[:, candidates]).sum(axis=0)
            j = int(np.argmin(costs))
            if costs[j] < best_cost:
                best_cost, best_swap = float(costs[j]), (p, int(candidates[j]))

        if best_swap is None or best_cost >= cost - 1e-12 * max(1.0, cost):
            break

        p, o = best_swap
        medoids = medoids.copy()
        medoids[p] = o
        medoids.sort()
        _, cost = _assign(values, medoids)
        history.append(cost)
        iterations += 1

    return medoids, history, iterations


def cluster(
    matrix: DistanceMatrix,
    k: int,
    seed: int,
    max_iter: int = DEFAULT_MAX_ITER,
    n_init: int = 1,
) -> ClusterModel:
    """PAM スワップで k 個の medoid を求める

    初期 medoid はシード付き乱数で非復元抽出。n_init > 1 なら同じ乱数列から
    初期値を引き直し、最小コストの結果を採用する。
    """
    n = matrix.n
    if not 2 <= k <= n:
        raise DataError(f"cluster count k={k} must be within [2, {n}]")
    if n_init < 1:
        raise DataError("n_init must be at least 1")

    rng = np.random.default_rng(seed)
    best: ClusterModel | None = None
    for _ in range(n_init):
        start = np.sort(rng.choice(n, size=k, replace=False))
        medoids, history, iterations = _swap_search(matrix.values, start, max_iter)
        labels, cost = _assign(matrix.values, medoids)
        model = ClusterModel(
            medoids=tuple(int(m) for m in medoids),
            assignment=tuple(int(a) for a in labels),
            cost=cost,
            n_iter=iterations,
            cost_history=tuple(history),
        )
        if best is None or model.cost < best.cost:
            best = model
    return best


def assign_object(matrix: DistanceMatrix, model: ClusterModel, i: int) -> tuple[int, ClusterModel]:
    """オブジェクト i を最寄り medoid のクラスタへ再割り当て"""
    if not 0 <= i < matrix.n:
        raise DataError(f"object index {i} out of range for {matrix.n} objects")
    medoids = np.asarray(model.medoids, dtype=np.int64)
    if i in model.medoids:
        c = model.medoids.index(i)
    else:
        c = int(np.argmin(matrix.values[i, medoids]))

    assignment = list(model.assignment)
    assignment[i] = c
    labels = np.asarray(assignment, dtype=np.int64)
    cost = float(matrix.values[np.arange(matrix.n), medoids[labels]].sum())
    updated = ClusterModel(
        medoids=model.medoids,
        assignment=tuple(assignment),
        cost=cost,
        n_iter=model.n_iter,
        cost_history=model.cost_history,
    )
    return c, updated


def silhouette(matrix: DistanceMatrix, assignment: Sequence[int]) -> float:
    """シルエット係数の平均（単独クラスタのオブジェクトは 0）"""
    labels = np.asarray(assignment)
    if labels.size != matrix.n:
        raise DataError(f"{labels.size} labels for {matrix.n} objects")
    n_labels = np.unique(labels).size
    if n_labels < 2:
        raise DataError("silhouette needs at least two non-empty clusters")
    if n_labels == labels.size:
        return 0.0
    return float(silhouette_score(matrix.values, labels, metric="precomputed"))
