"""
K-Prototypes クラスタリング（下流タスク評価用）

コスト = 正規化数値の二乗ユークリッド距離 + gamma * カテゴリ不一致数。
順序属性はカテゴリとして扱う。割り当てと代表点更新を交互に行う。
"""

from dataclasses import dataclass
from typing import Optional

import numpy as np

from imputers.errors import DataError
from imputers.models import Dataset

DEFAULT_MAX_ITER = 100
DEFAULT_N_INIT = 5


@dataclass(frozen=True)
class KPrototypesResult:
    """クラスタリング結果"""

    labels: np.ndarray
    cost: float
    cost_history: tuple[float, ...]
    gamma: float
    n_iter: int


def _split(dataset: Dataset) -> tuple[np.ndarray, np.ndarray]:
    """(正規化数値, カテゴリコード) に分ける"""
    num_cols = [r for r, c in enumerate(dataset.schema.columns) if not c.kind.is_categorical]
    cat_cols = [r for r, c in enumerate(dataset.schema.columns) if c.kind.is_categorical]
    numeric = dataset.values[:, num_cols].copy()
    if numeric.size:
        low = numeric.min(axis=0)
        span = numeric.max(axis=0) - low
        numeric = np.where(span > 0, (numeric - low) / np.where(span > 0, span, 1.0), 0.0)
    categorical = dataset.values[:, cat_cols].astype(np.int64)
    return numeric, categorical


def default_gamma(numeric: np.ndarray) -> float:
    """正規化数値列の標準偏差平均の半分（数値列がない・0 なら 1）"""
    if numeric.shape[1] == 0:
        return 1.0
    gamma = 0.5 * float(numeric.std(axis=0).mean())
    return gamma if gamma > 0 else 1.0


def _point_costs(
    numeric: np.ndarray,
    categorical: np.ndarray,
    proto_num: np.ndarray,
    proto_cat: np.ndarray,
    gamma: float,
) -> np.ndarray:
    """(n, k) のコスト行列"""
    diff = numeric[:, None, :] - proto_num[None, :, :]
    num_cost = (diff**2).sum(axis=2)
    cat_cost = (categorical[:, None, :] != proto_cat[None, :, :]).sum(axis=2)
    return num_cost + gamma * cat_cost


def _repair_empty(costs: np.ndarray, labels: np.ndarray, k: int) -> np.ndarray:
    """空クラスタに、代表点から最も遠い点を移す"""
    labels = labels.copy()
    rows = np.arange(labels.size)
    for c in range(k):
        if np.any(labels == c):
            continue
        sizes = np.bincount(labels, minlength=k)
        own = costs[rows, labels]
        movable = sizes[labels] > 1
        own = np.where(movable, own, -np.inf)
        labels[int(np.argmax(own))] = c
    return labels


def _update(
    numeric: np.ndarray, categorical: np.ndarray, labels: np.ndarray, k: int
) -> tuple[np.ndarray, np.ndarray]:
    """数値は平均、カテゴリは最頻値（同数は小さいコード）"""
    proto_num = np.zeros((k, numeric.shape[1]))
    proto_cat = np.zeros((k, categorical.shape[1]), dtype=np.int64)
    for c in range(k):
        members = labels == c
        if numeric.shape[1]:
            proto_num[c] = numeric[members].mean(axis=0)
        for q in range(categorical.shape[1]):
            proto_cat[c, q] = int(np.argmax(np.bincount(categorical[members, q])))
    return proto_num, proto_cat


def kprototypes(
    dataset: Dataset,
    k: int,
    seed: int,
    gamma: Optional[float] = None,
    max_iter: int = DEFAULT_MAX_ITER,
    n_init: int = DEFAULT_N_INIT,
) -> KPrototypesResult:
    """K-Prototypes（n_init 回の初期化から最小コストを採用）"""
    n = dataset.n
    if not dataset.is_complete:
        raise DataError("k-prototypes needs a complete dataset")
    if not 2 <= k <= n:
        raise DataError(f"cluster count k={k} must be within [2, {n}]")

    numeric, categorical = _split(dataset)
    if gamma is None:
        gamma = default_gamma(numeric)
    rows = np.arange(n)
    rng = np.random.default_rng(seed)

    best: Optional[KPrototypesResult] = None
    for _ in range(max(1, n_init)):
        init = rng.choice(n, size=k, replace=False)
        proto_num, proto_cat = numeric[init].copy(), categorical[init].copy()
        labels: Optional[np.ndarray] = None
        history: list[float] = []
        iterations = 0

        for _ in range(max_iter):
            costs = _point_costs(numeric, categorical, proto_num, proto_cat, gamma)
            assigned = _repair_empty(costs, np.argmin(costs, axis=1), k)
            if labels is not None and np.array_equal(assigned, labels):
                break
            labels = assigned
            proto_num, proto_cat = _update(numeric, categorical, labels, k)
            costs = _point_costs(numeric, categorical, proto_num, proto_cat, gamma)
            history.append(float(costs[rows, labels].sum()))
            iterations += 1

        result = KPrototypesResult(
            labels=labels,
            cost=history[-1],
            cost_history=tuple(history),
            gamma=gamma,
            n_iter=iterations,
        )
        if best is None or result.cost < best.cost:
            best = result
    return best
