"""
近傍探索

距離行列上の k 近傍と、パラメータ不要の自然近傍（Natural Neighbor）探索。
同距離は添字の小さい方を優先する。
"""

import logging
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from imputers.errors import DataError
from imputers.metric import DistanceMatrix

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class NaNState:
    """自然近傍探索の結果"""

    lambda_: int  # 自然固有値（終了ラウンド r）
    nan_sets: tuple[frozenset[int], ...]
    rnn_counts: tuple[int, ...]  # 終了時の逆近傍数

    def __getitem__(self, i: int) -> frozenset[int]:
        return self.nan_sets[i]


@dataclass(frozen=True)
class NeighborSet:
    """クラスタ内の自然近傍（フォールバック情報付き）"""

    indices: tuple[int, ...]
    lambda_: int = 0
    fallback: bool = False  # 自然近傍が空で λ 近傍に置き換えた
    degenerate: bool = False  # メンバーが 2 未満


def neighbor_order(matrix: DistanceMatrix) -> np.ndarray:
    """各行について自分以外を距離昇順に並べた (n, n-1) の添字"""
    n = matrix.n
    order = np.argsort(matrix.values, axis=1, kind="stable")
    keep = order != np.arange(n)[:, None]
    return order[keep].reshape(n, n - 1)


def knn(matrix: DistanceMatrix, i: int, r: int) -> list[int]:
    """オブジェクト i の r 近傍（自分を除く、距離昇順）"""
    n = matrix.n
    if not 1 <= r <= n - 1:
        raise DataError(f"neighbor count r={r} must be within [1, {n - 1}]")
    if not 0 <= i < n:
        raise DataError(f"object index {i} out of range for {n} objects")
    row = matrix.values[i]
    order = [int(j) for j in np.argsort(row, kind="stable") if j != i]
    return order[:r]


def natural_neighbor_search(matrix: DistanceMatrix) -> NaNState:
    """自然安定状態に達するまで r を増やし、相互 r 近傍を自然近傍とする

    終了条件（最初に満たしたラウンド）:
    - 全オブジェクトが自然近傍を 1 つ以上持つ
    - 自然近傍（相互近傍）を持たないオブジェクト数が前ラウンドから変わらない
    - r = n - 1

    数えるのは相互近傍のないオブジェクトで、逆近傍が 0 のオブジェクトではない。
    {0, 1, 3, 10} は逆近傍 0 の数（点 10 の 1 つ）が r = 2 で前ラウンドと同じになるが、
    相互近傍のない数は 2 から 1 に減るので r = 3 まで進む。
    """
    n = matrix.n
    if n < 2:
        raise DataError("natural neighbor search needs at least two objects")

    order = neighbor_order(matrix)
    nn = np.zeros((n, n), dtype=bool)
    rows = np.arange(n)
    previous_lonely = None
    r = 0
    mutual = nn

    while True:
        r += 1
        nn[rows, order[:, r - 1]] = True
        mutual = nn & nn.T
        lonely = int((~mutual.any(axis=1)).sum())
        if lonely == 0 or lonely == previous_lonely or r == n - 1:
            break
        previous_lonely = lonely

    nan_sets = tuple(frozenset(int(j) for j in np.flatnonzero(mutual[i])) for i in range(n))
    rnn = tuple(int(c) for c in nn.sum(axis=0))
    return NaNState(lambda_=r, nan_sets=nan_sets, rnn_counts=rnn)


def natural_neighbors_within(
    matrix: DistanceMatrix, members: Sequence[int], i: int
) -> NeighborSet:
    """members に制限した部分行列で i の自然近傍を探す

    自然近傍が空なら λ 個の最近傍メンバーで代用する。
    """
    members = sorted(int(m) for m in members)
    if i not in members:
        raise DataError(f"object {i} is not among the given members")
    if len(members) < 2:
        return NeighborSet(indices=(), degenerate=True)

    local = members.index(i)
    sub = matrix.submatrix(members)
    state = natural_neighbor_search(sub)
    found = sorted(state[local])
    if found:
        return NeighborSet(indices=tuple(members[j] for j in found), lambda_=state.lambda_)

    nearest = knn(sub, local, min(state.lambda_, sub.n - 1))
    logger.debug("object %d has no natural neighbor; using %d nearest", i, len(nearest))
    return NeighborSet(
        indices=tuple(sorted(members[j] for j in nearest)),
        lambda_=state.lambda_,
        fallback=True,
    )
