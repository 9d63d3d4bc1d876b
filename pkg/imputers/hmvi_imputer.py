"""
HMVI 補完

クラスタリングと補完を交互に行う欠損値推定。
1. 観測データから統一非類似度を学習（以降は固定）
2. 欠損のある行を欠損数の昇順に並べる
3. 先頭の行ごとに: 距離更新 → クラスタリング → 所属クラスタ内の自然近傍
   → 相互依存の強い属性から平均/最頻値で補完 → 最寄りクラスタへ再割り当て
"""

import logging
from dataclasses import dataclass, field
from enum import Enum
from typing import Collection, Iterable, NamedTuple, Optional, Sequence

import numpy as np

from imputers.clustering import DEFAULT_MAX_ITER, ClusterModel, assign_object, cluster
from imputers.dataset_io import DEFAULT_MAX_BINS
from imputers.errors import DataError, InvariantError
from imputers.metric import (
    DissimilarityModel,
    DistanceMatrix,
    WeightMatrix,
    distance_matrix,
    fit_model,
    update_row,
)
from imputers.models import AttributeType, CellValue, Dataset
from imputers.neighbors import NeighborSet, natural_neighbors_within

logger = logging.getLogger(__name__)


class RefreshPolicy(str, Enum):
    """対象ごとのクラスタ更新方法"""

    FULL = "full"  # 対象ごとに S を再クラスタリング
    INCREMENTAL = "incremental"  # 初回のみクラスタリングし、以降は行更新と再割り当て


class Ablation(str, Enum):
    """アブレーション"""

    FULL = "full"
    NO_NATURAL_NEIGHBORS = "no_natural_neighbors"  # HMVI-0: クラスタ全体から補完
    NO_PRECLUSTERING = "no_preclustering"  # HMVI-1: 全体の自然近傍から補完


class DonorSource(str, Enum):
    """補完値の参照元"""

    NEIGHBORS = "neighbors"
    CLUSTER = "cluster"
    GLOBAL = "global"


@dataclass
class HmviConfig:
    """HMVI 設定"""

    k: int = 2
    seed: int = 0
    max_iter: int = DEFAULT_MAX_ITER
    refresh_policy: RefreshPolicy = RefreshPolicy.FULL
    ablation: Ablation = Ablation.FULL
    knn_k: int = 5  # KNNMI 用
    n_init: int = 1
    max_bins: int = DEFAULT_MAX_BINS

    def __post_init__(self):
        self.refresh_policy = RefreshPolicy(self.refresh_policy)
        self.ablation = Ablation(self.ablation)
        if self.k < 2:
            raise DataError(f"cluster count k={self.k} must be at least 2")
        if self.knn_k < 1:
            raise DataError(f"knn_k={self.knn_k} must be at least 1")
        if self.max_iter < 1 or self.n_init < 1:
            raise DataError("max_iter and n_init must be at least 1")


@dataclass(frozen=True)
class ImputedValue:
    """1セルの補完結果"""

    value: CellValue
    donor_count: int
    source: DonorSource


@dataclass(frozen=True)
class ImputedCell:
    """補完ログの1行"""

    row: int
    column: int
    value: CellValue
    donor_count: int
    cluster: Optional[int]
    source: DonorSource


@dataclass
class ImputationReport:
    """補完ログ"""

    cells: list[ImputedCell] = field(default_factory=list)
    iterations: int = 0
    warnings: list[str] = field(default_factory=list)

    def warn(self, message: str) -> None:
        logger.warning(message)
        self.warnings.append(message)

    def to_dict(self, dataset: Dataset) -> dict:
        """YAML 出力用の辞書"""
        names = dataset.schema.names
        cells = []
        for cell in self.cells:
            value = dataset.label(cell.row, cell.column)
            cells.append(
                {
                    "row": cell.row,
                    "column": names[cell.column],
                    "value": value if value is not None else float(cell.value.as_float()),
                    "donors": cell.donor_count,
                    "cluster": cell.cluster,
                    "source": cell.source.value,
                }
            )
        return {
            "summary": {
                "imputed_cells": len(self.cells),
                "iterations": self.iterations,
                "warnings": len(self.warnings),
            },
            "cells": cells,
            "warnings": list(self.warnings),
        }


class HmviResult(NamedTuple):
    """補完済みデータセット・最終クラスタ・ログ"""

    dataset: Dataset
    clusters: ClusterModel
    report: ImputationReport


def order_missing_attributes(row: np.ndarray, weights: WeightMatrix) -> list[int]:
    """欠損属性を観測属性との相互依存の強い順に並べる

    score(r) = max_s (w^{rs} + w^{sr}) / 2（s は観測属性）。同点は添字昇順。
    観測属性がなければ添字昇順。
    """
    row = np.asarray(row, dtype=np.float64)
    missing = [int(r) for r in np.flatnonzero(np.isnan(row))]
    observed = [int(s) for s in np.flatnonzero(~np.isnan(row))]
    if not observed:
        return missing

    def score(r: int) -> float:
        return max(weights.interdependence(r, s) for s in observed)

    return sorted(missing, key=lambda r: (-score(r), r))


def central_value(kind: AttributeType, values: np.ndarray) -> CellValue:
    """数値は平均、カテゴリは最頻値（同数はカタログ順で先の値）"""
    if kind is AttributeType.NUMERICAL:
        return CellValue.numeric(float(values.mean()))
    codes = values.astype(np.int64)
    mode = int(np.argmax(np.bincount(codes)))
    return CellValue(kind, float(mode))


def impute_cell(
    target: int,
    attr: int,
    donors: Sequence[int],
    dataset: Dataset,
    cluster_members: Sequence[int] = (),
    distances: Optional[np.ndarray] = None,
) -> ImputedValue:
    """参照オブジェクトの値から1セルを補完

    参照先が属性 attr を持たなければ、クラスタメンバー → 列全体の順に広げる。
    distances（対象から各オブジェクトへの距離）を渡すと、広げた先は近い順に
    参照数 len(donors) まで使い、値を持つ参照先が足りないときも
    最寄りのクラスタメンバーで同じ数まで補う。
    """
    observed = ~dataset.mask[:, attr]
    kind = dataset.schema.kind(attr)
    quota = max(len(donors), 1)

    def nearest(pool: Iterable[int], exclude: Collection[int], count: int) -> list[int]:
        candidates = [j for j in pool if j != target and observed[j] and j not in exclude]
        if distances is None:
            return candidates
        return sorted(candidates, key=lambda j: (distances[j], j))[:count]

    usable = [j for j in donors if j != target and observed[j]]
    if usable and distances is not None and len(usable) < quota:
        usable += nearest(cluster_members, set(usable), quota - len(usable))

    for source, pool in (
        (DonorSource.NEIGHBORS, usable),
        (DonorSource.CLUSTER, nearest(cluster_members, (), quota)),
        (DonorSource.GLOBAL, nearest(range(dataset.n), (), quota)),
    ):
        if pool:
            value = central_value(kind, dataset.values[pool, attr])
            return ImputedValue(value=value, donor_count=len(pool), source=source)

    name = dataset.schema.columns[attr].name
    raise DataError(f"column '{name}' has no observed value to impute from")


def _find_donors(
    matrix: DistanceMatrix,
    clusters: Optional[ClusterModel],
    config: HmviConfig,
    target: int,
) -> tuple[list[int], NeighborSet]:
    """対象の参照候補（クラスタメンバー, 参照オブジェクト）"""
    if clusters is None:
        members = list(range(matrix.n))
    else:
        members = clusters.members(clusters.cluster_of(target))

    if config.ablation is Ablation.NO_NATURAL_NEIGHBORS:
        others = tuple(j for j in members if j != target)
        return members, NeighborSet(indices=others, degenerate=not others)
    return members, natural_neighbors_within(matrix, members, target)


def hmvi_impute(dataset: Dataset, config: HmviConfig) -> HmviResult:
    """HMVI で全欠損セルを補完する

    観測セルは変更しない。数値は元のスケールのまま平均を取る（正規化平均と等価）。
    """
    if dataset.n < config.k:
        raise DataError(f"{dataset.n} objects cannot form k={config.k} clusters")

    model: DissimilarityModel = fit_model(dataset, max_bins=config.max_bins)
    report = ImputationReport(warnings=list(model.warnings))
    values = dataset.values.copy()
    working = dataset
    matrix = distance_matrix(working, model)

    targets = sorted(dataset.incomplete_rows(), key=lambda i: (dataset.missing_count(i), i))
    preclustering = config.ablation is not Ablation.NO_PRECLUSTERING

    def recluster() -> ClusterModel:
        return cluster(matrix, config.k, config.seed, config.max_iter, config.n_init)

    clusters: Optional[ClusterModel] = None
    if preclustering and config.refresh_policy is RefreshPolicy.INCREMENTAL:
        clusters = recluster()

    for target in targets:
        if preclustering and config.refresh_policy is RefreshPolicy.FULL:
            clusters = recluster()

        attrs = order_missing_attributes(values[target], model.weights)
        if dataset.missing_count(target) == dataset.d:
            report.warn(f"row {target}: every attribute is missing; imputing in column order")

        for attr in attrs:
            members, neighbors = _find_donors(matrix, clusters, config, target)
            if neighbors.degenerate:
                report.warn(f"row {target}: cluster too small for neighbor search")
            elif neighbors.fallback:
                report.warn(
                    f"row {target}: no natural neighbor in its cluster; "
                    f"used {len(neighbors.indices)} nearest members"
                )

            imputed = impute_cell(
                target, attr, neighbors.indices, working, members, matrix.values[target]
            )
            if imputed.source is not DonorSource.NEIGHBORS:
                report.warn(
                    f"row {target}, column '{dataset.schema.columns[attr].name}': "
                    f"donors widened to {imputed.source.value}"
                )

            values[target, attr] = imputed.value.as_float()
            working = working.with_values(values)
            matrix = update_row(matrix, working, model, target)
            cluster_id = None
            if clusters is not None:
                cluster_id, clusters = assign_object(matrix, clusters, target)

            report.cells.append(
                ImputedCell(
                    row=target,
                    column=attr,
                    value=imputed.value,
                    donor_count=imputed.donor_count,
                    cluster=cluster_id,
                    source=imputed.source,
                )
            )
        report.iterations += 1

    if clusters is None:
        clusters = recluster()

    if working.mask.any():
        raise InvariantError(f"{working.missing_cells} cell(s) still missing after HMVI")
    if not np.array_equal(working.values[~dataset.mask], dataset.values[~dataset.mask]):
        raise InvariantError("HMVI modified an observed cell")
    if len(report.cells) != dataset.missing_cells:
        raise InvariantError("imputation log does not cover every missing cell exactly once")

    return HmviResult(dataset=working, clusters=clusters, report=report)
