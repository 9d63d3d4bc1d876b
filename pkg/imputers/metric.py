"""
異種属性の統一非類似度

観測データから属性間の相互依存を推定し、値ペアの非類似度テーブル Ψ^r と
欠損を考慮したオブジェクト間距離 MΨ を計算する。

- ψ^{rs}: A^s の条件付き分布から見た A^r の値ペアの違い
    名義 s → 全変動距離 / 順序 s → 条件付き CDF の L1 / (K^s - 1)
    数値 s → 正規化値の条件付き平均の差 / s = r → 属性そのものの違い
- w^{rs}: ψ^{rs} の値ペア平均（ペアごとの経路補正 L = v - 1 付き）
- Ψ^r: Σ_s ψ^{rs} w^{rs} を最大値で [0, 1] にスケール（カテゴリ属性のみ）
"""

import logging
import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from imputers.dataset_io import DEFAULT_MAX_BINS, catalog_values, normalize_numeric
from imputers.errors import DataError
from imputers.models import AttributeType, Dataset, NumericRange, Schema, ValueCatalog

logger = logging.getLogger(__name__)

# 支持のない条件付き分布に使う ψ
ZERO_SUPPORT_PSI = 1.0


@dataclass(frozen=True, eq=False)
class ReflectionTable:
    """A^r = o を条件とした A^s の統計（両方観測された行のみ）"""

    support: np.ndarray  # (K^r,) 条件ごとの行数
    distribution: Optional[np.ndarray] = None  # (K^r, K^s) カテゴリ属性 s
    means: Optional[np.ndarray] = None  # (K^r,) 数値属性 s（正規化値）

    @property
    def zero_support(self) -> np.ndarray:
        return self.support == 0


@dataclass(frozen=True, eq=False)
class CoOccurrenceStats:
    """属性ペアごとの共起統計"""

    kinds: tuple[AttributeType, ...]
    catalog: ValueCatalog
    tables: dict[tuple[int, int], ReflectionTable]
    n: int
    _psi_cache: dict = field(default_factory=dict, repr=False)

    @property
    def d(self) -> int:
        return len(self.kinds)

    def table(self, r: int, s: int) -> ReflectionTable:
        return self.tables[(r, s)]

    def psi(self, r: int, s: int) -> np.ndarray:
        """ψ^{rs} の K^r x K^r 行列（キャッシュ付き）"""
        key = (r, s)
        if key not in self._psi_cache:
            K = self.catalog.K(r)
            mat = np.zeros((K, K))
            for m in range(K):
                for h in range(m + 1, K):
                    mat[m, h] = mat[h, m] = psi_reflect(self, r, s, m, h)
            self._psi_cache[key] = mat
        return self._psi_cache[key]

    def fallback_pairs(self, r: int, s: int) -> int:
        """支持なしで ψ = 1 に倒した値ペアの数"""
        if r == s:
            return 0
        zero = self.table(r, s).zero_support
        K = zero.size
        ok = K - int(zero.sum())
        return K * (K - 1) // 2 - ok * (ok - 1) // 2


@dataclass(frozen=True, eq=False)
class WeightMatrix:
    """相互依存の重み w^{rs}"""

    values: np.ndarray  # (d, d)

    def __getitem__(self, key: tuple[int, int]) -> float:
        return float(self.values[key])

    @property
    def d(self) -> int:
        return self.values.shape[0]

    def interdependence(self, r: int, s: int) -> float:
        """対称化した相互依存 (w^{rs} + w^{sr}) / 2"""
        return (self.values[r, s] + self.values[s, r]) / 2


@dataclass(frozen=True, eq=False)
class DissimilarityModel:
    """学習済みの統一非類似度（学習後は不変）"""

    schema: Schema
    catalog: ValueCatalog
    stats: CoOccurrenceStats
    weights: WeightMatrix
    pair_tables: tuple[Optional[np.ndarray], ...]  # スケール済み Ψ^r
    raw_pair_tables: tuple[Optional[np.ndarray], ...]  # スケール前の Σ_s ψ^{rs} w^{rs}
    ranges: tuple[Optional[NumericRange], ...]
    warnings: tuple[str, ...] = ()

    @property
    def d(self) -> int:
        return self.schema.d

    def encode(self, values: np.ndarray) -> np.ndarray:
        """セル配列を距離計算用に変換

        カテゴリ列はカタログ位置、数値列は正規化値、欠損は NaN。
        """
        values = np.atleast_2d(np.asarray(values, dtype=np.float64))
        out = np.full(values.shape, np.nan)
        for r, col in enumerate(self.schema.columns):
            x = values[:, r]
            observed = ~np.isnan(x)
            if col.kind is AttributeType.NUMERICAL:
                rng = self.ranges[r]
                if rng is None:
                    continue
                out[observed, r] = (x[observed] - rng.low) / rng.span if rng.span > 0 else 0.0
                continue
            pos = self.catalog[r].index_of(x)
            unknown = observed & (pos < 0)
            if unknown.any():
                bad = x[unknown][0]
                raise DataError(f"column '{col.name}': value code {bad:g} is not in the catalog")
            out[observed, r] = pos[observed]
        return out


@dataclass(frozen=True, eq=False)
class DistanceMatrix:
    """オブジェクト間距離 D（対称・対角 0）"""

    values: np.ndarray

    def __post_init__(self):
        values = np.array(self.values, dtype=np.float64, copy=True)
        values.setflags(write=False)
        object.__setattr__(self, "values", values)

    @property
    def n(self) -> int:
        return self.values.shape[0]

    def __getitem__(self, key):
        return self.values[key]

    def submatrix(self, members: Sequence[int]) -> "DistanceMatrix":
        idx = np.asarray(members, dtype=np.int64)
        return DistanceMatrix(self.values[np.ix_(idx, idx)])


def estimate_statistics(dataset: Dataset, catalog: ValueCatalog) -> CoOccurrenceStats:
    """属性ペアごとの条件付き分布・条件付き平均を推定

    dataset は数値列が正規化済みであること。両方観測された行のみ使う。
    """
    d = dataset.d
    codes = np.stack(
        [catalog[r].index_of(dataset.values[:, r]) for r in range(d)], axis=1
    )
    kinds = tuple(c.kind for c in dataset.schema.columns)
    tables: dict[tuple[int, int], ReflectionTable] = {}

    for r in range(d):
        Kr = catalog.K(r)
        for s in range(d):
            if s == r:
                continue
            both = (codes[:, r] >= 0) & (codes[:, s] >= 0)
            cond = codes[both, r]
            support = np.bincount(cond, minlength=Kr)
            safe = np.maximum(support, 1)

            if kinds[s].is_categorical:
                counts = np.zeros((Kr, catalog.K(s)))
                np.add.at(counts, (cond, codes[both, s]), 1.0)
                tables[(r, s)] = ReflectionTable(
                    support=support, distribution=counts / safe[:, None]
                )
            else:
                sums = np.bincount(cond, weights=dataset.values[both, s], minlength=Kr)
                tables[(r, s)] = ReflectionTable(support=support, means=sums / safe)

    return CoOccurrenceStats(kinds=kinds, catalog=catalog, tables=tables, n=dataset.n)


def psi_reflect(stats: CoOccurrenceStats, r: int, s: int, o_m: int, o_h: int) -> float:
    """A^s から見た A^r の値 o_m, o_h の非類似度 ψ^{rs} ∈ [0, 1]

    o_m, o_h はカタログ位置。どちらかの条件に支持がなければ 1 を返す。
    """
    K = stats.catalog.K(r)
    for o in (o_m, o_h):
        if not 0 <= o < K:
            raise DataError(f"unknown value id {o} for attribute {r} (K={K})")
    if o_m == o_h:
        return 0.0

    if s == r:
        kind = stats.kinds[r]
        if kind is AttributeType.NOMINAL:
            return 1.0
        if kind is AttributeType.ORDINAL:
            return abs(o_m - o_h) / (K - 1)
        reps = stats.catalog[r].values
        return float(min(1.0, abs(reps[o_m] - reps[o_h])))

    table = stats.table(r, s)
    if table.support[o_m] == 0 or table.support[o_h] == 0:
        return ZERO_SUPPORT_PSI

    kind_s = stats.kinds[s]
    if kind_s is AttributeType.NOMINAL:
        p, q = table.distribution[o_m], table.distribution[o_h]
        value = 0.5 * np.abs(p - q).sum()
    elif kind_s is AttributeType.ORDINAL:
        Ks = stats.catalog.K(s)
        if Ks < 2:
            return 0.0
        cdf_m = np.cumsum(table.distribution[o_m])
        cdf_h = np.cumsum(table.distribution[o_h])
        value = np.abs(cdf_m - cdf_h)[:-1].sum() / (Ks - 1)
    else:
        value = abs(table.means[o_m] - table.means[o_h])
    return float(min(1.0, max(0.0, value)))


def path_correction(kind: AttributeType, q: int, c: int) -> int:
    """値ペアの経路補正 L = v - 1（v は経路上のカタログ値の数）"""
    if kind is AttributeType.NOMINAL:
        return 1
    return abs(c - q)


def compute_weights(stats: CoOccurrenceStats, catalog: ValueCatalog) -> WeightMatrix:
    """w^{rs} = Σ_{q<c} [ψ^{rs}(o_q, o_c) / L_qc] / N^r"""
    d = stats.d
    w = np.zeros((d, d))
    for r in range(d):
        K = catalog.K(r)
        if K < 2:
            continue  # 値ペアがない属性は何も区別しない
        N = K * (K - 1) / 2
        q, c = np.triu_indices(K, k=1)
        L = np.array([path_correction(stats.kinds[r], a, b) for a, b in zip(q, c)], dtype=float)
        for s in range(d):
            psi = stats.psi(r, s)
            w[r, s] = (psi[q, c] / L).sum() / N
    return WeightMatrix(w)


def value_pair_dissimilarity(
    stats: CoOccurrenceStats, weights: WeightMatrix
) -> tuple[tuple[Optional[np.ndarray], ...], tuple[Optional[np.ndarray], ...]]:
    """カテゴリ属性ごとの Ψ^r テーブル（スケール前, スケール済み）

    最小値は対角の 0 なので、最大値で割って [0, 1] に収める。
    """
    raw_tables: list[Optional[np.ndarray]] = []
    scaled_tables: list[Optional[np.ndarray]] = []
    for r in range(stats.d):
        if not stats.kinds[r].is_categorical:
            raw_tables.append(None)
            scaled_tables.append(None)
            continue
        K = stats.catalog.K(r)
        raw = np.zeros((K, K))
        for s in range(stats.d):
            raw += stats.psi(r, s) * weights[r, s]
        peak = raw.max()
        scaled = raw / peak if peak > 0 else np.zeros_like(raw)
        np.fill_diagonal(scaled, 0.0)
        raw.setflags(write=False)
        scaled.setflags(write=False)
        raw_tables.append(raw)
        scaled_tables.append(scaled)
    return tuple(raw_tables), tuple(scaled_tables)


def fit_model(dataset: Dataset, max_bins: int = DEFAULT_MAX_BINS) -> DissimilarityModel:
    """観測データから統一非類似度を学習"""
    normalized, ranges = normalize_numeric(dataset)
    catalog = catalog_values(normalized, max_bins=max_bins)
    stats = estimate_statistics(normalized, catalog)
    weights = compute_weights(stats, catalog)
    raw_tables, tables = value_pair_dissimilarity(stats, weights)

    warnings = []
    names = dataset.schema.names
    for r in range(dataset.d):
        for s in range(dataset.d):
            fallbacks = stats.fallback_pairs(r, s)
            if fallbacks:
                msg = (
                    f"{fallbacks} value pair(s) of '{names[r]}' have no co-observed "
                    f"rows with '{names[s]}'; psi fell back to {ZERO_SUPPORT_PSI}"
                )
                logger.warning(msg)
                warnings.append(msg)

    return DissimilarityModel(
        schema=dataset.schema,
        catalog=catalog,
        stats=stats,
        weights=weights,
        pair_tables=tables,
        raw_pair_tables=raw_tables,
        ranges=ranges,
        warnings=tuple(warnings),
    )


def _distance_block(model: DissimilarityModel, left: np.ndarray, right: np.ndarray) -> np.ndarray:
    """符号化済みの行集合どうしの MΨ（欠損の有無によらず同じ経路で計算）"""
    d = model.d
    total = np.zeros((left.shape[0], right.shape[0]))
    shared = np.zeros(total.shape, dtype=np.int64)

    for r in range(d):
        a = left[:, r][:, None]
        b = right[:, r][None, :]
        ok = ~np.isnan(a) & ~np.isnan(b)
        table = model.pair_tables[r]
        if table is not None:
            ia = np.where(np.isnan(a), 0, a).astype(np.int64)
            ib = np.where(np.isnan(b), 0, b).astype(np.int64)
            term = np.where(ok, table[ia, ib], 0.0)
        else:
            term = np.where(ok, np.abs(a - b), 0.0)
        total += term * term
        shared += ok

    md = d - shared
    factor = d / np.maximum(d - md, 1)
    with np.errstate(invalid="ignore"):
        dist = np.sqrt(factor * total)
    return np.where(md == d, math.sqrt(d), dist)


def object_distance(x_i: np.ndarray, x_j: np.ndarray, model: DissimilarityModel) -> float:
    """2行の MΨ。欠損がなければ Ψ に一致する"""
    enc = model.encode(np.vstack([x_i, x_j]))
    return float(_distance_block(model, enc[:1], enc[1:])[0, 0])


def complete_distance(x_i: np.ndarray, x_j: np.ndarray, model: DissimilarityModel) -> float:
    """完全な2行の Ψ（欠損なし専用）"""
    enc = model.encode(np.vstack([x_i, x_j]))
    total = 0.0
    for r in range(model.d):
        a, b = enc[0, r], enc[1, r]
        if np.isnan(a) or np.isnan(b):
            raise DataError("complete_distance needs rows without missing cells")
        table = model.pair_tables[r]
        term = table[int(a), int(b)] if table is not None else abs(a - b)
        total += term * term
    return math.sqrt(total)


def distance_rows(
    dataset: Dataset, model: DissimilarityModel, rows: Sequence[int]
) -> np.ndarray:
    """指定行から全行への距離（len(rows) x n）"""
    enc = model.encode(dataset.values)
    idx = np.asarray(rows, dtype=np.int64)
    return _distance_block(model, enc[idx], enc)


def distance_matrix(dataset: Dataset, model: DissimilarityModel) -> DistanceMatrix:
    """全オブジェクト間の距離行列（非順序ペアごとに1回計算）"""
    enc = model.encode(dataset.values)
    block = _distance_block(model, enc, enc)
    upper = np.triu(block, k=1)
    return DistanceMatrix(upper + upper.T)


def update_row(
    matrix: DistanceMatrix, dataset: Dataset, model: DissimilarityModel, i: int
) -> DistanceMatrix:
    """行 i のセルが変わった後、行・列 i だけを再計算"""
    if not 0 <= i < matrix.n:
        raise DataError(f"row index {i} out of range for {matrix.n} objects")
    row = distance_rows(dataset, model, [i])[0]
    row[i] = 0.0
    values = matrix.values.copy()
    values[i, :] = row
    values[:, i] = row
    return DistanceMatrix(values)
