"""
共通データモデル

名義・順序・数値属性が混在する欠損付きテーブルの型定義。
セルは (n, d) の float64 配列に保持し、欠損は NaN と明示マスクの両方で表す。
- 名義: カテゴリ ID（ソースファイルでの初出順）
- 順序: 0 始まりのランク（スキーマ宣言順）
- 数値: 実数
"""

from dataclasses import dataclass, field
from enum import Enum
from typing import NamedTuple, Optional

import numpy as np

from imputers.errors import DataError, SchemaError


class AttributeType(str, Enum):
    """属性の種類"""

    NOMINAL = "nominal"  # 順序なしカテゴリ
    ORDINAL = "ordinal"  # 順序付きカテゴリ
    NUMERICAL = "numerical"  # 実数

    @property
    def is_categorical(self) -> bool:
        return self is not AttributeType.NUMERICAL


@dataclass(frozen=True)
class Attribute:
    """スキーマの1列"""

    name: str
    kind: AttributeType
    levels: tuple[str, ...] = ()  # 順序属性のみ

    def __post_init__(self):
        if not self.name:
            raise SchemaError("attribute name must not be empty")
        if self.kind is AttributeType.ORDINAL:
            if not self.levels:
                raise SchemaError(f"ordinal attribute '{self.name}' needs at least one level")
            if len(set(self.levels)) != len(self.levels):
                raise SchemaError(f"ordinal attribute '{self.name}' has duplicate levels")
        elif self.levels:
            raise SchemaError(f"only ordinal attributes take levels: '{self.name}'")


@dataclass(frozen=True)
class Schema:
    """列の並びと種類"""

    columns: tuple[Attribute, ...]

    def __post_init__(self):
        if not self.columns:
            raise SchemaError("schema needs at least one column")
        seen: set[str] = set()
        for col in self.columns:
            if col.name in seen:
                raise SchemaError(f"duplicate column name: {col.name}")
            seen.add(col.name)

    @property
    def d(self) -> int:
        return len(self.columns)

    @property
    def names(self) -> list[str]:
        return [c.name for c in self.columns]

    def index(self, name: str) -> int:
        """列名から列番号を取得"""
        for r, col in enumerate(self.columns):
            if col.name == name:
                return r
        raise SchemaError(f"unknown column: {name}")

    def kind(self, r: int) -> AttributeType:
        return self.columns[r].kind

    def drop(self, name: str) -> "Schema":
        """指定列を除いたスキーマ"""
        return Schema(tuple(c for c in self.columns if c.name != name))


@dataclass(frozen=True)
class CellValue:
    """タグ付きセル値（kind が None なら欠損）"""

    kind: Optional[AttributeType] = None
    value: Optional[float] = None

    @classmethod
    def missing(cls) -> "CellValue":
        return cls()

    @classmethod
    def nominal(cls, category: int) -> "CellValue":
        return cls(AttributeType.NOMINAL, float(category))

    @classmethod
    def ordinal(cls, rank: int) -> "CellValue":
        return cls(AttributeType.ORDINAL, float(rank))

    @classmethod
    def numeric(cls, x: float) -> "CellValue":
        if not np.isfinite(x):
            raise DataError(f"numeric cell must be finite: {x}")
        return cls(AttributeType.NUMERICAL, float(x))

    @classmethod
    def of(cls, kind: AttributeType, x: float) -> "CellValue":
        """配列上の値からセル値を復元"""
        if np.isnan(x):
            return cls.missing()
        if kind is AttributeType.NUMERICAL:
            return cls.numeric(x)
        return cls(kind, float(int(x)))

    @property
    def is_missing(self) -> bool:
        return self.kind is None

    def as_float(self) -> float:
        return np.nan if self.value is None else self.value


class NumericRange(NamedTuple):
    """数値列の観測範囲"""

    low: float
    high: float

    @property
    def span(self) -> float:
        return self.high - self.low


@dataclass(frozen=True, eq=False)
class Dataset:
    """欠損付き異種テーブル（生成後は不変）"""

    schema: Schema
    values: np.ndarray  # (n, d) float64, 欠損は NaN
    vocabularies: tuple[tuple[str, ...], ...]  # 列ごとのラベル（数値列は空）
    mask: np.ndarray = field(init=False)  # True = 欠損

    def __post_init__(self):
        values = np.array(self.values, dtype=np.float64, copy=True)
        if values.ndim != 2 or values.shape[1] != self.schema.d:
            raise DataError(
                f"cell grid shape {values.shape} does not match schema width {self.schema.d}"
            )
        if values.shape[0] < 1:
            raise DataError("dataset needs at least one row")
        if len(self.vocabularies) != self.schema.d:
            raise DataError("one vocabulary per column is required")

        mask = np.isnan(values)
        for r, col in enumerate(self.schema.columns):
            observed = values[~mask[:, r], r]
            if col.kind is AttributeType.NUMERICAL:
                if not np.all(np.isfinite(observed)):
                    raise DataError(f"column '{col.name}' has non-finite numeric cells")
                continue
            size = len(self.vocabularies[r])
            if col.kind is AttributeType.ORDINAL and self.vocabularies[r] != col.levels:
                raise DataError(f"column '{col.name}' vocabulary differs from its levels")
            if observed.size and (
                np.any(observed != np.round(observed))
                or observed.min() < 0
                or observed.max() >= size
            ):
                raise DataError(f"column '{col.name}' has codes outside its vocabulary")

        values.setflags(write=False)
        mask.setflags(write=False)
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "mask", mask)

    @property
    def n(self) -> int:
        return self.values.shape[0]

    @property
    def d(self) -> int:
        return self.schema.d

    def cell(self, i: int, r: int) -> CellValue:
        return CellValue.of(self.schema.kind(r), self.values[i, r])

    def label(self, i: int, r: int) -> Optional[str]:
        """カテゴリ列のセルをラベル文字列で取得（欠損は None）"""
        x = self.values[i, r]
        if np.isnan(x) or not self.schema.kind(r).is_categorical:
            return None
        return self.vocabularies[r][int(x)]

    def missing_count(self, i: int) -> int:
        return int(self.mask[i].sum())

    def incomplete_rows(self) -> list[int]:
        """欠損セルを含む行（T）"""
        return [int(i) for i in np.flatnonzero(self.mask.any(axis=1))]

    def complete_rows(self) -> list[int]:
        return [int(i) for i in np.flatnonzero(~self.mask.any(axis=1))]

    @property
    def missing_cells(self) -> int:
        return int(self.mask.sum())

    @property
    def is_complete(self) -> bool:
        return not self.mask.any()

    def observed(self, r: int) -> np.ndarray:
        """列 r の観測値"""
        return self.values[~self.mask[:, r], r]

    def with_values(self, values: np.ndarray) -> "Dataset":
        """セル配列を差し替えた新しいデータセット"""
        return Dataset(self.schema, values, self.vocabularies)

    def drop_column(self, name: str) -> tuple["Dataset", np.ndarray]:
        """列を取り除き、その列の値を返す（評価用ラベル列）"""
        r = self.schema.index(name)
        if self.mask[:, r].any():
            raise DataError(f"label column '{name}' has missing cells")
        labels = self.values[:, r].astype(np.int64)
        keep = [c for c in range(self.d) if c != r]
        vocab = tuple(self.vocabularies[c] for c in keep)
        return Dataset(self.schema.drop(name), self.values[:, keep], vocab), labels

    def same_cells(self, other: "Dataset") -> bool:
        """欠損も含めたセル単位の一致"""
        if self.values.shape != other.values.shape or self.schema != other.schema:
            return False
        if not np.array_equal(self.mask, other.mask):
            return False
        return bool(np.array_equal(self.values[~self.mask], other.values[~other.mask]))


@dataclass(frozen=True, eq=False)
class AttributeCatalog:
    """1属性の観測ユニーク値 O^{r<*>}

    カテゴリ列では昇順のコード（名義は初出順 ID、順序はランク）、
    数値列では等頻度ビンの代表値（ビン平均）を値として持つ。
    """

    kind: AttributeType
    values: np.ndarray
    distinct_count: int
    bin_edges: Optional[np.ndarray] = None  # 数値列の内部境界
    observed_range: Optional[NumericRange] = None

    @property
    def K(self) -> int:
        return int(self.values.size)

    def index_of(self, x: np.ndarray) -> np.ndarray:
        """セル値をカタログ位置へ写像（欠損・未知は -1）"""
        x = np.asarray(x, dtype=np.float64)
        out = np.full(x.shape, -1, dtype=np.int64)
        ok = ~np.isnan(x)
        if not ok.any():
            return out
        if self.kind is AttributeType.NUMERICAL:
            out[ok] = np.searchsorted(self.bin_edges, x[ok], side="right")
            return out
        pos = np.searchsorted(self.values, x[ok])
        pos = np.clip(pos, 0, self.K - 1)
        hit = self.values[pos] == x[ok]
        out[ok] = np.where(hit, pos, -1)
        return out


@dataclass(frozen=True, eq=False)
class ValueCatalog:
    """全属性のカタログ"""

    attributes: tuple[AttributeCatalog, ...]

    def __getitem__(self, r: int) -> AttributeCatalog:
        return self.attributes[r]

    def __len__(self) -> int:
        return len(self.attributes)

    def K(self, r: int) -> int:
        return self.attributes[r].K
