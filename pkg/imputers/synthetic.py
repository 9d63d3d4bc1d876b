"""
合成データ生成

クラスを埋め込んだ混合型データセット。各行はクラスとクラス内の位置 t を持つ。
- 名義: クラスごとのカテゴリ（purity < 1 なら他クラスのカテゴリが混じる）
- 順序: クラスごとのレベル（偶数番目の属性は逆順）
- 数値: クラスで平均をずらし、t の単調関数（t, t², t³）と小さなノイズを足す
数値属性どうしはクラス内でも t を通じて連動する。
"""

from dataclasses import dataclass
from pathlib import Path
from typing import Optional

import numpy as np
import yaml

from imputers.errors import DataError
from imputers.models import Attribute, AttributeType, Dataset, Schema

ORDINAL_LEVELS = ("low", "mid", "high", "top")
NUMERIC_SCALES = (1.0, 10.0, 100.0)


@dataclass(frozen=True)
class SyntheticPreset:
    """合成データの形"""

    name: str
    nominal: int
    ordinal: int
    numerical: int
    n: int
    classes: int
    description: str = ""

    def __post_init__(self):
        if self.nominal + self.ordinal + self.numerical < 1:
            raise DataError(f"preset '{self.name}' declares no attributes")
        if self.n < 2 or self.classes < 2 or self.classes > self.n:
            raise DataError(f"preset '{self.name}' needs n >= classes >= 2")


def default_sources_path() -> Path:
    return Path(__file__).parent.parent / "sources" / "datasets.yaml"


def load_sources(path: Optional[Path] = None) -> dict:
    """datasets.yaml を読み込み"""
    path = path or default_sources_path()
    if not path.exists():
        raise DataError(f"preset file not found: {path}")
    with open(path, encoding="utf-8") as f:
        return yaml.safe_load(f) or {}


def load_presets(path: Optional[Path] = None) -> dict[str, SyntheticPreset]:
    """プリセット定義を読み込み"""
    data = load_sources(path)
    presets = {}
    for name, entry in data.get("presets", {}).items():
        presets[name] = SyntheticPreset(
            name=name,
            nominal=int(entry.get("nominal", 0)),
            ordinal=int(entry.get("ordinal", 0)),
            numerical=int(entry.get("numerical", 0)),
            n=int(entry["n"]),
            classes=int(entry["classes"]),
            description=entry.get("description", ""),
        )
    return presets


def make_mixed_dataset(
    preset: SyntheticPreset,
    seed: int,
    n: Optional[int] = None,
    purity: float = 1.0,
    separation: float = 3.0,
    spread: float = 2.0,
    noise: float = 0.01,
) -> tuple[Dataset, np.ndarray]:
    """クラス付きの完全な混合型データセットを生成

    各行はクラスとクラス内の位置 t ∈ [0, 1) を持つ。カテゴリ属性はクラスで決まり、
    数値属性は t でクラス内の値が決まるので、t の近い行ほど全属性で似た値になる。

    Args:
        preset: 属性構成
        seed: 乱数シード
        n: 行数（省略時はプリセットの値）
        purity: 名義属性がクラスのカテゴリを取る確率
        separation: 数値属性のクラス間の平均差
        spread: 数値属性の t による変化幅
        noise: 数値属性に加える正規ノイズの標準偏差

    Returns:
        (データセット, クラスラベル)
    """
    n = n or preset.n
    k = preset.classes
    if n < k:
        raise DataError(f"{n} rows cannot hold {k} classes")
    rng = np.random.default_rng(seed)
    labels = rng.permutation(np.arange(n) % k)
    t = rng.random(n)

    columns: list[Attribute] = []
    vocabularies: list[tuple[str, ...]] = []
    cells: list[np.ndarray] = []

    for j in range(preset.nominal):
        name = f"nom{j + 1}"
        preferred = (labels + j) % k
        other = (preferred + rng.integers(1, k, size=n)) % k
        codes = np.where(rng.random(n) < purity, preferred, other)
        columns.append(Attribute(name, AttributeType.NOMINAL))
        cells.append(codes.astype(np.float64))
        vocabularies.append(tuple(f"{name}_{c}" for c in range(k)))

    top = len(ORDINAL_LEVELS) - 1
    for j in range(preset.ordinal):
        name = f"ord{j + 1}"
        ranks = np.rint(labels * top / (k - 1))
        if j % 2:
            ranks = top - ranks
        columns.append(Attribute(name, AttributeType.ORDINAL, ORDINAL_LEVELS))
        cells.append(ranks.astype(np.float64))
        vocabularies.append(ORDINAL_LEVELS)

    for j in range(preset.numerical):
        name = f"num{j + 1}"
        scale = NUMERIC_SCALES[j % len(NUMERIC_SCALES)]
        shape = t ** (1 + j % 3)
        x = scale * (10.0 + separation * labels + spread * shape + noise * rng.normal(size=n))
        columns.append(Attribute(name, AttributeType.NUMERICAL))
        cells.append(np.round(x, 3))
        vocabularies.append(())

    # 初出順 ID に揃える（CSV から読み直したときと同じ符号化にする）
    for r, col in enumerate(columns):
        if col.kind is AttributeType.NOMINAL:
            codes = cells[r].astype(np.int64)
            _, first = np.unique(codes, return_index=True)
            seen = np.unique(codes)[np.argsort(first)]
            remap = np.empty(len(vocabularies[r]), dtype=np.int64)
            remap[seen] = np.arange(seen.size)
            cells[r] = remap[codes].astype(np.float64)
            vocabularies[r] = tuple(vocabularies[r][c] for c in seen)

    dataset = Dataset(Schema(tuple(columns)), np.column_stack(cells), tuple(vocabularies))
    return dataset, labels.astype(np.int64)


def schema_text(schema: Schema) -> str:
    """スキーマをスキーマファイル形式で書き出す"""
    lines = []
    for col in schema.columns:
        if col.kind is AttributeType.ORDINAL:
            lines.append(f"{col.name}:{col.kind.value}:{'<'.join(col.levels)}")
        else:
            lines.append(f"{col.name}:{col.kind.value}")
    return "\n".join(lines) + "\n"


def attach_labels(dataset: Dataset, labels: np.ndarray, name: str = "class") -> Dataset:
    """クラスラベルを名義列として末尾に追加（評価の --labels 用）"""
    if name in dataset.schema.names:
        raise DataError(f"column '{name}' already exists")
    labels = np.asarray(labels, dtype=np.int64)
    if labels.size != dataset.n:
        raise DataError(f"{labels.size} labels for {dataset.n} rows")
    _, first = np.unique(labels, return_index=True)
    seen = np.unique(labels)[np.argsort(first)]
    codes = np.searchsorted(np.unique(labels), labels)
    remap = np.empty(seen.size, dtype=np.int64)
    remap[np.searchsorted(np.unique(labels), seen)] = np.arange(seen.size)
    column = Attribute(name, AttributeType.NOMINAL)
    return Dataset(
        Schema(dataset.schema.columns + (column,)),
        np.column_stack([dataset.values, remap[codes].astype(np.float64)]),
        dataset.vocabularies + (tuple(f"c{label}" for label in seen),),
    )
