"""
スキーマ・CSV の読み書きと値カタログ

スキーマ文法（1行1列、`#` で始まる行はコメント）:
    name ":" kind [":" level ("<" level)*]
    kind は nominal / ordinal / numerical
"""

import csv
import io
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from imputers.errors import DataError, SchemaError
from imputers.models import (
    Attribute,
    AttributeCatalog,
    AttributeType,
    Dataset,
    NumericRange,
    Schema,
    ValueCatalog,
)

DEFAULT_MISSING_TOKEN = "?"
DEFAULT_MAX_BINS = 5


def parse_schema(text: str) -> Schema:
    """スキーマファイルの内容を解析"""
    columns: list[Attribute] = []
    seen: set[str] = set()

    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue

        parts = [p.strip() for p in line.split(":", 2)]
        if len(parts) < 2 or not parts[0]:
            raise SchemaError(f"line {lineno}: expected 'name:kind', got '{line}'")
        name, kind_token = parts[0], parts[1]
        if name in seen:
            raise SchemaError(f"line {lineno}: duplicate column '{name}'")

        try:
            kind = AttributeType(kind_token)
        except ValueError:
            valid = ", ".join(k.value for k in AttributeType)
            raise SchemaError(
                f"line {lineno}: unknown kind '{kind_token}' (valid: {valid})"
            ) from None

        levels: tuple[str, ...] = ()
        if kind is AttributeType.ORDINAL:
            level_text = parts[2] if len(parts) == 3 else ""
            levels = tuple(level.strip() for level in level_text.split("<"))
            if not level_text or any(not level for level in levels):
                raise SchemaError(f"line {lineno}: ordinal '{name}' has an empty level list")
            if len(set(levels)) != len(levels):
                raise SchemaError(f"line {lineno}: ordinal '{name}' repeats a level")
        elif len(parts) == 3:
            raise SchemaError(f"line {lineno}: only ordinal columns take levels ('{name}')")

        seen.add(name)
        columns.append(Attribute(name=name, kind=kind, levels=levels))

    if not columns:
        raise SchemaError("schema file declares no columns")
    return Schema(tuple(columns))


def load_schema(path: Path) -> Schema:
    """スキーマファイルを読み込み"""
    if not path.exists():
        raise SchemaError(f"schema file not found: {path}")
    return parse_schema(path.read_text(encoding="utf-8"))


def load_dataset(
    text: str,
    schema: Schema,
    missing_token: str = DEFAULT_MISSING_TOKEN,
    header: bool = False,
) -> Dataset:
    """CSV テキストをスキーマに従って型付きで読み込み

    空フィールドと missing_token は欠損。解釈できないトークンはエラーにする。
    """
    d = schema.d
    nominal_ids: list[dict[str, int]] = [{} for _ in range(d)]
    level_ids = [
        {level: rank for rank, level in enumerate(col.levels)} for col in schema.columns
    ]
    rows: list[list[float]] = []

    reader = csv.reader(io.StringIO(text))
    for record in reader:
        if header and reader.line_num == 1:
            continue
        if not record or (len(record) == 1 and not record[0].strip() and d > 1):
            continue  # 空行
        if len(record) != d:
            raise DataError(
                f"row {reader.line_num}: expected {d} fields, got {len(record)}"
            )

        row: list[float] = []
        for r, (token, col) in enumerate(zip(record, schema.columns)):
            token = token.strip()
            if token == "" or token == missing_token:
                row.append(np.nan)
            elif col.kind is AttributeType.NUMERICAL:
                try:
                    x = float(token)
                except ValueError:
                    raise DataError(
                        f"row {reader.line_num}, column '{col.name}': "
                        f"cannot parse '{token}' as a number"
                    ) from None
                if not np.isfinite(x):
                    raise DataError(
                        f"row {reader.line_num}, column '{col.name}': non-finite value '{token}'"
                    )
                row.append(x)
            elif col.kind is AttributeType.ORDINAL:
                if token not in level_ids[r]:
                    raise DataError(
                        f"row {reader.line_num}, column '{col.name}': "
                        f"'{token}' is not one of {list(col.levels)}"
                    )
                row.append(float(level_ids[r][token]))
            else:
                ids = nominal_ids[r]
                row.append(float(ids.setdefault(token, len(ids))))
        rows.append(row)

    if not rows:
        raise DataError("data file has no rows")

    vocabularies = tuple(
        col.levels if col.kind is AttributeType.ORDINAL else tuple(nominal_ids[r])
        for r, col in enumerate(schema.columns)
    )
    return Dataset(schema, np.array(rows, dtype=np.float64), vocabularies)


def load_dataset_file(
    path: Path,
    schema: Schema,
    missing_token: str = DEFAULT_MISSING_TOKEN,
    header: bool = False,
) -> Dataset:
    """CSV ファイルを読み込み"""
    if not path.exists():
        raise DataError(f"data file not found: {path}")
    return load_dataset(path.read_text(encoding="utf-8"), schema, missing_token, header)


def serialize_dataset(
    dataset: Dataset,
    missing_token: str = DEFAULT_MISSING_TOKEN,
    float_format: Optional[str] = None,
    header: bool = False,
) -> str:
    """データセットを CSV テキストへ（float_format 省略時は repr で完全往復）"""
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    if header:
        writer.writerow(dataset.schema.names)

    kinds = [c.kind for c in dataset.schema.columns]
    for i in range(dataset.n):
        record = []
        for r, kind in enumerate(kinds):
            x = dataset.values[i, r]
            if np.isnan(x):
                record.append(missing_token)
            elif kind is AttributeType.NUMERICAL:
                record.append(repr(float(x)) if float_format is None else float_format.format(x))
            else:
                record.append(dataset.vocabularies[r][int(x)])
        writer.writerow(record)
    return buf.getvalue()


def catalog_values(dataset: Dataset, max_bins: int = DEFAULT_MAX_BINS) -> ValueCatalog:
    """属性ごとの観測ユニーク値を列挙

    数値列は B = min(max_bins, ユニーク数) の等頻度ビンに離散化し、
    ビン平均を代表値とする。空ビンは落とす。
    """
    attributes = []
    for r, col in enumerate(dataset.schema.columns):
        observed = dataset.observed(r)
        if observed.size == 0:
            raise DataError(f"column '{col.name}' has no observed values")

        if col.kind.is_categorical:
            values = np.unique(observed)
            attributes.append(AttributeCatalog(col.kind, values, int(values.size)))
            continue

        distinct = np.unique(observed)
        bins = min(max_bins, int(distinct.size))
        rng = NumericRange(float(distinct[0]), float(distinct[-1]))
        if bins <= 1:
            attributes.append(
                AttributeCatalog(
                    col.kind,
                    np.array([observed.mean()]),
                    int(distinct.size),
                    bin_edges=np.empty(0),
                    observed_range=rng,
                )
            )
            continue

        raw_edges = np.quantile(observed, np.arange(1, bins) / bins)
        ids = np.searchsorted(raw_edges, observed, side="right")
        counts = np.bincount(ids, minlength=bins)
        nonempty = np.flatnonzero(counts)
        means = np.array([observed[ids == b].mean() for b in nonempty])
        edges = raw_edges[nonempty[1:] - 1]
        attributes.append(
            AttributeCatalog(
                col.kind, means, int(distinct.size), bin_edges=edges, observed_range=rng
            )
        )
    return ValueCatalog(tuple(attributes))


def numeric_ranges(dataset: Dataset) -> tuple[Optional[NumericRange], ...]:
    """数値列の観測 (min, max)。数値でない列・観測なしの列は None"""
    ranges: list[Optional[NumericRange]] = []
    for r, col in enumerate(dataset.schema.columns):
        observed = dataset.observed(r)
        if col.kind is not AttributeType.NUMERICAL or observed.size == 0:
            ranges.append(None)
        else:
            ranges.append(NumericRange(float(observed.min()), float(observed.max())))
    return tuple(ranges)


def normalize_numeric(dataset: Dataset) -> tuple[Dataset, tuple[Optional[NumericRange], ...]]:
    """数値セルを (x - min) / (max - min) で [0, 1] へ。定数列は 0"""
    ranges = numeric_ranges(dataset)
    values = dataset.values.copy()
    for r, rng in enumerate(ranges):
        if rng is None:
            continue
        col = values[:, r]
        observed = ~np.isnan(col)
        if rng.span > 0:
            col[observed] = (col[observed] - rng.low) / rng.span
        else:
            col[observed] = 0.0
    return dataset.with_values(values), ranges


def denormalize(value: float, rng: NumericRange) -> float:
    """正規化値を元のスケールへ"""
    return rng.low + value * rng.span


def denormalize_dataset(
    dataset: Dataset, ranges: Sequence[Optional[NumericRange]]
) -> Dataset:
    """正規化済みデータセットの数値列を元のスケールへ戻す"""
    values = dataset.values.copy()
    for r, rng in enumerate(ranges):
        if rng is not None:
            values[:, r] = rng.low + values[:, r] * rng.span
    return dataset.with_values(values)
