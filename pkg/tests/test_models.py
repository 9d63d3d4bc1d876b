"""データモデルと CSV 読み書きのテスト"""

import numpy as np
import pytest

from imputers.dataset_io import (
    catalog_values,
    load_dataset,
    load_schema,
    normalize_numeric,
    parse_schema,
    serialize_dataset,
)
from imputers.errors import DataError, SchemaError
from imputers.models import AttributeType, CellValue, Dataset
from tests.conftest import numeric_dataset


class TestSchema:
    """スキーマ解析のテスト"""

    def test_parse_kinds_and_levels(self, schema):
        """種類と順序レベルが読めること"""
        assert schema.names == ["color", "size", "weight"]
        assert schema.kind(0) is AttributeType.NOMINAL
        assert schema.kind(1) is AttributeType.ORDINAL
        assert schema.columns[1].levels == ("S", "M", "L")
        assert schema.kind(2) is AttributeType.NUMERICAL

    def test_duplicate_column(self):
        """重複列は行番号付きで拒否されること"""
        with pytest.raises(SchemaError, match="line 2"):
            parse_schema("a:nominal\na:numerical\n")

    def test_unknown_kind(self):
        """未知の種類は有効な種類を示して拒否されること"""
        with pytest.raises(SchemaError, match="unknown kind 'text'"):
            parse_schema("a:text\n")

    def test_empty_levels(self):
        """順序属性のレベルが空なら拒否されること"""
        with pytest.raises(SchemaError, match="empty level list"):
            parse_schema("a:ordinal:\n")
        with pytest.raises(SchemaError, match="empty level list"):
            parse_schema("a:ordinal:lo<<hi\n")

    def test_missing_file(self, tmp_path):
        """存在しないスキーマファイルはパスを示すこと"""
        path = tmp_path / "none.schema"
        with pytest.raises(SchemaError, match="none.schema"):
            load_schema(path)


class TestLoadDataset:
    """CSV 読み込みのテスト"""

    def test_typed_cells(self, small_dataset):
        """型付きで読み込まれ、欠損がマスクされること"""
        ds = small_dataset
        assert (ds.n, ds.d) == (6, 3)
        assert ds.vocabularies[0] == ("red", "blue")
        assert ds.values[2, 0] == 1.0
        assert ds.values[3, 1] == 1.0
        assert ds.values[2, 2] == 9.0
        assert ds.mask[4, 1] and ds.mask[5, 0]
        assert ds.missing_cells == 2
        assert ds.incomplete_rows() == [4, 5]
        assert ds.complete_rows() == [0, 1, 2, 3]

    def test_nominal_ids_follow_first_appearance(self):
        """名義 ID が初出順で振られること"""
        schema = parse_schema("c:nominal\n")
        ds = load_dataset("b\na\nb\nc\n", schema)
        assert ds.vocabularies[0] == ("b", "a", "c")
        assert list(ds.values[:, 0]) == [0.0, 1.0, 0.0, 2.0]

    def test_empty_field_is_missing(self, schema):
        """空フィールドも欠損になること"""
        ds = load_dataset("red,,1.0\nblue,S,\n", schema)
        assert ds.mask[0, 1] and ds.mask[1, 2]

    def test_custom_missing_token_and_header(self, schema):
        """欠損トークンとヘッダ行を指定できること"""
        ds = load_dataset("color,size,weight\nNA,S,1\nred,M,2\n", schema, "NA", header=True)
        assert ds.n == 2
        assert ds.mask[0, 0]
        assert ds.vocabularies[0] == ("red",)

    def test_unknown_ordinal_level(self, schema):
        """未知の順序レベルは行と列を示して拒否されること"""
        with pytest.raises(DataError, match="row 2, column 'size'"):
            load_dataset("red,S,1\nred,XL,2\n", schema)

    def test_unparsable_number(self, schema):
        """数値に解釈できないトークンは拒否されること"""
        with pytest.raises(DataError, match="column 'weight'"):
            load_dataset("red,S,heavy\n", schema)

    def test_wrong_field_count(self, schema):
        """列数の不一致は拒否されること"""
        with pytest.raises(DataError, match="expected 3 fields"):
            load_dataset("red,S\n", schema)

    def test_serialize_round_trip(self, schema):
        """serialize → load で完全に往復すること"""
        text = "red,S,0.30000000000000004\nblue,?,1e-300\n?,L,-2.5\n"
        ds = load_dataset(text, schema)
        again = load_dataset(serialize_dataset(ds), schema)
        assert again.same_cells(ds)
        assert serialize_dataset(again) == serialize_dataset(ds)

    def test_serialize_float_format(self, small_dataset):
        """float_format 指定時はその書式で出力されること"""
        text = serialize_dataset(small_dataset, float_format="{:.6g}")
        assert text.splitlines()[0] == "red,S,1"
        assert text.splitlines()[4] == "red,?,1.2"


class TestDataset:
    """Dataset のテスト"""

    def test_read_only(self, small_dataset):
        """セル配列は書き換えられないこと"""
        with pytest.raises(ValueError):
            small_dataset.values[0, 0] = 1.0

    def test_invalid_code(self, schema):
        """語彙外のコードは拒否されること"""
        values = np.array([[3.0, 0.0, 1.0]])
        with pytest.raises(DataError, match="outside its vocabulary"):
            Dataset(schema, values, (("red",), ("S", "M", "L"), ()))

    def test_non_finite_numeric(self, schema):
        """数値列の無限大は拒否されること"""
        values = np.array([[0.0, 0.0, np.inf]])
        with pytest.raises(DataError, match="non-finite"):
            Dataset(schema, values, (("red",), ("S", "M", "L"), ()))

    def test_drop_column(self, small_dataset):
        """列を外してその値をラベルとして返すこと"""
        complete = small_dataset.with_values(np.nan_to_num(small_dataset.values, nan=0.0))
        ds, labels = complete.drop_column("color")
        assert ds.schema.names == ["size", "weight"]
        assert list(labels) == [0, 0, 1, 1, 0, 0]

    def test_drop_column_with_missing_labels(self, small_dataset):
        """欠損を含むラベル列は拒否されること"""
        with pytest.raises(DataError, match="label column 'color'"):
            small_dataset.drop_column("color")

    def test_cell_values(self, small_dataset):
        """タグ付きセル値が取り出せること"""
        assert small_dataset.cell(0, 0) == CellValue.nominal(0)
        assert small_dataset.cell(3, 1) == CellValue.ordinal(1)
        assert small_dataset.cell(4, 1).is_missing
        assert small_dataset.label(2, 0) == "blue"
        with pytest.raises(DataError):
            CellValue.numeric(float("nan"))


class TestCatalog:
    """値カタログのテスト"""

    def test_categorical_catalog(self, small_dataset):
        """カテゴリ列は観測コードの昇順になること"""
        catalog = catalog_values(small_dataset)
        assert list(catalog[0].values) == [0.0, 1.0]
        assert list(catalog[1].values) == [0.0, 1.0, 2.0]
        assert catalog.K(1) == 3

    def test_unobserved_level_is_skipped(self, schema):
        """観測されない順序レベルはカタログに入らないこと"""
        ds = load_dataset("red,S,1\nblue,L,2\n", schema)
        catalog = catalog_values(ds)
        assert list(catalog[1].values) == [0.0, 2.0]
        assert list(catalog[1].index_of(np.array([0.0, 1.0, 2.0, np.nan]))) == [0, -1, 1, -1]

    def test_numeric_bins(self, small_dataset):
        """数値列は等頻度ビンの平均が代表値になること"""
        catalog = catalog_values(small_dataset, max_bins=2)
        weight = catalog[2]
        assert weight.K == 2
        assert weight.values[0] == pytest.approx((1.0 + 1.2 + 1.5) / 3)
        assert weight.values[1] == pytest.approx((8.0 + 8.5 + 9.0) / 3)
        assert list(weight.index_of(np.array([1.0, 4.75, 9.0]))) == [0, 1, 1]
        assert weight.distinct_count == 6

    def test_bins_capped_by_distinct_values(self):
        """ビン数はユニーク値の数を超えないこと"""
        ds = numeric_dataset([[1.0], [1.0], [2.0], [2.0]])
        catalog = catalog_values(ds, max_bins=5)
        assert catalog.K(0) == 2
        assert list(catalog[0].values) == [1.0, 2.0]

    def test_all_missing_column(self, schema):
        """全欠損の列は拒否されること"""
        ds = load_dataset("red,?,1\nblue,?,2\n", schema)
        with pytest.raises(DataError, match="'size' has no observed values"):
            catalog_values(ds)


class TestNormalize:
    """数値正規化のテスト"""

    def test_min_max(self, small_dataset):
        """観測範囲で [0, 1] に写ること"""
        normalized, ranges = normalize_numeric(small_dataset)
        assert ranges[0] is None and ranges[1] is None
        assert ranges[2].low == 1.0 and ranges[2].high == 9.0
        assert normalized.values[0, 2] == 0.0
        assert normalized.values[2, 2] == 1.0
        assert normalized.values[3, 2] == pytest.approx(7.0 / 8.0)
        assert np.array_equal(normalized.values[:, :2], small_dataset.values[:, :2], equal_nan=True)

    def test_constant_column(self):
        """定数列は 0 になること"""
        normalized, ranges = normalize_numeric(numeric_dataset([[5.0], [5.0], [np.nan]]))
        assert ranges[0].span == 0.0
        assert normalized.values[0, 0] == 0.0
        assert np.isnan(normalized.values[2, 0])
