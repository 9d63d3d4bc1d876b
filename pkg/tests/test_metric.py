"""統一非類似度のテスト"""

import math

import numpy as np
import pytest

from imputers.dataset_io import load_dataset, normalize_numeric, parse_schema
from imputers.errors import DataError
from imputers.metric import (
    ZERO_SUPPORT_PSI,
    complete_distance,
    distance_matrix,
    distance_rows,
    fit_model,
    object_distance,
    path_correction,
    psi_reflect,
    update_row,
)
from imputers.models import Attribute, AttributeType, Dataset, Schema
from tests.conftest import numeric_dataset

KINDS = list(AttributeType)


def random_tiny_dataset(rng: np.random.Generator) -> Dataset:
    """n <= 12, d <= 3, K <= 3 の欠損付きデータ"""
    n = int(rng.integers(4, 13))
    d = int(rng.integers(1, 4))
    columns, vocabularies, cells = [], [], []
    for r in range(d):
        kind = KINDS[int(rng.integers(3))]
        K = int(rng.integers(1, 4))
        if kind is AttributeType.NOMINAL:
            columns.append(Attribute(f"a{r}", kind))
            vocabularies.append(("u", "v", "w")[:K])
            cells.append(rng.integers(0, K, n).astype(float))
        elif kind is AttributeType.ORDINAL:
            levels = ("lo", "mid", "hi")[:K]
            columns.append(Attribute(f"a{r}", kind, levels))
            vocabularies.append(levels)
            cells.append(rng.integers(0, K, n).astype(float))
        else:
            columns.append(Attribute(f"a{r}", kind))
            vocabularies.append(())
            cells.append(rng.integers(0, 5, n).astype(float))
    values = np.column_stack(cells)
    missing = rng.random((n, d)) < 0.2
    missing[0, :] = False
    values[missing] = np.nan
    return Dataset(Schema(tuple(columns)), values, tuple(vocabularies))


class Oracle:
    """行を直接数え上げて ψ・w・Ψ・MΨ を求める"""

    def __init__(self, dataset: Dataset, model):
        self.dataset = dataset
        self.model = model
        self.kinds = [c.kind for c in dataset.schema.columns]
        self.x, _ = normalize_numeric(dataset)
        self.codes = [
            [self._position(r, self.x.values[i, r]) for r in range(dataset.d)]
            for i in range(dataset.n)
        ]

    def _position(self, r: int, x: float) -> int:
        if math.isnan(x):
            return -1
        catalog = self.model.catalog[r]
        if self.kinds[r] is AttributeType.NUMERICAL:
            return sum(1 for edge in catalog.bin_edges if edge <= x)
        return [float(v) for v in catalog.values].index(x)

    def K(self, r: int) -> int:
        return self.model.catalog.K(r)

    def psi(self, r: int, s: int, m: int, h: int) -> float:
        if m == h:
            return 0.0
        if r == s:
            if self.kinds[r] is AttributeType.NOMINAL:
                return 1.0
            if self.kinds[r] is AttributeType.ORDINAL:
                return abs(m - h) / (self.K(r) - 1)
            reps = self.model.catalog[r].values
            return min(1.0, abs(reps[m] - reps[h]))

        def rows(o):
            return [i for i, c in enumerate(self.codes) if c[r] == o and c[s] >= 0]

        rows_m, rows_h = rows(m), rows(h)
        if not rows_m or not rows_h:
            return 1.0
        Ks = self.K(s)
        if self.kinds[s] is AttributeType.NUMERICAL:
            mean_m = sum(self.x.values[i, s] for i in rows_m) / len(rows_m)
            mean_h = sum(self.x.values[i, s] for i in rows_h) / len(rows_h)
            return min(1.0, abs(mean_m - mean_h))

        def dist(rs):
            return [sum(1 for i in rs if self.codes[i][s] == v) / len(rs) for v in range(Ks)]

        p, q = dist(rows_m), dist(rows_h)
        if self.kinds[s] is AttributeType.NOMINAL:
            return 0.5 * sum(abs(a - b) for a, b in zip(p, q))
        if Ks < 2:
            return 0.0
        total = 0.0
        for v in range(Ks - 1):
            total += abs(sum(p[: v + 1]) - sum(q[: v + 1]))
        return total / (Ks - 1)

    def weights(self) -> np.ndarray:
        d = self.dataset.d
        w = np.zeros((d, d))
        for r in range(d):
            K = self.K(r)
            if K < 2:
                continue
            pairs = [(q, c) for q in range(K) for c in range(q + 1, K)]
            for s in range(d):
                total = 0.0
                for q, c in pairs:
                    L = 1 if self.kinds[r] is AttributeType.NOMINAL else c - q
                    total += self.psi(r, s, q, c) / L
                w[r, s] = total / len(pairs)
        return w

    def raw_table(self, r: int, w: np.ndarray) -> np.ndarray:
        K = self.K(r)
        table = np.zeros((K, K))
        for m in range(K):
            for h in range(K):
                table[m, h] = sum(self.psi(r, s, m, h) * w[r, s] for s in range(self.dataset.d))
        return table

    def distance(self, i: int, j: int, tables) -> float:
        d = self.dataset.d
        total, md = 0.0, 0
        for r in range(d):
            a, b = self.codes[i][r], self.codes[j][r]
            if a < 0 or b < 0:
                md += 1
                continue
            if self.kinds[r] is AttributeType.NUMERICAL:
                term = abs(self.x.values[i, r] - self.x.values[j, r])
            else:
                term = tables[r][a, b]
            total += term * term
        if md == d:
            return math.sqrt(d)
        return math.sqrt(d / (d - md) * total)


class TestOracleEquivalence:
    """数え上げオラクルとの一致"""

    def test_random_tiny_datasets(self):
        """重み・値ペア表・距離がオラクルと 1e-9 以内で一致すること"""
        rng = np.random.default_rng(2024)
        for _ in range(60):
            dataset = random_tiny_dataset(rng)
            model = fit_model(dataset, max_bins=3)
            oracle = Oracle(dataset, model)

            w = oracle.weights()
            np.testing.assert_allclose(model.weights.values, w, atol=1e-9)

            tables = {}
            for r, col in enumerate(dataset.schema.columns):
                if not col.kind.is_categorical:
                    assert model.pair_tables[r] is None
                    continue
                raw = oracle.raw_table(r, w)
                np.testing.assert_allclose(model.raw_pair_tables[r], raw, atol=1e-9)
                peak = raw.max()
                tables[r] = raw / peak if peak > 0 else np.zeros_like(raw)
                np.testing.assert_allclose(model.pair_tables[r], tables[r], atol=1e-9)

            matrix = distance_matrix(dataset, model)
            for i in range(dataset.n):
                for j in range(i + 1, dataset.n):
                    assert matrix[i, j] == pytest.approx(oracle.distance(i, j, tables), abs=1e-9)


class TestReflection:
    """ψ と重みの手計算例"""

    @pytest.fixture
    def model(self):
        schema = parse_schema("color:nominal\nsize:ordinal:S<M<L\n")
        return fit_model(load_dataset("red,S\nred,S\nred,L\nblue,L\n", schema))

    def test_ordinal_view(self, model):
        """順序属性から見た名義の値ペアは CDF の L1 距離になること"""
        assert psi_reflect(model.stats, 0, 1, 0, 1) == pytest.approx(2 / 3)

    def test_nominal_view(self, model):
        """名義属性から見た値ペアは全変動距離になること"""
        assert psi_reflect(model.stats, 1, 0, 0, 1) == pytest.approx(0.5)

    def test_intrinsic_terms(self, model):
        """自分自身から見た値ペアの違い"""
        assert psi_reflect(model.stats, 0, 0, 0, 1) == 1.0
        assert psi_reflect(model.stats, 1, 1, 0, 1) == 1.0
        assert psi_reflect(model.stats, 1, 1, 1, 1) == 0.0

    def test_weights(self, model):
        """重みが値ペア平均になること"""
        w = model.weights
        assert w[0, 0] == pytest.approx(1.0)
        assert w[0, 1] == pytest.approx(2 / 3)
        assert w[1, 0] == pytest.approx(0.5)
        assert w[1, 1] == pytest.approx(1.0)
        assert w.interdependence(0, 1) == pytest.approx((2 / 3 + 0.5) / 2)

    def test_pair_tables(self, model):
        """値ペア表はスケール前の和を最大値で割ったものになること"""
        assert model.raw_pair_tables[0][0, 1] == pytest.approx(1 + 4 / 9)
        assert model.raw_pair_tables[1][0, 1] == pytest.approx(1.25)
        assert model.pair_tables[0][0, 1] == pytest.approx(1.0)
        assert model.pair_tables[0][0, 0] == 0.0

    def test_unknown_value(self, model):
        """カタログ外の値 ID は拒否されること"""
        with pytest.raises(DataError, match="unknown value id"):
            psi_reflect(model.stats, 0, 1, 0, 5)

    def test_zero_support_fallback(self):
        """共起行のない値ペアは ψ = 1 に倒し、警告を残すこと"""
        schema = parse_schema("color:nominal\nsize:ordinal:S<M<L\n")
        model = fit_model(load_dataset("red,S\nred,M\nblue,?\n", schema))
        assert psi_reflect(model.stats, 0, 1, 0, 1) == ZERO_SUPPORT_PSI
        assert model.stats.fallback_pairs(0, 1) == 1
        assert any("'color'" in w for w in model.warnings)

    def test_path_correction(self):
        """名義は 1、順序・数値は位置の差"""
        assert path_correction(AttributeType.NOMINAL, 0, 2) == 1
        assert path_correction(AttributeType.ORDINAL, 0, 2) == 2
        assert path_correction(AttributeType.NUMERICAL, 1, 3) == 2


class TestObjectDistance:
    """MΨ のテスト"""

    def test_missing_cells_rescaled(self):
        """共通に観測された属性だけで計算し d / (d - md) で補正すること"""
        ds = numeric_dataset([[0.0, 0.0], [1.0, np.nan], [0.5, 0.0]])
        model = fit_model(ds)
        matrix = distance_matrix(ds, model)
        assert matrix[0, 1] == pytest.approx(math.sqrt(2.0))
        assert matrix[0, 2] == pytest.approx(0.5)

    def test_no_shared_attribute(self):
        """共通の観測属性がなければ sqrt(d) になること"""
        ds = numeric_dataset([[0.0, np.nan], [np.nan, 1.0], [1.0, 0.0]])
        matrix = distance_matrix(ds, fit_model(ds))
        assert matrix[0, 1] == pytest.approx(math.sqrt(2.0))

    def test_complete_rows_reduce_to_plain_distance(self, mixed):
        """欠損がなければ MΨ は補正なしの距離と一致すること"""
        dataset, _ = mixed
        model = fit_model(dataset)
        rng = np.random.default_rng(7)
        for _ in range(1000):
            i, j = rng.integers(0, dataset.n, size=2)
            a, b = dataset.values[i], dataset.values[j]
            assert abs(object_distance(a, b, model) - complete_distance(a, b, model)) <= 1e-12

    def test_complete_distance_rejects_missing(self, small_dataset):
        """欠損のある行は complete_distance に渡せないこと"""
        model = fit_model(small_dataset)
        with pytest.raises(DataError):
            complete_distance(small_dataset.values[0], small_dataset.values[4], model)

    def test_matrix_properties(self, small_dataset):
        """対称・対角 0・読み取り専用であること"""
        matrix = distance_matrix(small_dataset, fit_model(small_dataset))
        assert np.array_equal(matrix.values, matrix.values.T)
        assert np.all(np.diag(matrix.values) == 0.0)
        with pytest.raises(ValueError):
            matrix.values[0, 1] = 0.0

    def test_rows_match_matrix(self, small_dataset):
        """distance_rows は行列の該当行と一致すること"""
        model = fit_model(small_dataset)
        matrix = distance_matrix(small_dataset, model)
        rows = distance_rows(small_dataset, model, [4, 5])
        np.testing.assert_allclose(rows[0, [0, 1, 2, 3, 5]], matrix[4, [0, 1, 2, 3, 5]])
        np.testing.assert_allclose(rows[1, [0, 1, 2, 3, 4]], matrix[5, [0, 1, 2, 3, 4]])

    def test_update_row(self, small_dataset):
        """1 行だけの再計算が全体の再計算と一致すること"""
        model = fit_model(small_dataset)
        matrix = distance_matrix(small_dataset, model)
        values = small_dataset.values.copy()
        values[4, 1] = 1.0
        changed = small_dataset.with_values(values)
        updated = update_row(matrix, changed, model, 4)
        np.testing.assert_allclose(updated.values, distance_matrix(changed, model).values)
        with pytest.raises(DataError, match="out of range"):
            update_row(matrix, changed, model, 6)

    def test_encode_unknown_code(self, small_dataset):
        """学習時に見ていないコードは拒否されること"""
        model = fit_model(small_dataset)
        with pytest.raises(DataError, match="not in the catalog"):
            model.encode(np.array([[5.0, 0.0, 1.0]]))
