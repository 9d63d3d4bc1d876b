"""k-medoids クラスタリングのテスト"""

from itertools import combinations

import numpy as np
import pytest

from imputers.clustering import assign_object, cluster, silhouette
from imputers.errors import DataError
from imputers.metric import DistanceMatrix
from tests.conftest import line_matrix

TWO_BLOBS = [0.0, 0.1, 0.2, 0.3, 0.4, 10.0, 10.1, 10.2, 10.3, 10.4]


def optimal_cost(matrix: DistanceMatrix, k: int) -> float:
    """全 medoid 組み合わせの最小コスト"""
    return min(
        matrix.values[:, list(medoids)].min(axis=1).sum()
        for medoids in combinations(range(matrix.n), k)
    )


class TestCluster:
    """cluster() のテスト"""

    def test_two_blobs_optimal(self):
        """10 点 2 塊で全探索の最適コストに一致すること"""
        matrix = line_matrix(TWO_BLOBS)
        best = optimal_cost(matrix, 2)
        hits = sum(
            cluster(matrix, 2, seed).cost == pytest.approx(best, abs=1e-9) for seed in range(10)
        )
        assert hits >= 9

    def test_blobs_separated(self):
        """塊ごとに分かれること"""
        model = cluster(line_matrix(TWO_BLOBS), 2, seed=3)
        labels = model.labels
        assert len(set(labels[:5])) == 1
        assert len(set(labels[5:])) == 1
        assert labels[0] != labels[5]

    def test_cost_non_increasing(self):
        """スワップのたびにコストが下がらないこと"""
        rng = np.random.default_rng(5)
        for seed in range(10):
            points = rng.normal(size=30)
            model = cluster(line_matrix(points), 3, seed)
            history = np.array(model.cost_history)
            assert np.all(np.diff(history) <= 1e-12)
            assert model.cost == pytest.approx(history[-1])

    def test_medoids_sorted_and_self_assigned(self):
        """medoid は添字順で、自分のクラスタに属すること"""
        model = cluster(line_matrix(TWO_BLOBS), 2, seed=0)
        assert list(model.medoids) == sorted(model.medoids)
        for c, m in enumerate(model.medoids):
            assert model.cluster_of(m) == c
        assert sorted(model.members(0) + model.members(1)) == list(range(10))

    def test_deterministic(self):
        """同じシードなら同じ結果になること"""
        matrix = line_matrix(np.random.default_rng(1).normal(size=25))
        assert cluster(matrix, 3, 42) == cluster(matrix, 3, 42)

    def test_restarts_never_worse(self):
        """n_init を増やしてもコストが悪化しないこと"""
        matrix = line_matrix(np.random.default_rng(2).normal(size=40))
        single = cluster(matrix, 4, seed=9, n_init=1)
        multi = cluster(matrix, 4, seed=9, n_init=5)
        assert multi.cost <= single.cost + 1e-12

    def test_k_range(self):
        """k は [2, n] に限ること"""
        matrix = line_matrix([0, 1, 2])
        with pytest.raises(DataError, match="within"):
            cluster(matrix, 1, 0)
        with pytest.raises(DataError, match="within"):
            cluster(matrix, 4, 0)

    def test_k_equals_n(self):
        """k = n なら全オブジェクトが medoid でコスト 0"""
        model = cluster(line_matrix([0, 1, 5]), 3, seed=0)
        assert model.medoids == (0, 1, 2)
        assert model.cost == 0.0


class TestAssignObject:
    """再割り当てのテスト"""

    def test_moves_to_nearest_medoid(self):
        """距離が変わったオブジェクトが最寄りの medoid に移ること"""
        matrix = line_matrix(TWO_BLOBS)
        model = cluster(matrix, 2, seed=0)
        i = next(j for j in range(5) if j not in model.medoids)
        _, far = sorted(model.medoids, key=lambda m: matrix.values[i, m])
        values = matrix.values.copy()
        values[i, :] = values[far, :] + 0.05
        values[:, i] = values[i, :]
        values[i, i] = 0.0
        c, updated = assign_object(DistanceMatrix(values), model, i)
        assert model.medoids[c] == far
        assert updated.cluster_of(i) == c
        assert updated.medoids == model.medoids


class TestSilhouette:
    """シルエットのテスト"""

    def test_separated_blobs(self):
        """よく分かれた塊では 1 に近いこと"""
        labels = [0] * 5 + [1] * 5
        assert silhouette(line_matrix(TWO_BLOBS), labels) > 0.9

    def test_all_singletons(self):
        """全クラスタが単独なら 0"""
        assert silhouette(line_matrix([0, 1, 2]), [0, 1, 2]) == 0.0

    def test_single_cluster(self):
        """クラスタが 1 つなら拒否されること"""
        with pytest.raises(DataError):
            silhouette(line_matrix([0, 1, 2]), [0, 0, 0])
