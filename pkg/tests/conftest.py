"""共通フィクスチャ"""

import numpy as np
import pytest

from imputers.dataset_io import load_dataset, parse_schema
from imputers.metric import DistanceMatrix
from imputers.models import Attribute, AttributeType, Dataset, Schema
from imputers.synthetic import load_presets, make_mixed_dataset

SCHEMA_TEXT = """# 小さな混合データ
color:nominal
size:ordinal:S<M<L
weight:numerical
"""

DATA_TEXT = """red,S,1.0
red,S,1.5
blue,L,9.0
blue,M,8.0
red,?,1.2
?,L,8.5
"""


def line_matrix(points) -> DistanceMatrix:
    """1 次元の点列から距離行列を作る"""
    x = np.asarray(points, dtype=float)
    return DistanceMatrix(np.abs(x[:, None] - x[None, :]))


def numeric_dataset(values) -> Dataset:
    """数値列だけのデータセット"""
    values = np.asarray(values, dtype=float)
    columns = tuple(
        Attribute(f"x{r}", AttributeType.NUMERICAL) for r in range(values.shape[1])
    )
    return Dataset(Schema(columns), values, tuple(() for _ in columns))


@pytest.fixture
def schema():
    return parse_schema(SCHEMA_TEXT)


@pytest.fixture
def small_dataset(schema):
    return load_dataset(DATA_TEXT, schema)


@pytest.fixture(scope="session")
def presets():
    return load_presets()


@pytest.fixture(scope="session")
def mixed(presets):
    """mixed プリセット 200 行（データセット, クラスラベル）"""
    return make_mixed_dataset(presets["mixed"], seed=0)


@pytest.fixture(scope="session")
def mixed_small(presets):
    """mixed プリセット 60 行"""
    return make_mixed_dataset(presets["mixed"], seed=1, n=60)
