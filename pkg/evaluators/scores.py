"""
評価指標

- mRMSE: 型ごとに正規化したセル誤差の二乗平均平方根
    数値 → |x̂ - x| / (max - min)（真値列の範囲、定数列は 0）
    名義 → 不一致なら 1
    順序 → |ランク差| / (K - 1)
- ARI: 偶然補正付き Rand 指数
"""

from typing import Sequence

import numpy as np
from sklearn.metrics import adjusted_rand_score

from evaluators.missingness import MissingMask
from imputers.errors import DataError
from imputers.models import AttributeType, Dataset


def cell_errors(truth: Dataset, imputed: Dataset, mask: MissingMask) -> np.ndarray:
    """マスク対象セルごとの正規化誤差（[0, 1]）"""
    if truth.schema != imputed.schema or truth.values.shape != imputed.values.shape:
        raise DataError("truth and imputed datasets must share schema and shape")
    if not truth.is_complete or not imputed.is_complete:
        raise DataError("mRMSE needs two complete datasets")

    errors = np.empty(len(mask))
    for idx, (i, r) in enumerate(mask.cells):
        col = truth.schema.columns[r]
        x, x_hat = truth.values[i, r], imputed.values[i, r]
        if col.kind is AttributeType.NUMERICAL:
            column = truth.values[:, r]
            span = column.max() - column.min()
            e = abs(x_hat - x) / span if span > 0 else 0.0
        elif col.kind is AttributeType.NOMINAL:
            e = 0.0 if x_hat == x else 1.0
        else:
            K = len(col.levels)
            e = abs(x_hat - x) / (K - 1) if K > 1 else 0.0
        errors[idx] = min(1.0, e)
    return errors


def mrmse(truth: Dataset, imputed: Dataset, mask: MissingMask) -> float:
    """mixed RMSE"""
    if len(mask) == 0:
        raise DataError("mRMSE is undefined for an empty mask")
    errors = cell_errors(truth, imputed, mask)
    return float(np.sqrt(np.mean(errors**2)))


def ari(labels_a: Sequence[int], labels_b: Sequence[int]) -> float:
    """Adjusted Rand Index"""
    a = np.asarray(labels_a)
    b = np.asarray(labels_b)
    if a.shape != b.shape:
        raise DataError(f"partitions differ in length: {a.size} vs {b.size}")
    if a.size < 2:
        raise DataError("ARI needs at least two objects")
    return float(adjusted_rand_score(a, b))
