"""
ベースライン補完

- MMS: 列の平均（数値）/ 最頻値（カテゴリ）で置換
- KNNMI: MΨ で近い完全行 k 個の平均 / 最頻値で置換
"""

import logging
from typing import Optional

import numpy as np

from imputers.errors import DataError
from imputers.hmvi_imputer import central_value
from imputers.metric import DissimilarityModel, distance_rows, fit_model
from imputers.models import Dataset

logger = logging.getLogger(__name__)


def mms_impute(dataset: Dataset) -> Dataset:
    """平均/最頻値置換"""
    values = dataset.values.copy()
    for r, col in enumerate(dataset.schema.columns):
        missing = dataset.mask[:, r]
        if not missing.any():
            continue
        observed = dataset.observed(r)
        if observed.size == 0:
            raise DataError(f"column '{col.name}' has no observed values")
        values[missing, r] = central_value(col.kind, observed).as_float()
    return dataset.with_values(values)


def knnmi_impute(
    dataset: Dataset,
    knn_k: int = 5,
    model: Optional[DissimilarityModel] = None,
) -> Dataset:
    """k 近傍の完全行から補完（完全行が knn_k 未満なら全完全行を使う）"""
    if knn_k < 1:
        raise DataError(f"knn_k={knn_k} must be at least 1")
    incomplete = dataset.incomplete_rows()
    if not incomplete:
        return dataset

    complete = dataset.complete_rows()
    if not complete:
        logger.warning("no complete row available for KNNMI; falling back to MMS")
        return mms_impute(dataset)

    if model is None:
        model = fit_model(dataset)
    distances = distance_rows(dataset, model, incomplete)[:, complete]
    donor_pool = np.asarray(complete, dtype=np.int64)

    values = dataset.values.copy()
    for idx, i in enumerate(incomplete):
        nearest = np.argsort(distances[idx], kind="stable")[:knn_k]
        donors = donor_pool[nearest]
        for r in np.flatnonzero(dataset.mask[i]):
            kind = dataset.schema.kind(int(r))
            values[i, r] = central_value(kind, dataset.values[donors, r]).as_float()
    return dataset.with_values(values)
