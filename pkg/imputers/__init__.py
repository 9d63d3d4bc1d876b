# HMVI - Imputers
"""
異種属性データの欠損値を補完するモジュール群
"""

from imputers.baselines import knnmi_impute, mms_impute
from imputers.clustering import ClusterModel, assign_object, cluster, silhouette
from imputers.dataset_io import (
    catalog_values,
    load_dataset,
    load_dataset_file,
    load_schema,
    normalize_numeric,
    parse_schema,
    serialize_dataset,
)
from imputers.errors import DataError, HmviError, InvariantError, SchemaError
from imputers.hmvi_imputer import (
    Ablation,
    HmviConfig,
    HmviResult,
    ImputationReport,
    RefreshPolicy,
    hmvi_impute,
)
from imputers.metric import DissimilarityModel, DistanceMatrix, distance_matrix, fit_model
from imputers.models import AttributeType, CellValue, Dataset, Schema
from imputers.neighbors import knn, natural_neighbor_search, natural_neighbors_within

__all__ = [
    "Ablation",
    "AttributeType",
    "CellValue",
    "ClusterModel",
    "DataError",
    "Dataset",
    "DissimilarityModel",
    "DistanceMatrix",
    "HmviConfig",
    "HmviError",
    "HmviResult",
    "ImputationReport",
    "InvariantError",
    "RefreshPolicy",
    "Schema",
    "SchemaError",
    "assign_object",
    "catalog_values",
    "cluster",
    "distance_matrix",
    "fit_model",
    "hmvi_impute",
    "knn",
    "knnmi_impute",
    "load_dataset",
    "load_dataset_file",
    "load_schema",
    "mms_impute",
    "natural_neighbor_search",
    "natural_neighbors_within",
    "normalize_numeric",
    "parse_schema",
    "serialize_dataset",
    "silhouette",
]
