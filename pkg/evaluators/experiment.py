"""
評価実験ランナー

(欠損率, 反復) ごとに MCAR 欠損を入れ、各補完手法の mRMSE と、
補完後データを K-Prototypes でクラスタリングしたときの ARI / CVI を測る。
欠損のない元データ（ORI）のクラスタリングも基準行として記録する。
"""

import hashlib
import logging
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Sequence

import numpy as np
import pandas as pd

from evaluators.kprototypes import kprototypes
from evaluators.missingness import MissingMask, inject_missing
from evaluators.scores import ari, mrmse
from imputers.baselines import knnmi_impute, mms_impute
from imputers.clustering import silhouette
from imputers.dataset_io import DEFAULT_MAX_BINS
from imputers.errors import DataError, HmviError
from imputers.hmvi_imputer import Ablation, HmviConfig, RefreshPolicy, hmvi_impute
from imputers.metric import distance_matrix, fit_model
from imputers.models import Dataset
from imputers.synthetic import load_sources

logger = logging.getLogger(__name__)

# 手法 ID → HMVI のアブレーション（HMVI 以外は None）
METHOD_ABLATIONS: dict[str, Optional[Ablation]] = {
    "hmvi": Ablation.FULL,
    "hmvi-0": Ablation.NO_NATURAL_NEIGHBORS,
    "hmvi-1": Ablation.NO_PRECLUSTERING,
    "mms": None,
    "knnmi": None,
}
METHODS = tuple(METHOD_ABLATIONS)
ORI = "ori"

DEFAULT_METHODS = ("hmvi", "mms", "knnmi")
DEFAULT_RATES = (0.1, 0.2, 0.3, 0.4, 0.5)
DEFAULT_REPEATS = 10
DEFAULT_BASE_SEED = 42

GRID_COLUMNS = ["method", "rate", "repeat", "seed", "status", "mrmse", "ari", "cvi"]
MEANS_COLUMNS = ["method", "rate", "runs", "failures", "mrmse", "ari", "cvi"]


def method_for(ablation: Ablation) -> str:
    """アブレーションに対応する手法 ID"""
    for method, value in METHOD_ABLATIONS.items():
        if value is ablation:
            return method
    raise DataError(f"unknown ablation: {ablation}")


def derive_seed(base_seed: int, rate: float, repeat: int) -> int:
    """(base_seed, rate, repeat) から各セルのシードを導出（32bit 符号なし）"""
    key = f"{base_seed}:{rate:.6f}:{repeat}".encode()
    return int.from_bytes(hashlib.sha256(key).digest()[:4], "big")


@dataclass
class ExperimentConfig:
    """実験設定"""

    methods: tuple[str, ...] = DEFAULT_METHODS
    rates: tuple[float, ...] = DEFAULT_RATES
    repeats: int = DEFAULT_REPEATS
    base_seed: int = DEFAULT_BASE_SEED
    k: Optional[int] = None  # 省略時は真のクラス数
    knn_k: int = 5
    refresh_policy: RefreshPolicy = RefreshPolicy.FULL
    max_bins: int = DEFAULT_MAX_BINS

    def __post_init__(self):
        self.methods = tuple(self.methods)
        self.rates = tuple(float(rate) for rate in self.rates)
        self.refresh_policy = RefreshPolicy(self.refresh_policy)
        unknown = [m for m in self.methods if m not in METHOD_ABLATIONS]
        if unknown:
            raise DataError(
                f"unknown method(s) {', '.join(unknown)}; valid methods: {', '.join(METHODS)}"
            )
        if not self.methods:
            raise DataError("at least one method is required")
        if len(set(self.methods)) != len(self.methods):
            raise DataError("methods must not repeat")
        for rate in self.rates:
            if not 0 < rate < 1:
                raise DataError(f"missing rate {rate} must be strictly between 0 and 1")
        if not self.rates:
            raise DataError("at least one missing rate is required")
        if self.repeats < 1:
            raise DataError(f"repeats={self.repeats} must be at least 1")

    @classmethod
    def from_sources(cls, path: Optional[Path] = None, **overrides) -> "ExperimentConfig":
        """datasets.yaml の experiment セクションを既定値として読み込み"""
        defaults = load_sources(path).get("experiment", {}) or {}
        params = {
            key: defaults[key]
            for key in ("methods", "rates", "repeats", "base_seed", "knn_k", "max_bins")
            if key in defaults
        }
        params.update({key: value for key, value in overrides.items() if value is not None})
        return cls(**params)

    def to_dict(self) -> dict:
        return {
            "methods": list(self.methods),
            "rates": list(self.rates),
            "repeats": self.repeats,
            "base_seed": self.base_seed,
            "k": self.k,
            "knn_k": self.knn_k,
            "refresh_policy": self.refresh_policy.value,
            "max_bins": self.max_bins,
        }


@dataclass(frozen=True)
class GridCell:
    """グリッドの1セル"""

    method: str
    rate: float
    repeat: int
    seed: int
    status: str  # "ok" / "failed"
    mrmse: Optional[float] = None
    ari: Optional[float] = None
    cvi: Optional[float] = None
    seconds: float = 0.0
    error: str = ""

    @property
    def ok(self) -> bool:
        return self.status == "ok"


@dataclass
class ExperimentReport:
    """実験結果（全グリッドセル + 手法・欠損率ごとの平均）"""

    config: ExperimentConfig
    k: int
    cells: list[GridCell] = field(default_factory=list)

    @property
    def failures(self) -> list[GridCell]:
        return [cell for cell in self.cells if not cell.ok]

    def grid_frame(self) -> pd.DataFrame:
        rows = [{column: getattr(cell, column) for column in GRID_COLUMNS} for cell in self.cells]
        return pd.DataFrame(rows, columns=GRID_COLUMNS)

    def means_frame(self) -> pd.DataFrame:
        grid = self.grid_frame()
        grid["failed"] = (grid["status"] != "ok").astype(int)
        means = (
            grid.groupby(["method", "rate"], sort=False)
            .agg(
                runs=("status", "size"),
                failures=("failed", "sum"),
                mrmse=("mrmse", "mean"),
                ari=("ari", "mean"),
                cvi=("cvi", "mean"),
            )
            .reset_index()
        )
        return means[MEANS_COLUMNS]

    def timings_frame(self) -> pd.DataFrame:
        rows = [
            {"method": c.method, "rate": c.rate, "repeat": c.repeat, "seconds": c.seconds}
            for c in self.cells
        ]
        return pd.DataFrame(rows, columns=["method", "rate", "repeat", "seconds"])


def impute_with(
    method: str,
    dataset: Dataset,
    k: int,
    seed: int,
    config: Optional[ExperimentConfig] = None,
) -> Dataset:
    """手法 ID で補完を切り替える"""
    config = config or ExperimentConfig()
    ablation = METHOD_ABLATIONS.get(method)
    if method == "mms":
        return mms_impute(dataset)
    if method == "knnmi":
        return knnmi_impute(dataset, knn_k=config.knn_k)
    if ablation is None:
        raise DataError(f"unknown method '{method}'; valid methods: {', '.join(METHODS)}")
    hmvi_config = HmviConfig(
        k=k,
        seed=seed,
        refresh_policy=config.refresh_policy,
        ablation=ablation,
        knn_k=config.knn_k,
        max_bins=config.max_bins,
    )
    return hmvi_impute(dataset, hmvi_config).dataset


def cluster_scores(
    dataset: Dataset, true_labels: np.ndarray, k: int, seed: int, max_bins: int
) -> tuple[float, float]:
    """K-Prototypes の ARI と、MΨ 上のシルエット（CVI）"""
    labels = kprototypes(dataset, k, seed).labels
    matrix = distance_matrix(dataset, fit_model(dataset, max_bins=max_bins))
    return ari(true_labels, labels), silhouette(matrix, labels)


def _run_cell(
    method: str,
    truth: Dataset,
    corrupted: Dataset,
    mask: MissingMask,
    true_labels: np.ndarray,
    k: int,
    repeat: int,
    config: ExperimentConfig,
) -> GridCell:
    seed = mask.seed
    started = time.perf_counter()
    try:
        imputed = impute_with(method, corrupted, k, seed, config)
        error = mrmse(truth, imputed, mask)
        ari_score, cvi = cluster_scores(imputed, true_labels, k, seed, config.max_bins)
    except (HmviError, ValueError) as e:
        logger.warning("%s at rate %.2f (seed %d) failed: %s", method, mask.rate, seed, e)
        return GridCell(
            method=method,
            rate=mask.rate,
            repeat=repeat,
            seed=seed,
            status="failed",
            seconds=time.perf_counter() - started,
            error=str(e),
        )
    return GridCell(
        method=method,
        rate=mask.rate,
        repeat=repeat,
        seed=seed,
        status="ok",
        mrmse=error,
        ari=ari_score,
        cvi=cvi,
        seconds=time.perf_counter() - started,
    )


def run_experiment(
    dataset: Dataset,
    true_labels: Sequence[int],
    config: Optional[ExperimentConfig] = None,
) -> ExperimentReport:
    """評価グリッドを実行

    Args:
        dataset: 完全なデータセット（クラスラベル列は除外済み）
        true_labels: 真のクラスラベル
        config: 手法・欠損率・反復回数・基準シード

    Returns:
        実験結果。失敗したセルは status="failed" で記録し、実行は継続する
    """
    config = config or ExperimentConfig()
    labels = np.asarray(true_labels)
    if labels.size != dataset.n:
        raise DataError(f"{labels.size} labels for {dataset.n} rows")
    if not dataset.is_complete:
        raise DataError("experiments need a complete dataset")
    k = config.k or int(np.unique(labels).size)
    report = ExperimentReport(config=config, k=k)

    for repeat in range(config.repeats):
        seed = derive_seed(config.base_seed, 0.0, repeat)
        started = time.perf_counter()
        ari_score, cvi = cluster_scores(dataset, labels, k, seed, config.max_bins)
        report.cells.append(
            GridCell(
                method=ORI,
                rate=0.0,
                repeat=repeat,
                seed=seed,
                status="ok",
                mrmse=0.0,
                ari=ari_score,
                cvi=cvi,
                seconds=time.perf_counter() - started,
            )
        )

    for rate in config.rates:
        for repeat in range(config.repeats):
            seed = derive_seed(config.base_seed, rate, repeat)
            try:
                corrupted, mask = inject_missing(dataset, rate, seed)
                if len(mask) == 0:
                    raise DataError(f"rate {rate} removes no cell from {dataset.n}x{dataset.d}")
            except HmviError as e:
                logger.warning("injection at rate %.2f (seed %d) failed: %s", rate, seed, e)
                for method in config.methods:
                    report.cells.append(
                        GridCell(method, rate, repeat, seed, "failed", error=str(e))
                    )
                continue

            for method in config.methods:
                report.cells.append(
                    _run_cell(method, dataset, corrupted, mask, labels, k, repeat, config)
                )
            logger.info("rate %.2f repeat %d done", rate, repeat)

    return report
