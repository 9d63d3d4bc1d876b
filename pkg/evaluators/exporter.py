"""
エクスポーター

補完・評価の結果をファイルに書き出す。

出力形式:
- 補完済みデータ（CSV、数値は有効数字 6 桁）
- クラスタ割り当て（CSV）
- 補完ログ（YAML、report.txt）
- 欠損マスク（CSV、1 行 1 セル）
- 評価グリッド / 平均（CSV）
- 非類似度モデル（weights.csv, pair_<列名>.csv）
- 実行マニフェスト（YAML）
"""

from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Sequence

import pandas as pd
import yaml

from evaluators.experiment import ExperimentReport
from evaluators.missingness import MissingMask
from imputers.clustering import ClusterModel
from imputers.dataset_io import DEFAULT_MISSING_TOKEN, denormalize, serialize_dataset
from imputers.errors import DataError
from imputers.hmvi_imputer import ImputationReport
from imputers.metric import DissimilarityModel
from imputers.models import Dataset

MANIFEST_NAME = "manifest.yaml"
OUTPUT_FLOAT_FORMAT = "{:.6g}"
REPORT_FLOAT_FORMAT = "%.10g"


@dataclass
class ExportConfig:
    """エクスポート設定"""

    output_dir: Path
    missing_token: str = DEFAULT_MISSING_TOKEN
    header: bool = False
    # 経過時間は実行ごとに変わるため既定では書かない
    write_timings: bool = False


def _dump_yaml(data: dict, path: Path) -> Path:
    with open(path, "w", encoding="utf-8") as f:
        yaml.dump(data, f, allow_unicode=True, default_flow_style=False, sort_keys=False)
    return path


class Exporter:
    """結果ファイルのエクスポーター"""

    def __init__(self, config: ExportConfig):
        """
        Args:
            config: エクスポート設定
        """
        self.config = config
        self.config.output_dir.mkdir(parents=True, exist_ok=True)

    def _path(self, name: str) -> Path:
        return self.config.output_dir / name

    def export_dataset(
        self, dataset: Dataset, name: str = "complete.csv", exact: bool = False
    ) -> Path:
        """データセットを CSV で出力（exact なら数値を完全精度で）"""
        text = serialize_dataset(
            dataset,
            missing_token=self.config.missing_token,
            float_format=None if exact else OUTPUT_FLOAT_FORMAT,
            header=self.config.header,
        )
        path = self._path(name)
        path.write_text(text, encoding="utf-8")
        return path

    def export_clusters(self, clusters: ClusterModel) -> Path:
        """row,cluster,medoid の CSV"""
        frame = pd.DataFrame(
            {
                "row": range(len(clusters.assignment)),
                "cluster": clusters.assignment,
                "medoid": [clusters.medoids[c] for c in clusters.assignment],
            }
        )
        path = self._path("clusters.csv")
        frame.to_csv(path, index=False, lineterminator="\n")
        return path

    def export_report(self, data: dict, name: str = "report.txt") -> Path:
        """補完ログや実行サマリを YAML で出力"""
        return _dump_yaml(data, self._path(name))

    def export_imputation_report(self, report: ImputationReport, dataset: Dataset) -> Path:
        return self.export_report(report.to_dict(dataset))

    def export_mask(self, mask: MissingMask, dataset: Dataset) -> Path:
        """欠損マスク（ヘッダなし、1 行 = row,column）"""
        names = dataset.schema.names
        lines = [f"{i},{names[r]}\n" for i, r in mask.cells]
        path = self._path("mask.csv")
        path.write_text("".join(lines), encoding="utf-8")
        return path

    def export_experiment(self, report: ExperimentReport) -> dict[str, Path]:
        """grid.csv / means.csv（と任意で timings.csv）"""
        paths = {"grid": self._path("grid.csv"), "means": self._path("means.csv")}
        report.grid_frame().to_csv(
            paths["grid"], index=False, float_format=REPORT_FLOAT_FORMAT, lineterminator="\n"
        )
        report.means_frame().to_csv(
            paths["means"], index=False, float_format=REPORT_FLOAT_FORMAT, lineterminator="\n"
        )
        if self.config.write_timings:
            paths["timings"] = self._path("timings.csv")
            report.timings_frame().to_csv(
                paths["timings"], index=False, float_format="%.6f", lineterminator="\n"
            )
        failures = report.failures
        if failures:
            paths["failures"] = self.export_report(
                {
                    "failures": [
                        {
                            "method": cell.method,
                            "rate": cell.rate,
                            "repeat": cell.repeat,
                            "seed": cell.seed,
                            "error": cell.error,
                        }
                        for cell in failures
                    ]
                },
                name="failures.yaml",
            )
        return paths

    def export_model(
        self,
        model: DissimilarityModel,
        vocabularies: Sequence[Sequence[str]],
        subdir: Optional[str] = None,
    ) -> dict[str, Path]:
        """相互依存重みと値ペア非類似度表を CSV で出力

        Args:
            model: 学習済みの非類似度モデル
            vocabularies: 列ごとのカテゴリラベル
            subdir: 出力先のサブディレクトリ（省略時は出力ディレクトリ直下）

        Returns:
            出力ファイルパスの辞書
        """
        target = self.config.output_dir / subdir if subdir else self.config.output_dir
        target.mkdir(parents=True, exist_ok=True)
        names = model.schema.names

        weights = pd.DataFrame(model.weights.values, index=names, columns=names)
        weights.index.name = "attribute"
        paths = {"weights": target / "weights.csv"}
        weights.to_csv(paths["weights"], float_format=REPORT_FLOAT_FORMAT, lineterminator="\n")

        for r, name in enumerate(names):
            if model.pair_tables[r] is None:
                continue
            labels = value_labels(model, vocabularies, r)
            table = pd.DataFrame(model.pair_tables[r], index=labels, columns=labels)
            table.index.name = name
            path = target / f"pair_{name}.csv"
            table.to_csv(path, float_format=REPORT_FLOAT_FORMAT, lineterminator="\n")
            paths[f"pair_{name}"] = path
        return paths

    def export_manifest(self, command: str, params: dict, seed: Optional[int]) -> Path:
        """再実行用マニフェスト"""
        data = {"command": command, "seed": seed, "params": params}
        return _dump_yaml(data, self._path(MANIFEST_NAME))


def value_labels(
    model: DissimilarityModel, vocabularies: Sequence[Sequence[str]], r: int
) -> list[str]:
    """カタログ値の表示名（数値列はビン代表値を元のスケールで）"""
    catalog = model.catalog[r]
    if catalog.kind.is_categorical:
        return [vocabularies[r][int(code)] for code in catalog.values]
    rng = model.ranges[r]
    return [OUTPUT_FLOAT_FORMAT.format(denormalize(float(x), rng)) for x in catalog.values]


def load_manifest(path: Path) -> dict:
    """マニフェストを読み込み（ディレクトリなら manifest.yaml を探す）"""
    if path.is_dir():
        path = path / MANIFEST_NAME
    if not path.exists():
        raise DataError(f"manifest not found: {path}")
    with open(path, encoding="utf-8") as f:
        data = yaml.safe_load(f) or {}
    if "command" not in data or "params" not in data:
        raise DataError(f"manifest {path} lacks 'command' or 'params'")
    return data
