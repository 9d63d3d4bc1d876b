# HMVI - Evaluators
"""
欠損注入・評価指標・評価グリッドを扱うモジュール
"""

from evaluators.experiment import ExperimentConfig, ExperimentReport, derive_seed, run_experiment
from evaluators.exporter import ExportConfig, Exporter, load_manifest
from evaluators.kprototypes import KPrototypesResult, kprototypes
from evaluators.missingness import MissingMask, inject_missing
from evaluators.scores import ari, mrmse

__all__ = [
    "ExperimentConfig",
    "ExperimentReport",
    "ExportConfig",
    "Exporter",
    "KPrototypesResult",
    "MissingMask",
    "ari",
    "derive_seed",
    "inject_missing",
    "kprototypes",
    "load_manifest",
    "mrmse",
    "run_experiment",
]
