"""
HMVI - 統合 CLI
補完・欠損注入・評価・モデル確認をまとめて実行

すべての出力ディレクトリに manifest.yaml（コマンド・全パラメータ・シード）を残し、
`rerun` で同じ出力を再生成できる。
"""

import logging
import secrets
import sys
from contextlib import contextmanager
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Optional

import numpy as np
import typer
from rich.console import Console
from rich.logging import RichHandler
from rich.markup import escape
from rich.panel import Panel
from rich.table import Table

from evaluators.experiment import (
    METHOD_ABLATIONS,
    METHODS,
    ExperimentConfig,
    ExperimentReport,
    impute_with,
    method_for,
    run_experiment,
)
from evaluators.exporter import ExportConfig, Exporter, load_manifest, value_labels
from evaluators.missingness import inject_missing
from imputers.dataset_io import (
    DEFAULT_MAX_BINS,
    DEFAULT_MISSING_TOKEN,
    load_dataset_file,
    load_schema,
)
from imputers.errors import DataError, HmviError
from imputers.hmvi_imputer import Ablation, HmviConfig, RefreshPolicy, hmvi_impute
from imputers.metric import fit_model
from imputers.models import Dataset
from imputers.synthetic import attach_labels, load_presets, make_mixed_dataset, schema_text

app = typer.Typer(help="HMVI - 異種属性データの欠損値補完ツール", no_args_is_help=True)
console = Console()
err_console = Console(stderr=True)


@dataclass
class RunConfig:
    """1 回の実行設定（マニフェストにそのまま残す）"""

    command: str
    output: Path
    seed: Optional[int] = None
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        self.output = Path(self.output)

    def exporter(self) -> Exporter:
        return Exporter(
            ExportConfig(
                output_dir=self.output,
                missing_token=self.params.get("missing_token", DEFAULT_MISSING_TOKEN),
                header=bool(self.params.get("header", False)),
                write_timings=bool(self.params.get("timings", False)),
            )
        )

    def write_manifest(self, exporter: Exporter) -> Path:
        return exporter.export_manifest(self.command, self.params, self.seed)


@contextmanager
def diagnostics():
    """パッケージ例外を 1 行の診断と終了コードに変換"""
    try:
        yield
    except HmviError as e:
        err_console.print(f"[red]Error: {escape(str(e))}[/red]", soft_wrap=True)
        raise typer.Exit(e.exit_code) from e


def materialize_seed(seed: Optional[int]) -> int:
    """シード省略時は乱数で決め、表示する"""
    if seed is None:
        seed = secrets.randbits(32)
    console.print(f"[dim]seed: {seed}[/dim]")
    return seed


def _path_param(path: Optional[Path]) -> Optional[str]:
    return str(path.resolve()) if path is not None else None


def _require(path: Optional[Path], flag: str) -> Path:
    if path is None:
        raise typer.BadParameter(f"{flag} is required")
    return path


def _load(params: dict) -> Dataset:
    """入力 CSV とスキーマを検証して読み込み（計算前にパスを確認）"""
    schema_path = Path(params["schema"])
    input_path = Path(params["input"])
    if not schema_path.exists():
        raise DataError(f"schema file not found: {schema_path}")
    if not input_path.exists():
        raise DataError(f"data file not found: {input_path}")
    schema = load_schema(schema_path)
    return load_dataset_file(
        input_path,
        schema,
        missing_token=params.get("missing_token", DEFAULT_MISSING_TOKEN),
        header=bool(params.get("header", False)),
    )


def _split_list(text: str) -> list[str]:
    return [item.strip() for item in text.split(",") if item.strip()]


def _parse_rates(text: str) -> list[float]:
    try:
        return [float(item) for item in _split_list(text)]
    except ValueError:
        raise typer.BadParameter(f"rates must be comma-separated numbers, got '{text}'") from None


def _synthesize(params: dict, seed: int) -> tuple[Dataset, np.ndarray]:
    """プリセットから合成データを生成"""
    available = load_presets()
    if params["preset"] not in available:
        raise DataError(
            f"unknown preset '{params['preset']}'; valid presets: {', '.join(available)}"
        )
    return make_mixed_dataset(available[params["preset"]], seed, params.get("n"))


def print_weights(dataset: Dataset, config: RunConfig) -> None:
    """相互依存重みと値ペア非類似度表を表示"""
    model = fit_model(dataset, max_bins=config.params["max_bins"])
    names = dataset.schema.names

    table = Table(title="相互依存の重み w^{rs}（行 r, 列 s）")
    table.add_column("属性", style="bold")
    for name in names:
        table.add_column(name, justify="right")
    for r, name in enumerate(names):
        table.add_row(name, *(f"{model.weights[r, s]:.4f}" for s in range(dataset.d)))
    console.print(table)

    for r, name in enumerate(names):
        pairs = model.pair_tables[r]
        if pairs is None:
            continue
        labels = value_labels(model, dataset.vocabularies, r)
        pair_table = Table(title=f"値ペア非類似度 Ψ ({name})")
        pair_table.add_column("", style="bold")
        for label in labels:
            pair_table.add_column(label, justify="right")
        for m, label in enumerate(labels):
            pair_table.add_row(label, *(f"{x:.4f}" for x in pairs[m]))
        console.print(pair_table)

    for warning in model.warnings:
        console.print(f"[yellow]Warning: {warning}[/yellow]")

    if config.params.get("dump"):
        exporter = config.exporter()
        paths = exporter.export_model(model, dataset.vocabularies)
        config.write_manifest(exporter)
        console.print(f"[green]✅ モデル出力: {paths['weights'].parent}[/green]")


def format_means_table(report: ExperimentReport) -> None:
    """手法・欠損率ごとの平均を表示"""
    means = report.means_frame()
    table = Table(title=f"評価結果（k={report.k}, 反復 {report.config.repeats} 回）")
    table.add_column("手法", style="bold")
    table.add_column("欠損率", justify="right")
    table.add_column("実行", justify="right")
    table.add_column("失敗", justify="right")
    table.add_column("mRMSE", justify="right")
    table.add_column("ARI", justify="right")
    table.add_column("CVI", justify="right")
    for row in means.itertuples(index=False):
        table.add_row(
            row.method,
            f"{row.rate:.0%}",
            str(row.runs),
            str(row.failures),
            f"{row.mrmse:.4f}",
            f"{row.ari:.4f}",
            f"{row.cvi:.4f}",
        )
    console.print(table)


def run_impute(config: RunConfig) -> None:
    params = config.params
    dataset = _load(params)
    method = params["method"]
    exporter = config.exporter()

    console.print(
        f"[bold]🔧 {method} で補完中（{dataset.n} 行 x {dataset.d} 列, "
        f"欠損 {dataset.missing_cells} セル）...[/bold]"
    )
    clusters_path = None
    warnings: list[str] = []
    if method.startswith("hmvi"):
        result = hmvi_impute(
            dataset,
            HmviConfig(
                k=params["k"],
                seed=config.seed,
                max_iter=params["max_iter"],
                refresh_policy=params["refresh"],
                ablation=Ablation(params["ablation"]),
                knn_k=params["knn_k"],
                n_init=params["n_init"],
                max_bins=params["max_bins"],
            ),
        )
        completed = result.dataset
        clusters_path = exporter.export_clusters(result.clusters)
        exporter.export_imputation_report(result.report, completed)
        warnings = result.report.warnings
    else:
        completed = impute_with(
            method,
            dataset,
            k=params["k"],
            seed=config.seed,
            config=ExperimentConfig(
                methods=(method,), knn_k=params["knn_k"], max_bins=params["max_bins"]
            ),
        )

    complete_path = exporter.export_dataset(completed)
    if params.get("dump_model"):
        dump = Exporter(ExportConfig(output_dir=Path(params["dump_model"])))
        dump.export_model(fit_model(dataset, max_bins=params["max_bins"]), dataset.vocabularies)
    config.write_manifest(exporter)

    lines = [
        "📊 補完完了",
        f"  • 補完セル: {dataset.missing_cells}",
        f"  • 出力: {complete_path}",
    ]
    if clusters_path is not None:
        lines.append(f"  • クラスタ: {clusters_path}")
    lines.append(f"  • 警告: {len(warnings)} 件")
    console.print(
        Panel(
            "\n".join(lines),
            title="サマリ",
            border_style="green" if not warnings else "yellow",
        )
    )


def run_inject(config: RunConfig) -> None:
    params = config.params
    dataset = _load(params)
    corrupted, mask = inject_missing(dataset, params["rate"], config.seed)
    exporter = config.exporter()
    exporter.export_dataset(corrupted, name="corrupted.csv", exact=True)
    mask_path = exporter.export_mask(mask, dataset)
    config.write_manifest(exporter)
    console.print(
        f"[green]✅ {len(mask)} セルを欠損化: {mask_path.parent}[/green]"
    )


def run_evaluate(config: RunConfig) -> None:
    params = config.params
    if params.get("preset"):
        dataset, labels = _synthesize(params, config.seed)
    else:
        if not params.get("labels"):
            raise DataError("--labels is required with --input")
        dataset, labels = _load(params).drop_column(params["labels"])

    experiment = ExperimentConfig.from_sources(
        methods=tuple(params["methods"]),
        rates=tuple(params["rates"]) if params["rates"] else None,
        repeats=params["repeats"],
        base_seed=config.seed,
        k=params["k"],
        knn_k=params["knn_k"],
        refresh_policy=params["refresh"],
        max_bins=params["max_bins"],
    )
    console.print(
        f"[bold]🔍 評価中（{dataset.n} 行 x {dataset.d} 列, "
        f"{len(experiment.methods)} 手法 x {len(experiment.rates)} 欠損率 x "
        f"{experiment.repeats} 回）...[/bold]"
    )
    report = run_experiment(dataset, labels, experiment)
    format_means_table(report)

    exporter = config.exporter()
    paths = exporter.export_experiment(report)
    config.write_manifest(exporter)
    for cell in report.failures:
        console.print(
            f"[red]Error ({cell.method}, rate {cell.rate}, repeat {cell.repeat}): "
            f"{escape(cell.error)}[/red]",
            soft_wrap=True,
        )
    console.print(f"[green]✅ グリッド: {paths['grid']}[/green]")
    console.print(f"[green]✅ 平均: {paths['means']}[/green]")


def run_inspect(config: RunConfig) -> None:
    print_weights(_load(config.params), config)


def run_generate(config: RunConfig) -> None:
    params = config.params
    dataset, labels = _synthesize(params, config.seed)
    labeled = attach_labels(dataset, labels, name=params["label_column"])
    exporter = config.exporter()
    data_path = exporter.export_dataset(labeled, name="data.csv", exact=True)
    schema_path = config.output / "data.schema"
    schema_path.write_text(schema_text(labeled.schema), encoding="utf-8")
    config.write_manifest(exporter)
    console.print(f"[green]✅ 生成完了: {data_path}, {schema_path}[/green]")


RUNNERS: dict[str, Callable[[RunConfig], None]] = {
    "impute": run_impute,
    "inject": run_inject,
    "evaluate": run_evaluate,
    "inspect": run_inspect,
    "generate": run_generate,
}


@app.callback()
def configure(
    verbose: bool = typer.Option(False, "--verbose", "-v", help="詳細ログを表示"),
):
    """ログ出力の設定"""
    logging.basicConfig(
        level=logging.INFO if verbose else logging.WARNING,
        format="%(message)s",
        handlers=[RichHandler(console=err_console, show_path=False)],
        force=True,
    )


@app.command()
def impute(
    input: Optional[Path] = typer.Option(None, "--input", help="入力 CSV"),
    schema: Optional[Path] = typer.Option(None, "--schema", help="スキーマファイル"),
    output: Path = typer.Option(Path("out"), "--output", help="出力ディレクトリ"),
    method: str = typer.Option("hmvi", help=f"補完手法 ({', '.join(METHODS)})"),
    k: int = typer.Option(2, "--k", help="クラスタ数"),
    seed: Optional[int] = typer.Option(None, help="乱数シード（省略時は自動）"),
    ablation: Ablation = typer.Option(Ablation.FULL, help="HMVI のアブレーション"),
    refresh: RefreshPolicy = typer.Option(RefreshPolicy.FULL, help="クラスタ更新方法"),
    knn_k: int = typer.Option(5, "--knn-k", help="KNNMI の近傍数"),
    n_init: int = typer.Option(1, "--n-init", help="k-medoids の初期化回数"),
    max_iter: int = typer.Option(100, "--max-iter", help="k-medoids の最大反復"),
    max_bins: int = typer.Option(DEFAULT_MAX_BINS, "--max-bins", help="数値属性のビン数上限"),
    missing_token: str = typer.Option(DEFAULT_MISSING_TOKEN, help="欠損を表すトークン"),
    header: bool = typer.Option(False, help="CSV の 1 行目をヘッダとして扱う"),
    dump_model: Optional[Path] = typer.Option(None, "--dump-model", help="モデル出力先"),
):
    """
    欠損セルを補完

    complete.csv（HMVI では clusters.csv と report.txt も）を出力
    """
    if method not in METHODS:
        raise typer.BadParameter(
            f"unknown method '{method}'; valid methods: {', '.join(METHODS)}"
        )
    if method == "hmvi":
        method = method_for(ablation)
    elif method.startswith("hmvi"):
        ablation = METHOD_ABLATIONS[method]

    config = RunConfig(
        command="impute",
        output=output,
        seed=materialize_seed(seed),
        params={
            "input": _path_param(_require(input, "--input")),
            "schema": _path_param(_require(schema, "--schema")),
            "method": method,
            "k": k,
            "ablation": ablation.value,
            "refresh": refresh.value,
            "knn_k": knn_k,
            "n_init": n_init,
            "max_iter": max_iter,
            "max_bins": max_bins,
            "missing_token": missing_token,
            "header": header,
            "dump_model": _path_param(dump_model),
        },
    )
    with diagnostics():
        run_impute(config)


@app.command()
def inject(
    input: Optional[Path] = typer.Option(None, "--input", help="完全な入力 CSV"),
    schema: Optional[Path] = typer.Option(None, "--schema", help="スキーマファイル"),
    output: Path = typer.Option(Path("out"), "--output", help="出力ディレクトリ"),
    rate: float = typer.Option(..., help="欠損率 (0, 1)"),
    seed: Optional[int] = typer.Option(None, help="乱数シード（省略時は自動）"),
    missing_token: str = typer.Option(DEFAULT_MISSING_TOKEN, help="欠損を表すトークン"),
    header: bool = typer.Option(False, help="CSV の 1 行目をヘッダとして扱う"),
):
    """
    MCAR 欠損を注入

    corrupted.csv と mask.csv（1 行 1 セル）を出力
    """
    if not 0 < rate < 1:
        raise typer.BadParameter(f"rate {rate} must be strictly between 0 and 1")
    config = RunConfig(
        command="inject",
        output=output,
        seed=materialize_seed(seed),
        params={
            "input": _path_param(_require(input, "--input")),
            "schema": _path_param(_require(schema, "--schema")),
            "rate": rate,
            "missing_token": missing_token,
            "header": header,
        },
    )
    with diagnostics():
        run_inject(config)


@app.command()
def evaluate(
    input: Optional[Path] = typer.Option(None, "--input", help="完全な入力 CSV"),
    schema: Optional[Path] = typer.Option(None, "--schema", help="スキーマファイル"),
    labels: Optional[str] = typer.Option(None, help="クラスラベル列（補完対象から除外）"),
    preset: Optional[str] = typer.Option(None, help="合成データのプリセット名"),
    n: Optional[int] = typer.Option(None, "--n", help="合成データの行数"),
    output: Path = typer.Option(Path("out"), "--output", help="出力ディレクトリ"),
    methods: str = typer.Option("hmvi,mms,knnmi", help="カンマ区切りの手法"),
    ablation: Optional[Ablation] = typer.Option(None, help="hmvi をこのアブレーションに置換"),
    rates: Optional[str] = typer.Option(None, help="カンマ区切りの欠損率"),
    repeats: Optional[int] = typer.Option(None, help="反復回数"),
    k: Optional[int] = typer.Option(None, "--k", help="クラスタ数（省略時は真のクラス数）"),
    seed: Optional[int] = typer.Option(None, help="基準シード（省略時は自動）"),
    refresh: RefreshPolicy = typer.Option(RefreshPolicy.FULL, help="クラスタ更新方法"),
    knn_k: int = typer.Option(5, "--knn-k", help="KNNMI の近傍数"),
    max_bins: int = typer.Option(DEFAULT_MAX_BINS, "--max-bins", help="数値属性のビン数上限"),
    missing_token: str = typer.Option(DEFAULT_MISSING_TOKEN, help="欠損を表すトークン"),
    header: bool = typer.Option(False, help="CSV の 1 行目をヘッダとして扱う"),
    timings: bool = typer.Option(False, help="timings.csv も出力"),
):
    """
    評価グリッドを実行

    grid.csv（全セル）と means.csv（手法・欠損率ごとの平均）を出力
    """
    method_list = _split_list(methods)
    unknown = [m for m in method_list if m not in METHODS]
    if unknown or not method_list:
        raise typer.BadParameter(
            f"unknown method(s) {', '.join(unknown) or '(none)'}; "
            f"valid methods: {', '.join(METHODS)}"
        )
    if ablation is not None:
        method_list = [method_for(ablation) if m == "hmvi" else m for m in method_list]
    if preset is None and (input is None or schema is None):
        raise typer.BadParameter("either --preset or --input with --schema is required")

    config = RunConfig(
        command="evaluate",
        output=output,
        seed=materialize_seed(seed),
        params={
            "input": _path_param(input),
            "schema": _path_param(schema),
            "labels": labels,
            "preset": preset,
            "n": n,
            "methods": method_list,
            "rates": _parse_rates(rates) if rates else None,
            "repeats": repeats,
            "k": k,
            "refresh": refresh.value,
            "knn_k": knn_k,
            "max_bins": max_bins,
            "missing_token": missing_token,
            "header": header,
            "timings": timings,
        },
    )
    with diagnostics():
        run_evaluate(config)


@app.command()
def inspect(
    input: Optional[Path] = typer.Option(None, "--input", help="入力 CSV"),
    schema: Optional[Path] = typer.Option(None, "--schema", help="スキーマファイル"),
    output: Optional[Path] = typer.Option(None, "--output", help="CSV の出力先"),
    max_bins: int = typer.Option(DEFAULT_MAX_BINS, "--max-bins", help="数値属性のビン数上限"),
    missing_token: str = typer.Option(DEFAULT_MISSING_TOKEN, help="欠損を表すトークン"),
    header: bool = typer.Option(False, help="CSV の 1 行目をヘッダとして扱う"),
):
    """
    学習した相互依存重みと値ペア非類似度を表示

    --output 指定時は weights.csv と pair_<列名>.csv も出力
    """
    config = RunConfig(
        command="inspect",
        output=output or Path("."),
        params={
            "input": _path_param(_require(input, "--input")),
            "schema": _path_param(_require(schema, "--schema")),
            "max_bins": max_bins,
            "missing_token": missing_token,
            "header": header,
            "dump": output is not None,
        },
    )
    with diagnostics():
        run_inspect(config)


@app.command()
def generate(
    preset: str = typer.Option("mixed", help="合成データのプリセット名"),
    output: Path = typer.Option(Path("out"), "--output", help="出力ディレクトリ"),
    n: Optional[int] = typer.Option(None, "--n", help="行数（省略時はプリセットの値）"),
    seed: Optional[int] = typer.Option(None, help="乱数シード（省略時は自動）"),
    label_column: str = typer.Option("class", help="クラスラベル列の名前"),
):
    """
    合成データを生成

    data.csv（末尾にクラスラベル列）と data.schema を出力
    """
    config = RunConfig(
        command="generate",
        output=output,
        seed=materialize_seed(seed),
        params={"preset": preset, "n": n, "label_column": label_column},
    )
    with diagnostics():
        run_generate(config)


@app.command()
def presets():
    """
    合成データのプリセット一覧
    """
    with diagnostics():
        available = load_presets()

    table = Table(title="🧪 プリセット")
    table.add_column("名前", style="cyan")
    table.add_column("名義", justify="right")
    table.add_column("順序", justify="right")
    table.add_column("数値", justify="right")
    table.add_column("行数", justify="right")
    table.add_column("クラス", justify="right")
    table.add_column("説明")
    for p in available.values():
        table.add_row(
            p.name, str(p.nominal), str(p.ordinal), str(p.numerical),
            str(p.n), str(p.classes), p.description,
        )
    console.print(table)


@app.command()
def rerun(
    manifest: Path = typer.Argument(..., help="manifest.yaml またはそのディレクトリ"),
    output: Optional[Path] = typer.Option(None, "--output", help="出力先（省略時は同じ場所）"),
):
    """
    マニフェストから実行を再現
    """
    with diagnostics():
        data = load_manifest(manifest)
        command = data["command"]
        if command not in RUNNERS:
            raise DataError(f"manifest names unknown command '{command}'")
        base = manifest if manifest.is_dir() else manifest.parent
        params = dict(data["params"])
        if command == "inspect":
            params["dump"] = True
        config = RunConfig(
            command=command,
            output=output or base,
            seed=data.get("seed"),
            params=params,
        )
        console.print(f"[bold]🔁 {command} を再実行（seed: {config.seed}）[/bold]")
        RUNNERS[command](config)


def _click_base(name: str) -> type[Exception]:
    """typer が実際に投げる click 例外の基底クラス

    typer の版によって同梱の click か外部の click かが変わるため、
    `typer.BadParameter` の継承元から取り出す。
    """
    return next(cls for cls in typer.BadParameter.__mro__ if cls.__name__ == name)


UsageError = _click_base("UsageError")
ClickException = _click_base("ClickException")


def main() -> None:
    """コンソールスクリプトの入口（使い方の誤りは終了コード 1）"""
    try:
        code = app(standalone_mode=False)
    except UsageError as e:
        e.show()
        sys.exit(1)
    except ClickException as e:
        e.show()
        sys.exit(e.exit_code)
    except typer.Abort:
        err_console.print("[red]Aborted[/red]")
        sys.exit(1)
    sys.exit(code or 0)


if __name__ == "__main__":
    main()
