"""実験の実行ユースケース（マニフェストのコマンドごとの振り分けとレポートの書き出し）。"""

import time
from pathlib import Path
from typing import Protocol

from src.config import settings
from src.logger import logger
from src.models import RunManifest, RunReport
from src.services.report_service import ReportService


class ManifestUseCase(Protocol):
    """マニフェストを受け取ってレポートを返すユースケース。"""

    def execute(self, manifest: RunManifest, manifest_path: Path) -> RunReport: ...


class RunExperimentUseCase:
    """マニフェストを実行し、常にレポートを書き出すユースケース。"""

    def __init__(
        self, usecases: dict[str, ManifestUseCase], report_service: ReportService
    ) -> None:
        """初期化。

        Args:
            usecases: コマンド種別 (pac / select / generate / diagnose) ごとのユースケース。
            report_service: レポートサービス。
        """
        self.usecases = usecases
        self.report_service = report_service

    @staticmethod
    def output_path(manifest: RunManifest, manifest_path: Path) -> Path:
        """レポートの出力先を決める。

        マニフェストの output はマニフェスト基準の相対パス。省略時は
        ``{default_output_dir}/{マニフェスト名}.jsonl``。
        """
        if manifest.output is not None:
            return manifest_path.parent / manifest.output
        return Path(settings.default_output_dir) / f'{manifest_path.stem}.jsonl'

    def execute(
        self, manifest: RunManifest, manifest_path: Path, output: Path | None = None
    ) -> tuple[RunReport, Path]:
        """マニフェストを実行し、レポートを書き出す。

        学習器の失敗もレポートの状態として返るため、書き出しは常に行われる。

        Args:
            manifest: 検証済みのマニフェスト。
            manifest_path: マニフェストファイルのパス。
            output: 出力先の上書き。

        Returns:
            tuple[RunReport, Path]: レポートと書き出したパス。
        """
        logger.info(f'Running {manifest.command} manifest {manifest_path}')
        started = time.perf_counter()
        report = self.usecases[manifest.command].execute(manifest, manifest_path)
        if settings.report_wall_time:
            summary = {**report.summary, 'wall_time_sec': time.perf_counter() - started}
            report = report.model_copy(update={'summary': summary})
        path = output or self.output_path(manifest, manifest_path)
        self.report_service.write(report, path)
        logger.info(f'{manifest.command} finished with status {report.status}')
        return report, path
