"""レポートのエクスポートユースケース。"""

from pathlib import Path

from src.exceptions import ReportIOError
from src.logger import logger
from src.services.export_service import ExportService
from src.services.report_service import ReportService


class ExportReportUseCase:
    """JSON Lines レポートを CSV と Excel に変換するユースケース。"""

    def __init__(self, report_service: ReportService, export_service: ExportService) -> None:
        """初期化。

        Args:
            report_service: レポートサービス。
            export_service: エクスポートサービス。
        """
        self.report_service = report_service
        self.export_service = export_service

    def execute(self, report_path: Path, out_dir: Path | None = None) -> list[Path]:
        """``{stem}_records.csv``、``{stem}_summary.csv``、``{stem}.xlsx`` を書き出す。

        Args:
            report_path: JSON Lines レポートのパス。
            out_dir: 出力先ディレクトリ。省略時はレポートと同じディレクトリ。

        Returns:
            list[Path]: 書き出したファイルのパス。

        Raises:
            ResourceNotFoundError: レポートが存在しない場合。
            ReportIOError: 書き込みに失敗した場合。
        """
        report = self.report_service.load_report(report_path)
        target_dir = out_dir or report_path.parent
        stem = report_path.stem
        outputs = {
            target_dir / f'{stem}_records.csv': self.export_service.create_csv(
                self.export_service.records_frame(report)
            ).getvalue().encode('utf-8'),
            target_dir / f'{stem}_summary.csv': self.export_service.create_csv(
                self.export_service.summary_frame(report)
            ).getvalue().encode('utf-8'),
            target_dir / f'{stem}.xlsx': self.export_service.create_excel(report).getvalue(),
        }
        for path, content in outputs.items():
            try:
                path.parent.mkdir(parents=True, exist_ok=True)
                path.write_bytes(content)
            except OSError as e:
                raise ReportIOError(str(path), f'failed to write export ({e.strerror})') from e
        logger.info(f'Exported {report_path} to {len(outputs)} files in {target_dir}')
        return list(outputs)
