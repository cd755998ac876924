"""実行レポートの書き出し・読み込みサービス。

レポートは JSON Lines 形式で、記録を 1 行ずつ書き、最終行に ``type: summary`` の
サマリ（マニフェストのエコーを含む）を置きます。浮動小数点数は有効数字を揃えて
丸めるため、同じ入力からは常にバイト単位で同じファイルが得られます。
"""

import json
from collections.abc import Iterable, Mapping
from pathlib import Path
from typing import Any

import numpy as np
from pydantic import BaseModel

from src.config import settings
from src.exceptions import ReportIOError, ResourceNotFoundError, ValidationError
from src.logger import logger
from src.models import RunReport

SUMMARY_TYPE = 'summary'


class ReportService:
    """JSON Lines レポートのサービス。"""

    def __init__(self, significant_digits: int | None = None) -> None:
        """初期化。

        Args:
            significant_digits: 浮動小数点数の有効桁数。None の場合は設定から取得。

        Raises:
            ValidationError: 有効桁数が 1 未満の場合。
        """
        if significant_digits is None:
            significant_digits = settings.report_significant_digits
        if significant_digits < 1:
            raise ValidationError(
                f'report: significant_digits must be >= 1, got {significant_digits}'
            )
        self.significant_digits = significant_digits

    def to_jsonable(self, value: Any) -> Any:  # noqa: ANN401
        """numpy 配列や pydantic モデルを含む値を、丸め済みの JSON 互換値に変換する。"""
        if isinstance(value, BaseModel):
            value = value.model_dump(mode='json')
        elif isinstance(value, np.ndarray):
            value = value.tolist()
        if isinstance(value, Mapping):
            return {str(k): self.to_jsonable(v) for k, v in value.items()}
        if isinstance(value, list | tuple):
            return [self.to_jsonable(v) for v in value]
        return self._scalar(value)

    def _scalar(self, value: Any) -> Any:  # noqa: ANN401
        if isinstance(value, np.generic):
            value = value.item()
        if isinstance(value, float):
            return float(f'{value:.{self.significant_digits}g}')
        return value

    def dumps(self, payload: Mapping[str, Any]) -> str:
        """1 行分の JSON 文字列を返す。"""
        return json.dumps(self.to_jsonable(payload), ensure_ascii=False)

    def emit_report(
        self, records: Iterable[Mapping[str, Any]], summary: Mapping[str, Any], path: Path
    ) -> Path:
        """記録とサマリを JSON Lines ファイルに書き出す。

        Args:
            records: 記録（各要素が 1 行になる）。
            summary: サマリ。``type`` は ``summary`` で上書きされる。
            path: 出力先。

        Returns:
            Path: 書き出したファイルのパス。

        Raises:
            ReportIOError: 書き込みに失敗した場合。
        """
        lines = [self.dumps(record) for record in records]
        lines.append(self.dumps({**summary, 'type': SUMMARY_TYPE}))
        try:
            path.parent.mkdir(parents=True, exist_ok=True)
            with open(path, 'w', encoding='utf-8', newline='\n') as f:
                f.write('\n'.join(lines) + '\n')
        except OSError as e:
            raise ReportIOError(str(path), f'failed to write report ({e.strerror})') from e
        logger.info(f'Report written: {path} ({len(lines)} lines)')
        return path

    def write(self, report: RunReport, path: Path) -> Path:
        """RunReport を書き出す。マニフェストはサマリ行に含める。"""
        return self.emit_report(
            report.records, {**report.summary, 'manifest': report.manifest}, path
        )

    def load_report(self, path: Path) -> RunReport:
        """JSON Lines のレポートを読み込む。

        Raises:
            ResourceNotFoundError: ファイルが存在しない場合。
            ValidationError: 最終行がサマリでない、または JSON として読めない場合。
        """
        if not path.exists():
            raise ResourceNotFoundError('Report', str(path))
        try:
            with open(path, encoding='utf-8') as f:
                rows = [json.loads(line) for line in f if line.strip()]
        except json.JSONDecodeError as e:
            raise ValidationError(f'{path}: line {e.lineno}: invalid JSON ({e.msg})') from e
        if not rows or rows[-1].get('type') != SUMMARY_TYPE:
            raise ValidationError(f'{path}: the last line must be the summary record')
        summary = dict(rows[-1])
        summary.pop('type')
        manifest = summary.pop('manifest', {})
        return RunReport(manifest=manifest, records=tuple(rows[:-1]), summary=summary)
