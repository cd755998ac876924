"""ロギング設定モジュール。

ファイルには JSON Lines 形式で、実行中のマニフェストの情報（コマンド・マニフェスト・
シード）と、``extra={'fields': {...}}`` で渡された反復ごとの数値を構造化して記録する。
"""

import json
import logging
import logging.handlers
import sys
from collections.abc import Iterator
from contextlib import contextmanager
from contextvars import ContextVar
from datetime import datetime
from pathlib import Path
from typing import Any

from src.config import settings

# アプリケーション用ロガー
logger = logging.getLogger('ensemble_pac')

# 実行中のマニフェストの情報
_run_context: ContextVar[dict[str, Any] | None] = ContextVar('run_context', default=None)


@contextmanager
def run_context(**fields: str | int) -> Iterator[None]:
    """ブロック内のログレコードに実行情報を付与する。

    Args:
        **fields: command, manifest, master_seed など。
    """
    token = _run_context.set(dict(fields))
    try:
        yield
    finally:
        _run_context.reset(token)


class JSONFormatter(logging.Formatter):
    """JSON Lines 形式のフォーマッタ。"""

    def format(self, record: logging.LogRecord) -> str:
        """ログレコードをJSON形式の文字列に変換する。"""
        # タイムゾーン情報を付与してISOフォーマットに変換
        dt = datetime.fromtimestamp(record.created).astimezone()

        data: dict[str, Any] = {
            'timestamp': dt.isoformat(),
            'level': record.levelname,
            'logger': record.name,
            'message': record.getMessage(),
            'location': {
                'file': record.filename,
                'line': record.lineno,
                'func': record.funcName,
            },
        }

        run = _run_context.get()
        if run:
            data['run'] = run
        fields = getattr(record, 'fields', None)
        if isinstance(fields, dict):
            data['fields'] = fields
        if record.exc_info:
            data['exc_info'] = self.formatException(record.exc_info)

        return json.dumps(data, ensure_ascii=False, default=str)


def _setup_file_handler(log_file: Path) -> logging.Handler:
    """日次ローテーションのファイルハンドラを作成する。"""
    handler = logging.handlers.TimedRotatingFileHandler(
        filename=log_file,
        when='midnight',
        interval=1,
        backupCount=settings.log_backup_days,
        encoding='utf-8',
    )
    handler.setFormatter(JSONFormatter())
    return handler


def _setup_console_handler() -> logging.Handler:
    """コンソールハンドラを作成する。

    標準出力はレポートのパスを返すために使うので、標準エラー出力に書く。
    """
    handler = logging.StreamHandler(sys.stderr)
    handler.setFormatter(logging.Formatter('%(asctime)s %(levelname)s %(name)s: %(message)s'))
    return handler


def init_logger() -> None:
    """ルートロガーを初期化する。

    ログレベルは環境変数 ``ENSEMBLE_PAC_LOG_LEVEL`` から読み、
    ファイル（JSONL）とコンソールの 2 つのハンドラを登録する。
    """
    log_dir = Path(settings.log_dir)
    log_dir.mkdir(parents=True, exist_ok=True)

    root_logger = logging.getLogger()
    root_logger.setLevel(settings.log_level.upper())

    # 既存のハンドラをクリア（二重登録防止）
    root_logger.handlers.clear()

    root_logger.addHandler(_setup_file_handler(log_dir / settings.log_file_name))
    root_logger.addHandler(_setup_console_handler())
