"""グローバルエラーハンドラー。

このモジュールは、CLI 全体のエラーハンドリングと終了コードを統一します。
"""

import json
import sys

from src.exceptions import (
    AppError,
    EmptyVersionSpaceError,
    IterationCapExceededError,
    LearnerError,
    ManifestError,
    NoCertifiedPartitionError,
    ResourceNotFoundError,
    ValidationError,
)
from src.logger import logger

EXIT_OK = 0
EXIT_UNEXPECTED = 1
EXIT_VALIDATION = 2
EXIT_LEARNER = 3

LEARNER_STATUSES = frozenset(
    {
        LearnerError.status,
        EmptyVersionSpaceError.status,
        IterationCapExceededError.status,
        NoCertifiedPartitionError.status,
    }
)


def exit_code_for_status(status: str) -> int:
    """レポートの状態から終了コードを返す（学習器の失敗なら 3）。"""
    return EXIT_LEARNER if status in LEARNER_STATUSES else EXIT_OK


def _write_error(payload: dict[str, str]) -> None:
    sys.stderr.write(json.dumps({'error': payload}, ensure_ascii=False) + '\n')


def handle_error(exc: Exception) -> int:
    """例外をログと標準エラー出力の構造化メッセージに変換し、終了コードを返す。

    Args:
        exc: 捕捉した例外。

    Returns:
        int: 終了コード。
    """
    payload = {'type': type(exc).__name__, 'message': str(exc)}
    if isinstance(exc, ManifestError):
        payload |= {'file': exc.file_path, 'field': exc.field}
    if isinstance(exc, ValidationError | ResourceNotFoundError):
        logger.warning(f'Validation error: {exc}')
        code = EXIT_VALIDATION
    elif isinstance(exc, LearnerError):
        logger.warning(f'Learner error: {exc}')
        code = EXIT_LEARNER
    elif isinstance(exc, AppError):
        logger.error(f'Application error: {exc}')
        code = EXIT_UNEXPECTED
    else:
        logger.error(f'Unexpected error: {exc}', exc_info=True)
        code = EXIT_UNEXPECTED
    _write_error(payload)
    return code
