"""ユースケース間で共有するレポート組み立て用の関数。"""

from pathlib import Path
from typing import Any

from src.exceptions import EmptyVersionSpaceError, LearnerError, ValidationError
from src.models import RunManifest


def manifest_path_of(manifest_path: Path, relative: str | None, name: str) -> Path:
    """マニフェスト中のパスを解決する。未指定ならエラー。

    Raises:
        ValidationError: 項目が指定されていない場合。
    """
    if relative is None:
        raise ValidationError(f'manifest: {name} is required')
    return manifest_path.parent / relative


def manifest_echo(manifest: RunManifest) -> dict[str, Any]:
    return manifest.model_dump(mode='json')


def failure_summary(error: LearnerError) -> dict[str, Any]:
    """学習器の失敗をサマリにする。途中までの記録は呼び出し側で書き出す。"""
    summary: dict[str, Any] = {
        'status': error.status,
        'message': str(error),
        'iterations': len(error.records),
        'trajectories_used': error.trajectories_used,
    }
    if isinstance(error, EmptyVersionSpaceError):
        summary['diagnostics'] = error.diagnostics
    return summary
