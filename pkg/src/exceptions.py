"""アプリケーション固有の例外クラス定義モジュール。

標準の例外の代わりにこれらを使用することで、
エラーハンドリングの一貫性を保ちます。
"""

from typing import Any


class AppError(Exception):
    """アプリケーションの基底例外クラス。"""

    def __init__(self, message: str) -> None:
        """初期化。

        Args:
           message: エラーメッセージ
        """
        super().__init__(message)


class ResourceNotFoundError(AppError):
    """リソースが見つからない場合に発生する例外。

    Args:
        resource_name: リソース名（例: "MDP file", "Manifest"）
        resource_id: リソースのIDやパス（オプション）
    """

    def __init__(self, resource_name: str, resource_id: str | None = None) -> None:
        """初期化。

        Args:
            resource_name: リソース名
            resource_id: リソースID (Optional)
        """
        if resource_id:
            message = f'{resource_name} not found: {resource_id}'
        else:
            message = f'{resource_name} not found'
        super().__init__(message)


class ValidationError(AppError):
    """入力検証エラー。

    例:
        - 確率ベクトルの和が1でない
        - 形状（状態数・行動数・次元）の不一致
    """


class ManifestError(ValidationError):
    """マニフェストや入力ファイルの解析に失敗した場合に発生する例外。"""

    def __init__(self, file_path: str, field: str, message: str) -> None:
        """初期化。

        Args:
            file_path: 問題のあったファイルパス。
            field: 問題のあったフィールド名。
            message: エラー内容。
        """
        super().__init__(f'{file_path}: {field}: {message}')
        self.file_path = file_path
        self.field = field


class LearnerError(AppError):
    """学習アルゴリズムが正常終了しなかった場合の基底例外。

    途中までの記録（イテレーション・ラウンド）を保持します。
    """

    status = 'learner_error'

    def __init__(
        self, message: str, records: list[Any] | None = None, trajectories_used: int = 0
    ) -> None:
        """初期化。

        Args:
            message: エラーメッセージ。
            records: 例外発生までに蓄積された記録。
            trajectories_used: 例外発生までに消費した軌跡数。
        """
        super().__init__(message)
        self.records: list[Any] = list(records or [])
        self.trajectories_used = trajectories_used


class EmptyVersionSpaceError(LearnerError):
    """候補プールがすべてバージョン空間から除外された場合の例外。"""

    status = 'empty_version_space'

    def __init__(
        self,
        message: str,
        records: list[Any] | None = None,
        diagnostics: dict[str, Any] | None = None,
        trajectories_used: int = 0,
    ) -> None:
        """初期化。

        Args:
            message: エラーメッセージ。
            records: 例外発生までの記録。
            diagnostics: 候補数や制約数などの診断情報。
            trajectories_used: 例外発生までに消費した軌跡数。
        """
        super().__init__(message, records, trajectories_used)
        self.diagnostics: dict[str, Any] = dict(diagnostics or {})


class IterationCapExceededError(LearnerError):
    """反復回数の上限に達した場合の例外。"""

    status = 'iteration_cap_exceeded'


class NoCertifiedPartitionError(LearnerError):
    """どの分割でも停止条件が満たされなかった場合の例外。"""

    status = 'no_certified_partition'


class ReportIOError(AppError):
    """レポートやインスタンスファイルの読み書きに失敗した場合の例外。"""

    def __init__(self, file_path: str, message: str) -> None:
        """初期化。

        Args:
            file_path: 読み書きに失敗したファイルパス。
            message: エラー内容。
        """
        super().__init__(f'{file_path}: {message}')
        self.file_path = file_path
