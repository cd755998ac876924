"""実験マニフェストファイルのリポジトリ。"""

from pathlib import Path
from typing import Any

from src.models import RunManifest
from src.repositories.base import BaseRepository, parsing


class ManifestRepository(BaseRepository[RunManifest]):
    """マニフェストファイルのリポジトリ。"""

    def __init__(self) -> None:
        """初期化。"""
        super().__init__(RunManifest)

    def load_with_overrides(self, path: Path, overrides: dict[str, Any]) -> RunManifest:
        """マニフェストを読み込み、値が None でない上書き項目を反映してから検証する。

        Args:
            path: マニフェストファイルのパス。
            overrides: CLI から渡された上書き項目（master_seed, output など）。

        Returns:
            RunManifest: 検証済みのマニフェスト。

        Raises:
            ResourceNotFoundError: ファイルが存在しない場合。
            ManifestError: 解析・検証に失敗した場合。
        """
        document = self.read_json(path)
        with parsing(path):
            if not isinstance(document, dict):
                raise TypeError('a manifest must be a JSON object')
            document.update({k: v for k, v in overrides.items() if v is not None})
            return self.from_document(document, path)

    @staticmethod
    def resolve(manifest_path: Path, relative: str) -> Path:
        """マニフェスト中のパスを、マニフェストのあるディレクトリ基準で解決する。"""
        return manifest_path.parent / relative
