"""JSON ファイル永続化の基底リポジトリクラス。

このモジュールは、すべてのリポジトリクラスの基底となる
BaseRepository クラスを提供します。
"""

import json
from collections.abc import Iterator
from contextlib import contextmanager
from pathlib import Path
from typing import Any

from pydantic import BaseModel
from pydantic import ValidationError as PydanticValidationError

from src.exceptions import ManifestError, ReportIOError, ResourceNotFoundError, ValidationError


@contextmanager
def parsing(path: Path) -> Iterator[None]:
    """文書からモデルを組み立てる間の例外を ManifestError（ファイルと項目付き）に変換する。

    Args:
        path: 解析中のファイルパス。

    Raises:
        ManifestError: 解析・検証に失敗した場合。
    """
    try:
        yield
    except ManifestError:
        raise
    except PydanticValidationError as e:
        first = e.errors()[0]
        field = '.'.join(str(part) for part in first['loc']) or '<root>'
        raise ManifestError(str(path), field, first['msg']) from e
    except ValidationError as e:
        raise ManifestError(str(path), '<model>', str(e)) from e
    except (KeyError, TypeError, ValueError) as e:
        field = str(e.args[0]) if isinstance(e, KeyError) else '<document>'
        raise ManifestError(str(path), field, f'malformed document ({e})') from e


class BaseRepository[ModelType: BaseModel]:
    """JSON ファイルの基底リポジトリクラス。

    Attributes:
        model: 操作対象のモデルクラス。
    """

    def __init__(self, model: type[ModelType]) -> None:
        """モデルでリポジトリを初期化する。

        Args:
            model: 操作対象のモデルクラス。
        """
        self.model = model

    @staticmethod
    def read_json(path: Path) -> Any:  # noqa: ANN401
        """JSON ファイルを読み込む。

        Raises:
            ResourceNotFoundError: ファイルが存在しない場合。
            ManifestError: JSON として読めない場合。
        """
        if not path.is_file():
            raise ResourceNotFoundError('Instance file', str(path))
        try:
            with open(path, encoding='utf-8') as f:
                return json.load(f)
        except json.JSONDecodeError as e:
            raise ManifestError(str(path), f'line {e.lineno}', e.msg) from e

    @staticmethod
    def write_json(path: Path, document: Any) -> Path:  # noqa: ANN401
        """JSON ファイルを書き出す。

        Raises:
            ReportIOError: 書き込みに失敗した場合。
        """
        try:
            path.parent.mkdir(parents=True, exist_ok=True)
            with open(path, 'w', encoding='utf-8', newline='\n') as f:
                json.dump(document, f, ensure_ascii=False, indent=2)
                f.write('\n')
        except OSError as e:
            raise ReportIOError(str(path), f'failed to write ({e.strerror})') from e
        return path

    def from_document(self, document: Any, path: Path) -> ModelType:  # noqa: ANN401, ARG002
        """文書からモデルを組み立てる。"""
        return self.model.model_validate(document)

    def to_document(self, instance: ModelType, path: Path) -> Any:  # noqa: ANN401, ARG002
        """モデルを文書に変換する。"""
        return instance.model_dump(mode='json')

    def load(self, path: Path) -> ModelType:
        """ファイルからモデルを読み込む。

        Args:
            path: ファイルパス。

        Returns:
            ModelType: 検証済みのモデル。

        Raises:
            ResourceNotFoundError: ファイルが存在しない場合。
            ManifestError: 解析・検証に失敗した場合。
        """
        document = self.read_json(path)
        with parsing(path):
            return self.from_document(document, path)

    def save(self, instance: ModelType, path: Path) -> Path:
        """モデルをファイルに保存する。

        Args:
            instance: 保存するモデル。
            path: 保存先。

        Returns:
            Path: 保存したファイルのパス。
        """
        return self.write_json(path, self.to_document(instance, path))
