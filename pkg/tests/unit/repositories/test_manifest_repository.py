"""ManifestRepository の単体テスト。"""

import json
from pathlib import Path
from typing import Any

import pytest

from src.exceptions import ManifestError, ResourceNotFoundError
from src.repositories import ManifestRepository


@pytest.fixture
def repository() -> ManifestRepository:
    return ManifestRepository()


def _write(path: Path, document: Any) -> Path:  # noqa: ANN401
    path.write_text(json.dumps(document), encoding='utf-8')
    return path


@pytest.fixture
def pac_manifest(tmp_path: Path) -> Path:
    return _write(
        tmp_path / 'pac.json',
        {
            'command': 'pac',
            'target': 'target.json',
            'ensemble': 'ensemble.json',
            'features': 'phi.json',
            'learner': {'epsilon': 0.2, 'delta': 0.1},
            'master_seed': 5,
        },
    )


def test_マニフェストを読み込める(repository: ManifestRepository, pac_manifest: Path) -> None:
    # Act
    manifest = repository.load(pac_manifest)

    # Assert
    assert manifest.command == 'pac'
    assert manifest.master_seed == 5
    assert manifest.learner_config().master_seed == 5


def test_Noneでない上書き項目だけが反映される(
    repository: ManifestRepository, pac_manifest: Path
) -> None:
    # Act
    manifest = repository.load_with_overrides(
        pac_manifest, {'master_seed': 9, 'output': None}
    )

    # Assert
    assert manifest.master_seed == 9
    assert manifest.output is None


def test_マニフェスト中のパスはマニフェストのディレクトリ基準で解決される(
    pac_manifest: Path,
) -> None:
    # Act
    resolved = ManifestRepository.resolve(pac_manifest, 'instances/target.json')

    # Assert
    assert resolved == pac_manifest.parent / 'instances' / 'target.json'


def test_存在しないマニフェストはResourceNotFoundErrorになる(
    repository: ManifestRepository, tmp_path: Path
) -> None:
    # Act & Assert
    with pytest.raises(ResourceNotFoundError):
        repository.load_with_overrides(tmp_path / 'missing.json', {})


def test_オブジェクトでないマニフェストはManifestErrorになる(
    repository: ManifestRepository, tmp_path: Path
) -> None:
    # Arrange
    path = _write(tmp_path / 'list.json', ['pac'])

    # Act & Assert
    with pytest.raises(ManifestError, match='must be a JSON object'):
        repository.load_with_overrides(path, {})


def test_未知のコマンドはフィールド名付きのManifestErrorになる(
    repository: ManifestRepository, tmp_path: Path
) -> None:
    # Arrange
    path = _write(tmp_path / 'bad.json', {'command': 'train'})

    # Act & Assert
    with pytest.raises(ManifestError) as exc_info:
        repository.load(path)
    assert exc_info.value.field == 'command'


def test_学習器設定の範囲外の値はManifestErrorになる(
    repository: ManifestRepository, pac_manifest: Path
) -> None:
    # Arrange
    document = json.loads(pac_manifest.read_text(encoding='utf-8'))
    document['learner']['delta'] = 1.5
    _write(pac_manifest, document)

    # Act & Assert
    with pytest.raises(ManifestError) as exc_info:
        repository.load(pac_manifest)
    assert exc_info.value.field == 'learner.delta'


def test_コマンドの必須項目が欠けるとManifestErrorになる(
    repository: ManifestRepository, tmp_path: Path
) -> None:
    # Arrange
    path = _write(tmp_path / 'select.json', {'command': 'select', 'target': 't.json'})

    # Act & Assert
    with pytest.raises(ManifestError, match="command 'select' requires"):
        repository.load(path)
