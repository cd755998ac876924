"""ファイル永続化用のリポジトリクラス。

このモジュールは、MDP・アンサンブル・特徴写像・重み・分割族・マニフェストの
JSON ファイルの読み書きをカプセル化するリポジトリクラスを提供します。
"""

from src.repositories.base import BaseRepository
from src.repositories.instance_repository import (
    AbstractionRepository,
    EnsembleRepository,
    FamilyRepository,
    FeatureRepository,
    InstanceRepositories,
    MdpRepository,
    WeightRepository,
)
from src.repositories.manifest_repository import ManifestRepository

__all__ = [
    'AbstractionRepository',
    'BaseRepository',
    'EnsembleRepository',
    'FamilyRepository',
    'FeatureRepository',
    'InstanceRepositories',
    'ManifestRepository',
    'MdpRepository',
    'WeightRepository',
]
