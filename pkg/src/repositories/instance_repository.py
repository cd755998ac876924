"""MDP・アンサンブル・特徴写像・重み・分割族の各インスタンスファイルのリポジトリ。

ファイル形式:
    MDP: num_states, num_actions, horizon, initial_dist, transitions（(s,a) 行優先の
        S·A 行）、rewards（(s,a) ごとの ``{"support": [...], "probs": [...]}``）。
    アンサンブル: ``{"models": [MDP ファイル, ...]}``。
    特徴写像: ``{"kind": ..., "dimension": d, "cells" | "features": ...}``。
    重み: ``{"entries": K×d 行列}``。
    分割族: ``{"partitions": [特徴写像ファイル, ...]}``。

ファイル中のパスは、そのファイルのあるディレクトリからの相対パスとして解決する。
"""

from dataclasses import dataclass
from pathlib import Path
from typing import Any

import numpy as np

from src.exceptions import ValidationError
from src.models import (
    FeatureMap,
    ModelEnsemble,
    PartitionFamily,
    StateAbstraction,
    TabularMDP,
    WeightMatrix,
)
from src.repositories.base import BaseRepository


class MdpRepository(BaseRepository[TabularMDP]):
    """MDP ファイルのリポジトリ。"""

    def __init__(self) -> None:
        """初期化。"""
        super().__init__(TabularMDP)

    def from_document(self, document: Any, path: Path) -> TabularMDP:  # noqa: ANN401, ARG002
        """MDP 文書を読み込み、宣言された形状と一致するかを検証する。"""
        s, a = int(document['num_states']), int(document['num_actions'])
        transitions = np.asarray(document['transitions'], dtype=np.float64)
        if transitions.shape != (s * a, s):
            raise ValidationError(f'transitions: expected {s * a} rows of length {s}')
        rewards = document['rewards']
        return TabularMDP.from_reward_lists(
            np.asarray(document['initial_dist'], dtype=np.float64),
            transitions.reshape(s, a, s),
            int(document['horizon']),
            [entry['support'] for entry in rewards],
            [entry['probs'] for entry in rewards],
            check_bounded_return=bool(document.get('check_bounded_return', True)),
        )

    def to_document(self, instance: TabularMDP, path: Path) -> dict[str, Any]:  # noqa: ARG002
        """MDP を文書に変換する。"""
        supports, probs = instance.reward_lists()
        s, a = instance.num_states, instance.num_actions
        return {
            'num_states': s,
            'num_actions': a,
            'horizon': instance.horizon,
            'initial_dist': instance.initial_dist.tolist(),
            'transitions': instance.transitions.reshape(s * a, s).tolist(),
            'rewards': [
                {'support': support, 'probs': p}
                for support, p in zip(supports, probs, strict=True)
            ],
            'check_bounded_return': instance.check_bounded_return,
        }


class EnsembleRepository(BaseRepository[ModelEnsemble]):
    """アンサンブルファイルのリポジトリ。"""

    def __init__(self, mdp_repository: MdpRepository) -> None:
        """初期化。

        Args:
            mdp_repository: ベースモデルの読み書きに使う MDP リポジトリ。
        """
        super().__init__(ModelEnsemble)
        self.mdp_repository = mdp_repository

    def from_document(self, document: Any, path: Path) -> ModelEnsemble:  # noqa: ANN401
        models = tuple(self.mdp_repository.load(path.parent / name) for name in document['models'])
        return ModelEnsemble(base_models=models)

    @staticmethod
    def member_names(instance: ModelEnsemble, path: Path) -> list[str]:
        """ベースモデルのファイル名（``{stem}_m1.json`` から順）を返す。"""
        return [f'{path.stem}_m{k + 1}.json' for k in range(instance.num_models)]

    def to_document(self, instance: ModelEnsemble, path: Path) -> dict[str, Any]:
        """ベースモデルを path と同じディレクトリに書き出し、その一覧を返す。"""
        names = self.member_names(instance, path)
        for model, name in zip(instance.base_models, names, strict=True):
            self.mdp_repository.save(model, path.parent / name)
        return {'models': names}


class FeatureRepository(BaseRepository[FeatureMap]):
    """特徴写像ファイルのリポジトリ。"""

    def __init__(self) -> None:
        """初期化。"""
        super().__init__(FeatureMap)

    def from_document(self, document: Any, path: Path) -> FeatureMap:  # noqa: ANN401, ARG002
        kind = document['kind']
        if kind == 'partition':
            cells = np.asarray(document['cells'], dtype=np.int64)
            return FeatureMap.partition(cells, document.get('dimension'))
        if kind == 'tabular':
            return FeatureMap.tabular(np.asarray(document['features'], dtype=np.float64))
        if kind == 'constant':
            return FeatureMap.constant(int(document['num_states']), int(document['num_actions']))
        raise ValidationError(f'kind: unknown feature kind {kind!r}')

    def to_document(self, instance: FeatureMap, path: Path) -> dict[str, Any]:  # noqa: ARG002
        document: dict[str, Any] = {'kind': instance.kind, 'dimension': instance.dimension}
        if instance.cells is not None:
            document['cells'] = instance.cells.tolist()
        elif instance.kind == 'tabular':
            document['features'] = instance.features.tolist()
        else:
            document['num_states'] = instance.num_states
            document['num_actions'] = instance.num_actions
        return document


class WeightRepository(BaseRepository[WeightMatrix]):
    """重み行列ファイルのリポジトリ。"""

    def __init__(self) -> None:
        """初期化。"""
        super().__init__(WeightMatrix)


class AbstractionRepository(BaseRepository[StateAbstraction]):
    """状態抽象化ファイルのリポジトリ。"""

    def __init__(self) -> None:
        """初期化。"""
        super().__init__(StateAbstraction)


class FamilyRepository(BaseRepository[PartitionFamily]):
    """分割族ファイルのリポジトリ。"""

    def __init__(self, feature_repository: FeatureRepository) -> None:
        """初期化。

        Args:
            feature_repository: 各分割の読み書きに使う特徴写像リポジトリ。
        """
        super().__init__(PartitionFamily)
        self.feature_repository = feature_repository

    def from_document(self, document: Any, path: Path) -> PartitionFamily:  # noqa: ANN401
        partitions = tuple(
            self.feature_repository.load(path.parent / name) for name in document['partitions']
        )
        return PartitionFamily(partitions=partitions)

    def to_document(self, instance: PartitionFamily, path: Path) -> dict[str, Any]:
        """各分割を ``{stem}_{j}.json`` に書き出し、その一覧を返す。"""
        names = [f'{path.stem}_{j}.json' for j in range(instance.size)]
        for phi, name in zip(instance.partitions, names, strict=True):
            self.feature_repository.save(phi, path.parent / name)
        return {'partitions': names}


@dataclass(frozen=True)
class InstanceRepositories:
    """インスタンスファイルのリポジトリ一式。

    Attributes:
        mdp: MDP リポジトリ。
        ensemble: アンサンブルリポジトリ。
        feature: 特徴写像リポジトリ。
        weight: 重み行列リポジトリ。
        family: 分割族リポジトリ。
        abstraction: 状態抽象化リポジトリ。
    """

    mdp: MdpRepository
    ensemble: EnsembleRepository
    feature: FeatureRepository
    weight: WeightRepository
    family: FamilyRepository
    abstraction: AbstractionRepository

    @classmethod
    def create(cls) -> 'InstanceRepositories':
        """相互に接続したリポジトリ一式を作る。"""
        mdp = MdpRepository()
        feature = FeatureRepository()
        return cls(
            mdp=mdp,
            ensemble=EnsembleRepository(mdp),
            feature=feature,
            weight=WeightRepository(),
            family=FamilyRepository(feature),
            abstraction=AbstractionRepository(),
        )
