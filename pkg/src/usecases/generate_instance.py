"""インスタンス生成ユースケース。

木の困難インスタンスや実現可能インスタンスを、そのまま学習に使えるファイル一式
（MDP、アンサンブル、特徴写像、重み、分割族）として書き出します。
"""

from collections.abc import Callable
from pathlib import Path
from typing import Any

import numpy as np

from src.exceptions import ValidationError
from src.models import (
    FeatureMap,
    GenerateSpec,
    ModelEnsemble,
    PartitionFamily,
    RunManifest,
    RunReport,
    TabularMDP,
    WeightMatrix,
)
from src.models.hard_instances import RealizableFixture
from src.repositories import InstanceRepositories
from src.services.hard_instance_service import HardInstanceService
from src.services.planning_service import PlanningService
from src.services.selection_service import SelectionService
from src.usecases.common import manifest_echo

FileEntry = dict[str, Any]
Bundle = tuple[list[FileEntry], dict[str, Any]]

# 実現可能インスタンスに添えるマニフェストの学習器設定
FIXTURE_LEARNER = {
    'epsilon': 0.2,
    'delta': 0.1,
    'n': 2000,
    'n_eval': 2000,
    'grid_step': 0.05,
    'oracle_samples': 200,
}

# 確率的な実現可能インスタンス用。カットの許容幅が標本誤差の数倍になる標本数
STOCHASTIC_PAC_LEARNER = {
    'epsilon': 0.3,
    'delta': 0.1,
    'n': 30_000,
    'n_eval': 4000,
    'grid_step': 0.05,
    'oracle_samples': 200,
}
STOCHASTIC_SELECT_LEARNER = {**STOCHASTIC_PAC_LEARNER, 'epsilon': 0.4, 'n': 40_000}


class GenerateInstanceUseCase:
    """インスタンス生成ユースケース。"""

    def __init__(
        self,
        hard_instance_service: HardInstanceService,
        planning_service: PlanningService,
        repositories: InstanceRepositories,
    ) -> None:
        """初期化。

        Args:
            hard_instance_service: 困難インスタンスの生成サービス。
            planning_service: 計画サービス（生成した target の最適値の計算）。
            repositories: インスタンスファイルのリポジトリ一式。
        """
        self.hard = hard_instance_service
        self.planning_service = planning_service
        self.repositories = repositories

    def execute(self, manifest: RunManifest, manifest_path: Path) -> RunReport:
        """指定された種類のインスタンスを生成して書き出す。

        出力先は generate.output_dir（マニフェスト基準の相対パス）、省略時はマニフェストと
        同じディレクトリ。

        Returns:
            RunReport: 書き出したファイルごとの記録とサマリ。

        Raises:
            ValidationError: 深さ・葉番号・ε が範囲外の場合。
        """
        spec = manifest.generate
        if spec is None:
            raise ValidationError('manifest: generate is required for instance generation')
        out_dir = manifest_path.parent / (spec.output_dir or '.')
        writers: dict[str, Callable[[GenerateSpec, Path], Bundle]] = {
            'tree': self._tree,
            'leaf_partition': self._leaf_partition,
            'nested_pair': self._nested_pair,
            'biased_leaf': self._biased_leaf,
            'path_abstraction': self._path_abstraction,
            'realizable': self._realizable,
            'realizable_stochastic': self._realizable_stochastic,
        }
        files, extras = writers[spec.family](spec, out_dir)
        summary = {'status': 'generated', 'family': spec.family, 'files': len(files), **extras}
        return RunReport(
            manifest=manifest_echo(manifest),
            records=tuple({'type': 'file', **entry} for entry in files),
            summary=summary,
        )

    def _mdp(self, mdp: TabularMDP, path: Path) -> FileEntry:
        self.repositories.mdp.save(mdp, path)
        return {
            'kind': 'mdp',
            'path': path.name,
            'num_states': mdp.num_states,
            'num_actions': mdp.num_actions,
            'horizon': mdp.horizon,
        }

    def _ensemble(self, ensemble: ModelEnsemble, path: Path) -> list[FileEntry]:
        """ベースモデルとアンサンブルファイルを書き出す。"""
        names = self.repositories.ensemble.member_names(ensemble, path)
        entries = [
            self._mdp(model, path.parent / name)
            for model, name in zip(ensemble.base_models, names, strict=True)
        ]
        self.repositories.ensemble.write_json(path, {'models': names})
        entries.append({'kind': 'ensemble', 'path': path.name, 'num_models': ensemble.num_models})
        return entries

    def _feature(self, phi: FeatureMap, path: Path) -> FileEntry:
        self.repositories.feature.save(phi, path)
        return {'kind': 'feature', 'path': path.name, 'dimension': phi.dimension}

    def _weights(self, weights: WeightMatrix, path: Path) -> FileEntry:
        self.repositories.weight.save(weights, path)
        return {'kind': 'weights', 'path': path.name, 'dimension': weights.dimension}

    def _family(self, family: PartitionFamily, path: Path) -> FileEntry:
        self.repositories.family.save(family, path)
        return {'kind': 'family', 'path': path.name, 'dimensions': family.dimensions}

    def _optimal_value(self, mdp: TabularMDP) -> float:
        table, _ = self.planning_service.backward_induction(mdp)
        return self.planning_service.optimal_value(mdp, table)

    def _tree(self, spec: GenerateSpec, out_dir: Path) -> Bundle:
        ensemble = self.hard.tree_ensemble(spec.depth)
        extras = {'depth': spec.depth, 'num_states': ensemble.shape[0]}
        return self._ensemble(ensemble, out_dir / 'tree.json'), extras

    def _leaf_partition(self, spec: GenerateSpec, out_dir: Path) -> Bundle:
        """木のアンサンブル、葉 i の分割、単位行列 W、葉 i だけが報酬を返す target。"""
        target = self.hard.leaf_reward_mdp(spec.depth, spec.leaf)
        files = [
            *self._ensemble(self.hard.tree_ensemble(spec.depth), out_dir / 'tree.json'),
            self._feature(
                self.hard.leaf_partition(spec.depth, spec.leaf),
                out_dir / f'leaf_partition_{spec.leaf}.json',
            ),
            self._weights(WeightMatrix(entries=np.eye(2)), out_dir / 'w_identity.json'),
            self._mdp(target, out_dir / f'leaf_{spec.leaf}_target.json'),
        ]
        return files, {'depth': spec.depth, 'optimal_value': self._optimal_value(target)}

    def _nested_pair(self, spec: GenerateSpec, out_dir: Path) -> Bundle:
        family = self.hard.nested_pair(spec.depth)
        files = [
            *self._ensemble(self.hard.tree_ensemble(spec.depth), out_dir / 'tree.json'),
            self._family(family, out_dir / 'nested_pair.json'),
        ]
        return files, {'depth': spec.depth, 'nested': SelectionService.check_nested(family)}

    def _biased_leaf(self, spec: GenerateSpec, out_dir: Path) -> Bundle:
        """葉ごとの分割と偏った W で、偏った葉の MDP を実現するファイル一式。"""
        target = self.hard.biased_leaf_mdp(spec.depth, spec.leaf, spec.bias)
        files = [
            *self._ensemble(self.hard.tree_ensemble(spec.depth), out_dir / 'tree.json'),
            self._feature(self.hard.per_leaf_partition(spec.depth), out_dir / 'per_leaf.json'),
            self._weights(
                self.hard.biased_leaf_weights(spec.depth, spec.leaf, spec.bias),
                out_dir / f'w_biased_{spec.leaf}.json',
            ),
            self._mdp(target, out_dir / f'biased_leaf_{spec.leaf}.json'),
        ]
        return files, {'depth': spec.depth, 'optimal_value': self._optimal_value(target)}

    def _path_abstraction(self, spec: GenerateSpec, out_dir: Path) -> Bundle:
        target = self.hard.leaf_reward_mdp(spec.depth, spec.leaf)
        abstraction = self.hard.path_abstraction_family(spec.depth)[spec.leaf]
        path = out_dir / f'path_abstraction_{spec.leaf}.json'
        self.repositories.abstraction.save(abstraction, path)
        files = [
            self._mdp(target, out_dir / f'leaf_{spec.leaf}_target.json'),
            {'kind': 'abstraction', 'path': path.name, 'num_classes': abstraction.num_classes},
        ]
        extras = {
            'depth': spec.depth,
            'num_classes': abstraction.num_classes,
            'bisimulation': self.hard.is_bisimulation(target, abstraction),
        }
        return files, extras

    def _realizable(self, spec: GenerateSpec, out_dir: Path) -> Bundle:  # noqa: ARG002
        """実現可能インスタンス一式と、それを学習するマニフェストを書き出す。"""
        learners = {'pac': {**FIXTURE_LEARNER, 'volume_samples': 10_000}, 'select': FIXTURE_LEARNER}
        return self._fixture_bundle(self.hard.realizable_fixture(), 'fixture', learners, out_dir)

    def _realizable_stochastic(self, spec: GenerateSpec, out_dir: Path) -> Bundle:  # noqa: ARG002
        """遷移と報酬が確率的な実現可能インスタンス一式を、noisy_ 接頭辞で書き出す。"""
        learners = {
            'pac': {**STOCHASTIC_PAC_LEARNER, 'volume_samples': 10_000},
            'select': STOCHASTIC_SELECT_LEARNER,
        }
        return self._fixture_bundle(self.hard.stochastic_fixture(), 'noisy', learners, out_dir)

    def _fixture_bundle(
        self,
        fixture: RealizableFixture,
        prefix: str,
        learners: dict[str, dict[str, Any]],
        out_dir: Path,
    ) -> Bundle:
        names = {key: f'{prefix}_{key}.json' for key in ('target', 'partition', 'w_star', 'family')}
        names['ensemble'] = f'{prefix}.json'
        files = [
            *self._ensemble(fixture.ensemble, out_dir / names['ensemble']),
            self._mdp(fixture.target, out_dir / names['target']),
            self._feature(fixture.features, out_dir / names['partition']),
            self._weights(fixture.w_star, out_dir / names['w_star']),
            self._family(self.hard.fixture_family(), out_dir / names['family']),
        ]
        manifests = {
            f'{prefix}_pac_manifest.json': {
                'command': 'pac',
                'target': names['target'],
                'ensemble': names['ensemble'],
                'features': names['partition'],
                'w_star': names['w_star'],
                'learner': learners['pac'],
            },
            f'{prefix}_select_manifest.json': {
                'command': 'select',
                'target': names['target'],
                'ensemble': names['ensemble'],
                'family': names['family'],
                'v_star': fixture.v_star,
                'learner': learners['select'],
            },
        }
        for name, document in manifests.items():
            self.repositories.mdp.write_json(out_dir / name, document)
            files.append({'kind': 'manifest', 'path': name, 'command': document['command']})
        return files, {'v_star': fixture.v_star}
