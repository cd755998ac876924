"""受け入れ規模の E2E テスト。

実現可能インスタンス（決定的・確率的）に対する複数シードの PAC 学習とモデル選択、
木の困難インスタンス、ランダムインスタンス上の診断スイートを、本番と同じ組み立てで実行します。
"""

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

import numpy as np
import pytest
import pytest_mock

from src.config import settings
from src.dependencies import get_diagnostics_service, get_pac_service, get_selection_service
from src.exceptions import LearnerError
from src.main import main
from src.models import (
    IterationRecord,
    LearnerConfig,
    PacResult,
    Policy,
    RunManifest,
    SelectionResult,
    WeightMatrix,
)
from src.models.hard_instances import RealizableFixture
from src.services.hard_instance_service import HardInstanceService
from src.services.pac_service import iteration_bound
from src.services.planning_service import PlanningService
from src.services.selection_service import SelectionService
from src.usecases.diagnose import DiagnoseUseCase
from src.usecases.generate_instance import STOCHASTIC_PAC_LEARNER, STOCHASTIC_SELECT_LEARNER

SEEDS = range(20)
REQUIRED_SUCCESSES = 18


@dataclass
class PacOutcomes:
    """シードごとの PAC 学習の結果。失敗したシードも records に残す。"""

    results: list[PacResult] = field(default_factory=list)
    failures: list[LearnerError] = field(default_factory=list)

    def all_records(self) -> list[IterationRecord]:
        return [r for x in self.results for r in x.records] + [
            r for e in self.failures for r in e.records
        ]


def _seeded(config: LearnerConfig, seed: int) -> LearnerConfig:
    return config.model_copy(update={'master_seed': seed})


def _run_pac_seeds(fixture: RealizableFixture, config: LearnerConfig) -> PacOutcomes:
    pac_service = get_pac_service()
    outcomes = PacOutcomes()
    for seed in SEEDS:
        try:
            outcomes.results.append(
                pac_service.run_pac(
                    fixture.target,
                    fixture.ensemble,
                    fixture.features,
                    _seeded(config, seed),
                    fixture.w_star,
                )
            )
        except LearnerError as e:
            outcomes.failures.append(e)
    return outcomes


def _assert_pac_acceptance(
    fixture: RealizableFixture, config: LearnerConfig, outcomes: PacOutcomes
) -> None:
    """成功数・W* の保持・探索回数・体積の単調減少を検証する。失敗したシードは不成功に数える。"""
    planning = PlanningService()
    explored_bound = iteration_bound(2, 2, fixture.target.horizon, config.epsilon)
    threshold = fixture.v_star - config.epsilon
    accepted = [
        r
        for r in outcomes.results
        if planning.evaluate_policy_exact(fixture.target, r.policy) >= threshold
    ]
    assert len(outcomes.results) + len(outcomes.failures) == len(SEEDS)
    assert len(accepted) >= REQUIRED_SUCCESSES
    assert all(r.wstar_retained for r in outcomes.all_records())
    assert all(r.explored_iterations <= explored_bound for r in outcomes.results)
    for result in accepted:
        volumes = [r.volume_estimate for r in result.records if r.volume_estimate is not None]
        assert all(b <= a for a, b in zip(volumes, volumes[1:], strict=False))
        assert min(volumes) < 1.0


def _run_selection_seeds(
    fixture: RealizableFixture, config: LearnerConfig, seeds: range
) -> list[SelectionResult | LearnerError]:
    selection_service = get_selection_service()
    family = HardInstanceService.fixture_family()
    outcomes: list[SelectionResult | LearnerError] = []
    for seed in seeds:
        try:
            outcomes.append(
                selection_service.run_model_selection(
                    fixture.target,
                    fixture.ensemble,
                    family,
                    fixture.v_star,
                    _seeded(config, seed),
                )
            )
        except LearnerError as e:
            outcomes.append(e)
    return outcomes


def _assert_selection_acceptance(
    fixture: RealizableFixture,
    config: LearnerConfig,
    outcomes: list[SelectionResult | LearnerError],
    required: int,
) -> None:
    planning = PlanningService()
    threshold = fixture.v_star - config.epsilon
    results = [x for x in outcomes if isinstance(x, SelectionResult)]
    values = [planning.evaluate_policy_exact(fixture.target, r.policy) for r in results]
    assert sum(v >= threshold for v in values) >= required
    for outcome in outcomes:
        rounds = outcome.rounds if isinstance(outcome, SelectionResult) else outcome.records
        assert len(rounds) <= 4
    for result in results:
        assert [r.stopped for r in result.rounds].index(True) == len(result.rounds) - 1


def _leaf_policy(depth: int, leaf: int) -> Policy:
    """根から葉 leaf へ向かう方策。ステップ h では葉番号の上位から h 番目のビットを選ぶ。"""
    actions = np.zeros((depth + 1, 2 ** (depth + 1) - 1), dtype=np.int64)
    for h in range(1, depth + 1):
        actions[h - 1, :] = (leaf >> (depth - h)) & 1
    return Policy(actions=actions)


def test_実現可能インスタンスのPAC学習は20シード中18以上で成功する(
    realizable: RealizableFixture, fixture_config: LearnerConfig
) -> None:
    # Arrange
    config = fixture_config.model_copy(update={'volume_samples': 10_000})

    # Act
    outcomes = _run_pac_seeds(realizable, config)

    # Assert
    _assert_pac_acceptance(realizable, config, outcomes)


def test_確率的な実現可能インスタンスのPAC学習は20シード中18以上で成功しWstarを保持する(
    hard_instance_service: HardInstanceService,
) -> None:
    # Arrange
    fixture = hard_instance_service.stochastic_fixture()
    config = LearnerConfig.model_validate({**STOCHASTIC_PAC_LEARNER, 'volume_samples': 10_000})

    # Act
    outcomes = _run_pac_seeds(fixture, config)

    # Assert
    _assert_pac_acceptance(fixture, config, outcomes)
    explored = [r for x in outcomes.results for r in x.records if r.explored]
    assert explored
    assert len({round(r.mc_estimate, 6) for r in explored}) > 1


def test_モデル選択は20シード中18以上で成功し停止後の分割を試さない(
    realizable: RealizableFixture, fixture_config: LearnerConfig
) -> None:
    # Act
    outcomes = _run_selection_seeds(realizable, fixture_config, SEEDS)

    # Assert
    _assert_selection_acceptance(realizable, fixture_config, outcomes, REQUIRED_SUCCESSES)


def test_確率的な実現可能インスタンスのモデル選択は10シード中9以上で成功する(
    hard_instance_service: HardInstanceService,
) -> None:
    # Arrange
    fixture = hard_instance_service.stochastic_fixture()
    config = LearnerConfig.model_validate(STOCHASTIC_SELECT_LEARNER)

    # Act
    outcomes = _run_selection_seeds(fixture, config, range(10))

    # Assert
    _assert_selection_acceptance(fixture, config, outcomes, 9)


@pytest.mark.parametrize('leaf', range(16))
def test_葉の分割と単位行列の混合は葉iだけが最適な木になる(
    hard_instance_service: HardInstanceService, leaf: int
) -> None:
    # Arrange
    planning = PlanningService()
    mdp = hard_instance_service.ensemble_service.mix_model(
        hard_instance_service.tree_ensemble(4),
        hard_instance_service.leaf_partition(4, leaf),
        WeightMatrix(entries=np.eye(2)),
    )

    # Act
    table, _ = planning.backward_induction(mdp)
    values = [planning.evaluate_policy_exact(mdp, _leaf_policy(4, j)) for j in range(16)]

    # Assert
    assert planning.optimal_value(mdp, table) == pytest.approx(1.0)
    assert values[leaf] == pytest.approx(1.0)
    assert sum(values) == pytest.approx(1.0)


@pytest.mark.parametrize('leaf', [0, 7, 15])
def test_偏った葉のMDPの最適値は0_7になる(
    hard_instance_service: HardInstanceService, leaf: int
) -> None:
    # Arrange
    planning = PlanningService()
    mdp = hard_instance_service.biased_leaf_mdp(4, leaf, 0.1)

    # Act
    table, _ = planning.backward_induction(mdp)

    # Assert
    assert planning.optimal_value(mdp, table) == pytest.approx(0.7)


def test_入れ子の分割対と経路集約の性質が成り立つ(
    hard_instance_service: HardInstanceService,
) -> None:
    # Act
    family = hard_instance_service.nested_pair(4)
    abstractions = hard_instance_service.path_abstraction_family(4)

    # Assert
    assert SelectionService.check_nested(family)
    assert len(abstractions) == 16
    for leaf, abstraction in enumerate(abstractions):
        assert abstraction.num_classes == 9
        assert hard_instance_service.is_bisimulation(
            hard_instance_service.leaf_reward_mdp(4, leaf), abstraction
        )


@pytest.mark.parametrize(
    ('suite', 'trials', 'expected_checks'),
    [
        ('value_decomposition', 200, 1),
        ('error_decomposition', 200, 1),
        ('simulation_lemma', 100, 5),
    ],
)
def test_診断スイートはすべての試行で成立する(
    tmp_path: Path, suite: str, trials: int, expected_checks: int
) -> None:
    # Arrange
    manifest = RunManifest.model_validate(
        {
            'command': 'diagnose',
            'master_seed': 11,
            'diagnose': {'suites': [suite], 'trials': trials},
        }
    )

    # Act
    report = DiagnoseUseCase(get_diagnostics_service()).execute(manifest, tmp_path / 'd.json')

    # Assert
    assert report.summary['all_passed'] is True
    assert len(report.records) == trials
    assert all(len(row['checks']) == expected_checks for row in report.records)


@pytest.mark.parametrize(
    'manifest_name', ['fixture_pac_manifest.json', 'fixture_select_manifest.json']
)
def test_直列と並列の実行でレポートがバイト単位で一致する(
    realizable_dir: Path, tmp_path: Path, mocker: pytest_mock.MockerFixture, manifest_name: str
) -> None:
    # Arrange
    manifest = realizable_dir / manifest_name
    command = json.loads(manifest.read_text(encoding='utf-8'))['command']
    subcommand: dict[str, Any] = {'pac': 'run-pac', 'select': 'run-select'}
    outputs = []

    # Act
    for workers in (1, 8):
        mocker.patch.object(settings, 'max_workers', workers)
        out = tmp_path / f'{workers}.jsonl'
        main([subcommand[command], '--manifest', str(manifest), '--out', str(out)])
        outputs.append(out.read_bytes())

    # Assert
    assert outputs[0] == outputs[1]
