"""PacService と標本数・しきい値の関数の単体テスト。"""

import math

import numpy as np
import pytest

from src.exceptions import EmptyVersionSpaceError, IterationCapExceededError, ValidationError
from src.models import (
    FeatureMap,
    LearnerConfig,
    LinearConstraint,
    TabularMDP,
    Trajectory,
    WeightMatrix,
)
from src.models.hard_instances import RealizableFixture
from src.services.hard_instance_service import HardInstanceService
from src.services.pac_service import (
    PacService,
    acceptance_threshold,
    cut_tolerance,
    default_sample_sizes,
    iteration_bound,
    termination_threshold,
)
from src.services.planning_service import PlanningService
from src.services.simulation_service import SeedStreams, hoeffding_radius


def test_既定の反復上界は定義式に一致する() -> None:
    # Act
    t, n, n_eval = default_sample_sizes(1, 2, 2, 0.5, 0.1)

    # Assert
    assert t == 11
    assert n_eval == math.ceil(32 * 4 / 0.25 * math.log(4 * 11 / 0.1))
    assert n == math.ceil(1800 * 2 * 4 / 0.25 * math.log(8 * 2 * 11 / 0.1))


def test_実現可能インスタンスの反復上界は33になる() -> None:
    # Act & Assert
    assert iteration_bound(2, 2, 3, 0.2) == 33


def test_epsilonが大きすぎると標本数を計算できない() -> None:
    # Act & Assert
    with pytest.raises(ValidationError, match='must be smaller than'):
        default_sample_sizes(1, 1, 1, 3.0, 0.1)


def test_しきい値はthetaに応じて広がる() -> None:
    # Act & Assert
    assert cut_tolerance(0.2, 2, 2, 3, 0.0) == pytest.approx(0.2 / 24)
    assert cut_tolerance(0.2, 2, 2, 3, 0.01) == pytest.approx(0.2 / 24 + 0.03)
    assert termination_threshold(0.2, 2, 2, 3, 0.0) == pytest.approx(0.15)
    assert termination_threshold(0.2, 2, 2, 3, 0.01) == pytest.approx(0.15 + 7 * 0.03)
    assert acceptance_threshold(0.2, 2, 2, 3, 0.01) == pytest.approx(0.2 + 8 * 0.03)


def test_設定値がない場合は定義式の標本数を使う(pac_service: PacService) -> None:
    # Arrange
    config = LearnerConfig(epsilon=0.5, delta=0.1, n=10)

    # Act
    max_iterations, n, n_eval = pac_service.resolve_sizes(config, 1, 2, 2)

    # Assert
    assert max_iterations == 12
    assert n == 10
    assert n_eval == default_sample_sizes(1, 2, 2, 0.5, 0.1)[2]


def test_楽観的選択はプールの中で価値最大のWを選ぶ(
    pac_service: PacService, realizable: RealizableFixture
) -> None:
    # Arrange
    config = LearnerConfig(epsilon=0.2, delta=0.1, grid_step=0.5, oracle_samples=0)
    space = pac_service.version_space_service.initial_version_space(2, 2)

    # Act
    choice = pac_service.optimistic_select(
        space, realizable.ensemble, realizable.features, config, np.random.default_rng(0)
    )

    # Assert
    assert choice.value == pytest.approx(0.9)
    assert choice.pool_size == 9
    np.testing.assert_array_equal(choice.weights.entries, [[1.0, 0.0], [0.0, 1.0]])
    assert choice.policy.action(1, 0) == 0


def test_形状の合わないcandidate_gridはエラーになる(
    pac_service: PacService, realizable: RealizableFixture
) -> None:
    # Arrange
    config = LearnerConfig(
        epsilon=0.2,
        delta=0.1,
        oracle_samples=0,
        candidate_grid=(WeightMatrix(entries=np.array([[1.0], [0.0]])),),
    )
    space = pac_service.version_space_service.initial_version_space(2, 2)

    # Act & Assert
    with pytest.raises(ValidationError, match='candidate_grid: expected 2 x 2'):
        pac_service.optimistic_select(
            space, realizable.ensemble, realizable.features, config, np.random.default_rng(0)
        )


def test_候補が残らないとEmptyVersionSpaceErrorになる(
    pac_service: PacService, realizable: RealizableFixture
) -> None:
    # Arrange
    config = LearnerConfig(epsilon=0.2, delta=0.1, oracle_samples=10)
    impossible = LinearConstraint(z_hat=np.zeros((2, 2)), y_hat=5.0, tolerance=0.1)
    space = pac_service.version_space_service.initial_version_space(2, 2).with_constraint(
        impossible
    )

    # Act & Assert
    with pytest.raises(EmptyVersionSpaceError) as exc_info:
        pac_service.optimistic_select(
            space, realizable.ensemble, realizable.features, config, np.random.default_rng(0)
        )
    assert exc_info.value.diagnostics['constraints'] == 1
    assert exc_info.value.status == 'empty_version_space'


def test_射影測定は軌跡とV_tから推定される(
    pac_service: PacService,
    planning_service: PlanningService,
    realizable: RealizableFixture,
    fixture_config: LearnerConfig,
) -> None:
    # Arrange
    weights = WeightMatrix(entries=np.array([[1.0, 0.0], [0.0, 1.0]]))
    mixed = pac_service.ensemble_service.mix_model(realizable.ensemble, realizable.features, weights)
    values, _ = planning_service.backward_induction(mixed)
    trajectory = Trajectory(
        states=np.array([0, 1, 3, 3]), actions=np.array([0, 0, 0]), rewards=np.array([0, 0, 0.1])
    )

    # Act
    constraint = pac_service.estimate_constraint(
        [trajectory, trajectory], realizable.ensemble, realizable.features, values, fixture_config
    )

    # Assert
    np.testing.assert_allclose(constraint.z_hat, [[1.8, 0.9], [1.0, 0.9]])
    assert constraint.y_hat == pytest.approx(1.9)
    assert constraint.tolerance == pytest.approx(0.2 / 24)
    assert constraint.admits(realizable.w_star)


def test_軌跡がないと射影測定を推定できない(
    pac_service: PacService, realizable: RealizableFixture, fixture_config: LearnerConfig
) -> None:
    # Arrange
    values, _ = PlanningService().backward_induction(realizable.target)

    # Act & Assert
    with pytest.raises(ValidationError, match='at least one trajectory'):
        pac_service.estimate_constraint(
            [], realizable.ensemble, realizable.features, values, fixture_config
        )


def test_実現可能インスタンスでは2反復目で終了する(
    pac_service: PacService, realizable: RealizableFixture, fixture_config: LearnerConfig
) -> None:
    # Act
    result = pac_service.run_pac(
        realizable.target, realizable.ensemble, realizable.features, fixture_config, realizable.w_star
    )

    # Assert
    first, second = result.records
    assert first.explored
    assert first.optimistic_value == pytest.approx(0.9)
    assert first.mc_estimate == pytest.approx(0.1)
    assert first.wstar_retained is True
    assert second.terminated
    assert second.constraint_added is None
    assert second.optimistic_value == pytest.approx(0.6)
    assert second.mc_estimate == pytest.approx(0.5)
    assert result.explored_iterations == 1
    assert result.trajectories_used == 6000
    assert PlanningService().evaluate_policy_exact(realizable.target, result.policy) == pytest.approx(
        realizable.v_star
    )


def test_同じシードの実行は同じ記録を返す(
    pac_service: PacService, realizable: RealizableFixture, fixture_config: LearnerConfig
) -> None:
    # Arrange
    args = (realizable.target, realizable.ensemble, realizable.features, fixture_config)

    # Act
    first = pac_service.run_pac(*args)
    second = pac_service.run_pac(*args)

    # Assert
    assert first.model_dump(mode='json') == second.model_dump(mode='json')


def test_探索後のバージョン空間の体積比は単調に減少する(
    pac_service: PacService, realizable: RealizableFixture, fixture_config: LearnerConfig
) -> None:
    # Arrange
    config = fixture_config.model_copy(update={'volume_samples': 2000})

    # Act
    result = pac_service.run_pac(
        realizable.target, realizable.ensemble, realizable.features, config
    )

    # Assert
    volumes = [r.volume_estimate for r in result.records]
    assert all(v is not None for v in volumes)
    assert volumes[0] < 1.0
    assert volumes[1] <= volumes[0]


def test_d1の特徴写像では候補が尽きてEmptyVersionSpaceErrorになる(
    pac_service: PacService, realizable: RealizableFixture, fixture_config: LearnerConfig
) -> None:
    # Arrange
    config = fixture_config.model_copy(update={'epsilon': 0.1})
    features = FeatureMap.constant(6, 2)

    # Act & Assert
    with pytest.raises(EmptyVersionSpaceError) as exc_info:
        pac_service.run_pac(realizable.target, realizable.ensemble, features, config)
    assert len(exc_info.value.records) == 2
    assert exc_info.value.trajectories_used == 8000


def test_反復上限に達するとIterationCapExceededErrorになる(
    pac_service: PacService, realizable: RealizableFixture, fixture_config: LearnerConfig
) -> None:
    # Arrange
    config = fixture_config.model_copy(update={'max_iterations': 1})

    # Act & Assert
    with pytest.raises(IterationCapExceededError, match='max_iterations=1') as exc_info:
        pac_service.run_pac(realizable.target, realizable.ensemble, realizable.features, config)
    assert len(exc_info.value.records) == 1
    assert exc_info.value.trajectories_used == 4000


def test_targetとアンサンブルの形状が異なるとエラーになる(
    pac_service: PacService,
    realizable: RealizableFixture,
    fixture_config: LearnerConfig,
    chain_mdp: TabularMDP,
) -> None:
    # Act & Assert
    with pytest.raises(ValidationError, match='differs from the ensemble'):
        pac_service.run_pac(chain_mdp, realizable.ensemble, realizable.features, fixture_config)


def test_確率的なインスタンスの測定はWstarでホフディング半径内に収まる(
    pac_service: PacService,
    hard_instance_service: HardInstanceService,
    fixture_config: LearnerConfig,
) -> None:
    # Arrange
    fixture = hard_instance_service.stochastic_fixture()
    mixed = pac_service.ensemble_service.mix_model(
        fixture.ensemble, fixture.features, WeightMatrix.barycenter(2, 2)
    )
    table, policy = pac_service.planning_service.backward_induction(mixed)
    n = 20_000
    trajectories = pac_service.simulation_service.rollout_batch(
        fixture.target, policy, n, SeedStreams(0), 'explore/1'
    )
    horizon = fixture.target.horizon

    # Act
    constraint = pac_service.estimate_constraint(
        trajectories, fixture.ensemble, fixture.features, table, fixture_config
    )

    # Assert
    assert constraint.residual(fixture.w_star) <= 2 * horizon * hoeffding_radius(n, 1e-3)
