"""SimulationService の単体テスト。"""

import math

import numpy as np
import pytest

from src.exceptions import ValidationError
from src.models import Policy, TabularMDP
from src.services.hard_instance_service import HardInstanceService
from src.services.simulation_service import SeedStreams, SimulationService, hoeffding_radius


@pytest.fixture
def biased_leaf(hard_instance_service: HardInstanceService) -> TabularMDP:
    """深さ 2 の木で、葉 0 が Bernoulli(0.7)、他の葉が Bernoulli(0.5) の MDP。"""
    return hard_instance_service.biased_leaf_mdp(2, 0, 0.1)


@pytest.fixture
def leftmost() -> Policy:
    """常に行動 0（左の子）を選ぶ方策。"""
    return Policy(actions=np.zeros((3, 7), dtype=np.int64))


def test_同じラベルと番号のストリームは同じ乱数列を返す() -> None:
    # Arrange
    streams = SeedStreams(7)

    # Act
    first = streams.generator('explore/1', 3).random(5)
    second = streams.generator('explore/1', 3).random(5)

    # Assert
    np.testing.assert_array_equal(first, second)


@pytest.mark.parametrize(
    ('label', 'index', 'seed'),
    [('explore/2', 3, 7), ('explore/1', 4, 7), ('explore/1', 3, 8)],
)
def test_ラベル番号親シードのいずれかが違えば乱数列も異なる(label: str, index: int, seed: int) -> None:
    # Arrange
    reference = SeedStreams(7).generator('explore/1', 3).random(5)

    # Act
    other = SeedStreams(seed).generator(label, index).random(5)

    # Assert
    assert not np.array_equal(reference, other)


def test_決定的なMDPのロールアウトは一意に定まる(chain_mdp: TabularMDP) -> None:
    # Arrange
    policy = Policy(actions=np.array([[1, 0], [0, 0]]))

    # Act
    trajectory = SimulationService.rollout(chain_mdp, policy, np.random.default_rng(0))

    # Assert
    assert trajectory.states.tolist() == [0, 1, 1]
    assert trajectory.actions.tolist() == [1, 0]
    np.testing.assert_allclose(trajectory.rewards, [0.0, 0.4])


def test_バッチ実行の結果は並列度に依存しない(biased_leaf: TabularMDP, leftmost: Policy) -> None:
    # Arrange
    streams = SeedStreams(11)

    # Act
    serial = SimulationService(max_workers=1).rollout_batch(biased_leaf, leftmost, 64, streams, 'eval/1')
    parallel = SimulationService(max_workers=4).rollout_batch(
        biased_leaf, leftmost, 64, streams, 'eval/1'
    )

    # Assert
    assert [t.rewards.tolist() for t in serial] == [t.rewards.tolist() for t in parallel]
    assert [t.states.tolist() for t in serial] == [t.states.tolist() for t in parallel]


def test_モンテカルロ推定はホフディング半径内に収まる(
    simulation_service: SimulationService, biased_leaf: TabularMDP, leftmost: Policy
) -> None:
    # Act
    value = simulation_service.monte_carlo_value(
        biased_leaf, leftmost, 2000, SeedStreams(0), 'eval/1'
    )

    # Assert
    assert abs(value - 0.7) <= hoeffding_radius(2000, 1e-6)


def test_決定的なMDPのモンテカルロ推定は厳密値に一致する(
    simulation_service: SimulationService, chain_mdp: TabularMDP
) -> None:
    # Arrange
    policy = Policy(actions=np.array([[1, 0], [0, 0]]))

    # Act
    value = simulation_service.monte_carlo_value(chain_mdp, policy, 10, SeedStreams(0), 'eval/1')

    # Assert
    assert value == pytest.approx(0.4)


def test_評価軌跡数が0だとエラーになる(
    simulation_service: SimulationService, chain_mdp: TabularMDP
) -> None:
    # Arrange
    policy = Policy(actions=np.zeros((2, 2), dtype=np.int64))

    # Act & Assert
    with pytest.raises(ValidationError, match='n_eval must be >= 1'):
        simulation_service.monte_carlo_value(chain_mdp, policy, 0, SeedStreams(0), 'eval/1')


def test_ホフディング半径は定義式に一致する() -> None:
    # Act
    radius = hoeffding_radius(2000, 0.1)

    # Assert
    assert radius == pytest.approx(math.sqrt(math.log(20.0) / 4000.0))


def test_並列度は1以上に丸められる() -> None:
    # Act & Assert
    assert SimulationService(max_workers=0).max_workers == 1
