"""EnsembleService の単体テスト。"""

import numpy as np
import pytest

from src.exceptions import ValidationError
from src.models import FeatureMap, ModelEnsemble, TabularMDP, WeightMatrix
from src.models.hard_instances import RealizableFixture
from src.services.ensemble_service import EnsembleService
from src.services.random_instance_service import RandomInstanceService


def test_混合係数はWとセルの指示ベクトルの積になる(
    ensemble_service: EnsembleService, realizable: RealizableFixture
) -> None:
    # Act
    coeffs = ensemble_service.mixture_coefficients(realizable.w_star, realizable.features, 3, 0)

    # Assert
    np.testing.assert_allclose(coeffs, [0.0, 1.0])


def test_Wstarによる混合はtargetを再現する(
    ensemble_service: EnsembleService, realizable: RealizableFixture
) -> None:
    # Act
    mixed = ensemble_service.mix_model(realizable.ensemble, realizable.features, realizable.w_star)

    # Assert
    np.testing.assert_allclose(mixed.expected_rewards()[3:, 0], [0.1, 0.5, 0.2])
    np.testing.assert_allclose(mixed.transitions, realizable.target.transitions)
    assert ensemble_service.sup_misfit(
        realizable.ensemble, realizable.features, realizable.w_star, realizable.target
    ) == pytest.approx(0.0)


def test_混合モデルの報酬サポートはベースモデルの和集合になる(
    ensemble_service: EnsembleService, realizable: RealizableFixture
) -> None:
    # Act
    mixed = ensemble_service.mix_model(
        realizable.ensemble, realizable.features, WeightMatrix.barycenter(2, 2)
    )

    # Assert
    np.testing.assert_allclose(mixed.reward_values, [0.0, 0.1, 0.2, 0.3, 0.5, 0.6, 0.9])
    np.testing.assert_allclose(mixed.expected_rewards()[3, 0], 0.5)


def test_選択行列による混合はベースモデルに一致する(
    ensemble_service: EnsembleService, realizable: RealizableFixture
) -> None:
    # Act
    mixed = ensemble_service.mix_model(
        realizable.ensemble, realizable.features, WeightMatrix.selecting(0, 2, 2)
    )

    # Assert
    np.testing.assert_allclose(
        mixed.expected_rewards(), realizable.ensemble.base_models[0].expected_rewards()
    )


def test_期待報酬と遷移だけの混合はmix_modelと一致する(
    ensemble_service: EnsembleService, realizable: RealizableFixture
) -> None:
    # Arrange
    weights = WeightMatrix(entries=np.array([[0.3, 0.8], [0.7, 0.2]]))

    # Act
    rewards, transitions = ensemble_service.mixed_arrays(
        realizable.ensemble, realizable.features, weights
    )
    mixed = ensemble_service.mix_model(realizable.ensemble, realizable.features, weights)

    # Assert
    np.testing.assert_allclose(rewards, mixed.expected_rewards())
    np.testing.assert_allclose(transitions, mixed.transitions)


def test_重心のsup_misfitは報酬分布のL1距離になる(
    ensemble_service: EnsembleService, realizable: RealizableFixture
) -> None:
    # Act
    misfit = ensemble_service.sup_misfit(
        realizable.ensemble, realizable.features, WeightMatrix.barycenter(2, 2), realizable.target
    )

    # Assert
    assert misfit == pytest.approx(1.0)


def test_近似誤差は候補の中で最小のmisfitを選ぶ(
    ensemble_service: EnsembleService, realizable: RealizableFixture
) -> None:
    # Arrange
    candidates = [WeightMatrix.barycenter(2, 2), realizable.w_star]

    # Act
    theta, best = ensemble_service.approx_error(
        realizable.ensemble, realizable.features, realizable.target, candidates
    )

    # Assert
    assert theta == pytest.approx(0.0)
    np.testing.assert_array_equal(best.entries, realizable.w_star.entries)


def test_候補が空だと近似誤差を計算できない(
    ensemble_service: EnsembleService, realizable: RealizableFixture
) -> None:
    # Act & Assert
    with pytest.raises(ValidationError, match='must not be empty'):
        ensemble_service.approx_error(realizable.ensemble, realizable.features, realizable.target, [])


def test_次元の合わないWはエラーになる(
    ensemble_service: EnsembleService, realizable: RealizableFixture
) -> None:
    # Act & Assert
    with pytest.raises(ValidationError, match='1 columns but the feature map has d=2'):
        ensemble_service.mix_model(
            realizable.ensemble, realizable.features, WeightMatrix.barycenter(2, 1)
        )


def test_状態行動グリッドの合わない特徴写像はエラーになる(
    ensemble_service: EnsembleService, realizable: RealizableFixture
) -> None:
    # Arrange
    features = FeatureMap.partition(np.zeros((3, 2), dtype=np.int64), 2)

    # Act & Assert
    with pytest.raises(ValidationError, match='grid does not match'):
        ensemble_service.mixed_arrays(realizable.ensemble, features, WeightMatrix.barycenter(2, 2))


def test_識別ベクトルは各ベースモデルの一段先読みになる(
    ensemble_service: EnsembleService, realizable: RealizableFixture
) -> None:
    # Arrange
    next_values = np.ones(6)

    # Act
    table = ensemble_service.discriminator_table(realizable.ensemble, np.zeros(6))
    vector = ensemble_service.discriminator_vector(realizable.ensemble, next_values, 3, 0)

    # Assert
    assert table.shape == (6, 2, 2)
    np.testing.assert_allclose(table[3, 0], [0.9, 0.1])
    np.testing.assert_allclose(vector.entries, [1.9, 1.1])


def test_識別ベクトルの次状態関数の形状を検証する(
    ensemble_service: EnsembleService, realizable: RealizableFixture
) -> None:
    # Act & Assert
    with pytest.raises(ValidationError, match='f must have shape'):
        ensemble_service.discriminator_table(realizable.ensemble, np.zeros(5))


def test_重みの距離による遷移差の上界が成り立つ(
    ensemble_service: EnsembleService, realizable: RealizableFixture
) -> None:
    # Act
    gap, bound = ensemble_service.weight_transfer_gap(
        realizable.ensemble, realizable.features, WeightMatrix.barycenter(2, 2), realizable.w_star
    )

    # Assert
    assert gap == pytest.approx(0.0)
    assert bound == pytest.approx(2.0)


def test_重みグリッドは列ごとの単体グリッドの直積になる(ensemble_service: EnsembleService) -> None:
    # Act
    grid = ensemble_service.weight_grid(2, 2, 0.5)

    # Assert
    assert len(grid) == 9
    np.testing.assert_allclose(grid[0].entries, [[0.0, 0.0], [1.0, 1.0]])


def test_1を割り切らない刻み幅はエラーになる(ensemble_service: EnsembleService) -> None:
    # Act & Assert
    with pytest.raises(ValidationError, match='1/step must be an integer'):
        ensemble_service.weight_grid(2, 1, 0.3)


def test_構築できたアンサンブルの混合は収益上界を満たす(ensemble_service: EnsembleService) -> None:
    # Arrange
    transitions = np.zeros((2, 3, 1, 3))
    transitions[0, 0, 0, 1] = transitions[1, 0, 0, 2] = 1.0
    transitions[:, 1, 0, 1] = transitions[:, 2, 0, 2] = 1.0
    models = tuple(
        TabularMDP.from_reward_lists(
            np.array([1.0, 0.0, 0.0]), transitions[k], 2, [[r] for r in rewards], [[1.0]] * 3
        )
        for k, rewards in enumerate([[0.0, 0.6, 0.0], [0.4, 0.0, 0.5]])
    )
    ensemble = ModelEnsemble(base_models=models)

    # Act
    mixed = ensemble_service.mix_model(
        ensemble, FeatureMap.constant(3, 1), WeightMatrix(entries=np.array([[0.5], [0.5]]))
    )

    # Assert
    np.testing.assert_allclose(mixed.transitions[0, 0], [0.0, 0.5, 0.5])
    assert mixed.return_upper_bound() == pytest.approx(1.0)


@pytest.mark.parametrize(('w_target', 'w_nearest'), [(0.37, 0.37), (0.373, 0.37), (0.818, 0.82)])
def test_近似誤差はグリッドの最近点のmisfit以下になる(
    ensemble_service: EnsembleService, w_target: float, w_nearest: float
) -> None:
    # Arrange
    rs = RandomInstanceService(np.random.default_rng(11))
    ensemble = rs.ensemble(2, 3, 2, 3)
    features = rs.feature_map(3, 2, 1)
    target = ensemble_service.mix_model(
        ensemble, features, WeightMatrix(entries=np.array([[w_target], [1.0 - w_target]]))
    )
    grid = [WeightMatrix(entries=np.array([[w], [1.0 - w]])) for w in np.linspace(0.0, 1.0, 101)]
    nearest = grid[round(w_nearest * 100)]

    # Act
    theta, best = ensemble_service.approx_error(ensemble, features, target, grid)

    # Assert
    assert theta <= ensemble_service.sup_misfit(ensemble, features, nearest, target) + 1e-12
    assert best.entries[0, 0] == pytest.approx(w_nearest)
    assert theta == pytest.approx(0.0, abs=0.02)
