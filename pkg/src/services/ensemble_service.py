"""線形アンサンブルサービス。

重み行列 W と特徴写像 φ によるベースモデルの混合 M(W)、
モデル誤差（sup misfit）、近似誤差 θ、識別ベクトル V̄ を計算します。
"""

import itertools
import math

import numpy as np
from numpy.typing import NDArray

from src.exceptions import ValidationError
from src.models import FeatureMap, ModelEnsemble, TabularMDP, WeightMatrix
from src.models.ensemble import DiscriminatorVector
from src.models.mdp import merge_reward_supports


def _check_dimensions(ensemble: ModelEnsemble, features: FeatureMap, weights: WeightMatrix) -> None:
    num_states, num_actions, _ = ensemble.shape
    if weights.num_models != ensemble.num_models:
        raise ValidationError(
            f'weight matrix has {weights.num_models} rows'
            f' but the ensemble has {ensemble.num_models} models'
        )
    if weights.dimension != features.dimension:
        raise ValidationError(
            f'weight matrix has {weights.dimension} columns'
            f' but the feature map has d={features.dimension}'
        )
    if (features.num_states, features.num_actions) != (num_states, num_actions):
        raise ValidationError('feature map (S, A) grid does not match the ensemble')


def _aligned_reward_probs(
    first: TabularMDP, second: TabularMDP
) -> tuple[NDArray[np.float64], NDArray[np.float64]]:
    """2 つの MDP の報酬分布を和集合サポート上にそろえて返す。"""
    values, (pos1, pos2) = merge_reward_supports([first.reward_values, second.reward_values])
    p1 = np.zeros((*first.reward_probs.shape[:2], values.size))
    p2 = np.zeros_like(p1)
    np.add.at(p1, (slice(None), slice(None), pos1), first.reward_probs)
    np.add.at(p2, (slice(None), slice(None), pos2), second.reward_probs)
    return p1, p2


def _check_same_shape(first: TabularMDP, second: TabularMDP) -> None:
    if first.shape != second.shape:
        raise ValidationError(f'MDP shapes differ: {first.shape} vs {second.shape}')


class EnsembleService:
    """定義に従った線形混合モデルの計算サービス。"""

    @staticmethod
    def mixture_coefficients(
        weights: WeightMatrix, features: FeatureMap, state: int, action: int
    ) -> NDArray[np.float64]:
        """Wφ(s,a) を返す。

        Raises:
            ValidationError: W の列数と φ の次元が一致しない場合。
        """
        if weights.dimension != features.dimension:
            raise ValidationError(
                f'weight matrix has {weights.dimension} columns'
                f' but the feature map has d={features.dimension}'
            )
        return np.asarray(weights.entries @ features(state, action), dtype=np.float64)

    @staticmethod
    def mixture_table(weights: WeightMatrix, features: FeatureMap) -> NDArray[np.float64]:
        """全 (s,a) の混合係数を形状 (S, A, K) で返す。"""
        return np.einsum('kd,sad->sak', weights.entries, features.features)

    def mixed_arrays(
        self, ensemble: ModelEnsemble, features: FeatureMap, weights: WeightMatrix
    ) -> tuple[NDArray[np.float64], NDArray[np.float64]]:
        """M(W) の期待報酬 (S, A) と遷移確率 (S, A, S) を返す。

        期待報酬は混合について線形なので、報酬分布を組み立てずに計算できる。
        """
        _check_dimensions(ensemble, features, weights)
        coeffs = self.mixture_table(weights, features)
        rewards = np.einsum('sak,ksa->sa', coeffs, ensemble.stacked_expected_rewards())
        transitions = np.einsum('sak,ksat->sat', coeffs, ensemble.stacked_transitions())
        return rewards, transitions

    def mix_model(
        self, ensemble: ModelEnsemble, features: FeatureMap, weights: WeightMatrix
    ) -> TabularMDP:
        """M(W) を構築する。

        報酬サポートはベースモデルのサポートの和集合（1e-12 以内は同一視）。
        混合係数の重みで遷移確率と報酬分布を凸結合する。

        Args:
            ensemble: ベースモデル。
            features: 特徴写像 φ。
            weights: 重み行列 W。

        Returns:
            TabularMDP: 混合モデル M(W)。
        """
        _check_dimensions(ensemble, features, weights)
        coeffs = self.mixture_table(weights, features)
        models = ensemble.base_models
        values, positions = merge_reward_supports([m.reward_values for m in models])
        num_states, num_actions, horizon = ensemble.shape
        reward_probs = np.zeros((num_states, num_actions, values.size))
        for k, (model, pos) in enumerate(zip(models, positions, strict=True)):
            weighted = coeffs[:, :, k, None] * model.reward_probs
            np.add.at(reward_probs, (slice(None), slice(None), pos), weighted)
        transitions = np.einsum('sak,ksat->sat', coeffs, ensemble.stacked_transitions())
        return TabularMDP(
            num_states=num_states,
            num_actions=num_actions,
            horizon=horizon,
            initial_dist=models[0].initial_dist,
            transitions=transitions,
            reward_values=values,
            reward_probs=reward_probs,
            check_bounded_return=all(m.check_bounded_return for m in models),
        )

    @staticmethod
    def l1_transition_gap(first: TabularMDP, second: TabularMDP) -> NDArray[np.float64]:
        """(s,a) ごとの ||P_1(·|s,a) - P_2(·|s,a)||_1 を返す。"""
        _check_same_shape(first, second)
        return np.abs(first.transitions - second.transitions).sum(axis=-1)

    @staticmethod
    def l1_reward_gap(first: TabularMDP, second: TabularMDP) -> NDArray[np.float64]:
        """(s,a) ごとの報酬分布の L1 距離（サポートの和集合上）を返す。"""
        _check_same_shape(first, second)
        p1, p2 = _aligned_reward_probs(first, second)
        return np.abs(p1 - p2).sum(axis=-1)

    def sup_misfit(
        self,
        ensemble: ModelEnsemble,
        features: FeatureMap,
        weights: WeightMatrix,
        target: TabularMDP,
    ) -> float:
        """sup_{(s,a)} ||P* - P^W||_1 + ||R* - R^W||_1 を返す。"""
        mixed = self.mix_model(ensemble, features, weights)
        gaps = self.l1_transition_gap(target, mixed) + self.l1_reward_gap(target, mixed)
        return float(gaps.max())

    def approx_error(
        self,
        ensemble: ModelEnsemble,
        features: FeatureMap,
        target: TabularMDP,
        candidates: list[WeightMatrix],
    ) -> tuple[float, WeightMatrix]:
        """候補の中で sup misfit が最小の W とその値 θ̂ を返す。

        同値の場合は先に現れた候補を返す。

        Raises:
            ValidationError: 候補が空の場合。
        """
        if not candidates:
            raise ValidationError('approx error: candidate list must not be empty')
        best_value = math.inf
        best = candidates[0]
        for candidate in candidates:
            value = self.sup_misfit(ensemble, features, candidate, target)
            if value < best_value:
                best_value, best = value, candidate
        return best_value, best

    @staticmethod
    def discriminator_table(
        ensemble: ModelEnsemble, next_values: NDArray[np.float64]
    ) -> NDArray[np.float64]:
        """全 (s,a) の V̄(s,a) を形状 (S, A, K) で返す。

        Args:
            ensemble: ベースモデル。
            next_values: 次ステップの状態関数 f (S,)。

        Returns:
            NDArray[np.float64]: entry k = E_{M_k}[r] + Σ_{s'} P^k(s'|s,a) f(s')。
        """
        num_states = ensemble.shape[0]
        if next_values.shape != (num_states,):
            raise ValidationError(f'discriminator: f must have shape ({num_states},)')
        table = ensemble.stacked_expected_rewards() + ensemble.stacked_transitions() @ next_values
        return np.moveaxis(table, 0, -1)

    def discriminator_vector(
        self, ensemble: ModelEnsemble, next_values: NDArray[np.float64], state: int, action: int
    ) -> DiscriminatorVector:
        """(s,a) における識別ベクトル V̄(s,a) を返す。"""
        table = self.discriminator_table(ensemble, next_values)
        return DiscriminatorVector(entries=table[state, action])

    def weight_transfer_gap(
        self,
        ensemble: ModelEnsemble,
        features: FeatureMap,
        first: WeightMatrix,
        second: WeightMatrix,
    ) -> tuple[float, float]:
        """max_{(s,a)} ||P^W - P^{W'}||_1 と上界 √(dK)·||W - W'||_F を返す。"""
        _, p_first = self.mixed_arrays(ensemble, features, first)
        _, p_second = self.mixed_arrays(ensemble, features, second)
        gap = float(np.abs(p_first - p_second).sum(axis=-1).max())
        scale = math.sqrt(first.dimension * first.num_models)
        bound = scale * float(np.linalg.norm(first.entries - second.entries))
        return gap, bound

    @staticmethod
    def weight_grid(num_models: int, dimension: int, step: float) -> list[WeightMatrix]:
        """各列が刻み step の単体グリッド上にある W をすべて列挙する。

        Raises:
            ValidationError: 1/step が整数でない場合。
        """
        if step <= 0.0 or step > 1.0:
            raise ValidationError(f'weight grid: step must lie in (0, 1], got {step}')
        m = round(1.0 / step)
        if abs(m * step - 1.0) > 1e-9:  # noqa: PLR2004
            raise ValidationError(f'weight grid: 1/step must be an integer, got step={step}')
        columns = [
            np.array(c, dtype=np.float64) / m
            for c in itertools.product(range(m + 1), repeat=num_models)
            if sum(c) == m
        ]
        return [
            WeightMatrix(entries=np.column_stack(cols))
            for cols in itertools.product(columns, repeat=dimension)
        ]
