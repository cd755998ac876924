"""解析上の恒等式・不等式を厳密計算で検査する診断サービス。

価値分解、誤差分解、シミュレーション補題、W* の近似保証、重み距離の伝達、
探索ステップの集中事象を、占有率と厳密な期待値から計算します。
"""

from typing import Any

import numpy as np
from numpy.typing import NDArray

from src.logger import logger
from src.models import (
    FeatureMap,
    IterationRecord,
    LearnerConfig,
    ModelEnsemble,
    Policy,
    TabularMDP,
    WeightMatrix,
    reachable_states,
)
from src.models.diagnostics import DiagnosticCheck
from src.services.ensemble_service import EnsembleService
from src.services.pac_service import cut_tolerance
from src.services.planning_service import PlanningService
from src.services.simulation_service import hoeffding_radius

IDENTITY_TOLERANCE = 1e-10
DECOMPOSITION_TOLERANCE = 1e-8


class DiagnosticsService:
    """厳密な診断計算のサービス。"""

    def __init__(
        self, planning_service: PlanningService, ensemble_service: EnsembleService
    ) -> None:
        """初期化。

        Args:
            planning_service: 計画サービス。
            ensemble_service: アンサンブルサービス。
        """
        self.planning_service = planning_service
        self.ensemble_service = ensemble_service

    def _plan_mixed(
        self, ensemble: ModelEnsemble, features: FeatureMap, weights: WeightMatrix
    ) -> tuple[NDArray[np.float64], NDArray[np.float64], NDArray[np.float64], Policy]:
        """M(W) の期待報酬・遷移・最適価値 V_W と最適方策 π_W を返す。"""
        rewards, transitions = self.ensemble_service.mixed_arrays(ensemble, features, weights)
        values, _, actions = self.planning_service.plan(rewards, transitions, ensemble.shape[2])
        return rewards, transitions, values, Policy(actions=actions)

    def exact_z(
        self,
        target: TabularMDP,
        ensemble: ModelEnsemble,
        features: FeatureMap,
        weights: WeightMatrix,
    ) -> NDArray[np.float64]:
        """Z_W = Σ_h E_{d^W_{M*,h}}[V̄_{W,h} φᵀ] を (K, d) 行列で返す。"""
        _, _, values, policy = self._plan_mixed(ensemble, features, weights)
        occ = self.planning_service.occupancy(target, policy)
        z = np.zeros((ensemble.num_models, features.dimension))
        for h in range(target.horizon):
            disc = self.ensemble_service.discriminator_table(ensemble, values[h + 1])
            z += np.einsum('sa,sak,sad->kd', occ[h], disc, features.features)
        return z

    def per_step_error(
        self,
        target: TabularMDP,
        ensemble: ModelEnsemble,
        features: FeatureMap,
        weights: WeightMatrix,
        h: int,
    ) -> float:
        """ステップ h のモデル誤差 E(W,h) を返す。

        E(W,h) = E_{d^W_{M*,h}}[E_{M(W)}[r + V_{W,h+1}(s')] - E_{M*}[r + V_{W,h+1}(s')]]。

        Raises:
            ValidationError: h が 1..H の範囲にない場合。
        """
        self.planning_service.check_step(target, h)
        rewards, transitions, values, policy = self._plan_mixed(ensemble, features, weights)
        occ = self.planning_service.occupancy(target, policy)
        next_v = values[h]
        model_backup = rewards + transitions @ next_v
        target_backup = target.expected_rewards() + target.transitions @ next_v
        return float(np.sum(occ[h - 1] * (model_backup - target_backup)))

    def total_error(
        self,
        target: TabularMDP,
        ensemble: ModelEnsemble,
        features: FeatureMap,
        weights: WeightMatrix,
    ) -> float:
        """E(W) = Σ_h E(W,h) を返す。"""
        return sum(
            self.per_step_error(target, ensemble, features, weights, h)
            for h in range(1, target.horizon + 1)
        )

    def value_gap(
        self,
        target: TabularMDP,
        ensemble: ModelEnsemble,
        features: FeatureMap,
        weights: WeightMatrix,
    ) -> float:
        """v_W - v^{π_W}_{M*} を返す。"""
        _, _, values, policy = self._plan_mixed(ensemble, features, weights)
        v_model = float(target.initial_dist @ values[0])
        return v_model - self.planning_service.evaluate_policy_exact(target, policy)

    def check_value_decomposition(
        self,
        target: TabularMDP,
        ensemble: ModelEnsemble,
        features: FeatureMap,
        weights: WeightMatrix,
    ) -> DiagnosticCheck:
        """v_W - v^W_{M*} = Σ_h E(W,h) を検査する。"""
        return DiagnosticCheck.identity(
            'value_decomposition',
            self.value_gap(target, ensemble, features, weights),
            self.total_error(target, ensemble, features, weights),
            IDENTITY_TOLERANCE,
        )

    def check_error_decomposition(  # noqa: PLR0913
        self,
        target: TabularMDP,
        ensemble: ModelEnsemble,
        features: FeatureMap,
        weights: WeightMatrix,
        w_star: WeightMatrix,
        theta: float = 0.0,
    ) -> DiagnosticCheck:
        """E(W) と <W - W*, Z_W> + Hθ を比べる。

        θ = 0 では等式、θ > 0 では上界として検査する。
        """
        lhs = self.total_error(target, ensemble, features, weights)
        z = self.exact_z(target, ensemble, features, weights)
        rhs = float(np.sum((weights.entries - w_star.entries) * z)) + target.horizon * theta
        if theta == 0.0:
            return DiagnosticCheck.identity(
                'error_decomposition', lhs, rhs, DECOMPOSITION_TOLERANCE
            )
        return DiagnosticCheck.inequality(
            'error_decomposition', lhs, rhs, DECOMPOSITION_TOLERANCE
        )

    def simulation_gaps(self, first: TabularMDP, second: TabularMDP) -> tuple[float, float]:
        """(ε_p, ε_r) を返す。

        ε_p は (s,a) ごとの遷移の L1 距離の最大値、ε_r は first で各ステップに到達しうる
        状態での期待報酬差の最大値をステップ方向に合計したもの。
        """
        eps_p = float(self.ensemble_service.l1_transition_gap(first, second).max())
        reward_gap = np.abs(first.expected_rewards() - second.expected_rewards()).max(axis=1)
        reach = reachable_states(first.initial_dist, first.transitions, first.horizon)
        eps_r = float(sum(reward_gap[mask].max(initial=0.0) for mask in reach))
        return eps_p, eps_r

    def check_simulation_lemma(
        self, first: TabularMDP, second: TabularMDP, policy: Policy
    ) -> DiagnosticCheck:
        """|v^π_{M1} - v^π_{M2}| ≤ H·ε_p + ε_r を検査する。"""
        eps_p, eps_r = self.simulation_gaps(first, second)
        lhs = abs(
            self.planning_service.evaluate_policy_exact(first, policy)
            - self.planning_service.evaluate_policy_exact(second, policy)
        )
        return DiagnosticCheck.inequality(
            'simulation_lemma', lhs, first.horizon * eps_p + eps_r, IDENTITY_TOLERANCE
        )

    def check_corollary(
        self,
        target: TabularMDP,
        ensemble: ModelEnsemble,
        features: FeatureMap,
        w_star: WeightMatrix,
    ) -> list[DiagnosticCheck]:
        """θ = sup_misfit(W*) のもとで W* の近似保証を検査する。

        |v_{W*} - v^{W*}_{M*}| ≤ Hθ と v^{W*}_{M*} ≥ v* - 2Hθ の 2 つを返す。
        """
        theta = self.ensemble_service.sup_misfit(ensemble, features, w_star, target)
        horizon = target.horizon
        gap = self.value_gap(target, ensemble, features, w_star)
        _, _, _, policy = self._plan_mixed(ensemble, features, w_star)
        table, _ = self.planning_service.backward_induction(target)
        v_opt = self.planning_service.optimal_value(target, table)
        v_policy = self.planning_service.evaluate_policy_exact(target, policy)
        return [
            DiagnosticCheck.inequality(
                'corollary_model_gap', abs(gap), horizon * theta, IDENTITY_TOLERANCE
            ),
            DiagnosticCheck.inequality(
                'corollary_policy_value', v_opt - v_policy, 2 * horizon * theta, IDENTITY_TOLERANCE
            ),
        ]

    def check_weight_transfer(
        self,
        ensemble: ModelEnsemble,
        features: FeatureMap,
        first: WeightMatrix,
        second: WeightMatrix,
    ) -> DiagnosticCheck:
        """||P^W - P^{W'}||_1 ≤ √(dK)·||W - W'||_F を検査する。"""
        gap, bound = self.ensemble_service.weight_transfer_gap(ensemble, features, first, second)
        return DiagnosticCheck.inequality('weight_transfer', gap, bound, IDENTITY_TOLERANCE)

    def check_concentration_event(  # noqa: PLR0913
        self,
        record: IterationRecord,
        target: TabularMDP,
        ensemble: ModelEnsemble,
        features: FeatureMap,
        w_star: WeightMatrix,
        config: LearnerConfig,
    ) -> DiagnosticCheck | None:
        """探索反復の測定が集中事象に入っていたかを事後的に検査する。

        |ŷ_t - E[ŷ_t]| + |<W*, Ẑ_t - Z_t>| ≤ ε/(12√(dK)) を返す。探索していない反復は None。
        """
        constraint = record.constraint_added
        if constraint is None:
            return None
        w_t = record.w_t
        _, _, values, policy = self._plan_mixed(ensemble, features, w_t)
        occ = self.planning_service.occupancy(target, policy)
        expected_y = 0.0
        for h in range(target.horizon):
            backup = target.expected_rewards() + target.transitions @ values[h + 1]
            expected_y += float(np.sum(occ[h] * backup))
        z = self.exact_z(target, ensemble, features, w_t)
        lhs = abs(constraint.y_hat - expected_y) + abs(
            float(np.sum(w_star.entries * (constraint.z_hat - z)))
        )
        rhs = cut_tolerance(
            config.epsilon, features.dimension, ensemble.num_models, target.horizon, 0.0
        )
        return DiagnosticCheck.inequality('concentration_event', lhs, rhs, 0.0)

    @staticmethod
    def hoeffding_flag(mc_value: float, exact_value: float, radius: float) -> bool:
        """|v̂ - v| がホフディング半径を超えたかどうかを返す。"""
        return abs(mc_value - exact_value) > radius

    def value_audit(  # noqa: PLR0913
        self,
        target: TabularMDP,
        policy: Policy,
        mc_value: float,
        n_eval: int,
        delta: float,
    ) -> dict[str, Any]:
        """返された方策の v̂ を厳密な価値と突き合わせる。

        半径を超えても失敗にはせず、フラグを立てて警告を出す。

        Returns:
            dict[str, Any]: mc_value, exact_value, optimal_value, hoeffding_radius, n_eval,
            hoeffding_exceeded。
        """
        exact = self.planning_service.evaluate_policy_exact(target, policy)
        table, _ = self.planning_service.backward_induction(target)
        radius = hoeffding_radius(n_eval, delta)
        exceeded = self.hoeffding_flag(mc_value, exact, radius)
        if exceeded:
            logger.warning(
                f'Value audit: |v_hat - v| = {abs(mc_value - exact):.6f} exceeds the '
                f'Hoeffding radius {radius:.6f} (n_eval={n_eval})'
            )
        return {
            'mc_value': mc_value,
            'exact_value': exact,
            'optimal_value': self.planning_service.optimal_value(target, table),
            'hoeffding_radius': radius,
            'n_eval': n_eval,
            'hoeffding_exceeded': exceeded,
        }
