"""厳密な計画・方策評価サービス。

後ろ向き帰納法による最適化、固定方策の厳密評価、状態行動占有率の計算を提供します。
"""

import numpy as np
from numpy.typing import NDArray

from src.exceptions import ValidationError
from src.models import Policy, TabularMDP, ValueTable


class PlanningService:
    """有限ホライズン表形式MDPの計画サービス。"""

    @staticmethod
    def plan(
        rewards: NDArray[np.float64], transitions: NDArray[np.float64], horizon: int
    ) -> tuple[NDArray[np.float64], NDArray[np.float64], NDArray[np.int64]]:
        """期待報酬と遷移確率の配列から最適価値を計算する。

        Args:
            rewards: 期待報酬 (S, A)。
            transitions: 遷移確率 (S, A, S)。
            horizon: ホライズン H。

        Returns:
            tuple: V (H+1, S)、Q (H, S, A)、貪欲方策の行動 (H, S)。
        """
        num_states, num_actions = rewards.shape
        values = np.zeros((horizon + 1, num_states))
        q_values = np.zeros((horizon, num_states, num_actions))
        actions = np.zeros((horizon, num_states), dtype=np.int64)
        for h in range(horizon - 1, -1, -1):
            q_values[h] = rewards + transitions @ values[h + 1]
            # argmax は最初の最大値（最小の行動番号）を返す
            actions[h] = np.argmax(q_values[h], axis=1)
            values[h] = q_values[h].max(axis=1)
        return values, q_values, actions

    def backward_induction(self, mdp: TabularMDP) -> tuple[ValueTable, Policy]:
        """最適価値表と貪欲な決定的方策を返す。

        Args:
            mdp: 対象の MDP。

        Returns:
            tuple[ValueTable, Policy]: 最適価値表と最適方策。
        """
        values, q_values, actions = self.plan(mdp.expected_rewards(), mdp.transitions, mdp.horizon)
        return ValueTable(values=values, q_values=q_values), Policy(actions=actions)

    @staticmethod
    def optimal_value(mdp: TabularMDP, table: ValueTable) -> float:
        """v = E_{s~P1}[V_1(s)] を返す。"""
        return float(mdp.initial_dist @ table.v(1))

    @staticmethod
    def policy_values(mdp: TabularMDP, policy: Policy) -> ValueTable:
        """固定方策の価値表 V^π, Q^π を返す。

        Raises:
            ValidationError: 方策の形状が MDP と一致しない場合。
        """
        policy.check_shape(mdp)
        rewards = mdp.expected_rewards()
        states = np.arange(mdp.num_states)
        values = np.zeros((mdp.horizon + 1, mdp.num_states))
        q_values = np.zeros((mdp.horizon, mdp.num_states, mdp.num_actions))
        for h in range(mdp.horizon - 1, -1, -1):
            q_values[h] = rewards + mdp.transitions @ values[h + 1]
            values[h] = q_values[h][states, policy.actions[h]]
        return ValueTable(values=values, q_values=q_values)

    def evaluate_policy_exact(self, mdp: TabularMDP, policy: Policy) -> float:
        """方策の価値 v^π = E_{s~P1}[V^π_1(s)] を厳密に計算する。"""
        return float(mdp.initial_dist @ self.policy_values(mdp, policy).v(1))

    @staticmethod
    def occupancy(mdp: TabularMDP, policy: Policy) -> NDArray[np.float64]:
        """状態行動占有率 d_h(s,a) を形状 (H, S, A) で返す。

        d_1 は P1 を方策のステップ 1 の行動に載せたもので、以降は前向きに伝播する。
        """
        policy.check_shape(mdp)
        states = np.arange(mdp.num_states)
        occ = np.zeros((mdp.horizon, mdp.num_states, mdp.num_actions))
        state_dist = np.asarray(mdp.initial_dist, dtype=np.float64)
        for h in range(mdp.horizon):
            occ[h, states, policy.actions[h]] = state_dist
            state_dist = np.einsum('sa,sat->t', occ[h], mdp.transitions)
        return occ

    @staticmethod
    def check_step(mdp: TabularMDP, h: int) -> None:
        """ステップ番号 h が 1..H の範囲にあることを検証する。"""
        if not 1 <= h <= mdp.horizon:
            raise ValidationError(f'step h={h} out of range [1, {mdp.horizon}]')
