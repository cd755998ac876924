"""有限ホライズン表形式MDPのドメインモデル。

ステップ番号 h は 1 始まりだが、配列は 0 始まりで保持する
（``values[h - 1]`` がステップ h に対応する）。
"""

import numpy as np
from numpy.typing import NDArray
from pydantic import PositiveInt, model_validator

from src.config import settings
from src.exceptions import ValidationError
from src.models.base import FloatArray, FrozenModel, IntArray


def _check_distribution(probs: NDArray[np.float64], name: str) -> None:
    """最終軸が確率ベクトルになっていることを検証する。"""
    tol = settings.probability_tolerance
    if np.any(probs < -tol):
        raise ValidationError(f'{name}: probabilities must be non-negative')
    sums = probs.sum(axis=-1)
    if np.any(np.abs(sums - 1.0) > tol):
        raise ValidationError(
            f'{name}: probabilities must sum to 1 (max gap {np.max(np.abs(sums - 1.0)):.3e})'
        )


def reachable_states(
    initial_dist: NDArray[np.float64], transitions: NDArray[np.float64], horizon: int
) -> list[NDArray[np.bool_]]:
    """各ステップで到達しうる状態の集合を返す。

    Args:
        initial_dist: 初期状態分布 (S,)。
        transitions: 遷移確率 (S, A, S)。
        horizon: ホライズン H。

    Returns:
        list[NDArray[np.bool_]]: 長さ H のリスト。要素 h-1 がステップ h の到達可能状態。
    """
    reach = [initial_dist > 0]
    successors = np.any(transitions > 0, axis=1)
    for _ in range(horizon - 1):
        reach.append(np.any(successors[reach[-1]], axis=0))
    return reach


def reachable_reward_bound(
    initial_dist: NDArray[np.float64],
    transitions: NDArray[np.float64],
    max_rewards: NDArray[np.float64],
    horizon: int,
) -> float:
    """Σ_h max_{s ∈ reach_h, a} max_rewards[s, a] を返す。

    transitions は正の要素で遷移グラフを表せばよく、確率でなくてもよい。
    """
    reach = reachable_states(initial_dist, transitions, horizon)
    return float(sum(max_rewards[mask].max(initial=0.0) for mask in reach))


def merge_reward_supports(
    supports: list[NDArray[np.float64]], tolerance: float | None = None
) -> tuple[NDArray[np.float64], list[NDArray[np.int64]]]:
    """複数の報酬サポートを、tolerance 以内の値を同一視して 1 つに統合する。

    Args:
        supports: 報酬値のベクトルのリスト。
        tolerance: 同一視する距離。省略時は設定値。

    Returns:
        tuple: 統合後の昇順サポートと、入力ごとの統合後インデックス。
    """
    tol = settings.support_merge_tolerance if tolerance is None else tolerance
    flat = np.concatenate([np.asarray(v, dtype=np.float64).ravel() for v in supports])
    order = np.unique(flat)
    merged: list[float] = []
    for value in order:
        if not merged or value - merged[-1] > tol:
            merged.append(float(value))
    merged_arr = np.asarray(merged)
    # 各値を代表値（クラスタ先頭）へ対応付ける
    positions = [
        np.searchsorted(merged_arr, np.asarray(v, dtype=np.float64) + tol, side='right') - 1
        for v in supports
    ]
    return merged_arr, [p.astype(np.int64) for p in positions]


class TabularMDP(FrozenModel):
    """有限エピソード型MDP (S, A, P, R, H, P1)。

    報酬分布は全 (s,a) 共通のサポート ``reward_values`` 上の確率
    ``reward_probs[s, a]`` として保持する。

    Attributes:
        num_states: 状態数。
        num_actions: 行動数。
        horizon: ホライズン H。
        initial_dist: 初期状態分布 P1。
        transitions: 時間不変の遷移確率 P(s'|s,a)、形状 (S, A, S)。
        reward_values: 昇順・重複なしの報酬サポート、[0,1] 内。
        reward_probs: 報酬分布、形状 (S, A, V)。
        check_bounded_return: 収益上界の十分条件を検証するかどうか。
    """

    num_states: PositiveInt
    num_actions: PositiveInt
    horizon: PositiveInt
    initial_dist: FloatArray
    transitions: FloatArray
    reward_values: FloatArray
    reward_probs: FloatArray
    check_bounded_return: bool = True

    @model_validator(mode='after')
    def _validate(self) -> 'TabularMDP':
        """形状・確率・報酬範囲・収益上界を検証する。"""
        s, a = self.num_states, self.num_actions
        if self.initial_dist.shape != (s,):
            raise ValidationError(
                f'initial_dist: expected shape ({s},), got {self.initial_dist.shape}'
            )
        if self.transitions.shape != (s, a, s):
            raise ValidationError(
                f'transitions: expected shape ({s}, {a}, {s}), got {self.transitions.shape}'
            )
        values = self.reward_values
        if values.ndim != 1 or values.size == 0:
            raise ValidationError('reward_values: must be a non-empty vector')
        if self.reward_probs.shape != (s, a, values.size):
            raise ValidationError(
                f'reward_probs: expected shape ({s}, {a}, {values.size}),'
                f' got {self.reward_probs.shape}'
            )
        if np.any(values < 0.0) or np.any(values > 1.0):
            raise ValidationError('reward_values: every reward support value must lie in [0, 1]')
        if np.any(np.diff(values) <= 0.0):
            raise ValidationError('reward_values: support must be strictly increasing')
        _check_distribution(self.initial_dist, 'initial_dist')
        _check_distribution(self.transitions, 'transitions')
        _check_distribution(self.reward_probs, 'reward_probs')
        limit = 1.0 + settings.probability_tolerance
        if self.check_bounded_return and self.return_upper_bound() > limit:
            raise ValidationError(
                f'bounded return: sum over steps of the maximal reachable reward is '
                f'{self.return_upper_bound():.6f} > 1'
            )
        return self

    @classmethod
    def from_reward_lists(  # noqa: PLR0913
        cls,
        initial_dist: NDArray[np.float64],
        transitions: NDArray[np.float64],
        horizon: int,
        supports: list[list[float]],
        probs: list[list[float]],
        check_bounded_return: bool = True,
    ) -> 'TabularMDP':
        """(s,a) ごとの報酬サポート・確率のリスト（行優先）から MDP を作る。

        Args:
            initial_dist: 初期状態分布 (S,)。
            transitions: 遷移確率 (S, A, S)。
            horizon: ホライズン H。
            supports: 長さ S·A の報酬サポートのリスト。
            probs: supports と同じ形の確率のリスト。
            check_bounded_return: 収益上界を検証するかどうか。

        Returns:
            TabularMDP: 構築した MDP。

        Raises:
            ValidationError: リストの長さや形が一致しない場合。
        """
        transitions = np.asarray(transitions, dtype=np.float64)
        if transitions.ndim != 3:  # noqa: PLR2004
            raise ValidationError('transitions: expected an (S, A, S) array')
        num_states, num_actions = transitions.shape[:2]
        if len(supports) != num_states * num_actions or len(probs) != len(supports):
            raise ValidationError(
                f'rewards: expected {num_states * num_actions} (support, probs) entries'
            )
        for i, (support, p) in enumerate(zip(supports, probs, strict=True)):
            if len(support) == 0 or len(support) != len(p):
                raise ValidationError(
                    f'rewards[{i}]: support and probs must be non-empty and equal length'
                )
        arrays = [np.asarray(v, dtype=np.float64) for v in supports]
        values, positions = merge_reward_supports(arrays)
        reward_probs = np.zeros((num_states * num_actions, values.size))
        for row, (pos, p) in enumerate(zip(positions, probs, strict=True)):
            np.add.at(reward_probs[row], pos, np.asarray(p, dtype=np.float64))
        return cls(
            num_states=num_states,
            num_actions=num_actions,
            horizon=horizon,
            initial_dist=initial_dist,
            transitions=transitions,
            reward_values=values,
            reward_probs=reward_probs.reshape(num_states, num_actions, values.size),
            check_bounded_return=check_bounded_return,
        )

    @property
    def shape(self) -> tuple[int, int, int]:
        """(状態数, 行動数, ホライズン) を返す。"""
        return self.num_states, self.num_actions, self.horizon

    def reward_lists(self) -> tuple[list[list[float]], list[list[float]]]:
        """正の確率を持つ報酬値だけを (s,a) 行優先のリストで返す。"""
        supports: list[list[float]] = []
        probs: list[list[float]] = []
        for row in self.reward_probs.reshape(-1, self.reward_values.size):
            mask = row > 0.0
            supports.append(self.reward_values[mask].tolist())
            probs.append(row[mask].tolist())
        return supports, probs

    def expected_rewards(self) -> NDArray[np.float64]:
        """E[r|s,a] を形状 (S, A) で返す。"""
        return np.asarray(self.reward_probs @ self.reward_values, dtype=np.float64)

    def max_rewards(self) -> NDArray[np.float64]:
        """各 (s,a) の報酬サポートの最大値（正の確率を持つもの）を返す。"""
        support = self.reward_probs > 0.0
        return np.where(support, self.reward_values, 0.0).max(axis=-1)

    def return_upper_bound(self) -> float:
        """各ステップの到達可能状態における最大報酬の総和を返す。"""
        return reachable_reward_bound(
            self.initial_dist, self.transitions, self.max_rewards(), self.horizon
        )


class Policy(FrozenModel):
    """決定的な非定常方策 π: [H] × S → A。

    Attributes:
        actions: 形状 (H, S) の行動インデックス。``actions[h - 1, s]`` がステップ h の行動。
    """

    actions: IntArray

    @model_validator(mode='after')
    def _validate(self) -> 'Policy':
        if self.actions.ndim != 2:  # noqa: PLR2004
            raise ValidationError('policy: actions must have shape (H, S)')
        if np.any(self.actions < 0):
            raise ValidationError('policy: action indices must be non-negative')
        return self

    def action(self, h: int, state: int) -> int:
        """ステップ h (1始まり) の状態 state における行動を返す。"""
        return int(self.actions[h - 1, state])

    def check_shape(self, mdp: TabularMDP) -> None:
        """MDP の形状と整合するかを検証する。

        Raises:
            ValidationError: 形状が一致しない、または行動インデックスが範囲外の場合。
        """
        if self.actions.shape != (mdp.horizon, mdp.num_states):
            raise ValidationError(
                f'policy shape {self.actions.shape} does not match'
                f' (H, S) = ({mdp.horizon}, {mdp.num_states})'
            )
        if np.any(self.actions >= mdp.num_actions):
            raise ValidationError(
                f'policy: action index out of range (num_actions={mdp.num_actions})'
            )


class Trajectory(FrozenModel):
    """1 エピソード分のロールアウト。

    Attributes:
        states: s_1, ..., s_{H+1}（最後が終端状態）。
        actions: a_1, ..., a_H。
        rewards: r_1, ..., r_H。r_h は (s_h, a_h) で引かれる報酬。
        bounded_return: 収益 Σ_h r_h ≤ 1 を検証するかどうか。
    """

    states: IntArray
    actions: IntArray
    rewards: FloatArray
    bounded_return: bool = True

    @model_validator(mode='after')
    def _validate(self) -> 'Trajectory':
        horizon = self.actions.size
        if self.states.shape != (horizon + 1,) or self.rewards.shape != (horizon,):
            raise ValidationError('trajectory: expected H+1 states, H actions and H rewards')
        if np.any(self.rewards < 0.0) or np.any(self.rewards > 1.0):
            raise ValidationError('trajectory: every reward must lie in [0, 1]')
        limit = 1.0 + settings.probability_tolerance
        if self.bounded_return and self.rewards.sum() > limit:
            raise ValidationError(
                f'trajectory: total reward {self.rewards.sum():.6f} exceeds the bound 1'
            )
        return self

    @property
    def horizon(self) -> int:
        return int(self.actions.size)

    @property
    def terminal_state(self) -> int:
        return int(self.states[-1])

    def total_reward(self) -> float:
        """収益 Σ_h r_h を返す。"""
        return float(self.rewards.sum())


class ValueTable(FrozenModel):
    """価値関数表。

    Attributes:
        values: 形状 (H+1, S)。``values[h - 1]`` が V_h、最終行 V_{H+1} は 0。
        q_values: 形状 (H, S, A)。``q_values[h - 1]`` が Q_h。
    """

    values: FloatArray
    q_values: FloatArray

    @model_validator(mode='after')
    def _validate(self) -> 'ValueTable':
        if self.values.ndim != 2 or self.q_values.ndim != 3:  # noqa: PLR2004
            raise ValidationError('value table: unexpected dimensions')
        if self.values.shape[0] != self.q_values.shape[0] + 1:
            raise ValidationError('value table: V must have one more step than Q')
        if np.any(self.values[-1] != 0.0):
            raise ValidationError('value table: V at step H+1 must be identically 0')
        return self

    @property
    def horizon(self) -> int:
        return int(self.q_values.shape[0])

    def v(self, h: int) -> NDArray[np.float64]:
        """ステップ h (1..H+1) の状態価値ベクトルを返す。"""
        return self.values[h - 1]
