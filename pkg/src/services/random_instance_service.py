"""診断用のランダムインスタンス生成サービス。

Dirichlet 遷移と有限サポートの報酬を持つ Garnet 型の MDP、アンサンブル、
特徴写像、重み行列を生成します。報酬値は各ステップ 1/H 以下に抑え、
収益が常に [0,1] に収まるようにします。
"""

import numpy as np
from numpy.typing import NDArray

from src.models import FeatureMap, ModelEnsemble, Policy, TabularMDP, WeightMatrix


class RandomInstanceService:
    """乱数生成器を受け取り、ランダムなインスタンスを作るサービス。

    Attributes:
        rng: 乱数生成器。
        support_size: 報酬サポートの大きさ。
        branching: 各 (s,a) で正の確率を持つ次状態数の上限。
    """

    def __init__(self, rng: np.random.Generator, support_size: int = 2, branching: int = 3) -> None:
        """初期化。

        Args:
            rng: 乱数生成器。
            support_size: 報酬サポートの大きさ。
            branching: 遷移の分岐数の上限。
        """
        self.rng = rng
        self.support_size = support_size
        self.branching = branching

    def initial_dist(self, num_states: int) -> NDArray[np.float64]:
        return self.rng.dirichlet(np.ones(num_states))

    def transitions(self, num_states: int, num_actions: int) -> NDArray[np.float64]:
        """疎な Dirichlet 遷移確率 (S, A, S) を返す。"""
        probs = np.zeros((num_states, num_actions, num_states))
        width = min(self.branching, num_states)
        for s in range(num_states):
            for a in range(num_actions):
                succ = self.rng.choice(num_states, size=width, replace=False)
                probs[s, a, succ] = self.rng.dirichlet(np.ones(width))
        return probs

    def mdp(
        self,
        num_states: int,
        num_actions: int,
        horizon: int,
        initial_dist: NDArray[np.float64] | None = None,
    ) -> TabularMDP:
        """ランダムな MDP を返す。"""
        values = np.sort(self.rng.uniform(0.0, 1.0 / horizon, size=self.support_size))
        return TabularMDP(
            num_states=num_states,
            num_actions=num_actions,
            horizon=horizon,
            initial_dist=self.initial_dist(num_states) if initial_dist is None else initial_dist,
            transitions=self.transitions(num_states, num_actions),
            reward_values=values,
            reward_probs=self.rng.dirichlet(np.ones(values.size), size=(num_states, num_actions)),
        )

    def ensemble(
        self, num_models: int, num_states: int, num_actions: int, horizon: int
    ) -> ModelEnsemble:
        """P1 を共有するランダムなアンサンブルを返す。"""
        p1 = self.initial_dist(num_states)
        return ModelEnsemble(
            base_models=tuple(
                self.mdp(num_states, num_actions, horizon, initial_dist=p1)
                for _ in range(num_models)
            )
        )

    def feature_map(self, num_states: int, num_actions: int, dimension: int) -> FeatureMap:
        """ランダムな特徴写像を返す（半々の確率で partition または tabular）。"""
        if dimension == 1:
            return FeatureMap.constant(num_states, num_actions)
        if self.rng.random() < 0.5:  # noqa: PLR2004
            cells = self.rng.integers(0, dimension, size=(num_states, num_actions))
            return FeatureMap.partition(cells, dimension)
        vectors = self.rng.dirichlet(np.ones(dimension), size=(num_states, num_actions))
        return FeatureMap.tabular(vectors)

    def weights(self, num_models: int, dimension: int) -> WeightMatrix:
        """列ごとに単体上一様な W を返す。"""
        return WeightMatrix(entries=self.rng.dirichlet(np.ones(num_models), size=dimension).T)

    def policy(self, num_states: int, num_actions: int, horizon: int) -> Policy:
        """一様ランダムな決定的非定常方策を返す。"""
        return Policy(actions=self.rng.integers(0, num_actions, size=(horizon, num_states)))

    def perturb(self, mdp: TabularMDP, scale: float) -> TabularMDP:
        """遷移と報酬分布をランダムに摂動した MDP を返す（非実現可能な target 用）。"""
        noise = self.transitions(mdp.num_states, mdp.num_actions)
        probs = self.rng.dirichlet(np.ones(mdp.reward_values.size), size=mdp.reward_probs.shape[:2])
        return TabularMDP(
            num_states=mdp.num_states,
            num_actions=mdp.num_actions,
            horizon=mdp.horizon,
            initial_dist=mdp.initial_dist,
            transitions=(1.0 - scale) * mdp.transitions + scale * noise,
            reward_values=mdp.reward_values,
            reward_probs=(1.0 - scale) * mdp.reward_probs + scale * probs,
        )
