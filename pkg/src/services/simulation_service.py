"""シード付き軌跡シミュレーションサービス。

このモジュールは、名前付き乱数ストリームの導出と、方策のロールアウト・
モンテカルロ評価を提供します。並列実行しても結果は変わりません。
"""

import math
import zlib
from concurrent.futures import ThreadPoolExecutor

import numpy as np
from numpy.typing import NDArray

from src.config import settings
from src.exceptions import ValidationError
from src.models import Policy, TabularMDP, Trajectory


class SeedStreams:
    """親シードから (用途ラベル, 番号) ごとに独立な乱数ストリームを導出する。

    Attributes:
        master_seed: 親シード（64ビット）。
    """

    def __init__(self, master_seed: int) -> None:
        """初期化。

        Args:
            master_seed: 親シード。
        """
        self.master_seed = master_seed

    def generator(self, label: str, index: int = 0) -> np.random.Generator:
        """ラベルと番号に対応する乱数生成器を返す。

        Args:
            label: 用途ラベル（例: ``explore/3``）。
            index: ストリーム番号（軌跡番号など）。

        Returns:
            np.random.Generator: 決定的な乱数生成器。
        """
        seed_seq = np.random.SeedSequence(
            entropy=self.master_seed, spawn_key=(zlib.crc32(label.encode('utf-8')), index)
        )
        return np.random.default_rng(seed_seq)


def _draw(cumulative: NDArray[np.float64], rng: np.random.Generator) -> int:
    """累積分布から 1 つのインデックスを引く。"""
    u = rng.random() * cumulative[-1]
    return min(int(np.searchsorted(cumulative, u, side='right')), cumulative.size - 1)


def hoeffding_radius(n_eval: int, delta: float) -> float:
    """[0,1] 値の平均に対するホフディングの信頼半径 sqrt(log(2/δ) / (2n))。"""
    if n_eval < 1 or not 0.0 < delta < 1.0:
        raise ValidationError('hoeffding radius: n_eval must be >= 1 and delta in (0, 1)')
    return math.sqrt(math.log(2.0 / delta) / (2.0 * n_eval))


class SimulationService:
    """ロールアウトとモンテカルロ評価のサービス。"""

    def __init__(self, max_workers: int | None = None) -> None:
        """初期化。

        Args:
            max_workers: バッチ実行の並列度。省略時は設定値。
        """
        self.max_workers = max(1, settings.max_workers if max_workers is None else max_workers)

    @staticmethod
    def rollout(mdp: TabularMDP, policy: Policy, rng: np.random.Generator) -> Trajectory:
        """1 エピソードをシミュレートする。

        報酬 r_h は (s_h, a_h) の報酬分布から、s_{h+1} を引く前に引く。

        Args:
            mdp: 環境。
            policy: 方策。
            rng: 乱数生成器。

        Returns:
            Trajectory: 長さ H の軌跡。
        """
        policy.check_shape(mdp)
        init_cdf = np.cumsum(mdp.initial_dist)
        reward_cdf = np.cumsum(mdp.reward_probs, axis=-1)
        trans_cdf = np.cumsum(mdp.transitions, axis=-1)

        states = np.zeros(mdp.horizon + 1, dtype=np.int64)
        actions = np.zeros(mdp.horizon, dtype=np.int64)
        rewards = np.zeros(mdp.horizon)
        states[0] = _draw(init_cdf, rng)
        for h in range(mdp.horizon):
            s = int(states[h])
            a = int(policy.actions[h, s])
            actions[h] = a
            rewards[h] = mdp.reward_values[_draw(reward_cdf[s, a], rng)]
            states[h + 1] = _draw(trans_cdf[s, a], rng)
        return Trajectory(
            states=states,
            actions=actions,
            rewards=rewards,
            bounded_return=mdp.check_bounded_return,
        )

    def rollout_batch(
        self, mdp: TabularMDP, policy: Policy, n: int, streams: SeedStreams, label: str
    ) -> list[Trajectory]:
        """n 本の軌跡を、番号ごとに独立なストリームで生成する。

        結果は軌跡番号順に並び、並列度に依存しない。
        """
        if n < 1:
            raise ValidationError('rollout batch: n must be >= 1')

        def _one(index: int) -> Trajectory:
            return self.rollout(mdp, policy, streams.generator(label, index))

        if self.max_workers == 1:
            return [_one(i) for i in range(n)]
        with ThreadPoolExecutor(max_workers=self.max_workers) as executor:
            return list(executor.map(_one, range(n)))

    def monte_carlo_value(
        self, mdp: TabularMDP, policy: Policy, n_eval: int, streams: SeedStreams, label: str
    ) -> float:
        """n_eval 本の軌跡の収益の平均で方策価値を推定する。

        Raises:
            ValidationError: n_eval が 0 以下の場合。
        """
        if n_eval < 1:
            raise ValidationError('monte carlo value: n_eval must be >= 1')
        trajectories = self.rollout_batch(mdp, policy, n_eval, streams, label)
        returns = np.array([t.total_reward() for t in trajectories])
        return float(returns.sum() / n_eval)
