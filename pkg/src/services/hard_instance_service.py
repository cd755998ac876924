"""困難インスタンスの生成サービス。

完全二分木上のベースモデル対、葉ごとの分割、入れ子の分割対、偏った葉の MDP、
経路集約による状態抽象化、受け入れ試験用の実現可能インスタンスを生成します。

木のエピソード長は H+1: 根がステップ 1 で行動し、葉はステップ H+1 に到達して
そこでの行動で葉の報酬を受け取る。葉は自己ループする。
"""

import numpy as np
from numpy.typing import NDArray

from src.config import settings
from src.exceptions import ValidationError
from src.models import (
    FeatureMap,
    ModelEnsemble,
    PartitionFamily,
    StateAbstraction,
    TabularMDP,
    TreeInstance,
    WeightMatrix,
    leaf_state,
    node_index,
)
from src.models.hard_instances import RealizableFixture
from src.services.ensemble_service import EnsembleService
from src.services.planning_service import PlanningService

NUM_TREE_ACTIONS = 2


def _tree_transitions(depth: int) -> NDArray[np.float64]:
    num_nodes = 2 ** (depth + 1) - 1
    first_leaf = 2**depth - 1
    transitions = np.zeros((num_nodes, NUM_TREE_ACTIONS, num_nodes))
    for n in range(num_nodes):
        for a in range(NUM_TREE_ACTIONS):
            transitions[n, a, n if n >= first_leaf else 2 * n + 1 + a] = 1.0
    return transitions


def _tree_mdp(depth: int, leaf_reward_probs: NDArray[np.float64]) -> TabularMDP:
    """葉 j の報酬が Bernoulli(leaf_reward_probs[j]) の木 MDP を作る。

    horizon は depth+1（葉での 1 ステップを含む）。
    """
    num_nodes = 2 ** (depth + 1) - 1
    first_leaf = 2**depth - 1
    initial = np.zeros(num_nodes)
    initial[0] = 1.0
    one = np.zeros(num_nodes)
    one[first_leaf:] = leaf_reward_probs
    reward_probs = np.zeros((num_nodes, NUM_TREE_ACTIONS, 2))
    reward_probs[:, :, 1] = one[:, None]
    reward_probs[:, :, 0] = 1.0 - reward_probs[:, :, 1]
    return TabularMDP(
        num_states=num_nodes,
        num_actions=NUM_TREE_ACTIONS,
        horizon=depth + 1,
        initial_dist=initial,
        transitions=_tree_transitions(depth),
        reward_values=np.array([0.0, 1.0]),
        reward_probs=reward_probs,
    )


class HardInstanceService:
    """困難インスタンスの生成サービス。"""

    def __init__(
        self, ensemble_service: EnsembleService, planning_service: PlanningService
    ) -> None:
        """初期化。

        Args:
            ensemble_service: アンサンブルサービス。
            planning_service: 計画サービス。
        """
        self.ensemble_service = ensemble_service
        self.planning_service = planning_service

    @staticmethod
    def _check_depth(depth: int) -> None:
        if not 1 <= depth <= settings.max_tree_depth:
            raise ValidationError(
                f'tree depth H={depth} must lie in [1, {settings.max_tree_depth}]'
            )

    def tree_base_models(self, depth: int) -> TreeInstance:
        """M_1（全葉が報酬 1）と M_2（全葉が報酬 0）の組を返す。

        深さ H の木でもエピソード長は H+1 になる。根から H 回の行動で葉に着き、
        ステップ H+1 の葉での行動で報酬を受け取るため。

        Raises:
            ValidationError: 深さが範囲外の場合。
        """
        self._check_depth(depth)
        leaves = 2**depth
        return TreeInstance(
            depth=depth,
            m1=_tree_mdp(depth, np.ones(leaves)),
            m2=_tree_mdp(depth, np.zeros(leaves)),
        )

    def tree_ensemble(self, depth: int) -> ModelEnsemble:
        tree = self.tree_base_models(depth)
        return ModelEnsemble(base_models=(tree.m1, tree.m2))

    def leaf_partition(self, depth: int, leaf: int) -> FeatureMap:
        """葉 leaf だけをセル 0、その他すべてをセル 1 とする d = 2 の分割を返す。"""
        self._check_depth(depth)
        state = leaf_state(depth, leaf)
        cells = np.ones((2 ** (depth + 1) - 1, NUM_TREE_ACTIONS), dtype=np.int64)
        cells[state, :] = 0
        return FeatureMap.partition(cells, 2)

    def per_leaf_partition(self, depth: int) -> FeatureMap:
        """葉 j をセル j、内部ノードをセル 0 とする d = 2^H の分割を返す。"""
        self._check_depth(depth)
        first_leaf = 2**depth - 1
        cells = np.zeros((2 ** (depth + 1) - 1, NUM_TREE_ACTIONS), dtype=np.int64)
        cells[first_leaf:, :] = np.arange(2**depth)[:, None]
        return FeatureMap.partition(cells, 2**depth)

    def nested_pair(self, depth: int) -> PartitionFamily:
        """{全体を 1 セル (d=1), 葉ごと (d=2^H)} の入れ子の族を返す。"""
        self._check_depth(depth)
        cells = np.zeros((2 ** (depth + 1) - 1, NUM_TREE_ACTIONS), dtype=np.int64)
        coarse = FeatureMap.partition(cells, 1)
        return PartitionFamily(partitions=(coarse, self.per_leaf_partition(depth)))

    def leaf_reward_mdp(self, depth: int, leaf: int) -> TabularMDP:
        """葉 leaf だけが報酬 1 を返す MDP（leaf_partition と単位行列 W による混合）を返す。"""
        return self.ensemble_service.mix_model(
            self.tree_ensemble(depth),
            self.leaf_partition(depth, leaf),
            WeightMatrix(entries=np.eye(2)),
        )

    def biased_leaf_weights(self, depth: int, leaf: int, bias: float) -> WeightMatrix:
        """葉 leaf の列を (1/2+2ε, 1/2-2ε)、他を (1/2, 1/2) とする W を返す。"""
        self._check_bias(bias)
        leaf_state(depth, leaf)
        entries = np.full((2, 2**depth), 0.5)
        entries[:, leaf] = (0.5 + 2 * bias, 0.5 - 2 * bias)
        return WeightMatrix(entries=entries)

    @staticmethod
    def _check_bias(bias: float) -> None:
        if not 0.0 <= bias < 0.25:  # noqa: PLR2004
            raise ValidationError(f'biased leaf: epsilon must lie in [0, 1/4), got {bias}')

    def biased_leaf_mdp(self, depth: int, leaf: int, bias: float) -> TabularMDP:
        """葉 leaf が Bernoulli(1/2+2ε)、他の葉が Bernoulli(1/2) の報酬を返す MDP を作る。

        Raises:
            ValidationError: 葉番号または ε が範囲外の場合。
        """
        self._check_depth(depth)
        self._check_bias(bias)
        leaf_state(depth, leaf)
        probs = np.full(2**depth, 0.5)
        probs[leaf] = 0.5 + 2 * bias
        return _tree_mdp(depth, probs)

    def path_abstraction_family(self, depth: int) -> list[StateAbstraction]:
        """葉 i への経路上のノードを段ごとに単独クラス、経路外をまとめたクラスにする抽象化の列。

        根は単独クラス 0、段 l ≥ 1 の経路上ノードはクラス 2l-1、経路外はクラス 2l。
        """
        self._check_depth(depth)
        levels = np.concatenate([np.full(2**level, level) for level in range(depth + 1)])
        family = []
        for leaf in range(2**depth):
            classes = 2 * levels
            for level in range(1, depth + 1):
                classes[node_index(level, leaf >> (depth - level))] = 2 * level - 1
            family.append(StateAbstraction(classes=classes, num_classes=2 * depth + 1))
        return family

    @staticmethod
    def is_bisimulation(mdp: TabularMDP, abstraction: StateAbstraction) -> bool:
        """各クラス内で行動ごとに報酬分布と集約後の遷移分布が一致するかを判定する。"""
        if abstraction.classes.shape != (mdp.num_states,):
            raise ValidationError('bisimulation: abstraction does not match the number of states')
        aggregate = np.zeros((mdp.num_states, abstraction.num_classes))
        aggregate[np.arange(mdp.num_states), abstraction.classes] = 1.0
        next_class = mdp.transitions @ aggregate
        tol = settings.probability_tolerance
        for cls in range(abstraction.num_classes):
            members = abstraction.members(cls)
            head = members[0]
            for other in members[1:]:
                if np.max(np.abs(mdp.reward_probs[other] - mdp.reward_probs[head])) > tol:
                    return False
                if np.max(np.abs(next_class[other] - next_class[head])) > tol:
                    return False
        return True

    def realizable_fixture(self) -> RealizableFixture:
        """6 状態・2 行動・H=3・K=2・d=2 の実現可能インスタンスを返す。

        遷移は決定的で両モデル共通: s0 -a0-> s1, s0 -a1-> s2, s1 -> s3,
        s2 -a0-> s4, s2 -a1-> s5、s3..s5 は自己ループ。報酬はステップ 3 の状態のみ。
        分割はセル 0 = {s1, s3}、セル 1 = その他で、W* はセル 0 を M_2、セル 1 を M_1 に割り当てる。
        """
        m1 = _fixture_mdp(_DETERMINISTIC_EDGES, {3: 0.9, 4: 0.5, 5: 0.2}, bernoulli=False)
        m2 = _fixture_mdp(_DETERMINISTIC_EDGES, {3: 0.1, 4: 0.6, 5: 0.3}, bernoulli=False)
        return self._fixture(ModelEnsemble(base_models=(m1, m2)), self.fixture_star_weights()[2])

    def stochastic_fixture(self) -> RealizableFixture:
        """realizable_fixture と同じ層構造で、遷移と報酬が確率的な実現可能インスタンスを返す。

        ステップ 1 は s0、ステップ 2 は {s1, s2}、ステップ 3 は {s3, s4, s5}。
        遷移はモデルごとに異なる確率を持ち、s3 と s5 の報酬は Bernoulli、s4 は常に 0。
        W* は W_0 の内部の点で、セル 0 に (0.3, 0.7)、セル 1 に (0.6, 0.4) を割り当てる。
        """
        m1 = _fixture_mdp(_NOISY_EDGES[0], {3: 0.9, 5: 0.3}, bernoulli=True)
        m2 = _fixture_mdp(_NOISY_EDGES[1], {3: 0.7, 5: 0.9}, bernoulli=True)
        return self._fixture(ModelEnsemble(base_models=(m1, m2)), self.stochastic_star_weights()[2])

    def _fixture(self, ensemble: ModelEnsemble, w_star: WeightMatrix) -> RealizableFixture:
        features = self.fixture_family().partitions[1]
        target = self.ensemble_service.mix_model(ensemble, features, w_star)
        table, _ = self.planning_service.backward_induction(target)
        return RealizableFixture(
            target=target,
            ensemble=ensemble,
            features=features,
            w_star=w_star,
            v_star=self.planning_service.optimal_value(target, table),
        )

    @staticmethod
    def fixture_family() -> PartitionFamily:
        """realizable_fixture 上の入れ子の族 {d=1, d=2, d=4} を返す。

        d=4 のセルは {s1}, {s3}, {s0, s2}, {s4, s5}。
        """
        by_state = {
            1: [0, 0, 0, 0, 0, 0],
            2: [1, 0, 1, 0, 1, 1],
            4: [2, 0, 2, 1, 3, 3],
        }
        return PartitionFamily(
            partitions=tuple(
                FeatureMap.partition(np.repeat(np.array(cells)[:, None], 2, axis=1), d)
                for d, cells in by_state.items()
            )
        )

    @staticmethod
    def fixture_star_weights() -> dict[int, WeightMatrix]:
        """fixture_family の d=2, d=4 の分割に対する W* を次元ごとに返す。d=1 は実現不可能。"""
        return {
            2: WeightMatrix(entries=np.array([[0.0, 1.0], [1.0, 0.0]])),
            4: WeightMatrix(entries=np.array([[0.0, 0.0, 1.0, 1.0], [1.0, 1.0, 0.0, 0.0]])),
        }

    @staticmethod
    def stochastic_star_weights() -> dict[int, WeightMatrix]:
        """stochastic_fixture の W* を次元ごとに返す。"""
        return {
            2: WeightMatrix(entries=np.array([[0.3, 0.6], [0.7, 0.4]])),
            4: WeightMatrix(entries=np.array([[0.3, 0.3, 0.6, 0.6], [0.7, 0.7, 0.4, 0.4]])),
        }


Edges = dict[tuple[int, int], dict[int, float]]

_DETERMINISTIC_EDGES: Edges = {
    (0, 0): {1: 1.0},
    (0, 1): {2: 1.0},
    (1, 0): {3: 1.0},
    (1, 1): {3: 1.0},
    (2, 0): {4: 1.0},
    (2, 1): {5: 1.0},
}

# 葉側 s3..s5 は自己ループ
_NOISY_EDGES: tuple[Edges, Edges] = (
    {
        (0, 0): {1: 0.9, 2: 0.1},
        (0, 1): {1: 0.2, 2: 0.8},
        (1, 0): {3: 0.9, 4: 0.1},
        (1, 1): {4: 0.9, 5: 0.1},
        (2, 0): {3: 0.6, 4: 0.4},
        (2, 1): {4: 1.0},
    },
    {
        (0, 0): {1: 0.4, 2: 0.6},
        (0, 1): {1: 0.1, 2: 0.9},
        (1, 0): {3: 0.6, 4: 0.4},
        (1, 1): {4: 1.0},
        (2, 0): {3: 0.1, 4: 0.9},
        (2, 1): {4: 0.9, 5: 0.1},
    },
)


def _fixture_mdp(edges: Edges, rewards: dict[int, float], *, bernoulli: bool) -> TabularMDP:
    """6 状態・H=3 の MDP を作る。

    bernoulli が真なら rewards[s] は報酬 1 の確率、偽なら決定的な報酬値。
    """
    num_states = 6
    transitions = np.zeros((num_states, 2, num_states))
    for (s, a), successors in edges.items():
        for nxt, p in successors.items():
            transitions[s, a, nxt] = p
    for s in (3, 4, 5):
        transitions[s, :, s] = 1.0
    supports: list[list[float]] = []
    probs: list[list[float]] = []
    for s in range(num_states):
        value = rewards.get(s, 0.0)
        support, p = ([0.0, 1.0], [1.0 - value, value]) if bernoulli else ([value], [1.0])
        supports.extend([support, support])
        probs.extend([p, p])
    initial = np.zeros(num_states)
    initial[0] = 1.0
    return TabularMDP.from_reward_lists(initial, transitions, 3, supports, probs)
