"""完全二分木上の困難インスタンスのドメインモデル。

ノードはヒープ順で番号付けする: (level, offset) ↦ 2^level - 1 + offset。
ノード n の子は 2n+1（行動 0）と 2n+2（行動 1）。
"""

from pydantic import PositiveInt, model_validator

from src.exceptions import ValidationError
from src.models.base import FrozenModel, IntArray
from src.models.ensemble import FeatureMap, ModelEnsemble, WeightMatrix
from src.models.mdp import TabularMDP


def node_index(level: int, offset: int) -> int:
    """(level, offset) のノード番号を返す。"""
    if level < 0 or not 0 <= offset < 2**level:
        raise ValidationError(f'tree node: invalid (level, offset) = ({level}, {offset})')
    return 2**level - 1 + offset


def leaf_state(depth: int, leaf: int) -> int:
    """深さ depth の木における i 番目の葉の状態番号を返す。"""
    if not 0 <= leaf < 2**depth:
        raise ValidationError(f'tree leaf: index {leaf} out of range [0, {2**depth})')
    return node_index(depth, leaf)


class TreeInstance(FrozenModel):
    """深さ H の完全二分木上の MDP の組 (M_1, M_2)。

    M_1 ではすべての葉が報酬 1、M_2 ではすべての葉が報酬 0 を返す。

    Attributes:
        depth: 木の深さ H。
        m1: すべての葉が報酬 1 のモデル。
        m2: すべての葉が報酬 0 のモデル。
    """

    depth: PositiveInt
    m1: TabularMDP
    m2: TabularMDP

    @model_validator(mode='after')
    def _validate(self) -> 'TreeInstance':
        expected = (self.num_nodes, 2, self.depth + 1)
        if self.m1.shape != expected or self.m2.shape != expected:
            raise ValidationError(f'tree instance: both models must have shape {expected}')
        return self

    @property
    def num_leaves(self) -> int:
        return int(2**self.depth)

    @property
    def num_nodes(self) -> int:
        return int(2 ** (self.depth + 1) - 1)

    @property
    def first_leaf(self) -> int:
        return self.num_leaves - 1


class StateAbstraction(FrozenModel):
    """状態集約写像。

    Attributes:
        classes: 各状態の抽象状態番号 (S,)。
        num_classes: 抽象状態数。
    """

    classes: IntArray
    num_classes: PositiveInt

    @model_validator(mode='after')
    def _validate(self) -> 'StateAbstraction':
        if self.classes.ndim != 1:
            raise ValidationError('state abstraction: classes must be a vector')
        if set(self.classes.tolist()) != set(range(self.num_classes)):
            raise ValidationError(
                'state abstraction: every class index must be used exactly as declared'
            )
        return self

    def members(self, cls: int) -> list[int]:
        """抽象状態 cls に属する状態の一覧を返す。"""
        return [int(s) for s in (self.classes == cls).nonzero()[0]]


class RealizableFixture(FrozenModel):
    """W* が既知の実現可能インスタンス一式。

    Attributes:
        target: 真の環境 M* = M(W*)。
        ensemble: ベースモデル。
        features: 特徴写像 φ。
        w_star: 真のパラメータ W*。
        v_star: target の最適値 v*。
    """

    target: TabularMDP
    ensemble: ModelEnsemble
    features: FeatureMap
    w_star: WeightMatrix
    v_star: float
