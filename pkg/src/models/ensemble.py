"""ベースモデルのアンサンブル、特徴写像、重み行列のドメインモデル。"""

from typing import Literal

import numpy as np
from numpy.typing import NDArray
from pydantic import PositiveInt, model_validator

from src.config import settings
from src.exceptions import ValidationError
from src.models.base import FloatArray, FrozenModel, IntArray
from src.models.mdp import TabularMDP, reachable_reward_bound

FeatureKind = Literal['constant', 'partition', 'tabular']


class FeatureMap(FrozenModel):
    """(s,a) を (d-1) 次元単体上の点へ写す特徴写像 φ。

    種類によらず、特徴ベクトルは (S, A, d) の表として保持する。

    Attributes:
        kind: constant / partition / tabular のいずれか。
        dimension: 次元 d。
        features: 形状 (S, A, d) の特徴ベクトル。
        cells: partition の場合のセル番号 (S, A)。
    """

    kind: FeatureKind
    dimension: PositiveInt
    features: FloatArray
    cells: IntArray | None = None

    @model_validator(mode='after')
    def _validate(self) -> 'FeatureMap':
        """単体上の値であること、partition ならワンホットであることを検証する。"""
        if self.features.ndim != 3 or self.features.shape[2] != self.dimension:  # noqa: PLR2004
            raise ValidationError(f'feature map: features must have shape (S, A, {self.dimension})')
        tol = settings.probability_tolerance
        if np.any(self.features < -tol) or np.any(np.abs(self.features.sum(axis=-1) - 1.0) > tol):
            raise ValidationError('feature map: every phi(s,a) must lie on the simplex')
        if self.kind == 'constant' and self.dimension != 1:
            raise ValidationError('feature map: constant kind requires d = 1')
        if self.kind == 'partition':
            if self.cells is None or self.cells.shape != self.features.shape[:2]:
                raise ValidationError('feature map: partition kind requires a cell index per (s,a)')
            one_hot = np.eye(self.dimension)[self.cells]
            if not np.array_equal(one_hot, self.features):
                raise ValidationError(
                    'feature map: partition features must be one-hot cell indicators'
                )
        return self

    @classmethod
    def constant(cls, num_states: int, num_actions: int) -> 'FeatureMap':
        """φ ≡ 1 (d = 1) の特徴写像を作る。"""
        return cls(
            kind='constant',
            dimension=1,
            features=np.ones((num_states, num_actions, 1)),
        )

    @classmethod
    def partition(cls, cells: NDArray[np.int64], dimension: int | None = None) -> 'FeatureMap':
        """セル番号表から partition 特徴写像を作る。

        Args:
            cells: 形状 (S, A) のセル番号。
            dimension: セル数 d。省略時は最大セル番号 + 1。

        Returns:
            FeatureMap: partition 種別の特徴写像。
        """
        cells = np.asarray(cells, dtype=np.int64)
        d = int(cells.max()) + 1 if dimension is None else dimension
        if np.any(cells < 0) or np.any(cells >= d):
            raise ValidationError(f'feature map: cell indices must lie in [0, {d})')
        return cls(kind='partition', dimension=d, features=np.eye(d)[cells], cells=cells)

    @classmethod
    def tabular(cls, features: NDArray[np.float64]) -> 'FeatureMap':
        """(S, A, d) の明示的な特徴表から特徴写像を作る。"""
        features = np.asarray(features, dtype=np.float64)
        return cls(kind='tabular', dimension=features.shape[-1], features=features)

    @property
    def num_states(self) -> int:
        return int(self.features.shape[0])

    @property
    def num_actions(self) -> int:
        return int(self.features.shape[1])

    def __call__(self, state: int, action: int) -> NDArray[np.float64]:
        """φ(s,a) を返す。"""
        return self.features[state, action]


class WeightMatrix(FrozenModel):
    """K×d のパラメータ W。各列は K 次元の確率単体上にある（W ∈ W_0）。

    Attributes:
        entries: 形状 (K, d) の行列。
    """

    entries: FloatArray

    @model_validator(mode='after')
    def _validate(self) -> 'WeightMatrix':
        if self.entries.ndim != 2:  # noqa: PLR2004
            raise ValidationError('weight matrix: entries must be a K x d matrix')
        if not is_column_stochastic(self.entries):
            raise ValidationError(
                'weight matrix: entries must lie in [0,1] with columns summing to 1'
            )
        return self

    @property
    def num_models(self) -> int:
        return int(self.entries.shape[0])

    @property
    def dimension(self) -> int:
        return int(self.entries.shape[1])

    @classmethod
    def selecting(cls, model_index: int, num_models: int, dimension: int) -> 'WeightMatrix':
        """すべての列が基底ベクトル e_k である行列を作る。"""
        entries = np.zeros((num_models, dimension))
        entries[model_index, :] = 1.0
        return cls(entries=entries)

    @classmethod
    def barycenter(cls, num_models: int, dimension: int) -> 'WeightMatrix':
        """W_0 の重心（全要素 1/K）を返す。"""
        return cls(entries=np.full((num_models, dimension), 1.0 / num_models))


def is_column_stochastic(entries: NDArray[np.float64]) -> bool:
    """行列が W_0 の要素（列ごとに確率ベクトル）かどうかを判定する。"""
    tol = settings.probability_tolerance
    return bool(
        np.all(entries >= -tol)
        and np.all(entries <= 1.0 + tol)
        and np.all(np.abs(entries.sum(axis=0) - 1.0) <= tol)
    )


def _check_mixture_return_bound(models: tuple[TabularMDP, ...]) -> None:
    """どの混合 M(W) でも収益上界が保たれることを検証する。

    混合モデルの遷移サポートと報酬サポートはベースモデルの和集合に含まれるため、
    和集合の遷移グラフで到達可能な状態について報酬の最大値を足し合わせる。

    Raises:
        ValidationError: 和集合上の上界が 1 を超える場合。
    """
    bound = reachable_reward_bound(
        models[0].initial_dist,
        np.stack([m.transitions for m in models]).max(axis=0),
        np.stack([m.max_rewards() for m in models]).max(axis=0),
        models[0].horizon,
    )
    if bound > 1.0 + settings.probability_tolerance:
        raise ValidationError(
            f'ensemble: bounded return fails for some mixture; the union of reachable'
            f' rewards sums to {bound:.6f} > 1'
        )


class ModelEnsemble(FrozenModel):
    """K 個のベースMDP {M_1, ..., M_K}。

    Attributes:
        base_models: S, A, H, P1 を共有するベースモデルのリスト。
    """

    base_models: tuple[TabularMDP, ...]

    @model_validator(mode='after')
    def _validate(self) -> 'ModelEnsemble':
        if not self.base_models:
            raise ValidationError('ensemble: at least one base model is required')
        first = self.base_models[0]
        for k, model in enumerate(self.base_models[1:], start=2):
            if model.shape != first.shape:
                raise ValidationError(
                    f'ensemble: base model {k} shape {model.shape} differs from {first.shape}'
                )
            if not np.array_equal(model.initial_dist, first.initial_dist):
                raise ValidationError(
                    f'ensemble: base model {k} has a different initial distribution'
                )
        if all(m.check_bounded_return for m in self.base_models):
            _check_mixture_return_bound(self.base_models)
        return self

    @property
    def num_models(self) -> int:
        return len(self.base_models)

    @property
    def shape(self) -> tuple[int, int, int]:
        return self.base_models[0].shape

    def stacked_transitions(self) -> NDArray[np.float64]:
        """遷移確率を (K, S, A, S) に積み上げて返す。"""
        return np.stack([m.transitions for m in self.base_models])

    def stacked_expected_rewards(self) -> NDArray[np.float64]:
        """期待報酬を (K, S, A) に積み上げて返す。"""
        return np.stack([m.expected_rewards() for m in self.base_models])


class DiscriminatorVector(FrozenModel):
    """(s,a) における各ベースモデルの E_{M_k}[r + f(s')] を並べた K 次元ベクトル V̄(s,a)。

    Attributes:
        entries: 長さ K のベクトル。
    """

    entries: FloatArray

    @model_validator(mode='after')
    def _validate(self) -> 'DiscriminatorVector':
        if self.entries.ndim != 1:
            raise ValidationError('discriminator vector: entries must be a K-vector')
        return self

    def project(self, coefficients: NDArray[np.float64]) -> float:
        """混合係数 Wφ(s,a) との内積を返す。"""
        return float(coefficients @ self.entries)
