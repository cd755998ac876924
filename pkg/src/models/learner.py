"""バージョン空間学習器（PAC学習）のドメインモデル。"""

from typing import Literal

import numpy as np
from pydantic import Field, NonNegativeFloat, PositiveFloat, PositiveInt, model_validator

from src.exceptions import ValidationError
from src.models.base import FloatArray, FrozenModel
from src.models.ensemble import WeightMatrix
from src.models.mdp import Policy, ValueTable

MAX_SEED = 2**64 - 1


class LinearConstraint(FrozenModel):
    """バージョン空間を削る線形制約 |ŷ - <W, Ẑ>| ≤ τ。

    Attributes:
        z_hat: 測定行列 Ẑ (K×d)。
        y_hat: 測定値 ŷ。
        tolerance: 許容幅 τ = ε/(12√(dK)) + Hθ。
    """

    z_hat: FloatArray
    y_hat: float
    tolerance: PositiveFloat

    @model_validator(mode='after')
    def _validate(self) -> 'LinearConstraint':
        if self.z_hat.ndim != 2:  # noqa: PLR2004
            raise ValidationError('constraint: z_hat must be a K x d matrix')
        return self

    def residual(self, weights: WeightMatrix) -> float:
        """|ŷ - <W, Ẑ>| を返す（<A,B> = Tr(AᵀB)）。"""
        return abs(self.y_hat - float(np.sum(weights.entries * self.z_hat)))

    def admits(self, weights: WeightMatrix) -> bool:
        """W が制約を満たすかどうかを返す。"""
        return self.residual(weights) <= self.tolerance


class VersionSpace(FrozenModel):
    """W_0 と、追記のみされる線形制約列からなるバージョン空間。

    Attributes:
        num_models: K。
        dimension: d。
        constraints: これまでに追加された制約（追加順）。
    """

    num_models: PositiveInt
    dimension: PositiveInt
    constraints: tuple[LinearConstraint, ...] = ()

    @model_validator(mode='after')
    def _validate(self) -> 'VersionSpace':
        for c in self.constraints:
            if c.z_hat.shape != (self.num_models, self.dimension):
                raise ValidationError(
                    f'version space: constraint shape {c.z_hat.shape} does not match '
                    f'({self.num_models}, {self.dimension})'
                )
        return self

    def with_constraint(self, constraint: LinearConstraint) -> 'VersionSpace':
        """制約を 1 つ追加した新しいバージョン空間を返す。"""
        return VersionSpace(
            num_models=self.num_models,
            dimension=self.dimension,
            constraints=(*self.constraints, constraint),
        )


class LearnerConfig(FrozenModel):
    """学習器の設定。

    n / n_eval / max_iterations を省略すると、定理の式から既定値を計算する。

    Attributes:
        epsilon: 精度 ε ∈ (0,1)。
        delta: 失敗確率 δ ∈ (0,1)。
        theta: 想定する近似誤差 θ ≥ 0。
        n: 探索ステップごとの軌跡数。
        n_eval: 評価用の軌跡数。
        max_iterations: 反復回数の上限。
        oracle_samples: 楽観的選択で W_0 から引く候補数。
        grid_step: 候補グリッドの刻み幅（指定時は candidate_grid に加えて列挙）。
        candidate_grid: 常に候補に含める重み行列。
        volume_samples: 体積推定に使うサンプル数（0 で無効）。
        master_seed: 乱数ストリームの親シード。
    """

    epsilon: float = Field(gt=0.0, lt=1.0)
    delta: float = Field(gt=0.0, lt=1.0)
    theta: NonNegativeFloat = 0.0
    n: PositiveInt | None = None
    n_eval: PositiveInt | None = None
    max_iterations: PositiveInt | None = None
    oracle_samples: int = Field(default=200, ge=0)
    grid_step: PositiveFloat | None = None
    candidate_grid: tuple[WeightMatrix, ...] = ()
    volume_samples: int = Field(default=0, ge=0)
    master_seed: int = Field(default=0, ge=0, le=MAX_SEED)


class IterationRecord(FrozenModel):
    """1 反復分のテレメトリ。

    Attributes:
        t: 反復番号（1始まり）。
        w_t: 楽観的に選ばれた W_t。
        optimistic_value: v_{W_t}。
        mc_estimate: モンテカルロ推定値 v̂_t。
        terminated: 終了判定が成立したかどうか。
        explored: 探索（軌跡収集と制約追加）を行ったかどうか。
        constraint_added: 追加された制約。
        pool_size: 楽観的オラクルが評価した候補数。
        wstar_retained: 既知の W* がバージョン空間に残っているか。
        volume_estimate: バージョン空間の体積比の推定値。
    """

    t: PositiveInt
    w_t: WeightMatrix
    optimistic_value: float
    mc_estimate: float
    terminated: bool
    explored: bool
    constraint_added: LinearConstraint | None = None
    pool_size: int = 0
    wstar_retained: bool | None = None
    volume_estimate: float | None = None

    @model_validator(mode='after')
    def _validate(self) -> 'IterationRecord':
        if self.terminated and self.constraint_added is not None:
            raise ValidationError(
                'iteration record: a terminated iteration cannot add a constraint'
            )
        return self


class PacResult(FrozenModel):
    """PAC学習の結果。

    Attributes:
        status: 終了状態。
        policy: 返された方策 π_t。
        final_w: 最後の W_t。
        records: 反復ごとの記録。
        trajectories_used: 使用した軌跡の総数。
    """

    status: Literal['terminated'] = 'terminated'
    policy: Policy
    final_w: WeightMatrix
    records: tuple[IterationRecord, ...]
    trajectories_used: int

    @property
    def explored_iterations(self) -> int:
        return sum(1 for r in self.records if r.explored)


class OptimisticChoice(FrozenModel):
    """楽観的オラクルの選択結果。

    Attributes:
        weights: 選ばれた W_t。
        policy: M(W_t) の最適方策 π_t。
        value: v_{W_t}。
        values: M(W_t) の最適価値表 V_t。
        pool_size: 評価した候補数。
    """

    weights: WeightMatrix
    policy: Policy
    value: float
    values: ValueTable
    pool_size: PositiveInt
