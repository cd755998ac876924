"""入れ子分割によるモデル選択のドメインモデル。"""

from pydantic import NonNegativeInt, PositiveInt, model_validator

from src.exceptions import ValidationError
from src.models.base import FrozenModel
from src.models.ensemble import FeatureMap
from src.models.mdp import Policy


class PartitionFamily(FrozenModel):
    """次元の昇順に並んだ partition 特徴写像の列 φ_1, ..., φ_N。

    入れ子構造の検証は ``SelectionService.check_nested`` が行う。

    Attributes:
        partitions: partition 種別の特徴写像。
    """

    partitions: tuple[FeatureMap, ...]

    @model_validator(mode='after')
    def _validate(self) -> 'PartitionFamily':
        if not self.partitions:
            raise ValidationError('partition family: at least one partition is required')
        shape = self.partitions[0].features.shape[:2]
        for i, phi in enumerate(self.partitions, start=1):
            if phi.kind != 'partition':
                raise ValidationError(
                    f'partition family: member {i} is not a partition feature map'
                )
            if phi.features.shape[:2] != shape:
                raise ValidationError(f'partition family: member {i} has a different (S, A) grid')
        dims = self.dimensions
        if any(a > b for a, b in zip(dims, dims[1:], strict=False)):
            raise ValidationError(f'partition family: dimensions must be ascending, got {dims}')
        return self

    @property
    def size(self) -> int:
        return len(self.partitions)

    @property
    def dimensions(self) -> list[int]:
        return [phi.dimension for phi in self.partitions]


class SelectionRound(FrozenModel):
    """モデル選択の 1 ラウンド分の記録。

    Attributes:
        round_index: ラウンド番号 r（0始まり）。
        partition_index: 選ばれた分割の番号（0始まり）。
        dimension: 分割の次元 d_i。
        iteration_budget: サブルーチンの反復上限。
        status: サブルーチンの終了状態（terminated または失敗理由）。
        iterations: サブルーチンが実行した反復数。
        mc_value: 返された方策のモンテカルロ評価値 v̂_i。
        trajectories: このラウンドで消費した軌跡数（評価分を含む）。
        stopped: 停止条件 v̂_i ≥ v* - 2ε/3 が成立したかどうか。
    """

    round_index: NonNegativeInt
    partition_index: NonNegativeInt
    dimension: PositiveInt
    iteration_budget: PositiveInt
    status: str
    iterations: NonNegativeInt
    mc_value: float | None = None
    trajectories: NonNegativeInt
    stopped: bool = False


class SelectionResult(FrozenModel):
    """モデル選択の結果。

    Attributes:
        chosen_index: 停止条件を満たした分割の番号。
        policy: 返された方策。
        rounds: 実行したラウンドの記録。
        total_trajectories: 全ラウンドの軌跡数の合計。
    """

    chosen_index: NonNegativeInt
    policy: Policy
    rounds: tuple[SelectionRound, ...]
    total_trajectories: NonNegativeInt

    @model_validator(mode='after')
    def _validate(self) -> 'SelectionResult':
        if self.total_trajectories != sum(r.trajectories for r in self.rounds):
            raise ValidationError('selection result: total_trajectories must sum every round')
        return self
