"""入れ子分割の族に対するモデル選択サービス。

予算を倍々に増やしながら、次元 d_j ≤ 2^r の中で最大の分割を選んで PAC 学習を実行し、
既知の最適値 v* を停止判定に使います。
"""

import math

import numpy as np

from src.exceptions import LearnerError, NoCertifiedPartitionError, ValidationError
from src.logger import logger
from src.models import (
    LearnerConfig,
    ModelEnsemble,
    PartitionFamily,
    Policy,
    SelectionResult,
    SelectionRound,
    TabularMDP,
)
from src.services.pac_service import PacService, log_ratio
from src.services.simulation_service import SeedStreams, SimulationService


def selection_eval_size(epsilon: float, delta: float, num_partitions: int) -> int:
    """評価用の軌跡数 ceil(9/(2ε²)·log(2N/δ)) を返す。"""
    return math.ceil(9.0 / (2.0 * epsilon**2) * math.log(2.0 * num_partitions / delta))


def round_budget(dimension: int, num_models: int, horizon: int, epsilon: float) -> int:
    """サブルーチンの反復上限 floor(d_i K log(2√(2K)H/ε)/log(5/3))（最低 1）を返す。"""
    bound = dimension * num_models * log_ratio(num_models, horizon, epsilon) / math.log(5 / 3)
    return max(1, math.floor(bound))


class SelectionService:
    """モデル選択のサービス。"""

    def __init__(self, pac_service: PacService, simulation_service: SimulationService) -> None:
        """初期化。

        Args:
            pac_service: PAC 学習サービス。
            simulation_service: シミュレーションサービス。
        """
        self.pac_service = pac_service
        self.simulation_service = simulation_service

    @staticmethod
    def check_nested(family: PartitionFamily) -> bool:
        """すべての i < j について、φ_j のセルが φ_i のセルに含まれるかを判定する。

        Raises:
            ValidationError: 分割の (S, A) グリッドが一致しない場合。
        """
        cells = []
        for phi in family.partitions:
            if phi.cells is None:
                raise ValidationError('check nested: every member must be a partition')
            cells.append(np.asarray(phi.cells).ravel())
        if len({c.size for c in cells}) != 1:
            raise ValidationError('check nested: partitions are defined on different (S, A) grids')
        for i, coarse in enumerate(cells):
            for fine in cells[i + 1 :]:
                # 細かい分割の各セルで、粗い分割のセル番号が 1 つに定まること
                for cell in np.unique(fine):
                    if np.unique(coarse[fine == cell]).size != 1:
                        return False
        return True

    @staticmethod
    def pick(family: PartitionFamily, round_index: int) -> int | None:
        """d_j ≤ 2^r を満たす中で最大の d_j を持つ分割の番号（同値なら後方）を返す。"""
        budget = 2**round_index
        eligible = [j for j, d in enumerate(family.dimensions) if d <= budget]
        if not eligible:
            return None
        largest = max(family.dimensions[j] for j in eligible)
        return max(j for j in eligible if family.dimensions[j] == largest)

    def run_model_selection(  # noqa: PLR0913
        self,
        target: TabularMDP,
        ensemble: ModelEnsemble,
        family: PartitionFamily,
        v_star: float,
        config: LearnerConfig,
        n_eval: int | None = None,
    ) -> SelectionResult:
        """倍々予算のモデル選択を実行する。

        ラウンド r ごとに分割を選び（直前と同じなら飛ばす）、ε/2 と δ/(2N) で PAC 学習を
        実行し、返された方策を評価して v̂ ≥ v* - 2ε/3 なら停止する。
        サブルーチンの失敗はラウンド記録に残して次へ進む。

        Args:
            target: 真の環境。
            ensemble: ベースモデル。
            family: 入れ子分割の族。
            v_star: 最適値 v*。
            config: 学習器の設定（ε, δ はモデル選択全体の値）。
            n_eval: 評価軌跡数の上書き。

        Returns:
            SelectionResult: 停止した分割と方策、全ラウンドの記録。

        Raises:
            ValidationError: 族が入れ子でない場合、または v* が [0,1] にない場合。
            NoCertifiedPartitionError: どの分割でも停止しなかった場合。
        """
        if not 0.0 <= v_star <= 1.0:
            raise ValidationError(f'model selection: v_star must lie in [0, 1], got {v_star}')
        if not self.check_nested(family):
            raise ValidationError('model selection: the partition family is not nested')
        epsilon, delta, size = config.epsilon, config.delta, family.size
        eval_size = n_eval or selection_eval_size(epsilon, delta, size)
        streams = SeedStreams(config.master_seed)
        rounds: list[SelectionRound] = []
        last: int | None = None
        r = 0
        while last != size - 1:
            index = self.pick(family, r)
            if index is None or index == last:
                r += 1
                continue
            last = index
            selection_round, policy = self._run_round(
                target, ensemble, family, index, r, config, streams, eval_size, v_star
            )
            rounds.append(selection_round)
            if selection_round.stopped and policy is not None:
                return SelectionResult(
                    chosen_index=index,
                    policy=policy,
                    rounds=tuple(rounds),
                    total_trajectories=sum(x.trajectories for x in rounds),
                )
            r += 1
        raise NoCertifiedPartitionError(
            'no partition in the family satisfied the stopping rule',
            rounds,
            sum(x.trajectories for x in rounds),
        )

    def _run_round(  # noqa: PLR0913
        self,
        target: TabularMDP,
        ensemble: ModelEnsemble,
        family: PartitionFamily,
        index: int,
        r: int,
        config: LearnerConfig,
        streams: SeedStreams,
        eval_size: int,
        v_star: float,
    ) -> tuple[SelectionRound, Policy | None]:
        """1 ラウンド分のサブルーチン実行と評価を行う。"""
        features = family.partitions[index]
        budget = round_budget(
            features.dimension, ensemble.num_models, target.horizon, config.epsilon
        )
        sub_config = config.model_copy(
            update={
                'epsilon': config.epsilon / 2.0,
                'delta': config.delta / (2.0 * family.size),
                'max_iterations': budget,
                'master_seed': int(streams.generator('round', r).integers(0, 2**63)),
            }
        )
        base = {
            'round_index': r,
            'partition_index': index,
            'dimension': features.dimension,
            'iteration_budget': budget,
        }
        logger.info(f'Model selection round r={r}: partition {index}', extra={'fields': base})
        try:
            result = self.pac_service.run_pac(target, ensemble, features, sub_config)
        except LearnerError as e:
            logger.warning(f'Model selection round r={r}: sub-run failed with {e.status}')
            return (
                SelectionRound(
                    **base,
                    status=e.status,
                    iterations=len(e.records),
                    trajectories=e.trajectories_used,
                ),
                None,
            )
        v_hat = self.simulation_service.monte_carlo_value(
            target, result.policy, eval_size, streams, f'select/{r}'
        )
        stopped = v_hat >= v_star - 2.0 * config.epsilon / 3.0
        return (
            SelectionRound(
                **base,
                status=result.status,
                iterations=len(result.records),
                mc_value=v_hat,
                trajectories=result.trajectories_used + eval_size,
                stopped=stopped,
            ),
            result.policy,
        )
