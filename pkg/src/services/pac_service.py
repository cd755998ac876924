"""線形モデルアンサンブルに対する PAC 学習サービス。

楽観的なモデル選択、射影測定 (Ẑ_t, ŷ_t) の推定、線形カットによるバージョン空間の
削減、終了判定からなる学習ループを実装します。
"""

import math

import numpy as np

from src.exceptions import EmptyVersionSpaceError, IterationCapExceededError, ValidationError
from src.logger import logger
from src.models import (
    FeatureMap,
    IterationRecord,
    LearnerConfig,
    LinearConstraint,
    ModelEnsemble,
    PacResult,
    TabularMDP,
    Trajectory,
    ValueTable,
    VersionSpace,
    WeightMatrix,
)
from src.models.learner import OptimisticChoice
from src.services.ensemble_service import EnsembleService
from src.services.planning_service import PlanningService
from src.services.simulation_service import SeedStreams, SimulationService
from src.services.version_space_service import VersionSpaceService

VOLUME_STREAM = 'volume'


def log_ratio(num_models: int, horizon: int, epsilon: float) -> float:
    """log(2√(2K)H/ε) を返す。正でなければエラー。"""
    scale = 2.0 * math.sqrt(2.0 * num_models) * horizon
    if epsilon >= scale:
        raise ValidationError(f'epsilon={epsilon} must be smaller than 2*sqrt(2K)*H={scale:.6g}')
    return math.log(scale / epsilon)


def iteration_bound(dimension: int, num_models: int, horizon: int, epsilon: float) -> int:
    """探索反復数の上界 ceil(dK·log(2√(2K)H/ε)/log(5/3)) を返す。"""
    ratio = log_ratio(num_models, horizon, epsilon)
    return math.ceil(dimension * num_models * ratio / math.log(5 / 3))


def default_sample_sizes(
    dimension: int, num_models: int, horizon: int, epsilon: float, delta: float
) -> tuple[int, int, int]:
    """定理の定数による (T, n, n_eval) を返す。

    T = ceil(dK·log(2√(2K)H/ε)/log(5/3))、
    n_eval = ceil(32H²/ε²·log(4T/δ))、
    n = ceil(1800d²KH²/ε²·log(8dKT/δ))。

    Raises:
        ValidationError: ε ≥ 2√(2K)H、または δ が (0,1) にない場合。
    """
    if not 0.0 < delta < 1.0 or epsilon <= 0.0:
        raise ValidationError('sample sizes: epsilon must be positive and delta in (0, 1)')
    t = iteration_bound(dimension, num_models, horizon, epsilon)
    h2 = horizon**2
    n_eval = math.ceil(32 * h2 / epsilon**2 * math.log(4 * t / delta))
    n = math.ceil(
        1800 * dimension**2 * num_models * h2 / epsilon**2
        * math.log(8 * dimension * num_models * t / delta)
    )
    return t, n, n_eval


def cut_tolerance(
    epsilon: float, dimension: int, num_models: int, horizon: int, theta: float
) -> float:
    """線形カットの許容幅 ε/(12√(dK)) + Hθ を返す。"""
    return epsilon / (12.0 * math.sqrt(dimension * num_models)) + horizon * theta


def termination_threshold(
    epsilon: float, dimension: int, num_models: int, horizon: int, theta: float
) -> float:
    """終了判定のしきい値 3ε/4 + (3√(dK)+1)Hθ を返す。"""
    return 0.75 * epsilon + (3.0 * math.sqrt(dimension * num_models) + 1.0) * horizon * theta


def acceptance_threshold(
    epsilon: float, dimension: int, num_models: int, horizon: int, theta: float
) -> float:
    """返された方策の保証幅 ε + (3√(dK)+2)Hθ を返す。"""
    return epsilon + (3.0 * math.sqrt(dimension * num_models) + 2.0) * horizon * theta


def _check_candidate_grid(config: LearnerConfig, num_models: int, dimension: int) -> None:
    """candidate_grid の行列がすべて K×d であることを検証する。"""
    for w in config.candidate_grid:
        if w.entries.shape != (num_models, dimension):
            raise ValidationError(
                f'candidate_grid: expected {num_models} x {dimension} weight matrices,'
                f' got {w.entries.shape}'
            )


class PacService:
    """PAC 学習ループのサービス。"""

    def __init__(
        self,
        planning_service: PlanningService,
        simulation_service: SimulationService,
        ensemble_service: EnsembleService,
        version_space_service: VersionSpaceService,
    ) -> None:
        """初期化。

        Args:
            planning_service: 計画サービス。
            simulation_service: シミュレーションサービス。
            ensemble_service: アンサンブルサービス。
            version_space_service: バージョン空間サービス。
        """
        self.planning_service = planning_service
        self.simulation_service = simulation_service
        self.ensemble_service = ensemble_service
        self.version_space_service = version_space_service

    def _candidate_pool(
        self,
        space: VersionSpace,
        config: LearnerConfig,
        rng: np.random.Generator,
        previous: WeightMatrix | None,
    ) -> list[WeightMatrix]:
        """候補プール（グリッド、サンプル、直前の W_t の順）を作る。"""
        vs = self.version_space_service
        k, d = space.num_models, space.dimension
        _check_candidate_grid(config, k, d)
        grid = list(config.candidate_grid)
        if config.grid_step is not None:
            grid.extend(self.ensemble_service.weight_grid(k, d, config.grid_step))
        pool = [w for w in grid if vs.contains(space, w)]

        n_chain = 0 if k == 1 else config.oracle_samples // 2
        n_reject = config.oracle_samples - n_chain
        if n_reject > 0:
            draws = vs.sample_uniform(k, d, n_reject, rng)
            pool.extend(WeightMatrix(entries=w) for w in draws[vs.contains_batch(space, draws)])
        if n_chain > 0:
            start = self._chain_start(space, previous, pool)
            if start is not None:
                pool.extend(vs.hit_and_run(space, start, n_chain, rng))

        if previous is not None and vs.contains(space, previous):
            pool.append(previous)
        return pool

    def _chain_start(
        self, space: VersionSpace, previous: WeightMatrix | None, pool: list[WeightMatrix]
    ) -> WeightMatrix | None:
        """hit-and-run の開始点（直前の W_t、重心、プールの先頭の順）を返す。"""
        barycenter = WeightMatrix.barycenter(space.num_models, space.dimension)
        for start in (previous, barycenter):
            if start is not None and self.version_space_service.contains(space, start):
                return start
        return pool[0] if pool else None

    def optimistic_select(  # noqa: PLR0913
        self,
        space: VersionSpace,
        ensemble: ModelEnsemble,
        features: FeatureMap,
        config: LearnerConfig,
        rng: np.random.Generator,
        previous: WeightMatrix | None = None,
    ) -> OptimisticChoice:
        """候補プールの中で v_W が最大の W を選ぶ（同値なら先の候補）。

        Raises:
            EmptyVersionSpaceError: 候補が 1 つも残らない場合。
        """
        pool = self._candidate_pool(space, config, rng, previous)
        if not pool:
            raise EmptyVersionSpaceError(
                'no candidate weight matrix survived the version space filter',
                diagnostics={
                    'constraints': len(space.constraints),
                    'oracle_samples': config.oracle_samples,
                    'grid_candidates': len(config.candidate_grid),
                    'grid_step': config.grid_step,
                },
            )
        initial = ensemble.base_models[0].initial_dist
        horizon = ensemble.shape[2]
        best_value, best = -math.inf, pool[0]
        for candidate in pool:
            rewards, transitions = self.ensemble_service.mixed_arrays(ensemble, features, candidate)
            values, _, _ = self.planning_service.plan(rewards, transitions, horizon)
            value = float(initial @ values[0])
            if value > best_value:
                best_value, best = value, candidate
        mixed = self.ensemble_service.mix_model(ensemble, features, best)
        table, policy = self.planning_service.backward_induction(mixed)
        return OptimisticChoice(
            weights=best, policy=policy, value=best_value, values=table, pool_size=len(pool)
        )

    def estimate_constraint(
        self,
        trajectories: list[Trajectory],
        ensemble: ModelEnsemble,
        features: FeatureMap,
        values: ValueTable,
        config: LearnerConfig,
    ) -> LinearConstraint:
        """軌跡から Ẑ_t と ŷ_t を推定し、線形制約を作る。

        Ẑ_t = (1/n) Σ_i Σ_h V̄_{t,h}(s_h,a_h) φ(s_h,a_h)ᵀ、
        ŷ_t = (1/n) Σ_i Σ_h (r_h + V_{t,h+1}(s_{h+1}))。

        Raises:
            ValidationError: 軌跡が空の場合。
        """
        if not trajectories:
            raise ValidationError('estimate constraint: at least one trajectory is required')
        horizon = ensemble.shape[2]
        states = np.stack([t.states for t in trajectories])
        actions = np.stack([t.actions for t in trajectories])
        rewards = np.stack([t.rewards for t in trajectories])
        n = len(trajectories)

        z_hat = np.zeros((ensemble.num_models, features.dimension))
        steps = np.arange(horizon)
        for h in range(horizon):
            disc = self.ensemble_service.discriminator_table(ensemble, values.values[h + 1])
            s_h, a_h = states[:, h], actions[:, h]
            z_hat += np.einsum('nk,nd->kd', disc[s_h, a_h], features.features[s_h, a_h])
        next_values = values.values[steps + 1, states[:, 1:]]
        y_hat = float((rewards + next_values).sum() / n)
        tolerance = cut_tolerance(
            config.epsilon, features.dimension, ensemble.num_models, horizon, config.theta
        )
        return LinearConstraint(z_hat=z_hat / n, y_hat=y_hat, tolerance=tolerance)

    def _check_inputs(
        self, target: TabularMDP, ensemble: ModelEnsemble, features: FeatureMap
    ) -> None:
        if target.shape != ensemble.shape:
            raise ValidationError(
                f'target shape {target.shape} differs from the ensemble {ensemble.shape}'
            )
        p1 = ensemble.base_models[0].initial_dist
        if not np.allclose(target.initial_dist, p1, rtol=0.0, atol=1e-12):
            raise ValidationError('target initial distribution differs from the ensemble')
        if (features.num_states, features.num_actions) != target.shape[:2]:
            raise ValidationError('feature map (S, A) grid does not match the target')

    def resolve_sizes(
        self, config: LearnerConfig, dimension: int, num_models: int, horizon: int
    ) -> tuple[int, int, int]:
        """(max_iterations, n, n_eval) を設定値または既定値から決める。"""
        t, n, n_eval = default_sample_sizes(
            dimension, num_models, horizon, config.epsilon, config.delta
        )
        return (
            config.max_iterations or t + 1,
            config.n or n,
            config.n_eval or n_eval,
        )

    def run_pac(
        self,
        target: TabularMDP,
        ensemble: ModelEnsemble,
        features: FeatureMap,
        config: LearnerConfig,
        w_star: WeightMatrix | None = None,
    ) -> PacResult:
        """PAC 学習ループを実行する。

        target へはロールアウトとモンテカルロ評価でのみアクセスする。

        Args:
            target: 真の環境 M*。
            ensemble: ベースモデル。
            features: 特徴写像 φ。
            config: 学習器の設定。
            w_star: 既知の W*（保持状況の記録にのみ使う）。

        Returns:
            PacResult: 終了時の方策と反復記録。

        Raises:
            ValidationError: 入力の形状が一致しない場合。
            EmptyVersionSpaceError: 候補がすべて除外された場合。
            IterationCapExceededError: 反復回数の上限に達した場合。
        """
        self._check_inputs(target, ensemble, features)
        k, d, horizon = ensemble.num_models, features.dimension, target.horizon
        max_iterations, n, n_eval = self.resolve_sizes(config, d, k, horizon)
        threshold = termination_threshold(config.epsilon, d, k, horizon, config.theta)
        streams = SeedStreams(config.master_seed)
        space = self.version_space_service.initial_version_space(k, d)
        records: list[IterationRecord] = []
        previous: WeightMatrix | None = None
        used = 0

        for t in range(1, max_iterations + 1):
            try:
                choice = self.optimistic_select(
                    space, ensemble, features, config, streams.generator('oracle', t), previous
                )
            except EmptyVersionSpaceError as e:
                logger.warning(f'PAC iteration t={t}: empty version space ({e.diagnostics})')
                raise EmptyVersionSpaceError(str(e), records, e.diagnostics, used) from e
            v_hat = self.simulation_service.monte_carlo_value(
                target, choice.policy, n_eval, streams, f'eval/{t}'
            )
            used += n_eval
            terminated = choice.value - v_hat <= threshold
            logger.info(
                f'PAC iteration t={t}: v_W={choice.value:.6f} v_hat={v_hat:.6f}',
                extra={
                    'fields': {
                        'iteration': t,
                        'v_w': choice.value,
                        'v_hat': v_hat,
                        'pool_size': choice.pool_size,
                        'terminated': terminated,
                    }
                },
            )
            constraint = None
            if not terminated:
                trajectories = self.simulation_service.rollout_batch(
                    target, choice.policy, n, streams, f'explore/{t}'
                )
                used += n
                constraint = self.estimate_constraint(
                    trajectories, ensemble, features, choice.values, config
                )
                space = space.with_constraint(constraint)
            records.append(
                self._record(t, choice, v_hat, constraint, space, config, streams, w_star)
            )
            if terminated:
                return PacResult(
                    policy=choice.policy,
                    final_w=choice.weights,
                    records=tuple(records),
                    trajectories_used=used,
                )
            previous = choice.weights

        raise IterationCapExceededError(
            f'no termination within max_iterations={max_iterations}', records, used
        )

    def _record(  # noqa: PLR0913
        self,
        t: int,
        choice: OptimisticChoice,
        v_hat: float,
        constraint: LinearConstraint | None,
        space: VersionSpace,
        config: LearnerConfig,
        streams: SeedStreams,
        w_star: WeightMatrix | None,
    ) -> IterationRecord:
        """反復記録を作る。体積推定は固定ストリームで行い、反復間で比較可能にする。"""
        volume = None
        if config.volume_samples > 0:
            volume = self.version_space_service.mc_volume(
                space, config.volume_samples, streams.generator(VOLUME_STREAM, 0)
            )
        retained = None if w_star is None else self.version_space_service.contains(space, w_star)
        return IterationRecord(
            t=t,
            w_t=choice.weights,
            optimistic_value=choice.value,
            mc_estimate=v_hat,
            terminated=constraint is None,
            explored=constraint is not None,
            constraint_added=constraint,
            pool_size=choice.pool_size,
            wstar_retained=retained,
            volume_estimate=volume,
        )
