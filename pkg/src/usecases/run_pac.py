"""PAC 学習の実行ユースケース。"""

from pathlib import Path
from typing import Any

from src.exceptions import LearnerError
from src.logger import logger
from src.models import (
    FeatureMap,
    IterationRecord,
    LearnerConfig,
    ModelEnsemble,
    RunManifest,
    RunReport,
    TabularMDP,
    WeightMatrix,
)
from src.repositories import InstanceRepositories
from src.services.diagnostics_service import DiagnosticsService
from src.services.pac_service import PacService, acceptance_threshold, iteration_bound
from src.usecases.common import failure_summary, manifest_echo, manifest_path_of


class RunPacUseCase:
    """PAC 学習の実行ユースケース。"""

    def __init__(
        self,
        pac_service: PacService,
        diagnostics_service: DiagnosticsService,
        repositories: InstanceRepositories,
    ) -> None:
        """初期化。

        Args:
            pac_service: PAC 学習サービス。
            diagnostics_service: 診断サービス（価値監査と集中事象の検査）。
            repositories: インスタンスファイルのリポジトリ一式。
        """
        self.pac_service = pac_service
        self.diagnostics_service = diagnostics_service
        self.repositories = repositories

    def execute(self, manifest: RunManifest, manifest_path: Path) -> RunReport:
        """マニフェストのファイルを読み込み、PAC 学習を実行してレポートを返す。

        学習器が失敗した場合も、途中までの記録と失敗の状態を持つレポートを返す。

        Args:
            manifest: 検証済みのマニフェスト。
            manifest_path: マニフェストファイルのパス（相対パスの基準）。

        Returns:
            RunReport: 反復ごとの記録とサマリ。

        Raises:
            ResourceNotFoundError: 参照先のファイルが存在しない場合。
            ManifestError: ファイルの解析に失敗した場合。
        """
        repos = self.repositories
        target = repos.mdp.load(manifest_path_of(manifest_path, manifest.target, 'target'))
        ensemble = repos.ensemble.load(
            manifest_path_of(manifest_path, manifest.ensemble, 'ensemble')
        )
        features = repos.feature.load(
            manifest_path_of(manifest_path, manifest.features, 'features')
        )
        w_star = None
        if manifest.w_star is not None:
            w_star = repos.weight.load(manifest_path_of(manifest_path, manifest.w_star, 'w_star'))
        config = manifest.learner_config()
        context = (target, ensemble, features, w_star, config)
        try:
            result = self.pac_service.run_pac(target, ensemble, features, config, w_star)
        except LearnerError as e:
            logger.warning(f'PAC run ended with {e.status}: {e}')
            return RunReport(
                manifest=manifest_echo(manifest),
                records=tuple(self._row(r, *context) for r in e.records),
                summary=failure_summary(e),
            )
        rows = tuple(self._row(r, *context) for r in result.records)
        _, _, n_eval = self.pac_service.resolve_sizes(
            config, features.dimension, ensemble.num_models, target.horizon
        )
        summary: dict[str, Any] = {
            'status': result.status,
            'iterations': len(result.records),
            'explored_iterations': result.explored_iterations,
            'iteration_bound': iteration_bound(
                features.dimension, ensemble.num_models, target.horizon, config.epsilon
            ),
            'acceptance_threshold': acceptance_threshold(
                config.epsilon, features.dimension, ensemble.num_models, target.horizon,
                config.theta,
            ),
            'trajectories_used': result.trajectories_used,
            'final_w': result.final_w,
            'policy': result.policy.actions,
            'value_audit': self.diagnostics_service.value_audit(
                target, result.policy, result.records[-1].mc_estimate, n_eval, config.delta
            ),
        }
        return RunReport(manifest=manifest_echo(manifest), records=rows, summary=summary)

    def _row(  # noqa: PLR0913
        self,
        record: IterationRecord,
        target: TabularMDP,
        ensemble: ModelEnsemble,
        features: FeatureMap,
        w_star: WeightMatrix | None,
        config: LearnerConfig,
    ) -> dict[str, Any]:
        """反復記録を 1 行分の辞書にする。W* が既知なら集中事象の事後検査を付ける。"""
        row: dict[str, Any] = {'type': 'iteration', **record.model_dump(mode='json')}
        if w_star is not None and record.explored:
            check = self.diagnostics_service.check_concentration_event(
                record, target, ensemble, features, w_star, config
            )
            row['concentration_event'] = None if check is None else check.model_dump(mode='json')
        return row
