"""モデル選択の実行ユースケース。"""

from collections.abc import Iterable
from pathlib import Path
from typing import Any

from src.exceptions import LearnerError, ValidationError
from src.logger import logger
from src.models import RunManifest, RunReport, SelectionRound
from src.repositories import InstanceRepositories
from src.services.diagnostics_service import DiagnosticsService
from src.services.selection_service import SelectionService, selection_eval_size
from src.usecases.common import failure_summary, manifest_echo, manifest_path_of


def _round_rows(rounds: Iterable[SelectionRound]) -> tuple[dict[str, Any], ...]:
    return tuple({'type': 'round', **r.model_dump(mode='json')} for r in rounds)


class RunSelectUseCase:
    """モデル選択の実行ユースケース。"""

    def __init__(
        self,
        selection_service: SelectionService,
        diagnostics_service: DiagnosticsService,
        repositories: InstanceRepositories,
    ) -> None:
        """初期化。

        Args:
            selection_service: モデル選択サービス。
            diagnostics_service: 診断サービス（価値監査）。
            repositories: インスタンスファイルのリポジトリ一式。
        """
        self.selection_service = selection_service
        self.diagnostics_service = diagnostics_service
        self.repositories = repositories

    def execute(self, manifest: RunManifest, manifest_path: Path) -> RunReport:
        """分割族に対するモデル選択を実行してレポートを返す。

        Args:
            manifest: 検証済みのマニフェスト。
            manifest_path: マニフェストファイルのパス。

        Returns:
            RunReport: ラウンドごとの記録とサマリ。失敗時も途中までの記録を含む。
        """
        repos = self.repositories
        target = repos.mdp.load(manifest_path_of(manifest_path, manifest.target, 'target'))
        ensemble = repos.ensemble.load(
            manifest_path_of(manifest_path, manifest.ensemble, 'ensemble')
        )
        family = repos.family.load(manifest_path_of(manifest_path, manifest.family, 'family'))
        if manifest.v_star is None:
            raise ValidationError('manifest: v_star is required for model selection')
        config = manifest.learner_config()
        n_eval = manifest.selection_n_eval or selection_eval_size(
            config.epsilon, config.delta, family.size
        )
        try:
            result = self.selection_service.run_model_selection(
                target, ensemble, family, manifest.v_star, config, n_eval
            )
        except LearnerError as e:
            logger.warning(f'Model selection ended with {e.status}: {e}')
            failed = {**failure_summary(e), 'attempted_partitions': len(e.records)}
            return RunReport(
                manifest=manifest_echo(manifest), records=_round_rows(e.records), summary=failed
            )
        chosen = result.rounds[-1]
        summary: dict[str, Any] = {
            'status': 'stopped',
            'chosen_index': result.chosen_index,
            'chosen_dimension': family.dimensions[result.chosen_index],
            'attempted_partitions': len(result.rounds),
            'total_trajectories': result.total_trajectories,
            'v_star': manifest.v_star,
            'policy': result.policy.actions,
            'value_audit': self.diagnostics_service.value_audit(
                target, result.policy, chosen.mc_value or 0.0, n_eval, config.delta
            ),
        }
        return RunReport(
            manifest=manifest_echo(manifest), records=_round_rows(result.rounds), summary=summary
        )
