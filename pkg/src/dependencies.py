"""依存性注入用の関数を定義するモジュール。

このモジュールは、サービス・リポジトリ・ユースケースを組み立てるための
ファクトリ関数を提供します。
"""

from src.config import settings
from src.repositories import InstanceRepositories, ManifestRepository
from src.services.diagnostics_service import DiagnosticsService
from src.services.ensemble_service import EnsembleService
from src.services.export_service import ExportService
from src.services.hard_instance_service import HardInstanceService
from src.services.pac_service import PacService
from src.services.planning_service import PlanningService
from src.services.report_service import ReportService
from src.services.selection_service import SelectionService
from src.services.simulation_service import SimulationService
from src.services.version_space_service import VersionSpaceService
from src.usecases import (
    DiagnoseUseCase,
    ExportReportUseCase,
    GenerateInstanceUseCase,
    RunExperimentUseCase,
    RunPacUseCase,
    RunSelectUseCase,
)


def get_simulation_service() -> SimulationService:
    """シミュレーションサービスを取得する。

    Returns:
        SimulationService: 並列度を設定から読むシミュレーションサービス。
    """
    return SimulationService(settings.max_workers)


def get_pac_service() -> PacService:
    """PAC 学習サービスを取得する。

    Returns:
        PacService: PAC 学習サービスインスタンス。
    """
    return PacService(
        PlanningService(), get_simulation_service(), EnsembleService(), VersionSpaceService()
    )


def get_diagnostics_service() -> DiagnosticsService:
    """診断サービスを取得する。

    Returns:
        DiagnosticsService: 診断サービスインスタンス。
    """
    return DiagnosticsService(PlanningService(), EnsembleService())


def get_hard_instance_service() -> HardInstanceService:
    """困難インスタンスの生成サービスを取得する。

    Returns:
        HardInstanceService: 生成サービスインスタンス。
    """
    return HardInstanceService(EnsembleService(), PlanningService())


def get_selection_service() -> SelectionService:
    """モデル選択サービスを取得する。

    Returns:
        SelectionService: モデル選択サービスインスタンス。
    """
    return SelectionService(get_pac_service(), get_simulation_service())


def get_manifest_repository() -> ManifestRepository:
    return ManifestRepository()


def get_run_experiment_usecase() -> RunExperimentUseCase:
    """実験の実行ユースケースを取得する。

    Returns:
        RunExperimentUseCase: コマンド種別ごとのユースケースを束ねたインスタンス。
    """
    repositories = InstanceRepositories.create()
    diagnostics = get_diagnostics_service()
    return RunExperimentUseCase(
        {
            'pac': RunPacUseCase(get_pac_service(), diagnostics, repositories),
            'select': RunSelectUseCase(get_selection_service(), diagnostics, repositories),
            'generate': GenerateInstanceUseCase(
                get_hard_instance_service(), PlanningService(), repositories
            ),
            'diagnose': DiagnoseUseCase(diagnostics),
        },
        ReportService(),
    )


def get_export_report_usecase() -> ExportReportUseCase:
    """レポートのエクスポートユースケースを取得する。

    Returns:
        ExportReportUseCase: エクスポートユースケースインスタンス。
    """
    return ExportReportUseCase(ReportService(), ExportService())
