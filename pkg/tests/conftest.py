from pathlib import Path

import numpy as np
import pytest
import pytest_mock

from src.config import settings
from src.models import GenerateSpec, LearnerConfig, RunManifest, TabularMDP
from src.models.hard_instances import RealizableFixture
from src.repositories import InstanceRepositories
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
from src.usecases.generate_instance import FIXTURE_LEARNER, GenerateInstanceUseCase


@pytest.fixture(autouse=True)
def isolated_settings(mocker: pytest_mock.MockerFixture, tmp_path: Path) -> None:
    """ログとレポートの既定の出力先を一時ディレクトリに向ける。"""
    mocker.patch.object(settings, 'log_dir', str(tmp_path / 'log'))
    mocker.patch.object(settings, 'default_output_dir', str(tmp_path / 'reports'))


@pytest.fixture
def planning_service() -> PlanningService:
    return PlanningService()


@pytest.fixture
def ensemble_service() -> EnsembleService:
    return EnsembleService()


@pytest.fixture
def version_space_service() -> VersionSpaceService:
    return VersionSpaceService()


@pytest.fixture
def simulation_service() -> SimulationService:
    return SimulationService(max_workers=1)


@pytest.fixture
def pac_service(
    planning_service: PlanningService,
    simulation_service: SimulationService,
    ensemble_service: EnsembleService,
    version_space_service: VersionSpaceService,
) -> PacService:
    return PacService(planning_service, simulation_service, ensemble_service, version_space_service)


@pytest.fixture
def diagnostics_service(
    planning_service: PlanningService, ensemble_service: EnsembleService
) -> DiagnosticsService:
    return DiagnosticsService(planning_service, ensemble_service)


@pytest.fixture
def hard_instance_service(
    ensemble_service: EnsembleService, planning_service: PlanningService
) -> HardInstanceService:
    return HardInstanceService(ensemble_service, planning_service)


@pytest.fixture
def selection_service(
    pac_service: PacService, simulation_service: SimulationService
) -> SelectionService:
    return SelectionService(pac_service, simulation_service)


@pytest.fixture
def report_service() -> ReportService:
    return ReportService()


@pytest.fixture
def export_service() -> ExportService:
    return ExportService()


@pytest.fixture
def repositories() -> InstanceRepositories:
    return InstanceRepositories.create()


@pytest.fixture(name='realizable')
def realizable_fixture(hard_instance_service: HardInstanceService) -> RealizableFixture:
    """6 状態・2 行動・H=3 の実現可能インスタンス（v* = 0.5）。"""
    return hard_instance_service.realizable_fixture()


@pytest.fixture
def fixture_config() -> LearnerConfig:
    """実現可能インスタンスを数反復で学習できる設定。"""
    return LearnerConfig.model_validate(FIXTURE_LEARNER)


@pytest.fixture(name='chain_mdp')
def chain_mdp_fixture() -> TabularMDP:
    """2 状態・2 行動・H=2 の決定的な MDP。

    行動 0 はその場に留まり、行動 1 はもう一方の状態へ移る。
    報酬は s0 で (0.1, 0.0)、s1 で (0.4, 0.3)。最適値は 0.4 で、ステップ 1 で行動 1 を選ぶ。
    """
    transitions = np.zeros((2, 2, 2))
    transitions[0, 0, 0] = transitions[0, 1, 1] = 1.0
    transitions[1, 0, 1] = transitions[1, 1, 0] = 1.0
    return TabularMDP.from_reward_lists(
        np.array([1.0, 0.0]),
        transitions,
        2,
        [[0.1], [0.0], [0.4], [0.3]],
        [[1.0], [1.0], [1.0], [1.0]],
    )


@pytest.fixture
def realizable_dir(
    tmp_path: Path,
    hard_instance_service: HardInstanceService,
    planning_service: PlanningService,
    repositories: InstanceRepositories,
) -> Path:
    """実現可能インスタンス一式とそのマニフェストを書き出したディレクトリ。"""
    out_dir = tmp_path / 'instances'
    manifest = RunManifest(command='generate', generate=GenerateSpec(family='realizable'))
    usecase = GenerateInstanceUseCase(hard_instance_service, planning_service, repositories)
    usecase.execute(manifest, out_dir / 'generate.json')
    return out_dir
