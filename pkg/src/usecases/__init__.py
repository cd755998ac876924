"""ユースケースレイヤー。

このモジュールは、CLI のコマンドごとのオーケストレーションを担当します。
"""

from src.usecases.diagnose import DiagnoseUseCase
from src.usecases.export_report import ExportReportUseCase
from src.usecases.generate_instance import GenerateInstanceUseCase
from src.usecases.run_experiment import RunExperimentUseCase
from src.usecases.run_pac import RunPacUseCase
from src.usecases.run_select import RunSelectUseCase

__all__ = [
    'DiagnoseUseCase',
    'ExportReportUseCase',
    'GenerateInstanceUseCase',
    'RunExperimentUseCase',
    'RunPacUseCase',
    'RunSelectUseCase',
]
