"""診断スイートの実行ユースケース。

ランダムに生成したインスタンス上で、解析上の恒等式・不等式を厳密計算で検査します。
試行ごとの乱数は (親シード, ``diagnose/{suite}``, 試行番号) から導出します。
"""

from collections.abc import Callable
from pathlib import Path
from typing import Any, NamedTuple

import numpy as np

from src.logger import logger
from src.models import DiagnoseSpec, RunManifest, RunReport
from src.models.diagnostics import DiagnosticCheck
from src.services.diagnostics_service import DiagnosticsService
from src.services.random_instance_service import RandomInstanceService
from src.services.simulation_service import SeedStreams
from src.usecases.common import manifest_echo

Dimensions = tuple[int, int, int, int, int]


class TrialContext(NamedTuple):
    """1 試行分の文脈。

    Attributes:
        index: 試行番号。
        dims: (S, A, H, K, d)。
        policies: simulation_lemma で評価する方策数。
    """

    index: int
    dims: Dimensions
    policies: int


Suite = Callable[[RandomInstanceService, TrialContext], list[DiagnosticCheck]]

# 非実現可能な target を作るときの摂動の強さ
PERTURBATION_SCALE = 0.3


def draw_dimensions(rng: np.random.Generator, spec: DiagnoseSpec) -> Dimensions:
    """(S, A, H, K, d) を上限以下の一様乱数で引く。"""
    return (
        int(rng.integers(1, spec.max_states + 1)),
        int(rng.integers(1, spec.max_actions + 1)),
        int(rng.integers(1, spec.max_horizon + 1)),
        int(rng.integers(1, spec.max_models + 1)),
        int(rng.integers(1, spec.max_dimension + 1)),
    )


class DiagnoseUseCase:
    """診断スイートの実行ユースケース。"""

    def __init__(self, diagnostics_service: DiagnosticsService) -> None:
        """初期化。

        Args:
            diagnostics_service: 診断サービス。
        """
        self.diagnostics_service = diagnostics_service
        self.ensemble_service = diagnostics_service.ensemble_service

    def execute(self, manifest: RunManifest, manifest_path: Path) -> RunReport:  # noqa: ARG002
        """指定されたスイートを試行回数ずつ実行する。

        Returns:
            RunReport: 試行ごとの記録と、スイートごとの失敗数を持つサマリ。
        """
        spec = manifest.diagnose or DiagnoseSpec()
        streams = SeedStreams(manifest.master_seed)
        suites: dict[str, Suite] = {
            'value_decomposition': self._value_decomposition,
            'error_decomposition': self._error_decomposition,
            'simulation_lemma': self._simulation_lemma,
            'weight_transfer': self._weight_transfer,
            'corollary': self._corollary,
        }
        rows: list[dict[str, Any]] = []
        failures: dict[str, int] = {}
        for name in spec.suites:
            for trial in range(spec.trials):
                rng = streams.generator(f'diagnose/{name}', trial)
                dims = draw_dimensions(rng, spec)
                context = TrialContext(trial, dims, spec.policies_per_trial)
                checks = suites[name](RandomInstanceService(rng), context)
                passed = all(c.passed for c in checks)
                rows.append(self._row(name, trial, dims, checks, passed))
                failures[name] = failures.get(name, 0) + int(not passed)
            logger.info(f'Diagnostic suite {name}: {failures[name]}/{spec.trials} trials failed')
        summary = {
            'status': 'completed',
            'trials': len(rows),
            'failed': sum(failures.values()),
            'suites': {name: {'trials': spec.trials, 'failed': n} for name, n in failures.items()},
            'all_passed': not any(failures.values()),
        }
        return RunReport(manifest=manifest_echo(manifest), records=tuple(rows), summary=summary)

    @staticmethod
    def _row(
        suite: str, trial: int, dims: Dimensions, checks: list[DiagnosticCheck], passed: bool
    ) -> dict[str, Any]:
        s, a, h, k, d = dims
        return {
            'type': 'trial',
            'suite': suite,
            'trial': trial,
            'num_states': s,
            'num_actions': a,
            'horizon': h,
            'num_models': k,
            'dimension': d,
            'checks': [c.model_dump(mode='json') for c in checks],
            'passed': passed,
        }

    def _value_decomposition(
        self, rs: RandomInstanceService, context: TrialContext
    ) -> list[DiagnosticCheck]:
        s, a, h, k, d = context.dims
        ensemble = rs.ensemble(k, s, a, h)
        target = rs.mdp(s, a, h, initial_dist=ensemble.base_models[0].initial_dist)
        features = rs.feature_map(s, a, d)
        return [
            self.diagnostics_service.check_value_decomposition(
                target, ensemble, features, rs.weights(k, d)
            )
        ]

    def _error_decomposition(
        self, rs: RandomInstanceService, context: TrialContext
    ) -> list[DiagnosticCheck]:
        """偶数番目の試行は実現可能（θ = 0 の等式）、奇数番目は摂動した target（上界）。"""
        s, a, h, k, d = context.dims
        ensemble = rs.ensemble(k, s, a, h)
        features = rs.feature_map(s, a, d)
        w_star = rs.weights(k, d)
        target = self.ensemble_service.mix_model(ensemble, features, w_star)
        theta = 0.0
        if context.index % 2 == 1:
            target = rs.perturb(target, PERTURBATION_SCALE)
            theta = self.ensemble_service.sup_misfit(ensemble, features, w_star, target)
        return [
            self.diagnostics_service.check_error_decomposition(
                target, ensemble, features, rs.weights(k, d), w_star, theta
            )
        ]

    def _simulation_lemma(
        self, rs: RandomInstanceService, context: TrialContext
    ) -> list[DiagnosticCheck]:
        s, a, h, _, _ = context.dims
        first = rs.mdp(s, a, h)
        second = rs.mdp(s, a, h, initial_dist=first.initial_dist)
        return [
            self.diagnostics_service.check_simulation_lemma(first, second, rs.policy(s, a, h))
            for _ in range(context.policies)
        ]

    def _weight_transfer(
        self, rs: RandomInstanceService, context: TrialContext
    ) -> list[DiagnosticCheck]:
        s, a, h, k, d = context.dims
        ensemble = rs.ensemble(k, s, a, h)
        features = rs.feature_map(s, a, d)
        return [
            self.diagnostics_service.check_weight_transfer(
                ensemble, features, rs.weights(k, d), rs.weights(k, d)
            )
        ]

    def _corollary(
        self, rs: RandomInstanceService, context: TrialContext
    ) -> list[DiagnosticCheck]:
        s, a, h, k, d = context.dims
        ensemble = rs.ensemble(k, s, a, h)
        features = rs.feature_map(s, a, d)
        w_star = rs.weights(k, d)
        target = rs.perturb(
            self.ensemble_service.mix_model(ensemble, features, w_star), PERTURBATION_SCALE
        )
        return self.diagnostics_service.check_corollary(target, ensemble, features, w_star)

