"""実験マニフェストと実行レポートのドメインモデル。"""

from typing import Any, Literal

from pydantic import Field, NonNegativeInt, PositiveInt, model_validator

from src.exceptions import ValidationError
from src.models.base import FrozenModel
from src.models.learner import MAX_SEED, LearnerConfig

CommandKind = Literal['pac', 'select', 'generate', 'diagnose']
GeneratorKind = Literal[
    'tree',
    'leaf_partition',
    'nested_pair',
    'biased_leaf',
    'path_abstraction',
    'realizable',
    'realizable_stochastic',
]
SuiteKind = Literal[
    'value_decomposition',
    'error_decomposition',
    'simulation_lemma',
    'weight_transfer',
    'corollary',
]
ALL_SUITES: tuple[SuiteKind, ...] = (
    'value_decomposition',
    'error_decomposition',
    'simulation_lemma',
    'weight_transfer',
    'corollary',
)


class GenerateSpec(FrozenModel):
    """インスタンス生成の指定。

    Attributes:
        family: 生成するインスタンスの種類。
        depth: 木の深さ H。
        leaf: 対象の葉番号。
        bias: biased_leaf の偏り ε。
        output_dir: 生成ファイルの出力先（省略時はレポートと同じディレクトリ）。
    """

    family: GeneratorKind
    depth: PositiveInt = 2
    leaf: NonNegativeInt = 0
    bias: float = Field(default=0.1, ge=0.0, lt=0.25)
    output_dir: str | None = None


class DiagnoseSpec(FrozenModel):
    """診断スイートの指定。

    Attributes:
        suites: 実行するスイート。
        trials: スイートごとの試行回数。
        max_states: ランダムインスタンスの最大状態数。
        max_actions: 最大行動数。
        max_horizon: 最大ホライズン。
        max_models: 最大ベースモデル数。
        max_dimension: 最大特徴次元。
        policies_per_trial: simulation_lemma で評価する方策数。
    """

    suites: tuple[SuiteKind, ...] = ALL_SUITES
    trials: PositiveInt = 20
    max_states: PositiveInt = 8
    max_actions: PositiveInt = 3
    max_horizon: PositiveInt = 4
    max_models: PositiveInt = 3
    max_dimension: PositiveInt = 3
    policies_per_trial: PositiveInt = 5


class RunManifest(FrozenModel):
    """1 回の実行を記述するマニフェスト。

    ファイルパスはマニフェストのあるディレクトリからの相対パスとして解決される。

    Attributes:
        command: 実行内容。
        target: 真の環境 M* の MDP ファイル。
        ensemble: アンサンブルファイル。
        features: 特徴写像ファイル。
        family: 分割族ファイル。
        w_star: 既知の W*（保持状況のテレメトリ用）。
        learner: 学習器の設定。
        v_star: モデル選択の停止判定に使う最適値 v*。
        selection_n_eval: モデル選択の評価軌跡数の上書き。
        generate: インスタンス生成の指定。
        diagnose: 診断スイートの指定。
        master_seed: 親シード。
        output: レポートの出力先。
    """

    command: CommandKind
    target: str | None = None
    ensemble: str | None = None
    features: str | None = None
    family: str | None = None
    w_star: str | None = None
    learner: LearnerConfig | None = None
    v_star: float | None = Field(default=None, ge=0.0, le=1.0)
    selection_n_eval: PositiveInt | None = None
    generate: GenerateSpec | None = None
    diagnose: DiagnoseSpec | None = None
    master_seed: int = Field(default=0, ge=0, le=MAX_SEED)
    output: str | None = None

    @model_validator(mode='after')
    def _validate(self) -> 'RunManifest':
        """コマンドごとの必須項目を検証する。"""
        required: dict[CommandKind, tuple[str, ...]] = {
            'pac': ('target', 'ensemble', 'features', 'learner'),
            'select': ('target', 'ensemble', 'family', 'learner', 'v_star'),
            'generate': ('generate',),
            'diagnose': (),
        }
        missing = [name for name in required[self.command] if getattr(self, name) is None]
        if missing:
            raise ValidationError(
                f'manifest: command {self.command!r} requires {", ".join(missing)}'
            )
        return self

    def learner_config(self) -> LearnerConfig:
        """親シードを反映した学習器設定を返す。"""
        if self.learner is None:
            raise ValidationError('manifest: learner configuration is missing')
        return self.learner.model_copy(update={'master_seed': self.master_seed})


class RunReport(FrozenModel):
    """実行レポート。JSON Lines として書き出される。

    Attributes:
        manifest: 実行したマニフェストのエコー。
        records: 反復・ラウンド・試行ごとの記録。
        summary: 終了状態や価値監査などのサマリ。
    """

    manifest: dict[str, Any]
    records: tuple[dict[str, Any], ...] = ()
    summary: dict[str, Any]

    @property
    def status(self) -> str:
        return str(self.summary.get('status', 'unknown'))
