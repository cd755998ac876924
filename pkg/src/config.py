"""アプリケーション設定モジュール。

このモジュールは、環境変数から設定を読み込むための
pydantic-settingsベースの設定クラスを提供します。
"""

from pydantic_settings import BaseSettings, SettingsConfigDict


class Settings(BaseSettings):
    """アプリケーション設定。

    環境変数から設定を読み込み、デフォルト値を提供します。
    実行ごとのパラメータ（ε, δ, シードなど）はマニフェスト側で指定します。

    Attributes:
        log_level: ログレベル。
        log_dir: ログ出力ディレクトリ。
        log_backup_days: ローテーションしたログファイルの保存日数。
        max_workers: ロールアウト・体積推定の並列度。結果はこの値に依存しない。
        hit_and_run_burn_in: hit-and-run サンプラのバーンインのステップ数。
        report_wall_time: サマリに実行時間を含めるかどうか。
    """

    model_config = SettingsConfigDict(
        env_file='.env',
        env_file_encoding='utf-8',
        env_prefix='ENSEMBLE_PAC_',
        case_sensitive=False,
        extra='ignore',
    )

    # ロギング設定
    log_level: str = 'INFO'
    log_dir: str = '.log'
    log_file_name: str = 'ensemble_pac.log'
    log_backup_days: int = 28

    # 並列実行設定
    max_workers: int = 1

    # 数値許容誤差
    probability_tolerance: float = 1e-9
    support_merge_tolerance: float = 1e-12

    # サンプラ設定
    hit_and_run_burn_in: int = 64

    # インスタンス生成設定
    max_tree_depth: int = 12

    # レポート設定
    report_significant_digits: int = 12
    report_wall_time: bool = False
    default_output_dir: str = 'data/reports'


# グローバル設定インスタンス
settings = Settings()
