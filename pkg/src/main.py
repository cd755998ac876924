"""CLI のメインモジュール。

このモジュールは、``ensemble-pac`` コマンドのサブコマンドと引数を定義します。

    ensemble-pac run-pac --manifest m.json [--seed N] [--out report.jsonl]
    ensemble-pac run-select --manifest m.json
    ensemble-pac gen-instance --manifest m.json
    ensemble-pac diagnose --manifest m.json
    ensemble-pac export-report --report report.jsonl [--out dir]

終了コードは成功で 0、入力検証エラーで 2、学習器の失敗で 3（レポートは書き出される）。
"""

import argparse
import sys
from pathlib import Path

from src.dependencies import (
    get_export_report_usecase,
    get_manifest_repository,
    get_run_experiment_usecase,
)
from src.error_handlers import EXIT_OK, exit_code_for_status, handle_error
from src.exceptions import ValidationError
from src.logger import init_logger, logger, run_context
from src.models.learner import MAX_SEED

# サブコマンドとマニフェストの command の対応
COMMANDS = {
    'run-pac': 'pac',
    'run-select': 'select',
    'gen-instance': 'generate',
    'diagnose': 'diagnose',
}


def _seed(value: str) -> int:
    seed = int(value)
    if not 0 <= seed <= MAX_SEED:
        raise argparse.ArgumentTypeError(f'seed must be an unsigned 64-bit integer, got {value}')
    return seed


def build_parser() -> argparse.ArgumentParser:
    """引数パーサを作る。"""
    parser = argparse.ArgumentParser(
        prog='ensemble-pac', description='PAC exploration over linear ensembles of tabular MDPs'
    )
    subparsers = parser.add_subparsers(dest='subcommand', required=True)
    for name in COMMANDS:
        sub = subparsers.add_parser(name)
        sub.add_argument('--manifest', type=Path, required=True, help='run manifest (JSON)')
        sub.add_argument('--seed', type=_seed, default=None, help='override master_seed')
        sub.add_argument('--out', type=Path, default=None, help='report path (JSON lines)')
    export = subparsers.add_parser('export-report')
    export.add_argument('--report', type=Path, required=True, help='report (JSON lines)')
    export.add_argument('--out', type=Path, default=None, help='output directory')
    return parser


def _run_manifest(args: argparse.Namespace) -> int:
    """マニフェストを読み込んで実行し、レポートの状態に応じた終了コードを返す。"""
    manifest = get_manifest_repository().load_with_overrides(
        args.manifest, {'master_seed': args.seed}
    )
    expected = COMMANDS[args.subcommand]
    if manifest.command != expected:
        raise ValidationError(
            f'{args.manifest}: command: {args.subcommand} expects a {expected!r} manifest, '
            f'got {manifest.command!r}'
        )
    with run_context(
        command=manifest.command, manifest=str(args.manifest), master_seed=manifest.master_seed
    ):
        report, path = get_run_experiment_usecase().execute(manifest, args.manifest, args.out)
    sys.stdout.write(f'{path}\n')
    return exit_code_for_status(report.status)


def _export(args: argparse.Namespace) -> int:
    for path in get_export_report_usecase().execute(args.report, args.out):
        sys.stdout.write(f'{path}\n')
    return EXIT_OK


def main(argv: list[str] | None = None) -> int:
    """CLI のエントリポイント。

    Args:
        argv: 引数のリスト。None の場合は ``sys.argv`` を使う。

    Returns:
        int: 終了コード。
    """
    args = build_parser().parse_args(argv)
    init_logger()
    logger.info(f'ensemble-pac {args.subcommand}')
    try:
        if args.subcommand == 'export-report':
            return _export(args)
        return _run_manifest(args)
    except Exception as e:  # noqa: BLE001
        return handle_error(e)


if __name__ == '__main__':
    sys.exit(main())
