"""エクスポートサービス。

このモジュールは、JSON Lines レポートを表形式（CSV, Excel）に変換する機能を提供します。
"""

import io
import json
from typing import Any

import pandas as pd

from src.models import RunReport


def _cell(value: Any) -> Any:  # noqa: ANN401
    """リストや辞書のセルを JSON 文字列に変換する（Excel はリストを書けないため）。"""
    if isinstance(value, list | dict):
        return json.dumps(value, ensure_ascii=False)
    return value


class ExportService:
    """エクスポートサービス。"""

    @staticmethod
    def records_frame(report: RunReport) -> pd.DataFrame:
        """記録を平坦化した DataFrame を返す。

        ネストしたフィールドは ``constraint_added.y_hat`` のようにドット区切りの列になる。

        Args:
            report: 実行レポート。

        Returns:
            pd.DataFrame: 1 行 1 記録の表。
        """
        if not report.records:
            return pd.DataFrame()
        return pd.json_normalize(list(report.records)).map(_cell)

    @staticmethod
    def summary_frame(report: RunReport) -> pd.DataFrame:
        """サマリを項目・値の 2 列の DataFrame で返す。"""
        flat = pd.json_normalize(report.summary).map(_cell)
        return pd.DataFrame({'item': flat.columns, 'value': flat.iloc[0].tolist()})

    @staticmethod
    def create_csv(frame: pd.DataFrame) -> io.StringIO:
        """CSVファイルを作成する。

        Args:
            frame: 書き出す表。

        Returns:
            io.StringIO: CSV形式の文字列ストリーム。
        """
        output = io.StringIO()
        frame.to_csv(output, index=False, lineterminator='\n')
        output.seek(0)
        return output

    @classmethod
    def create_excel(cls, report: RunReport) -> io.BytesIO:
        """記録とサマリの 2 シートを持つExcelファイルを作成する。

        Args:
            report: 実行レポート。

        Returns:
            io.BytesIO: Excelファイルのバイトストリーム。
        """
        output = io.BytesIO()
        with pd.ExcelWriter(output, engine='openpyxl') as writer:
            cls.records_frame(report).to_excel(writer, sheet_name='records', index=False)
            cls.summary_frame(report).to_excel(writer, sheet_name='summary', index=False)
        output.seek(0)
        return output
