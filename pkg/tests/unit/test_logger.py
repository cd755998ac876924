"""ロギング設定の単体テスト。"""

import json
import logging

from src.logger import JSONFormatter, run_context


def _record(**extra: object) -> logging.LogRecord:
    record = logging.LogRecord('ensemble_pac', logging.INFO, 'pac_service.py', 10, 'msg %s', ('x',), None)
    for key, value in extra.items():
        setattr(record, key, value)
    return record


def test_JSON形式でメッセージとレベルを出力する() -> None:
    # Act
    data = json.loads(JSONFormatter().format(_record()))

    # Assert
    assert data['message'] == 'msg x'
    assert data['level'] == 'INFO'
    assert data['location']['line'] == 10
    assert 'run' not in data
    assert 'fields' not in data


def test_実行コンテキストの中では実行情報が付与される() -> None:
    # Arrange
    formatter = JSONFormatter()

    # Act
    with run_context(command='pac', manifest='m.json', master_seed=7):
        inside = json.loads(formatter.format(_record()))
    outside = json.loads(formatter.format(_record()))

    # Assert
    assert inside['run'] == {'command': 'pac', 'manifest': 'm.json', 'master_seed': 7}
    assert 'run' not in outside


def test_extraのfieldsが構造化して出力される() -> None:
    # Act
    data = json.loads(JSONFormatter().format(_record(fields={'iteration': 3, 'terminated': False})))

    # Assert
    assert data['fields'] == {'iteration': 3, 'terminated': False}
