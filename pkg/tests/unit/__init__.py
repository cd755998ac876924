"""単体テスト (Unit Tests) パッケージ。"""
