"""E2Eテスト (End-to-End Tests) パッケージ。"""
