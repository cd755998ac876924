"""統合テスト (Integration Tests) パッケージ。"""
