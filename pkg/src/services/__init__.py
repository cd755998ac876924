"""サービスパッケージ。"""
