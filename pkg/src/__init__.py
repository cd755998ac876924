"""アプリケーションソースコードパッケージ。"""
