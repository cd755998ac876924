"""診断（不等式・恒等式の数値検査）結果のドメインモデル。"""

from src.models.base import FrozenModel


class DiagnosticCheck(FrozenModel):
    """lhs ≤ rhs（恒等式なら |lhs - rhs| ≤ tolerance）の検査結果。

    Attributes:
        name: 検査名。
        lhs: 左辺。
        rhs: 右辺。
        passed: 成立したかどうか。
    """

    name: str
    lhs: float
    rhs: float
    passed: bool

    @classmethod
    def inequality(cls, name: str, lhs: float, rhs: float, slack: float) -> 'DiagnosticCheck':
        """lhs ≤ rhs + slack を検査する。"""
        return cls(name=name, lhs=lhs, rhs=rhs, passed=lhs <= rhs + slack)

    @classmethod
    def identity(cls, name: str, lhs: float, rhs: float, tolerance: float) -> 'DiagnosticCheck':
        """|lhs - rhs| ≤ tolerance を検査する。"""
        return cls(name=name, lhs=lhs, rhs=rhs, passed=abs(lhs - rhs) <= tolerance)
