"""バージョン空間サービス。

W_0（列ごとに確率単体）と線形制約の共通部分に対する所属判定、
一様サンプリング、hit-and-run サンプリング、体積比のモンテカルロ推定を提供します。
"""

import numpy as np
from numpy.typing import NDArray

from src.config import settings
from src.exceptions import ValidationError
from src.models import VersionSpace, WeightMatrix, is_column_stochastic

# 方向ベクトルの成分がこれ以下なら、その制約は弦を制限しないとみなす
_DIRECTION_EPS = 1e-15


class VersionSpaceService:
    """バージョン空間の操作サービス。"""

    @staticmethod
    def initial_version_space(num_models: int, dimension: int) -> VersionSpace:
        """制約なしのバージョン空間 W_0 を返す。"""
        return VersionSpace(num_models=num_models, dimension=dimension)

    @staticmethod
    def _check_shape(space: VersionSpace, entries: NDArray[np.float64]) -> None:
        if entries.shape[-2:] != (space.num_models, space.dimension):
            raise ValidationError(
                f'version space is ({space.num_models}, {space.dimension})'
                f' but W has shape {entries.shape[-2:]}'
            )

    def contains_entries(self, space: VersionSpace, entries: NDArray[np.float64]) -> bool:
        """行列 entries が W_0 に属し、すべての制約を満たすかどうかを返す。"""
        self._check_shape(space, entries)
        if not is_column_stochastic(entries):
            return False
        return all(
            abs(c.y_hat - float(np.sum(entries * c.z_hat))) <= c.tolerance
            for c in space.constraints
        )

    def contains(self, space: VersionSpace, weights: WeightMatrix) -> bool:
        """W ∈ W_t かどうかを返す。

        Raises:
            ValidationError: 次元が一致しない場合。
        """
        return self.contains_entries(space, weights.entries)

    def contains_batch(
        self, space: VersionSpace, samples: NDArray[np.float64]
    ) -> NDArray[np.bool_]:
        """形状 (N, K, d) のサンプルそれぞれについて所属判定する。"""
        self._check_shape(space, samples)
        tol = settings.probability_tolerance
        inside = np.all(samples >= -tol, axis=(1, 2)) & np.all(
            np.abs(samples.sum(axis=1) - 1.0) <= tol, axis=1
        )
        for c in space.constraints:
            inner = np.einsum('nkd,kd->n', samples, c.z_hat)
            inside &= np.abs(c.y_hat - inner) <= c.tolerance
        return np.asarray(inside)

    @staticmethod
    def sample_uniform(
        num_models: int, dimension: int, n: int, rng: np.random.Generator
    ) -> NDArray[np.float64]:
        """各列を単体上の一様分布から独立に引いた (n, K, d) のサンプルを返す。"""
        draws = rng.dirichlet(np.ones(num_models), size=(n, dimension))
        return np.transpose(draws, (0, 2, 1))

    def mc_volume(self, space: VersionSpace, n_samples: int, rng: np.random.Generator) -> float:
        """W_0 上の一様サンプルのうち W_t に属する割合を返す。

        Raises:
            ValidationError: n_samples が 0 以下の場合。
        """
        if n_samples < 1:
            raise ValidationError('mc volume: n_samples must be >= 1')
        samples = self.sample_uniform(space.num_models, space.dimension, n_samples, rng)
        return float(self.contains_batch(space, samples).mean())

    @staticmethod
    def _chord(
        space: VersionSpace, point: NDArray[np.float64], direction: NDArray[np.float64]
    ) -> tuple[float, float]:
        """point + t·direction が実行可能となる t の区間を返す。"""
        lo, hi = -np.inf, np.inf
        neg = direction < -_DIRECTION_EPS
        pos = direction > _DIRECTION_EPS
        if np.any(neg):
            hi = min(hi, float(np.min(-point[neg] / direction[neg])))
        if np.any(pos):
            lo = max(lo, float(np.max(-point[pos] / direction[pos])))
        for c in space.constraints:
            slope = float(np.sum(direction * c.z_hat))
            if abs(slope) <= _DIRECTION_EPS:
                continue
            offset = c.y_hat - float(np.sum(point * c.z_hat))
            a, b = sorted(((offset - c.tolerance) / slope, (offset + c.tolerance) / slope))
            lo, hi = max(lo, a), min(hi, b)
        return lo, hi

    def hit_and_run(
        self,
        space: VersionSpace,
        start: WeightMatrix,
        n: int,
        rng: np.random.Generator,
        burn_in: int | None = None,
    ) -> list[WeightMatrix]:
        """start から hit-and-run 連鎖を走らせ、バーンイン後の n 点を返す。

        方向は列和 0 に射影したガウス行列、弦は非負制約とすべてのスラブの共通部分。
        各ステップ後に 0 でクリップして列を正規化し、所属しない点へは移動しない。

        Args:
            space: バージョン空間。
            start: 開始点（W_t に属すること）。
            n: 返す点数の上限。
            rng: 乱数生成器。
            burn_in: バーンインのステップ数。省略時は設定値。

        Returns:
            list[WeightMatrix]: W_t に属するサンプル。start が属さない場合と K = 1 の場合は空。
        """
        if not self.contains(space, start) or space.num_models == 1:
            return []
        steps = settings.hit_and_run_burn_in if burn_in is None else burn_in
        point = np.array(start.entries, dtype=np.float64)
        samples: list[WeightMatrix] = []
        for step in range(steps + n):
            direction = rng.standard_normal(point.shape)
            direction -= direction.mean(axis=0)
            norm = float(np.linalg.norm(direction))
            if norm > 0.0:
                lo, hi = self._chord(space, point, direction / norm)
                if lo <= hi and np.isfinite(lo) and np.isfinite(hi):
                    moved = np.clip(point + rng.uniform(lo, hi) * direction / norm, 0.0, None)
                    moved /= moved.sum(axis=0)
                    # 丸めで外に出た点には移動しない
                    if self.contains_entries(space, moved):
                        point = moved
            if step >= steps:
                samples.append(WeightMatrix(entries=point))
        return samples
