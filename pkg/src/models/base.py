"""ドメインモデル共通の基底定義。

numpy 配列をフィールドに持つ pydantic モデルのための型注釈と、
イミュータブルな基底クラスを提供します。
"""

from typing import Annotated, Any

import numpy as np
from numpy.typing import NDArray
from pydantic import BaseModel, BeforeValidator, ConfigDict, PlainSerializer


def _frozen_array(value: Any, dtype: type) -> NDArray[Any]:  # noqa: ANN401
    """値を読み取り専用の numpy 配列に変換する。"""
    array = np.array(value, dtype=dtype, copy=True)
    array.flags.writeable = False
    return array


def _as_float_array(value: Any) -> NDArray[np.float64]:  # noqa: ANN401
    return _frozen_array(value, np.float64)


def _as_int_array(value: Any) -> NDArray[np.int64]:  # noqa: ANN401
    return _frozen_array(value, np.int64)


def _to_list(array: NDArray[Any]) -> list[Any]:
    return list(array.tolist())


FloatArray = Annotated[
    NDArray[np.float64],
    BeforeValidator(_as_float_array),
    PlainSerializer(_to_list, return_type=list),
]
"""読み取り専用の float64 配列。JSON へはネストしたリストとして書き出す。"""

IntArray = Annotated[
    NDArray[np.int64],
    BeforeValidator(_as_int_array),
    PlainSerializer(_to_list, return_type=list),
]
"""読み取り専用の int64 配列。"""


class FrozenModel(BaseModel):
    """構築後に変更できないドメインモデルの基底クラス。"""

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)
