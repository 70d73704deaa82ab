"""
Shared base model and numpy field types for all schemas.

Arrays are stored read-only so that validated models stay immutable, and serialize to
nested lists in JSON.
"""

from typing import Annotated, Any

import numpy as np
from pydantic import BaseModel, ConfigDict, PlainSerializer, PlainValidator


def _to_list(value: np.ndarray) -> list:
    return value.tolist()


def _frozen_float_array(value: Any) -> np.ndarray:
    array = np.array(value, dtype=float)
    array.setflags(write=False)
    return array


def _frozen_int_array(value: Any) -> np.ndarray:
    raw = np.asarray(value)
    if raw.size and not np.all(np.equal(np.mod(raw, 1), 0)):
        raise ValueError("expected integer values")
    array = np.array(raw, dtype=np.int64)
    array.setflags(write=False)
    return array


FloatArray = Annotated[
    np.ndarray,
    PlainValidator(_frozen_float_array),
    PlainSerializer(_to_list, return_type=list),
]

IntArray = Annotated[
    np.ndarray,
    PlainValidator(_frozen_int_array),
    PlainSerializer(_to_list, return_type=list),
]


class HawkesBaseModel(BaseModel):
    """Immutable base model; numpy arrays allowed as field values."""

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)
