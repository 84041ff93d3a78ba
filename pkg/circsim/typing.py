"""
Type Helpers
"""

from typing import Any, Callable, Dict, Mapping, Sequence, Union

import numpy as np


Vector = np.ndarray
VectorLike = Union[Sequence[float], np.ndarray]

# f(x, u, t) -> dx/dt
Derivative = Callable[[np.ndarray, np.ndarray, float], np.ndarray]

# t -> u
ActionSchedule = Callable[[float], VectorLike]

ParamMapping = Mapping[str, Any]
Info = Dict[str, Any]


__all__ = ["ActionSchedule", "Derivative", "Info", "ParamMapping", "Vector", "VectorLike"]
