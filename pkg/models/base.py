"""
Base model class for all domain models.
"""

from typing import Optional

import numpy as np
from pydantic import BaseModel, ConfigDict


class Base(BaseModel):
    """Base class for all models."""

    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)


def readonly(array: Optional[np.ndarray]) -> Optional[np.ndarray]:
    """Read-only copy of ``array``; the caller's array keeps its write flag."""
    if array is None:
        return None
    frozen = np.array(array, copy=True)
    frozen.setflags(write=False)
    return frozen
