from typing import TypeAlias
from typing_extensions import TypeVar

import numpy as np
import numpy.typing as npt

T = TypeVar("T", infer_variance=True)

SitePair: TypeAlias = tuple[int, int]
Bond: TypeAlias = int
"""Bond j joins sites j and (j+1) mod L."""
FloatArray: TypeAlias = npt.NDArray[np.float64]
ComplexArray: TypeAlias = npt.NDArray[np.complex128]
IntArray: TypeAlias = npt.NDArray[np.int64]
AnyArray: TypeAlias = npt.NDArray[np.generic]
SeedLike: TypeAlias = int | np.random.SeedSequence | None
