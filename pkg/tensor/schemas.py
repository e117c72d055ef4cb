from typing import Tuple

import numpy as np


class RngState:
    """Seeded counter-based random stream (numpy Philox).

    Identical seeds and identical call sequences give identical draws; the
    Philox counter makes the stream platform-independent. ``position`` counts
    the values handed out so far.
    """

    def __init__(self, seed: int):
        if seed < 0 or seed >= 2 ** 64:
            raise ValueError(f"seed must fit in 64 bits, got {seed}")
        self.seed = int(seed)
        self.position = 0
        self._generator = np.random.Generator(np.random.Philox(self.seed))

    def __repr__(self) -> str:
        return f"RngState(seed={self.seed}, position={self.position})"

    def _advance(self, count: int) -> None:
        self.position += int(count)

    def uniform(self, low: float, high: float, shape: Tuple[int, ...]) -> np.ndarray:
        values = self._generator.uniform(low, high, size=shape)
        self._advance(values.size)
        return values

    def normal(self, shape: Tuple[int, ...], scale: float = 1.0) -> np.ndarray:
        values = self._generator.normal(0.0, scale, size=shape)
        self._advance(values.size)
        return values

    def integers(self, low: int, high: int, shape: Tuple[int, ...]) -> np.ndarray:
        values = self._generator.integers(low, high, size=shape)
        self._advance(values.size)
        return values

    def permutation(self, count: int) -> np.ndarray:
        values = self._generator.permutation(count)
        self._advance(count)
        return values

    def choice(self, population: int, size: int) -> np.ndarray:
        """``size`` distinct indices from [0, population), uniformly"""
        values = self._generator.choice(population, size=size, replace=False)
        self._advance(size)
        return np.asarray(values, dtype=np.int64)

    def spawn(self, offset: int) -> "RngState":
        """Independent stream derived from this seed (used for per-purpose streams)"""
        return RngState((self.seed * 1_000_003 + offset) % 2 ** 64)
