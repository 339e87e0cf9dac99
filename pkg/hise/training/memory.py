import logging

import numpy as np

from hise.constants import UNIT_NORM_TOLERANCE
from hise.errors import BankError
from hise.numcore import Array

logger = logging.getLogger(__name__)


class MemoryBank:
    """Fixed-capacity FIFO queue of unit-norm embedding rows, oldest first."""

    def __init__(self, capacity: int, dim: int, rows: Array | None = None) -> None:
        if capacity < 1:
            raise BankError(f"capacity must be >= 1, got {capacity}")
        self.capacity = capacity
        self.dim = dim
        self._rows = np.zeros((0, dim))
        if rows is not None:
            self.push(rows)

    @property
    def rows(self) -> Array:
        return self._rows.copy()

    def __len__(self) -> int:
        return int(self._rows.shape[0])

    def push(self, rows: Array) -> None:
        """Appends rows, then evicts the oldest beyond capacity. An empty batch is a no-op."""
        rows = np.asarray(rows, dtype=np.float64)
        if rows.size == 0:
            return
        if rows.ndim != 2 or rows.shape[1] != self.dim:
            raise BankError(f"expected rows of width {self.dim}, got shape {rows.shape}")
        norms = np.linalg.norm(rows, axis=1)
        off = np.flatnonzero(np.abs(norms - 1.0) > UNIT_NORM_TOLERANCE)
        if off.size:
            raise BankError(f"row {int(off[0])} has norm {norms[off[0]]:.12f}, expected unit norm")

        merged = np.concatenate([self._rows, rows], axis=0)
        evicted = max(0, merged.shape[0] - self.capacity)
        if evicted:
            logger.debug("bank full, evicting %d oldest row(s)", evicted)
        self._rows = merged[evicted:].copy()
