"""Internal accounting of the solver's major live allocations.

Memory comparisons against other runtimes are not reproducible through OS
RSS, so the solver registers every major buffer it creates (or receives)
here and the benchmark reports the accounted peak.
"""

from __future__ import annotations

import numpy as np

__all__ = ["MemoryLedger"]


class MemoryLedger:
    """Tracks named live allocations in bytes and their peak total."""

    def __init__(self):
        self._live: dict[str, int] = {}
        self.peak_bytes = 0
        self.max_single_bytes = 0

    def track(self, name: str, *arrays: np.ndarray) -> None:
        """Register the byte size of one or more arrays under ``name``."""
        nbytes = int(sum(a.nbytes for a in arrays))
        if name in self._live:
            raise ValueError(f"allocation {name!r} already tracked")
        self._live[name] = nbytes
        self.max_single_bytes = max(self.max_single_bytes, nbytes)
        self.peak_bytes = max(self.peak_bytes, self.live_bytes)

    def release(self, name: str) -> None:
        self._live.pop(name)

    @property
    def live_bytes(self) -> int:
        return sum(self._live.values())

    def breakdown(self) -> dict[str, int]:
        return dict(self._live)
