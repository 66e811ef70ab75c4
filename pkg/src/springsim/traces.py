"""Uniformly sampled time series produced by simulation runs."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass
class TraceSeries:
    """Samples at strictly increasing, uniformly spaced times.

    ``values`` is (n,) for a scalar signal or (n, 3) for a position trace.
    """

    times: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        self.times = np.asarray(self.times, dtype=np.float64)
        self.values = np.asarray(self.values, dtype=np.float64)
        if self.times.ndim != 1 or len(self.times) < 2:
            raise ValueError("a trace needs at least 2 samples")
        if len(self.values) != len(self.times):
            raise ValueError("times and values disagree in length")
        gaps = np.diff(self.times)
        if gaps.min() <= 0:
            raise ValueError("sample times must be strictly increasing")
        if gaps.max() - gaps.min() > 1e-9 * max(gaps.max(), 1e-300):
            raise ValueError("sample times must be uniformly spaced")

    def __len__(self) -> int:
        return len(self.times)

    @property
    def spacing(self) -> float:
        return float(self.times[1] - self.times[0])

    @property
    def duration(self) -> float:
        return float(self.times[-1] - self.times[0])

    def component(self, axis: int) -> "TraceSeries":
        """Scalar sub-trace of one vector component."""
        if self.values.ndim != 2:
            raise ValueError("trace is already scalar")
        return TraceSeries(self.times, self.values[:, axis])
