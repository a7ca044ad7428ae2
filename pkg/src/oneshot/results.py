"""Common result record returned by every estimator."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np


@dataclass
class EstimateResult:
    """Output of one estimator run.

    ``theta_hat`` and ``error`` are in the distribution's native
    coordinates; ``error`` is the l2 distance to the true minimizer of the
    expected loss when that minimizer is known, else None.
    """

    estimator: str
    theta_hat: np.ndarray
    error: Optional[float]
    m: int
    n: int
    total_bits: int
    bits_per_signal: int
    diagnostics: dict = field(default_factory=dict)

    def diag(self, key: str, default=0):
        return self.diagnostics.get(key, default)
