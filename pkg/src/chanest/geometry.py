"""Uniform rectangular array geometry."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class ArrayGeometry:
    """A uniform rectangular antenna array with ``n_v`` rows and ``n_h`` columns.

    Antenna spacings are given in wavelengths. The flat antenna index is
    row-major with the vertical axis outermost, ``i = v * n_h + h``, so any
    Kronecker-structured operator built as kron(vertical factor, horizontal
    factor) acts consistently on flattened channel vectors.
    """

    n_v: int
    n_h: int
    spacing_v: float = 0.5
    spacing_h: float = 1.0

    def __post_init__(self):
        if self.n_v < 1 or self.n_h < 1:
            raise ValueError(f"antenna counts must be positive, got {self.n_v}x{self.n_h}")
        if self.spacing_v <= 0.0 or self.spacing_h <= 0.0:
            raise ValueError("antenna spacings must be positive")

    @property
    def n(self) -> int:
        """Total number of antennas."""
        return self.n_v * self.n_h

    def antenna_indices(self) -> tuple[np.ndarray, np.ndarray]:
        """Per-antenna (vertical, horizontal) indices in flat order."""
        v = np.repeat(np.arange(self.n_v), self.n_h)
        h = np.tile(np.arange(self.n_h), self.n_v)
        return v, h
