"""Gauss-Legendre rules on [0, 1]."""

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from ..utils.errors import UnsupportedOrderError

MAX_POINTS = 30


@dataclass(frozen=True)
class Gauss1D:
    points: np.ndarray
    weights: np.ndarray

    @property
    def degree(self):
        """Highest polynomial degree integrated exactly."""
        return 2 * len(self.points) - 1

    def __len__(self):
        return len(self.points)


@lru_cache(maxsize=None)
def gauss1d(num_points):
    """Gauss-Legendre rule with ``num_points`` nodes mapped to [0, 1].

    Raises:
        UnsupportedOrderError: unless 1 <= num_points <= 30
    """
    if not isinstance(num_points, (int, np.integer)) or not 1 <= num_points <= MAX_POINTS:
        raise UnsupportedOrderError(f"Gauss rules need 1..{MAX_POINTS} points, got {num_points}")
    x, w = np.polynomial.legendre.leggauss(int(num_points))
    points = 0.5 * (x + 1.0)
    weights = 0.5 * w
    points.setflags(write=False)
    weights.setflags(write=False)
    return Gauss1D(points, weights)


def points_for_degree(degree):
    """Fewest Gauss points integrating polynomials of ``degree`` exactly."""
    return max(1, degree // 2 + 1)
