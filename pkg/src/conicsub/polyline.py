"""Planar polyline container shared by every stage of the pipeline."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import TooFewPoints


@dataclass(frozen=True)
class Polyline:
    """Ordered affine vertices with open/closed topology.

    ``vertices`` is an (n, 2) float array; a closed polyline does not repeat
    its first vertex at the end.
    """

    vertices: np.ndarray
    closed: bool = False

    def __post_init__(self):
        v = np.ascontiguousarray(np.asarray(self.vertices, dtype=float))
        if v.ndim != 2 or v.shape[1] != 2:
            raise ValueError("vertices must have shape (n, 2)")
        object.__setattr__(self, "vertices", v)

    def __len__(self) -> int:
        return self.vertices.shape[0]

    @property
    def n_edges(self) -> int:
        n = len(self)
        return n if self.closed else n - 1

    def bounding_box(self) -> tuple[np.ndarray, np.ndarray]:
        return self.vertices.min(axis=0), self.vertices.max(axis=0)

    def bbox_diagonal(self) -> float:
        lo, hi = self.bounding_box()
        return float(np.hypot(*(hi - lo)))

    def edge_lengths(self) -> np.ndarray:
        v = self.vertices
        if self.closed:
            d = np.roll(v, -1, axis=0) - v
        else:
            d = v[1:] - v[:-1]
        return np.hypot(d[:, 0], d[:, 1])

    def require_at_least(self, n: int) -> None:
        if len(self) < n:
            raise TooFewPoints(f"need at least {n} vertices, got {len(self)}")


def chord_deviations(points: np.ndarray, a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Perpendicular distances of points from the chord a-b."""
    points = np.asarray(points, dtype=float)
    d = np.asarray(b, dtype=float) - np.asarray(a, dtype=float)
    L = np.hypot(d[0], d[1])
    if L == 0.0:
        return np.hypot(points[..., 0] - a[0], points[..., 1] - a[1])
    r = points - a
    return np.abs(d[0] * r[..., 1] - d[1] * r[..., 0]) / L
