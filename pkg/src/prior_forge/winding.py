"""Generalized winding numbers and binary occupancy labels."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import _kernels
from .mesh import Bvh, TriangleMesh

# beta large enough that no node ever passes the far-field test
BETA_EXACT = 1e30


@dataclass(frozen=True)
class WindingConfig:
    beta: float = 2.0
    inside_threshold: float = 0.5

    def __post_init__(self):
        if not self.beta > 1.0:
            raise ValueError("beta must exceed 1")
        if not 0.0 < self.inside_threshold < 1.0:
            raise ValueError("inside_threshold must lie in (0,1)")


def solid_angle(triangle, query) -> float:
    """Signed solid angle (Van Oosterom-Strackee) a triangle subtends at a point.

    Returns 0 for degenerate triangles and for queries exactly in the
    triangle's plane inside it.
    """
    tri = np.asarray(triangle, dtype=np.float64)
    q = np.asarray(query, dtype=np.float64)
    a, b, c = tri[0] - q, tri[1] - q, tri[2] - q
    la, lb, lc = (math.sqrt(v @ v) for v in (a, b, c))
    num = a @ np.cross(b, c)
    den = (la * lb * lc + (a @ b) * lc + (a @ c) * lb + (b @ c) * la)
    if num == 0.0:
        return 0.0
    return 2.0 * math.atan2(num, den)


def winding_exact(mesh: TriangleMesh, queries) -> np.ndarray:
    """Winding numbers by direct summation over every face."""
    pts, single = _as_points(queries)
    ta, tb, tc = mesh.corners()
    w = _kernels.winding_exact(ta, tb, tc, pts)
    return w[0] if single else w


def winding_fast(bvh: Bvh, queries, cfg: WindingConfig = WindingConfig()) -> np.ndarray:
    """BVH-accelerated winding numbers (dipole far field, exact leaves)."""
    pts, single = _as_points(queries)
    w = _kernels.winding_fast(*bvh.arrays(), pts, cfg.beta)
    return w[0] if single else w


def occupancy_label(bvh: Bvh, queries, cfg: WindingConfig = WindingConfig()) -> np.ndarray:
    """1 where the winding number exceeds the inside threshold, else 0."""
    pts, single = _as_points(queries)
    w = _kernels.winding_fast(*bvh.arrays(), pts, cfg.beta)
    labels = (w > cfg.inside_threshold).astype(np.uint8)
    return int(labels[0]) if single else labels


def _as_points(queries):
    pts = np.ascontiguousarray(queries, dtype=np.float64)
    if pts.ndim == 1:
        return pts.reshape(1, 3), True
    return pts, False
