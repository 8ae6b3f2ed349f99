"""Trainable voxel density field over [-1,1]^3 with differentiable queries.

Raw parameters live on a corner-aligned G^3 node grid; the density at a point
is the logistic of the trilinear interpolation of the raw values, so it stays
in (0,1) everywhere.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass

import numpy as np

from . import _kernels

PFG_MAGIC = b"PFG1"


def logistic(x):
    x = np.asarray(x, dtype=np.float64)
    out = np.empty_like(x)
    pos = x >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-x[pos]))
    ex = np.exp(x[~pos])
    out[~pos] = ex / (1.0 + ex)
    return out if out.ndim else float(out)


def logit(p: float) -> float:
    if not 0.0 < p < 1.0:
        raise ValueError("density must lie strictly inside (0,1)")
    return float(np.log(p / (1.0 - p)))


class DensityField:
    """G^3 raw parameters; query(p) = logistic(trilinear(raw, p))."""

    def __init__(self, raw: np.ndarray):
        raw = np.ascontiguousarray(raw, dtype=np.float64)
        if raw.ndim != 3 or raw.shape[0] != raw.shape[1] or raw.shape[0] != raw.shape[2]:
            raise ValueError("raw parameters must form a cube")
        if raw.shape[0] < 2:
            raise ValueError("resolution must be at least 2")
        if not np.all(np.isfinite(raw)):
            raise ValueError("non-finite raw parameter")
        self.raw = raw

    @property
    def resolution(self) -> int:
        return self.raw.shape[0]

    def query(self, points, with_clamp_mask: bool = False):
        """Density at each point; out-of-domain points are clamped to the boundary."""
        pts, single = _as_points(points)
        d = _kernels.trilinear_query(self.raw, pts)
        if with_clamp_mask:
            mask = np.any(np.abs(pts) > 1.0, axis=1)
            return (float(d[0]), bool(mask[0])) if single else (d, mask)
        return float(d[0]) if single else d

    def query_grad(self, points):
        """Densities plus sparse node gradients.

        Returns ``(d, idx, w)`` where ``idx``/``w`` hold 8 entries per point
        and the density derivative wrt raw node i is ``d*(1-d)*w_i``.
        """
        pts, single = _as_points(points)
        idx, w = _kernels.trilinear_weights(self.resolution, pts)
        d = _kernels.trilinear_query(self.raw, pts)
        grad_w = (d * (1.0 - d))[:, None] * w
        if single:
            return float(d[0]), idx[0], grad_w[0]
        return d, idx, grad_w

    def scatter(self, points, coeff) -> np.ndarray:
        """Accumulate per-point coefficients into a raw-parameter gradient grid."""
        pts, _ = _as_points(points)
        coeff = np.ascontiguousarray(coeff, dtype=np.float64)
        return _kernels.trilinear_scatter(self.resolution, pts, coeff)

    def to_occupancy(self, resolution: int, threshold: float) -> "OccupancyGrid":
        if not 0.0 < threshold < 1.0:
            raise ValueError("threshold must lie in (0,1)")
        centers = cell_centers(resolution)
        d = self.query(centers)
        values = (d > threshold).astype(np.uint8).reshape(resolution, resolution, resolution)
        return OccupancyGrid(values=values, threshold=threshold)

    def densities_at_cells(self, resolution: int) -> np.ndarray:
        d = self.query(cell_centers(resolution))
        return d.reshape(resolution, resolution, resolution)


def new_field(resolution: int = 64, init_density: float = 0.5) -> DensityField:
    if resolution < 2:
        raise ValueError("resolution must be at least 2")
    raw = np.full((resolution,) * 3, logit(init_density))
    return DensityField(raw)


def query(field: DensityField, points):
    return field.query(points)


def query_grad(field: DensityField, points):
    return field.query_grad(points)


def to_occupancy_grid(field: DensityField, resolution: int, threshold: float) -> "OccupancyGrid":
    return field.to_occupancy(resolution, threshold)


def cell_centers(resolution: int) -> np.ndarray:
    """Centers of a resolution^3 cell grid over [-1,1]^3.

    Ordered so that reshaping a per-center quantity to (G,G,G) indexes as
    [ix,iy,iz].
    """
    side = -1.0 + (np.arange(resolution) + 0.5) * (2.0 / resolution)
    xx, yy, zz = np.meshgrid(side, side, side, indexing="ij")
    return np.ascontiguousarray(
        np.stack([xx.ravel(), yy.ravel(), zz.ravel()], axis=1))


@dataclass
class OccupancyGrid:
    """Binary voxel grid with the threshold that produced it."""

    values: np.ndarray
    threshold: float = 0.5

    def __post_init__(self):
        self.values = np.ascontiguousarray(self.values, dtype=np.uint8)
        if not np.all((self.values == 0) | (self.values == 1)):
            raise ValueError("occupancy values must be 0 or 1")

    @property
    def resolution(self) -> int:
        return self.values.shape[0]


def grid_iou(a, b) -> float:
    """Intersection over union of two binary grids; empty-vs-empty scores 0."""
    av = a.values if isinstance(a, OccupancyGrid) else np.asarray(a)
    bv = b.values if isinstance(b, OccupancyGrid) else np.asarray(b)
    if av.shape != bv.shape:
        raise ValueError("grid shapes differ")
    inter = int(np.count_nonzero((av != 0) & (bv != 0)))
    union = int(np.count_nonzero((av != 0) | (bv != 0)))
    if union == 0:
        return 0.0
    return inter / union


def save_grid(path, values: np.ndarray) -> None:
    """Write a PFG1 grid file: magic, u32 dims (nx ny nz, LE), float32 x-fastest."""
    values = np.asarray(values)
    if values.ndim != 3:
        raise ValueError("grid must be 3-dimensional")
    nx, ny, nz = values.shape
    with open(path, "wb") as fh:
        fh.write(PFG_MAGIC)
        fh.write(struct.pack("<III", nx, ny, nz))
        fh.write(values.astype("<f4").ravel(order="F").tobytes())


def load_grid(path) -> np.ndarray:
    with open(path, "rb") as fh:
        magic = fh.read(4)
        if magic != PFG_MAGIC:
            raise ValueError(f"{path}: not a PFG1 grid file")
        nx, ny, nz = struct.unpack("<III", fh.read(12))
        data = np.frombuffer(fh.read(nx * ny * nz * 4), dtype="<f4")
    if data.size != nx * ny * nz:
        raise ValueError(f"{path}: truncated grid data")
    return data.reshape((nx, ny, nz), order="F").astype(np.float64)


def _as_points(points):
    pts = np.ascontiguousarray(points, dtype=np.float64)
    if pts.ndim == 1:
        return pts.reshape(1, 3), True
    return pts, False
