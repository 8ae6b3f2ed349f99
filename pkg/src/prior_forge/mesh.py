"""Triangle meshes: OBJ loading, normalization, and the query BVH."""

from __future__ import annotations

import sys
from dataclasses import dataclass, field

import numpy as np

from . import _kernels

MIN_TRIANGLE_AREA = 1e-12
BVH_LEAF_SIZE = 8


class MeshError(ValueError):
    pass


@dataclass(frozen=True)
class Aabb:
    lo: np.ndarray
    hi: np.ndarray

    def __post_init__(self):
        if np.any(self.lo > self.hi):
            raise MeshError("Aabb min corner exceeds max corner")

    @property
    def center(self) -> np.ndarray:
        return 0.5 * (self.lo + self.hi)

    @property
    def extent(self) -> np.ndarray:
        return self.hi - self.lo


class TriangleMesh:
    """Indexed triangle soup. Immutable after construction.

    Degenerate faces (area below ``MIN_TRIANGLE_AREA``) are dropped at
    construction; the count is kept in ``dropped_faces``.
    """

    def __init__(self, vertices, faces, dropped_faces: int = 0):
        vertices = np.ascontiguousarray(vertices, dtype=np.float64)
        faces = np.ascontiguousarray(faces, dtype=np.int64)
        if vertices.ndim != 2 or vertices.shape[1] != 3:
            raise MeshError("vertices must be an (n, 3) array")
        if faces.ndim != 2 or faces.shape[1] != 3:
            raise MeshError("faces must be an (m, 3) array")
        if not np.all(np.isfinite(vertices)):
            raise MeshError("non-finite vertex coordinate")
        if faces.size and (faces.min() < 0 or faces.max() >= len(vertices)):
            raise MeshError("face index out of range")
        areas = _face_areas(vertices, faces)
        keep = areas >= MIN_TRIANGLE_AREA
        dropped_faces += int(np.count_nonzero(~keep))
        self.vertices = vertices
        self.faces = faces[keep]
        self.dropped_faces = dropped_faces
        self.vertices.flags.writeable = False
        self.faces.flags.writeable = False

    @property
    def n_vertices(self) -> int:
        return len(self.vertices)

    @property
    def n_faces(self) -> int:
        return len(self.faces)

    def corners(self):
        """Per-face corner coordinate arrays (a, b, c), each (m, 3)."""
        v, f = self.vertices, self.faces
        return v[f[:, 0]], v[f[:, 1]], v[f[:, 2]]

    def aabb(self) -> Aabb:
        if self.n_vertices == 0:
            raise MeshError("empty mesh has no bounds")
        return Aabb(self.vertices.min(axis=0), self.vertices.max(axis=0))

    def face_normals_weighted(self) -> np.ndarray:
        """Area-weighted face normals, 0.5 * (b-a) x (c-a)."""
        a, b, c = self.corners()
        return 0.5 * np.cross(b - a, c - a)

    def inverted(self) -> "TriangleMesh":
        """Same surface with reversed orientation."""
        return TriangleMesh(self.vertices, self.faces[:, ::-1])


def _face_areas(vertices, faces):
    if len(faces) == 0:
        return np.zeros(0)
    a = vertices[faces[:, 0]]
    b = vertices[faces[:, 1]]
    c = vertices[faces[:, 2]]
    return 0.5 * np.linalg.norm(np.cross(b - a, c - a), axis=1)


def merge(*meshes: TriangleMesh) -> TriangleMesh:
    """Concatenate meshes into one (winding numbers of closed parts add)."""
    verts, faces, offset = [], [], 0
    for m in meshes:
        verts.append(m.vertices)
        faces.append(m.faces + offset)
        offset += m.n_vertices
    return TriangleMesh(np.vstack(verts), np.vstack(faces))


def load_obj(path) -> TriangleMesh:
    """Load the v/f subset of an OBJ file.

    Polygons are fan-triangulated, 1-based and negative indices resolved.
    """
    vertices: list[tuple[float, float, float]] = []
    triangles: list[tuple[int, int, int]] = []
    try:
        fh = open(path, "r", encoding="utf-8", errors="replace")
    except FileNotFoundError:
        raise MeshError(f"mesh file not found: {path}") from None
    with fh:
        for lineno, line in enumerate(fh, start=1):
            parts = line.split()
            if not parts or parts[0].startswith("#"):
                continue
            tag = parts[0]
            if tag == "v":
                if len(parts) < 4:
                    raise MeshError(f"{path}:{lineno}: vertex needs 3 coordinates")
                try:
                    vertices.append((float(parts[1]), float(parts[2]), float(parts[3])))
                except ValueError:
                    raise MeshError(f"{path}:{lineno}: bad vertex coordinate") from None
            elif tag == "f":
                if len(parts) < 4:
                    raise MeshError(f"{path}:{lineno}: face needs at least 3 indices")
                idx = []
                for token in parts[1:]:
                    head = token.split("/", 1)[0]
                    try:
                        raw = int(head)
                    except ValueError:
                        raise MeshError(f"{path}:{lineno}: bad face index {token!r}") from None
                    if raw == 0:
                        raise MeshError(f"{path}:{lineno}: face index 0 is invalid")
                    resolved = raw - 1 if raw > 0 else len(vertices) + raw
                    if resolved < 0 or resolved >= len(vertices):
                        raise MeshError(f"{path}:{lineno}: index out of range ({raw})")
                    idx.append(resolved)
                for k in range(1, len(idx) - 1):
                    triangles.append((idx[0], idx[k], idx[k + 1]))
            # vn / vt / usemtl / o / g / s records are ignored
    if not vertices:
        raise MeshError(f"{path}: no vertices")
    if not triangles:
        raise MeshError(f"{path}: no faces")
    mesh = TriangleMesh(np.array(vertices), np.array(triangles))
    if mesh.n_faces == 0:
        raise MeshError(f"{path}: zero faces after degenerate filtering")
    return mesh


def save_obj(mesh: TriangleMesh, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for v in mesh.vertices:
            fh.write(f"v {v[0]:.9g} {v[1]:.9g} {v[2]:.9g}\n")
        for f in mesh.faces:
            fh.write(f"f {f[0] + 1} {f[1] + 1} {f[2] + 1}\n")


def normalize(mesh: TriangleMesh, target_size: float = 1.5) -> TriangleMesh:
    """Center the Aabb at the origin and scale its longest side to ``target_size``."""
    box = mesh.aabb()
    longest = float(box.extent.max())
    if longest <= 0.0:
        raise MeshError("cannot normalize: all vertices coincident")
    scale = target_size / longest
    vertices = (mesh.vertices - box.center) * scale
    return TriangleMesh(vertices, mesh.faces, dropped_faces=mesh.dropped_faces)


@dataclass
class Bvh:
    """Flat median-split hierarchy with per-node far-field aggregates.

    ``left < 0`` marks a leaf owning triangles ``start:start+count`` of the
    reordered corner arrays ``ta/tb/tc``.  ``dipole`` is the summed
    area-weighted normal; ``moment`` and ``moment2`` are the first and second
    moments of the area-weighted normals about the node ``centroid`` (the
    higher expansion orders are needed to hold the far-field error near 1e-4
    at beta=2); ``radius`` is the distance from the centroid to the farthest
    Aabb corner (the far-field test measures from the expansion point).
    """

    node_min: np.ndarray
    node_max: np.ndarray
    left: np.ndarray
    right: np.ndarray
    start: np.ndarray
    count: np.ndarray
    dipole: np.ndarray
    moment: np.ndarray
    moment2: np.ndarray
    centroid: np.ndarray
    radius: np.ndarray
    ta: np.ndarray
    tb: np.ndarray
    tc: np.ndarray
    tri_order: np.ndarray
    mesh: TriangleMesh = field(repr=False, default=None)

    @property
    def n_nodes(self) -> int:
        return len(self.left)

    def arrays(self):
        return (self.node_min, self.node_max, self.left, self.right,
                self.start, self.count, self.dipole, self.moment, self.moment2,
                self.centroid, self.radius, self.ta, self.tb, self.tc)

    def tri_arrays(self):
        return (self.node_min, self.node_max, self.left, self.right,
                self.start, self.count, self.ta, self.tb, self.tc)


def build_bvh(mesh: TriangleMesh, leaf_size: int = BVH_LEAF_SIZE) -> Bvh:
    if mesh.n_faces == 0:
        raise MeshError("cannot build a BVH over zero faces")
    a, b, c = mesh.corners()
    tri_min = np.minimum(np.minimum(a, b), c)
    tri_max = np.maximum(np.maximum(a, b), c)
    mid = (a + b + c) / 3.0
    weighted_normal = 0.5 * np.cross(b - a, c - a)
    area = np.linalg.norm(weighted_normal, axis=1)

    nodes = []  # (lo, hi, left, right, start, count)
    order = np.arange(mesh.n_faces, dtype=np.int64)

    def build(sel: np.ndarray) -> int:
        node_id = len(nodes)
        nodes.append(None)
        lo = tri_min[sel].min(axis=0)
        hi = tri_max[sel].max(axis=0)
        if len(sel) <= leaf_size:
            nodes[node_id] = (lo, hi, -1, -1, sel)
            return node_id
        axis = int(np.argmax(hi - lo))
        ranked = sel[np.argsort(mid[sel, axis], kind="stable")]
        half = len(ranked) // 2
        l = build(ranked[:half])
        r = build(ranked[half:])
        nodes[node_id] = (lo, hi, l, r, None)
        return node_id

    depth_cap = max(2 * int(np.ceil(np.log2(max(mesh.n_faces, 2)))) + 64, 256)
    old_limit = sys.getrecursionlimit()
    sys.setrecursionlimit(max(old_limit, depth_cap * 8))
    try:
        build(order)
    finally:
        sys.setrecursionlimit(old_limit)

    n = len(nodes)
    node_min = np.empty((n, 3))
    node_max = np.empty((n, 3))
    left = np.empty(n, dtype=np.int64)
    right = np.empty(n, dtype=np.int64)
    start = np.zeros(n, dtype=np.int64)
    count = np.zeros(n, dtype=np.int64)
    leaf_tris: list[np.ndarray] = []
    cursor = 0
    for i, (lo, hi, l, r, sel) in enumerate(nodes):
        node_min[i], node_max[i] = lo, hi
        left[i], right[i] = l, r
        if l < 0:
            start[i] = cursor
            count[i] = len(sel)
            cursor += len(sel)
            leaf_tris.append(sel)
    tri_order = np.concatenate(leaf_tris)

    # edge midpoints give an exact quadrature for the per-triangle second moment
    edge_mids = np.stack([(a + b) / 2.0, (a + c) / 2.0, (b + c) / 2.0], axis=1)

    dipole = np.zeros((n, 3))
    moment = np.zeros((n, 3, 3))
    moment2 = np.zeros((n, 3, 3, 3))
    centroid = np.zeros((n, 3))
    area_sum = np.zeros(n)
    for i in range(n - 1, -1, -1):
        if left[i] < 0:
            sel = tri_order[start[i]:start[i] + count[i]]
            dipole[i] = weighted_normal[sel].sum(axis=0)
            area_sum[i] = area[sel].sum()
            if area_sum[i] > 0:
                centroid[i] = (mid[sel] * area[sel][:, None]).sum(axis=0) / area_sum[i]
            else:
                centroid[i] = 0.5 * (node_min[i] + node_max[i])
            rel1 = mid[sel] - centroid[i]
            moment[i] = np.einsum("tj,tk->jk", weighted_normal[sel], rel1)
            rel2 = edge_mids[sel] - centroid[i]
            second = np.einsum("tmk,tml->tkl", rel2, rel2) / 3.0
            moment2[i] = np.einsum("tj,tkl->jkl", weighted_normal[sel], second)
        else:
            l, r = left[i], right[i]
            dipole[i] = dipole[l] + dipole[r]
            area_sum[i] = area_sum[l] + area_sum[r]
            if area_sum[i] > 0:
                centroid[i] = (centroid[l] * area_sum[l] + centroid[r] * area_sum[r]) / area_sum[i]
            else:
                centroid[i] = 0.5 * (node_min[i] + node_max[i])
            # shift children's moments to this node's expansion center
            for ch in (l, r):
                s = centroid[ch] - centroid[i]
                moment[i] += moment[ch] + np.outer(dipole[ch], s)
                moment2[i] += (moment2[ch]
                               + np.einsum("jk,l->jkl", moment[ch], s)
                               + np.einsum("jl,k->jkl", moment[ch], s)
                               + np.einsum("j,k,l->jkl", dipole[ch], s, s))
    picks = np.array([(x, y, z) for x in (0, 1) for y in (0, 1) for z in (0, 1)])
    corners = np.where(picks[None, :, :] == 0, node_min[:, None, :], node_max[:, None, :])
    radius = np.linalg.norm(corners - centroid[:, None, :], axis=2).max(axis=1)

    va, vb, vc = mesh.corners()
    return Bvh(node_min=node_min, node_max=node_max, left=left, right=right,
               start=start, count=count, dipole=dipole, moment=moment,
               moment2=moment2, centroid=centroid, radius=radius,
               ta=np.ascontiguousarray(va[tri_order]),
               tb=np.ascontiguousarray(vb[tri_order]),
               tc=np.ascontiguousarray(vc[tri_order]),
               tri_order=tri_order, mesh=mesh)


def surface_distance(bvh: Bvh, points) -> np.ndarray:
    """Unsigned distance from each point to the mesh surface."""
    pts = np.ascontiguousarray(np.atleast_2d(points), dtype=np.float64)
    return _kernels.closest_distance(*bvh.tri_arrays(), pts)
