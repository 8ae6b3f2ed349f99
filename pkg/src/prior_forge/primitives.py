"""Closed primitive meshes used for templates, conflict targets and catalogs.

All generators return outward-oriented closed surfaces in world coordinates;
callers place them directly in the [-1,1]^3 field domain.
"""

from __future__ import annotations

import numpy as np

from .mesh import TriangleMesh, merge


def icosphere(subdivisions: int = 3, radius: float = 1.0,
              center=(0.0, 0.0, 0.0)) -> TriangleMesh:
    phi = (1.0 + np.sqrt(5.0)) / 2.0
    verts = np.array([
        (-1, phi, 0), (1, phi, 0), (-1, -phi, 0), (1, -phi, 0),
        (0, -1, phi), (0, 1, phi), (0, -1, -phi), (0, 1, -phi),
        (phi, 0, -1), (phi, 0, 1), (-phi, 0, -1), (-phi, 0, 1),
    ], dtype=np.float64)
    verts /= np.linalg.norm(verts, axis=1)[:, None]
    faces = [
        (0, 11, 5), (0, 5, 1), (0, 1, 7), (0, 7, 10), (0, 10, 11),
        (1, 5, 9), (5, 11, 4), (11, 10, 2), (10, 7, 6), (7, 1, 8),
        (3, 9, 4), (3, 4, 2), (3, 2, 6), (3, 6, 8), (3, 8, 9),
        (4, 9, 5), (2, 4, 11), (6, 2, 10), (8, 6, 7), (9, 8, 1),
    ]
    verts = list(verts)
    for _ in range(subdivisions):
        cache: dict[tuple[int, int], int] = {}

        def midpoint(i, j):
            key = (min(i, j), max(i, j))
            if key not in cache:
                m = verts[i] + verts[j]
                verts.append(m / np.linalg.norm(m))
                cache[key] = len(verts) - 1
            return cache[key]

        new_faces = []
        for i, j, k in faces:
            ij, jk, ki = midpoint(i, j), midpoint(j, k), midpoint(k, i)
            new_faces += [(i, ij, ki), (j, jk, ij), (k, ki, jk), (ij, jk, ki)]
        faces = new_faces
    vertices = np.array(verts) * radius + np.asarray(center, dtype=np.float64)
    return TriangleMesh(vertices, np.array(faces))


def box(center=(0.0, 0.0, 0.0), half_extents=(0.5, 0.5, 0.5)) -> TriangleMesh:
    cx, cy, cz = center
    hx, hy, hz = half_extents
    v = np.array([(x, y, z) for x in (-hx, hx) for y in (-hy, hy) for z in (-hz, hz)])
    v += (cx, cy, cz)
    quads = [
        (0, 1, 3, 2),  # -x
        (4, 6, 7, 5),  # +x
        (0, 4, 5, 1),  # -y
        (2, 3, 7, 6),  # +y
        (0, 2, 6, 4),  # -z
        (1, 5, 7, 3),  # +z
    ]
    faces = []
    for a, b, c, d in quads:
        faces += [(a, b, c), (a, c, d)]
    return TriangleMesh(v, np.array(faces))


def _lathe(profile_r, profile_y, segments: int, center) -> TriangleMesh:
    """Surface of revolution around +y from an open (r, y) profile.

    The profile endpoints must sit on the axis (r == 0) so the result closes.
    """
    assert profile_r[0] == 0.0 and profile_r[-1] == 0.0
    angles = np.linspace(0.0, 2 * np.pi, segments, endpoint=False)
    rows = []
    tips = []
    for r, y in zip(profile_r, profile_y):
        if r == 0.0:
            tips.append(len(rows))
            rows.append(None)
        else:
            rows.append(np.stack([r * np.cos(angles),
                                  np.full(segments, y),
                                  r * np.sin(angles)], axis=1))
    verts = []
    index = {}
    for i, row in enumerate(rows):
        if row is None:
            index[i] = len(verts)
            verts.append(np.array([0.0, profile_y[i], 0.0]))
        else:
            index[i] = len(verts)
            verts.extend(row)
    faces = []
    for i in range(len(rows) - 1):
        lo, hi = rows[i], rows[i + 1]
        for s in range(segments):
            s2 = (s + 1) % segments
            if lo is None and hi is None:
                continue
            if lo is None:
                faces.append((index[i], index[i + 1] + s2, index[i + 1] + s))
            elif hi is None:
                faces.append((index[i] + s, index[i] + s2, index[i + 1]))
            else:
                faces.append((index[i] + s, index[i] + s2, index[i + 1] + s))
                faces.append((index[i] + s2, index[i + 1] + s2, index[i + 1] + s))
    mesh = TriangleMesh(np.array(verts), np.array(faces))
    return TriangleMesh(mesh.vertices + np.asarray(center, dtype=np.float64), mesh.faces)


def cylinder(radius: float = 0.5, height: float = 1.0, segments: int = 48,
             center=(0.0, 0.0, 0.0)) -> TriangleMesh:
    h = height / 2.0
    return _lathe([0.0, radius, radius, 0.0], [-h, -h, h, h], segments, center)


def cone(radius: float = 0.5, height: float = 1.0, segments: int = 48,
         center=(0.0, 0.0, 0.0)) -> TriangleMesh:
    h = height / 2.0
    return _lathe([0.0, radius, 0.0], [-h, -h, h], segments, center)


def capsule(radius: float = 0.3, height: float = 0.8, segments: int = 32,
            rings: int = 8, center=(0.0, 0.0, 0.0)) -> TriangleMesh:
    h = height / 2.0
    profile_r = [0.0]
    profile_y = [-h - radius]
    for k in range(1, rings + 1):
        t = k / rings * (np.pi / 2)
        profile_r.append(radius * np.sin(t))
        profile_y.append(-h - radius * np.cos(t))
    for k in range(1, rings):
        t = k / rings * (np.pi / 2)
        profile_r.append(radius * np.cos(t))
        profile_y.append(h + radius * np.sin(t))
    profile_r.append(0.0)
    profile_y.append(h + radius)
    return _lathe(profile_r, profile_y, segments, center)


def torus(major: float = 0.5, minor: float = 0.2, seg_u: int = 32, seg_v: int = 16,
          center=(0.0, 0.0, 0.0)) -> TriangleMesh:
    us = np.linspace(0, 2 * np.pi, seg_u, endpoint=False)
    vs = np.linspace(0, 2 * np.pi, seg_v, endpoint=False)
    verts = []
    for u in us:
        for v in vs:
            r = major + minor * np.cos(v)
            verts.append((r * np.cos(u), minor * np.sin(v), r * np.sin(u)))
    faces = []
    for i in range(seg_u):
        for j in range(seg_v):
            i2 = (i + 1) % seg_u
            j2 = (j + 1) % seg_v
            a = i * seg_v + j
            b = i2 * seg_v + j
            c = i2 * seg_v + j2
            d = i * seg_v + j2
            faces += [(a, b, c), (a, c, d)]
    vertices = np.array(verts) + np.asarray(center, dtype=np.float64)
    return TriangleMesh(vertices, np.array(faces))


def ellipsoid(radii=(0.6, 0.4, 0.3), subdivisions: int = 3,
              center=(0.0, 0.0, 0.0)) -> TriangleMesh:
    sphere = icosphere(subdivisions=subdivisions, radius=1.0)
    vertices = sphere.vertices * np.asarray(radii, dtype=np.float64)
    return TriangleMesh(vertices + np.asarray(center, dtype=np.float64), sphere.faces)


def conflict_target(sphere_radius: float = 0.75,
                    subdivisions: int = 3) -> TriangleMesh:
    """Sphere with a box bite carved at -x and an external box lobe at +x.

    The bite is an inverted box overlapping the sphere (winding numbers cancel
    inside it); the lobe is a regular box attached outside the sphere.
    """
    sphere = icosphere(subdivisions=subdivisions, radius=sphere_radius)
    bite = box(center=(-0.65, 0.0, 0.0), half_extents=(0.3, 0.42, 0.42)).inverted()
    lobe = box(center=(0.82, 0.0, 0.0), half_extents=(0.16, 0.3, 0.3))
    return merge(sphere, bite, lobe)
