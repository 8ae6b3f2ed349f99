"""Pure numpy implementations of the hot kernels.

Mirrors the compiled backend in ``_fast.pyx`` function for function.  All
reductions run in a fixed order (query-major, node-visit order) so results do
not depend on chunking or thread count.
"""

from __future__ import annotations

import numpy as np

BACKEND = "slow"

_FOUR_PI = 4.0 * np.pi

# The far-field gate accepts a node when dist > beta * FAR_FIELD_SCALE * radius.
# The three-term expansion needs a little extra distance: at the default
# beta=2 this keeps the worst-case winding error near 1e-4 (curved clusters
# converge slowly right at dist = 2 * radius).
FAR_FIELD_SCALE = 1.25


def _sigmoid(x: np.ndarray) -> np.ndarray:
    out = np.empty_like(x)
    pos = x >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-x[pos]))
    ex = np.exp(x[~pos])
    out[~pos] = ex / (1.0 + ex)
    return out


def _solid_angle_block(a, b, c):
    """Summed signed solid angles; a, b, c are (..., 3) vertex offsets from the query."""
    la = np.linalg.norm(a, axis=-1)
    lb = np.linalg.norm(b, axis=-1)
    lc = np.linalg.norm(c, axis=-1)
    num = np.einsum("...i,...i->...", a, np.cross(b, c))
    den = (la * lb * lc
           + np.einsum("...i,...i->...", a, b) * lc
           + np.einsum("...i,...i->...", a, c) * lb
           + np.einsum("...i,...i->...", b, c) * la)
    omega = 2.0 * np.arctan2(num, den)
    return np.where(num == 0.0, 0.0, omega)


def winding_exact(ta, tb, tc, queries):
    """Generalized winding number by direct summation over all triangles."""
    queries = np.atleast_2d(queries)
    n = queries.shape[0]
    m = ta.shape[0]
    out = np.empty(n, dtype=np.float64)
    chunk = max(1, 4_000_000 // max(m, 1))
    for lo in range(0, n, chunk):
        q = queries[lo:lo + chunk, None, :]
        omega = _solid_angle_block(ta[None] - q, tb[None] - q, tc[None] - q)
        out[lo:lo + chunk] = omega.sum(axis=1)
    return out / _FOUR_PI


def winding_fast(node_min, node_max, left, right, start, count,
                 dipole, moment, moment2, centroid, radius, ta, tb, tc,
                 queries, beta):
    """Winding numbers with a three-term (dipole/moment/quadrupole) far field.

    A node whose area-weighted centroid is farther than ``beta`` (times the
    internal gate scale) times its bounding radius from the query contributes
    its expansion terms; closer nodes recurse, and leaves are evaluated
    exactly.
    """
    queries = np.atleast_2d(queries)
    n = queries.shape[0]
    acc = np.zeros(n, dtype=np.float64)
    if ta.shape[0] == 0:
        return acc
    gate = beta * FAR_FIELD_SCALE
    stack = [(0, np.arange(n, dtype=np.intp))]
    while stack:
        node, idx = stack.pop()
        q = queries[idx]
        diff = centroid[node] - q
        dist = np.linalg.norm(diff, axis=1)
        far = dist > gate * radius[node]
        if np.any(far):
            d = diff[far]
            r = dist[far]
            r2 = r * r
            m = moment[node]
            q2 = moment2[node]
            dmd = np.einsum("ij,jk,ik->i", d, m, d)
            u = np.einsum("jjk->k", q2)
            w = np.einsum("jkk->j", q2)
            qddd = np.einsum("jkl,ij,ik,il->i", q2, d, d, d)
            acc[idx[far]] += (d @ dipole[node] + np.trace(m)
                              - 3.0 * dmd / r2
                              - 1.5 * (2.0 * (d @ u) + d @ w) / r2
                              + 7.5 * qddd / (r2 * r2)) / (_FOUR_PI * r ** 3)
        near = idx[~far]
        if near.size == 0:
            continue
        if left[node] < 0:
            s, e = start[node], start[node] + count[node]
            qn = queries[near][:, None, :]
            omega = _solid_angle_block(ta[None, s:e] - qn,
                                       tb[None, s:e] - qn,
                                       tc[None, s:e] - qn)
            acc[near] += omega.sum(axis=1) / _FOUR_PI
        else:
            # push right first so the left child is processed first
            stack.append((right[node], near))
            stack.append((left[node], near))
    return acc


def _point_tri_closest_sq(p, a, b, c):
    """Squared distances from points to triangles; all inputs broadcast to (..., 3)."""
    ab = b - a
    ac = c - a
    ap = p - a
    d1 = np.einsum("...i,...i->...", ab, ap)
    d2 = np.einsum("...i,...i->...", ac, ap)
    bp = p - b
    d3 = np.einsum("...i,...i->...", ab, bp)
    d4 = np.einsum("...i,...i->...", ac, bp)
    cp = p - c
    d5 = np.einsum("...i,...i->...", ab, cp)
    d6 = np.einsum("...i,...i->...", ac, cp)
    vc = d1 * d4 - d3 * d2
    vb = d5 * d2 - d1 * d6
    va = d3 * d6 - d5 * d4

    def safe_div(num, den):
        return num / np.where(den == 0.0, 1.0, den)

    v_ab = np.clip(safe_div(d1, d1 - d3), 0.0, 1.0)
    v_ac = np.clip(safe_div(d2, d2 - d6), 0.0, 1.0)
    v_bc = np.clip(safe_div(d4 - d3, (d4 - d3) + (d5 - d6)), 0.0, 1.0)
    denom = va + vb + vc
    v_f = safe_div(vb, denom)
    w_f = safe_div(vc, denom)

    close = a + ab * v_f[..., None] + ac * w_f[..., None]
    on_bc = (va <= 0) & (d4 - d3 >= 0) & (d5 - d6 >= 0)
    close = np.where(on_bc[..., None], b + (c - b) * v_bc[..., None], close)
    on_ac = (vb <= 0) & (d2 >= 0) & (d6 <= 0)
    close = np.where(on_ac[..., None], a + ac * v_ac[..., None], close)
    on_c = (d6 >= 0) & (d5 <= d6)
    close = np.where(on_c[..., None], c, close)
    on_ab = (vc <= 0) & (d1 >= 0) & (d3 <= 0)
    close = np.where(on_ab[..., None], a + ab * v_ab[..., None], close)
    on_b = (d3 >= 0) & (d4 <= d3)
    close = np.where(on_b[..., None], b, close)
    on_a = (d1 <= 0) & (d2 <= 0)
    close = np.where(on_a[..., None], a, close)
    delta = p - close
    return np.einsum("...i,...i->...", delta, delta)


def closest_distance(node_min, node_max, left, right, start, count,
                     ta, tb, tc, queries):
    """Unsigned distance from each query point to the mesh surface."""
    queries = np.atleast_2d(queries)
    n = queries.shape[0]
    best = np.full(n, np.inf)
    if ta.shape[0] == 0:
        return best
    stack = [(0, np.arange(n, dtype=np.intp))]
    while stack:
        node, idx = stack.pop()
        q = queries[idx]
        clamped = np.clip(q, node_min[node], node_max[node])
        bound = np.einsum("ij,ij->i", q - clamped, q - clamped)
        keep = bound < best[idx]
        idx = idx[keep]
        if idx.size == 0:
            continue
        if left[node] < 0:
            s, e = start[node], start[node] + count[node]
            qn = queries[idx][:, None, :]
            dsq = _point_tri_closest_sq(qn, ta[None, s:e], tb[None, s:e], tc[None, s:e])
            best[idx] = np.minimum(best[idx], dsq.min(axis=1))
        else:
            stack.append((right[node], idx))
            stack.append((left[node], idx))
    return np.sqrt(best)


def raycast(node_min, node_max, left, right, start, count,
            ta, tb, tc, origins, dirs):
    """Nearest ray-triangle hit distance per ray; 0.0 marks a miss."""
    origins = np.atleast_2d(origins)
    dirs = np.atleast_2d(dirs)
    n = origins.shape[0]
    best = np.full(n, np.inf)
    if ta.shape[0] == 0:
        return np.zeros(n)
    with np.errstate(divide="ignore", invalid="ignore"):
        inv = 1.0 / dirs
    stack = [(0, np.arange(n, dtype=np.intp))]
    while stack:
        node, idx = stack.pop()
        o = origins[idx]
        iv = inv[idx]
        t1 = (node_min[node] - o) * iv
        t2 = (node_max[node] - o) * iv
        tmin = np.fmax(np.fmax.reduce(np.fmin(t1, t2), axis=1), 0.0)
        tmax = np.fmin.reduce(np.fmax(t1, t2), axis=1)
        keep = (tmax >= tmin) & (tmin < best[idx])
        idx = idx[keep]
        if idx.size == 0:
            continue
        if left[node] < 0:
            s, e = start[node], start[node] + count[node]
            o = origins[idx][:, None, :]
            d = dirs[idx][:, None, :]
            e1 = (tb[s:e] - ta[s:e])[None]
            e2 = (tc[s:e] - ta[s:e])[None]
            pvec = np.cross(d, e2)
            det = np.einsum("nmi,nmi->nm", e1, pvec)
            ok = np.abs(det) > 1e-12
            invdet = np.where(ok, 1.0 / np.where(det == 0.0, 1.0, det), 0.0)
            tvec = o - ta[None, s:e]
            u = np.einsum("nmi,nmi->nm", tvec, pvec) * invdet
            qvec = np.cross(tvec, e1)
            v = np.einsum("nmi,nmi->nm", d, qvec) * invdet
            t = np.einsum("nmi,nmi->nm", e2, qvec) * invdet
            hit = ok & (u >= 0) & (v >= 0) & (u + v <= 1) & (t > 1e-9)
            t = np.where(hit, t, np.inf)
            best[idx] = np.minimum(best[idx], t.min(axis=1))
        else:
            stack.append((right[node], idx))
            stack.append((left[node], idx))
    return np.where(np.isinf(best), 0.0, best)


_CORNERS = np.array([(0, 0, 0), (0, 0, 1), (0, 1, 0), (0, 1, 1),
                     (1, 0, 0), (1, 0, 1), (1, 1, 0), (1, 1, 1)], dtype=np.int64)


def _cell_coords(resolution, points):
    h = 2.0 / (resolution - 1)
    u = (np.clip(points, -1.0, 1.0) + 1.0) / h
    cell = np.minimum(u.astype(np.int64), resolution - 2)
    frac = np.clip(u - cell, 0.0, 1.0)
    return cell, frac


def trilinear_weights(resolution, points):
    """Flat node indices and interpolation weights, 8 corner entries per point."""
    points = np.atleast_2d(points)
    cell, frac = _cell_coords(resolution, points)
    corner = cell[:, None, :] + _CORNERS[None, :, :]
    idx = (corner[..., 0] * resolution + corner[..., 1]) * resolution + corner[..., 2]
    one = 1.0 - frac
    parts = np.where(_CORNERS[None, :, :] == 1, frac[:, None, :], one[:, None, :])
    weights = parts[..., 0] * parts[..., 1] * parts[..., 2]
    return idx, weights


def trilinear_query(raw, points):
    """Density at each point: logistic of trilinear interpolation of raw values."""
    resolution = raw.shape[0]
    idx, weights = trilinear_weights(resolution, points)
    interp = np.einsum("nk,nk->n", raw.reshape(-1)[idx], weights)
    return _sigmoid(interp)


def trilinear_scatter(resolution, points, coeff):
    """Accumulate ``coeff[i] * weight`` into the 8 nodes around each point."""
    idx, weights = trilinear_weights(resolution, points)
    flat = np.bincount(idx.reshape(-1),
                       weights=(coeff[:, None] * weights).reshape(-1),
                       minlength=resolution ** 3)
    return flat.reshape(resolution, resolution, resolution)
