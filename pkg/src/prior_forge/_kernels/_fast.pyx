# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled implementations of the hot kernels (see _slow.py for semantics)."""

import numpy as np

cimport numpy as cnp
from libc.math cimport atan2, exp, fabs, sqrt, INFINITY

cnp.import_array()

BACKEND = "fast"

cdef double FOUR_PI = 12.566370614359172
# gate distance multiplier for the two-term far-field expansion (see _slow.py)
cdef double FAR_FIELD_SCALE = 4.0
cdef int STACK_CAP = 128


cdef inline double _sigmoid(double x) nogil:
    cdef double e
    if x >= 0.0:
        return 1.0 / (1.0 + exp(-x))
    e = exp(x)
    return e / (1.0 + e)


cdef inline double _tri_solid_angle(double ax, double ay, double az,
                                    double bx, double by, double bz,
                                    double cx, double cy, double cz) nogil:
    cdef double la = sqrt(ax * ax + ay * ay + az * az)
    cdef double lb = sqrt(bx * bx + by * by + bz * bz)
    cdef double lc = sqrt(cx * cx + cy * cy + cz * cz)
    cdef double crx = by * cz - bz * cy
    cdef double cry = bz * cx - bx * cz
    cdef double crz = bx * cy - by * cx
    cdef double num = ax * crx + ay * cry + az * crz
    cdef double den = (la * lb * lc
                       + (ax * bx + ay * by + az * bz) * lc
                       + (ax * cx + ay * cy + az * cz) * lb
                       + (bx * cx + by * cy + bz * cz) * la)
    if num == 0.0:
        return 0.0
    return 2.0 * atan2(num, den)


def winding_exact(double[:, ::1] ta, double[:, ::1] tb, double[:, ::1] tc,
                  double[:, ::1] queries):
    cdef Py_ssize_t n = queries.shape[0]
    cdef Py_ssize_t m = ta.shape[0]
    out_arr = np.empty(n, dtype=np.float64)
    cdef double[::1] out = out_arr
    cdef Py_ssize_t i, t
    cdef double qx, qy, qz, acc
    with nogil:
        for i in range(n):
            qx = queries[i, 0]
            qy = queries[i, 1]
            qz = queries[i, 2]
            acc = 0.0
            for t in range(m):
                acc += _tri_solid_angle(ta[t, 0] - qx, ta[t, 1] - qy, ta[t, 2] - qz,
                                        tb[t, 0] - qx, tb[t, 1] - qy, tb[t, 2] - qz,
                                        tc[t, 0] - qx, tc[t, 1] - qy, tc[t, 2] - qz)
            out[i] = acc / FOUR_PI
    return out_arr


def winding_fast(double[:, ::1] node_min, double[:, ::1] node_max,
                 long[::1] left, long[::1] right,
                 long[::1] start, long[::1] count,
                 double[:, ::1] dipole, double[:, :, ::1] moment,
                 double[:, ::1] centroid, double[::1] radius,
                 double[:, ::1] ta, double[:, ::1] tb, double[:, ::1] tc,
                 double[:, ::1] queries, double beta):
    cdef Py_ssize_t n = queries.shape[0]
    out_arr = np.zeros(n, dtype=np.float64)
    cdef double[::1] out = out_arr
    cdef long[128] stack
    cdef int sp
    cdef Py_ssize_t i, t
    cdef long node, s, e
    cdef double qx, qy, qz, dx, dy, dz, dist, acc, d3, trm, dmd
    cdef double gate = beta * FAR_FIELD_SCALE
    if ta.shape[0] == 0:
        return out_arr
    with nogil:
        for i in range(n):
            qx = queries[i, 0]
            qy = queries[i, 1]
            qz = queries[i, 2]
            acc = 0.0
            sp = 0
            stack[sp] = 0
            sp += 1
            while sp > 0:
                sp -= 1
                node = stack[sp]
                dx = centroid[node, 0] - qx
                dy = centroid[node, 1] - qy
                dz = centroid[node, 2] - qz
                dist = sqrt(dx * dx + dy * dy + dz * dz)
                if dist > gate * radius[node]:
                    d3 = dist * dist * dist
                    trm = moment[node, 0, 0] + moment[node, 1, 1] + moment[node, 2, 2]
                    dmd = (dx * (moment[node, 0, 0] * dx + moment[node, 0, 1] * dy + moment[node, 0, 2] * dz)
                           + dy * (moment[node, 1, 0] * dx + moment[node, 1, 1] * dy + moment[node, 1, 2] * dz)
                           + dz * (moment[node, 2, 0] * dx + moment[node, 2, 1] * dy + moment[node, 2, 2] * dz))
                    acc += (dx * dipole[node, 0] + dy * dipole[node, 1]
                            + dz * dipole[node, 2]
                            + trm - 3.0 * dmd / (dist * dist)) / (FOUR_PI * d3)
                elif left[node] < 0:
                    s = start[node]
                    e = s + count[node]
                    for t in range(s, e):
                        acc += _tri_solid_angle(
                            ta[t, 0] - qx, ta[t, 1] - qy, ta[t, 2] - qz,
                            tb[t, 0] - qx, tb[t, 1] - qy, tb[t, 2] - qz,
                            tc[t, 0] - qx, tc[t, 1] - qy, tc[t, 2] - qz) / FOUR_PI
                else:
                    stack[sp] = right[node]
                    sp += 1
                    stack[sp] = left[node]
                    sp += 1
            out[i] = acc
    return out_arr


cdef inline double _point_tri_dist_sq(double px, double py, double pz,
                                      double ax, double ay, double az,
                                      double bx, double by, double bz,
                                      double cx, double cy, double cz) nogil:
    cdef double abx = bx - ax, aby = by - ay, abz = bz - az
    cdef double acx = cx - ax, acy = cy - ay, acz = cz - az
    cdef double apx = px - ax, apy = py - ay, apz = pz - az
    cdef double d1 = abx * apx + aby * apy + abz * apz
    cdef double d2 = acx * apx + acy * apy + acz * apz
    cdef double qx, qy, qz, v, w, denom
    if d1 <= 0.0 and d2 <= 0.0:
        return apx * apx + apy * apy + apz * apz
    cdef double bpx = px - bx, bpy = py - by, bpz = pz - bz
    cdef double d3 = abx * bpx + aby * bpy + abz * bpz
    cdef double d4 = acx * bpx + acy * bpy + acz * bpz
    if d3 >= 0.0 and d4 <= d3:
        return bpx * bpx + bpy * bpy + bpz * bpz
    cdef double vc = d1 * d4 - d3 * d2
    if vc <= 0.0 and d1 >= 0.0 and d3 <= 0.0:
        v = d1 / (d1 - d3)
        qx = ax + abx * v - px
        qy = ay + aby * v - py
        qz = az + abz * v - pz
        return qx * qx + qy * qy + qz * qz
    cdef double cpx = px - cx, cpy = py - cy, cpz = pz - cz
    cdef double d5 = abx * cpx + aby * cpy + abz * cpz
    cdef double d6 = acx * cpx + acy * cpy + acz * cpz
    if d6 >= 0.0 and d5 <= d6:
        return cpx * cpx + cpy * cpy + cpz * cpz
    cdef double vb = d5 * d2 - d1 * d6
    if vb <= 0.0 and d2 >= 0.0 and d6 <= 0.0:
        v = d2 / (d2 - d6)
        qx = ax + acx * v - px
        qy = ay + acy * v - py
        qz = az + acz * v - pz
        return qx * qx + qy * qy + qz * qz
    cdef double va = d3 * d6 - d5 * d4
    if va <= 0.0 and (d4 - d3) >= 0.0 and (d5 - d6) >= 0.0:
        v = (d4 - d3) / ((d4 - d3) + (d5 - d6))
        qx = bx + (cx - bx) * v - px
        qy = by + (cy - by) * v - py
        qz = bz + (cz - bz) * v - pz
        return qx * qx + qy * qy + qz * qz
    denom = 1.0 / (va + vb + vc)
    v = vb * denom
    w = vc * denom
    qx = ax + abx * v + acx * w - px
    qy = ay + aby * v + acy * w - py
    qz = az + abz * v + acz * w - pz
    return qx * qx + qy * qy + qz * qz


def closest_distance(double[:, ::1] node_min, double[:, ::1] node_max,
                     long[::1] left, long[::1] right,
                     long[::1] start, long[::1] count,
                     double[:, ::1] ta, double[:, ::1] tb, double[:, ::1] tc,
                     double[:, ::1] queries):
    cdef Py_ssize_t n = queries.shape[0]
    out_arr = np.empty(n, dtype=np.float64)
    cdef double[::1] out = out_arr
    cdef long[128] stack
    cdef int sp
    cdef Py_ssize_t i, t
    cdef long node, s, e
    cdef double qx, qy, qz, best, bound, d, cxx
    if ta.shape[0] == 0:
        out_arr.fill(np.inf)
        return out_arr
    with nogil:
        for i in range(n):
            qx = queries[i, 0]
            qy = queries[i, 1]
            qz = queries[i, 2]
            best = INFINITY
            sp = 0
            stack[sp] = 0
            sp += 1
            while sp > 0:
                sp -= 1
                node = stack[sp]
                bound = 0.0
                cxx = qx
                if cxx < node_min[node, 0]: cxx = node_min[node, 0]
                if cxx > node_max[node, 0]: cxx = node_max[node, 0]
                bound += (qx - cxx) * (qx - cxx)
                cxx = qy
                if cxx < node_min[node, 1]: cxx = node_min[node, 1]
                if cxx > node_max[node, 1]: cxx = node_max[node, 1]
                bound += (qy - cxx) * (qy - cxx)
                cxx = qz
                if cxx < node_min[node, 2]: cxx = node_min[node, 2]
                if cxx > node_max[node, 2]: cxx = node_max[node, 2]
                bound += (qz - cxx) * (qz - cxx)
                if bound >= best:
                    continue
                if left[node] < 0:
                    s = start[node]
                    e = s + count[node]
                    for t in range(s, e):
                        d = _point_tri_dist_sq(qx, qy, qz,
                                               ta[t, 0], ta[t, 1], ta[t, 2],
                                               tb[t, 0], tb[t, 1], tb[t, 2],
                                               tc[t, 0], tc[t, 1], tc[t, 2])
                        if d < best:
                            best = d
                else:
                    stack[sp] = right[node]
                    sp += 1
                    stack[sp] = left[node]
                    sp += 1
            out[i] = sqrt(best)
    return out_arr


def raycast(double[:, ::1] node_min, double[:, ::1] node_max,
            long[::1] left, long[::1] right,
            long[::1] start, long[::1] count,
            double[:, ::1] ta, double[:, ::1] tb, double[:, ::1] tc,
            double[:, ::1] origins, double[:, ::1] dirs):
    cdef Py_ssize_t n = origins.shape[0]
    out_arr = np.zeros(n, dtype=np.float64)
    cdef double[::1] out = out_arr
    cdef long[128] stack
    cdef int sp, axis
    cdef Py_ssize_t i, t
    cdef long node, s, e
    cdef double ox, oy, oz, dx, dy, dz, best
    cdef double ivx, ivy, ivz, t1, t2, tmp, tmin, tmax
    cdef double e1x, e1y, e1z, e2x, e2y, e2z, pvx, pvy, pvz
    cdef double det, invdet, tvx, tvy, tvz, u, v, qvx, qvy, qvz, tt
    if ta.shape[0] == 0:
        return out_arr
    with nogil:
        for i in range(n):
            ox = origins[i, 0]
            oy = origins[i, 1]
            oz = origins[i, 2]
            dx = dirs[i, 0]
            dy = dirs[i, 1]
            dz = dirs[i, 2]
            ivx = 1.0 / dx
            ivy = 1.0 / dy
            ivz = 1.0 / dz
            best = INFINITY
            sp = 0
            stack[sp] = 0
            sp += 1
            while sp > 0:
                sp -= 1
                node = stack[sp]
                tmin = 0.0
                tmax = INFINITY
                # robust slab test; 0*inf handled by the branch on dir sign
                if dx != 0.0:
                    t1 = (node_min[node, 0] - ox) * ivx
                    t2 = (node_max[node, 0] - ox) * ivx
                    if t1 > t2:
                        tmp = t1; t1 = t2; t2 = tmp
                    if t1 > tmin: tmin = t1
                    if t2 < tmax: tmax = t2
                elif ox < node_min[node, 0] or ox > node_max[node, 0]:
                    continue
                if dy != 0.0:
                    t1 = (node_min[node, 1] - oy) * ivy
                    t2 = (node_max[node, 1] - oy) * ivy
                    if t1 > t2:
                        tmp = t1; t1 = t2; t2 = tmp
                    if t1 > tmin: tmin = t1
                    if t2 < tmax: tmax = t2
                elif oy < node_min[node, 1] or oy > node_max[node, 1]:
                    continue
                if dz != 0.0:
                    t1 = (node_min[node, 2] - oz) * ivz
                    t2 = (node_max[node, 2] - oz) * ivz
                    if t1 > t2:
                        tmp = t1; t1 = t2; t2 = tmp
                    if t1 > tmin: tmin = t1
                    if t2 < tmax: tmax = t2
                elif oz < node_min[node, 2] or oz > node_max[node, 2]:
                    continue
                if tmax < tmin or tmin >= best:
                    continue
                if left[node] < 0:
                    s = start[node]
                    e = s + count[node]
                    for t in range(s, e):
                        e1x = tb[t, 0] - ta[t, 0]
                        e1y = tb[t, 1] - ta[t, 1]
                        e1z = tb[t, 2] - ta[t, 2]
                        e2x = tc[t, 0] - ta[t, 0]
                        e2y = tc[t, 1] - ta[t, 1]
                        e2z = tc[t, 2] - ta[t, 2]
                        pvx = dy * e2z - dz * e2y
                        pvy = dz * e2x - dx * e2z
                        pvz = dx * e2y - dy * e2x
                        det = e1x * pvx + e1y * pvy + e1z * pvz
                        if fabs(det) <= 1e-12:
                            continue
                        invdet = 1.0 / det
                        tvx = ox - ta[t, 0]
                        tvy = oy - ta[t, 1]
                        tvz = oz - ta[t, 2]
                        u = (tvx * pvx + tvy * pvy + tvz * pvz) * invdet
                        if u < 0.0 or u > 1.0:
                            continue
                        qvx = tvy * e1z - tvz * e1y
                        qvy = tvz * e1x - tvx * e1z
                        qvz = tvx * e1y - tvy * e1x
                        v = (dx * qvx + dy * qvy + dz * qvz) * invdet
                        if v < 0.0 or u + v > 1.0:
                            continue
                        tt = (e2x * qvx + e2y * qvy + e2z * qvz) * invdet
                        if tt > 1e-9 and tt < best:
                            best = tt
                else:
                    stack[sp] = right[node]
                    sp += 1
                    stack[sp] = left[node]
                    sp += 1
            if best == INFINITY:
                out[i] = 0.0
            else:
                out[i] = best
    return out_arr


def trilinear_weights(long resolution, double[:, ::1] points):
    cdef Py_ssize_t n = points.shape[0]
    idx_arr = np.empty((n, 8), dtype=np.int64)
    w_arr = np.empty((n, 8), dtype=np.float64)
    cdef long[:, ::1] idx = idx_arr
    cdef double[:, ::1] w = w_arr
    cdef Py_ssize_t i
    cdef long g = resolution
    cdef long cx, cy, cz, k, ddx, ddy, ddz
    cdef double h = 2.0 / (g - 1)
    cdef double ux, uy, uz, fx, fy, fz, p, wx, wy, wz
    with nogil:
        for i in range(n):
            p = points[i, 0]
            if p < -1.0: p = -1.0
            if p > 1.0: p = 1.0
            ux = (p + 1.0) / h
            p = points[i, 1]
            if p < -1.0: p = -1.0
            if p > 1.0: p = 1.0
            uy = (p + 1.0) / h
            p = points[i, 2]
            if p < -1.0: p = -1.0
            if p > 1.0: p = 1.0
            uz = (p + 1.0) / h
            cx = <long>ux
            cy = <long>uy
            cz = <long>uz
            if cx > g - 2: cx = g - 2
            if cy > g - 2: cy = g - 2
            if cz > g - 2: cz = g - 2
            fx = ux - cx
            fy = uy - cy
            fz = uz - cz
            if fx < 0.0: fx = 0.0
            if fx > 1.0: fx = 1.0
            if fy < 0.0: fy = 0.0
            if fy > 1.0: fy = 1.0
            if fz < 0.0: fz = 0.0
            if fz > 1.0: fz = 1.0
            k = 0
            for ddx in range(2):
                wx = fx if ddx == 1 else 1.0 - fx
                for ddy in range(2):
                    wy = fy if ddy == 1 else 1.0 - fy
                    for ddz in range(2):
                        wz = fz if ddz == 1 else 1.0 - fz
                        idx[i, k] = ((cx + ddx) * g + (cy + ddy)) * g + (cz + ddz)
                        w[i, k] = (wx * wy) * wz
                        k += 1
    return idx_arr, w_arr


def trilinear_query(raw, double[:, ::1] points):
    raw_flat = np.ascontiguousarray(raw).reshape(-1)
    cdef double[::1] theta = raw_flat
    cdef long g = raw.shape[0]
    cdef Py_ssize_t n = points.shape[0]
    out_arr = np.empty(n, dtype=np.float64)
    cdef double[::1] out = out_arr
    cdef Py_ssize_t i
    cdef long cx, cy, cz, base
    cdef double h = 2.0 / (g - 1)
    cdef double ux, uy, uz, fx, fy, fz, p, acc
    cdef double w00, w01, w10, w11
    with nogil:
        for i in range(n):
            p = points[i, 0]
            if p < -1.0: p = -1.0
            if p > 1.0: p = 1.0
            ux = (p + 1.0) / h
            p = points[i, 1]
            if p < -1.0: p = -1.0
            if p > 1.0: p = 1.0
            uy = (p + 1.0) / h
            p = points[i, 2]
            if p < -1.0: p = -1.0
            if p > 1.0: p = 1.0
            uz = (p + 1.0) / h
            cx = <long>ux
            cy = <long>uy
            cz = <long>uz
            if cx > g - 2: cx = g - 2
            if cy > g - 2: cy = g - 2
            if cz > g - 2: cz = g - 2
            fx = ux - cx
            fy = uy - cy
            fz = uz - cz
            if fx < 0.0: fx = 0.0
            if fx > 1.0: fx = 1.0
            if fy < 0.0: fy = 0.0
            if fy > 1.0: fy = 1.0
            if fz < 0.0: fz = 0.0
            if fz > 1.0: fz = 1.0
            base = (cx * g + cy) * g + cz
            acc = (((1.0 - fx) * (1.0 - fy)) * (1.0 - fz)) * theta[base]
            acc += (((1.0 - fx) * (1.0 - fy)) * fz) * theta[base + 1]
            acc += (((1.0 - fx) * fy) * (1.0 - fz)) * theta[base + g]
            acc += (((1.0 - fx) * fy) * fz) * theta[base + g + 1]
            acc += ((fx * (1.0 - fy)) * (1.0 - fz)) * theta[base + g * g]
            acc += ((fx * (1.0 - fy)) * fz) * theta[base + g * g + 1]
            acc += ((fx * fy) * (1.0 - fz)) * theta[base + g * g + g]
            acc += ((fx * fy) * fz) * theta[base + g * g + g + 1]
            out[i] = _sigmoid(acc)
    return out_arr


def trilinear_scatter(long resolution, double[:, ::1] points, double[::1] coeff):
    cdef long g = resolution
    out_arr = np.zeros(g * g * g, dtype=np.float64)
    cdef double[::1] out = out_arr
    cdef Py_ssize_t i
    cdef long cx, cy, cz, base
    cdef double h = 2.0 / (g - 1)
    cdef double ux, uy, uz, fx, fy, fz, p, cf
    with nogil:
        for i in range(points.shape[0]):
            p = points[i, 0]
            if p < -1.0: p = -1.0
            if p > 1.0: p = 1.0
            ux = (p + 1.0) / h
            p = points[i, 1]
            if p < -1.0: p = -1.0
            if p > 1.0: p = 1.0
            uy = (p + 1.0) / h
            p = points[i, 2]
            if p < -1.0: p = -1.0
            if p > 1.0: p = 1.0
            uz = (p + 1.0) / h
            cx = <long>ux
            cy = <long>uy
            cz = <long>uz
            if cx > g - 2: cx = g - 2
            if cy > g - 2: cy = g - 2
            if cz > g - 2: cz = g - 2
            fx = ux - cx
            fy = uy - cy
            fz = uz - cz
            if fx < 0.0: fx = 0.0
            if fx > 1.0: fx = 1.0
            if fy < 0.0: fy = 0.0
            if fy > 1.0: fy = 1.0
            if fz < 0.0: fz = 0.0
            if fz > 1.0: fz = 1.0
            base = (cx * g + cy) * g + cz
            cf = coeff[i]
            out[base] += cf * (((1.0 - fx) * (1.0 - fy)) * (1.0 - fz))
            out[base + 1] += cf * (((1.0 - fx) * (1.0 - fy)) * fz)
            out[base + g] += cf * (((1.0 - fx) * fy) * (1.0 - fz))
            out[base + g + 1] += cf * (((1.0 - fx) * fy) * fz)
            out[base + g * g] += cf * ((fx * (1.0 - fy)) * (1.0 - fz))
            out[base + g * g + 1] += cf * ((fx * (1.0 - fy)) * fz)
            out[base + g * g + g] += cf * ((fx * fy) * (1.0 - fz))
            out[base + g * g + g + 1] += cf * ((fx * fy) * fz)
    return out_arr.reshape(resolution, resolution, resolution)
