# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled geometry kernels.

Same API and semantics as ``_pykernels``; scalar loops instead of array
broadcasting.
"""

import numpy as np
cimport numpy as cnp
from libc.math cimport sqrt, fabs, INFINITY

cnp.import_array()

cdef double PARALLEL_EPS = 1e-12

cdef double[3][3] RAYS = [
    [0.5381710517, 0.2893412257, 0.7916971324],
    [-0.3338501113, 0.8426124918, 0.4225839027],
    [0.7072134371, -0.5319728314, -0.4657120135],
]


cdef inline double dot3(const double* a, const double* b) noexcept nogil:
    return a[0] * b[0] + a[1] * b[1] + a[2] * b[2]


cdef inline void sub3(const double* a, const double* b, double* out) noexcept nogil:
    out[0] = a[0] - b[0]
    out[1] = a[1] - b[1]
    out[2] = a[2] - b[2]


cdef inline void cross3(const double* a, const double* b, double* out) noexcept nogil:
    out[0] = a[1] * b[2] - a[2] * b[1]
    out[1] = a[2] * b[0] - a[0] * b[2]
    out[2] = a[0] * b[1] - a[1] * b[0]


cdef inline double clamp01(double x) noexcept nogil:
    if x < 0.0:
        return 0.0
    if x > 1.0:
        return 1.0
    return x


cdef inline double sdiv(double n, double d) noexcept nogil:
    if d == 0.0:
        return 0.0
    return n / d


cdef double seg_seg_dist2(const double* p1, const double* q1,
                          const double* p2, const double* q2) noexcept nogil:
    cdef double d1[3]
    cdef double d2[3]
    cdef double r[3]
    cdef double c1[3]
    cdef double c2[3]
    cdef double a, e, f, c, b, denom, s, t
    cdef int k
    sub3(q1, p1, d1)
    sub3(q2, p2, d2)
    sub3(p1, p2, r)
    a = dot3(d1, d1)
    e = dot3(d2, d2)
    f = dot3(d2, r)
    c = dot3(d1, r)
    if a == 0.0 and e == 0.0:
        s = 0.0
        t = 0.0
    elif a == 0.0:
        s = 0.0
        t = clamp01(f / e)
    elif e == 0.0:
        t = 0.0
        s = clamp01(-c / a)
    else:
        b = dot3(d1, d2)
        denom = a * e - b * b
        if denom > 0.0:
            s = clamp01((b * f - c * e) / denom)
        else:
            s = 0.0
        t = (b * s + f) / e
        if t < 0.0:
            t = 0.0
            s = clamp01(-c / a)
        elif t > 1.0:
            t = 1.0
            s = clamp01((b - c) / a)
    for k in range(3):
        c1[k] = p1[k] + d1[k] * s
        c2[k] = p2[k] + d2[k] * t
        c1[k] = c1[k] - c2[k]
    return dot3(c1, c1)


cdef double point_tri_dist2(const double* p, const double* a,
                            const double* b, const double* c) noexcept nogil:
    cdef double ab[3]
    cdef double ac[3]
    cdef double ap[3]
    cdef double bp[3]
    cdef double cp[3]
    cdef double q[3]
    cdef double d1, d2, d3, d4, d5, d6, va, vb, vc, v, w, denom, best, cand
    cdef int k
    sub3(b, a, ab)
    sub3(c, a, ac)
    sub3(p, a, ap)
    d1 = dot3(ab, ap)
    d2 = dot3(ac, ap)
    if d1 <= 0.0 and d2 <= 0.0:
        return dot3(ap, ap)
    sub3(p, b, bp)
    d3 = dot3(ab, bp)
    d4 = dot3(ac, bp)
    if d3 >= 0.0 and d4 <= d3:
        return dot3(bp, bp)
    vc = d1 * d4 - d3 * d2
    if vc <= 0.0 and d1 >= 0.0 and d3 <= 0.0:
        v = sdiv(d1, d1 - d3)
        for k in range(3):
            q[k] = a[k] + ab[k] * v - p[k]
        return dot3(q, q)
    sub3(p, c, cp)
    d5 = dot3(ab, cp)
    d6 = dot3(ac, cp)
    if d6 >= 0.0 and d5 <= d6:
        return dot3(cp, cp)
    vb = d5 * d2 - d1 * d6
    if vb <= 0.0 and d2 >= 0.0 and d6 <= 0.0:
        w = sdiv(d2, d2 - d6)
        for k in range(3):
            q[k] = a[k] + ac[k] * w - p[k]
        return dot3(q, q)
    va = d3 * d6 - d5 * d4
    if va <= 0.0 and (d4 - d3) >= 0.0 and (d5 - d6) >= 0.0:
        w = sdiv(d4 - d3, (d4 - d3) + (d5 - d6))
        for k in range(3):
            q[k] = b[k] + (c[k] - b[k]) * w - p[k]
        return dot3(q, q)
    denom = va + vb + vc
    if denom == 0.0:
        best = seg_seg_dist2(p, p, a, b)
        cand = seg_seg_dist2(p, p, b, c)
        if cand < best:
            best = cand
        cand = seg_seg_dist2(p, p, c, a)
        if cand < best:
            best = cand
        return best
    v = vb / denom
    w = vc / denom
    for k in range(3):
        q[k] = a[k] + ab[k] * v + ac[k] * w - p[k]
    return dot3(q, q)


cdef bint seg_hits_tri(const double* p, const double* q, const double* a,
                       const double* b, const double* c) noexcept nogil:
    cdef double d[3]
    cdef double ab[3]
    cdef double ac[3]
    cdef double h[3]
    cdef double s[3]
    cdef double qv[3]
    cdef double det, scale, inv, u, v, t
    sub3(q, p, d)
    sub3(b, a, ab)
    sub3(c, a, ac)
    cross3(d, ac, h)
    det = dot3(ab, h)
    scale = sqrt(dot3(d, d)) * sqrt(dot3(ab, ab)) * sqrt(dot3(ac, ac))
    if not (fabs(det) > PARALLEL_EPS * scale):
        return False
    inv = 1.0 / det
    sub3(p, a, s)
    u = inv * dot3(s, h)
    if u < 0.0 or u > 1.0:
        return False
    cross3(s, ab, qv)
    v = inv * dot3(d, qv)
    if v < 0.0 or u + v > 1.0:
        return False
    t = inv * dot3(ac, qv)
    return t >= 0.0 and t <= 1.0


cdef double tri_tri(const double* A, const double* B) noexcept nogil:
    """A and B point at 9 contiguous doubles (three corners each)."""
    cdef double best = INFINITY
    cdef double d
    cdef int i, j
    for i in range(3):
        if seg_hits_tri(A + 3 * i, A + 3 * ((i + 1) % 3), B, B + 3, B + 6):
            return 0.0
        if seg_hits_tri(B + 3 * i, B + 3 * ((i + 1) % 3), A, A + 3, A + 6):
            return 0.0
    for i in range(3):
        for j in range(3):
            d = seg_seg_dist2(A + 3 * i, A + 3 * ((i + 1) % 3),
                              B + 3 * j, B + 3 * ((j + 1) % 3))
            if d < best:
                best = d
    for i in range(3):
        d = point_tri_dist2(A + 3 * i, B, B + 3, B + 6)
        if d < best:
            best = d
        d = point_tri_dist2(B + 3 * i, A, A + 3, A + 6)
        if d < best:
            best = d
    return sqrt(best)


def tri_tri_distance(A, B):
    """Minimum distance between paired triangles ``A[k]`` and ``B[k]``."""
    cdef const double[:, :, ::1] a = np.ascontiguousarray(A, dtype=np.float64).reshape(-1, 3, 3)
    cdef const double[:, :, ::1] b = np.ascontiguousarray(B, dtype=np.float64).reshape(-1, 3, 3)
    cdef Py_ssize_t k, n = a.shape[0]
    out = np.empty(n)
    cdef double[::1] o = out
    with nogil:
        for k in range(n):
            o[k] = tri_tri(&a[k, 0, 0], &b[k, 0, 0])
    return out


def mesh_distance_bruteforce(ta, tb):
    cdef const double[:, :, ::1] a = np.ascontiguousarray(ta, dtype=np.float64)
    cdef const double[:, :, ::1] b = np.ascontiguousarray(tb, dtype=np.float64)
    cdef Py_ssize_t i, j
    cdef double best = INFINITY, d
    with nogil:
        for i in range(a.shape[0]):
            for j in range(b.shape[0]):
                d = tri_tri(&a[i, 0, 0], &b[j, 0, 0])
                if d < best:
                    best = d
    return best


def mesh_distance(ta, tb):
    """Minimum triangle-pair distance, pruned by per-triangle boxes.

    Pairs are visited in ascending order of box distance (a lower bound on
    the exact distance); the scan stops once that bound reaches the best
    exact value.
    """
    cdef const double[:, :, ::1] a = np.ascontiguousarray(ta, dtype=np.float64)
    cdef const double[:, :, ::1] b = np.ascontiguousarray(tb, dtype=np.float64)
    cdef Py_ssize_t na = a.shape[0], nb = b.shape[0]
    lo_a_np = np.min(ta, axis=1)
    hi_a_np = np.max(ta, axis=1)
    lo_b_np = np.min(tb, axis=1)
    hi_b_np = np.max(tb, axis=1)
    cdef const double[:, ::1] lo_a = np.ascontiguousarray(lo_a_np, dtype=np.float64)
    cdef const double[:, ::1] hi_a = np.ascontiguousarray(hi_a_np, dtype=np.float64)
    cdef const double[:, ::1] lo_b = np.ascontiguousarray(lo_b_np, dtype=np.float64)
    cdef const double[:, ::1] hi_b = np.ascontiguousarray(hi_b_np, dtype=np.float64)
    lb_np = np.empty(na * nb)
    cdef double[::1] lb = lb_np
    cdef Py_ssize_t i, j, k, idx
    cdef double g, s, g1, g2
    with nogil:
        for i in range(na):
            for j in range(nb):
                s = 0.0
                for k in range(3):
                    g1 = lo_a[i, k] - hi_b[j, k]
                    g2 = lo_b[j, k] - hi_a[i, k]
                    g = g1 if g1 > g2 else g2
                    if g > 0.0:
                        s += g * g
                lb[i * nb + j] = sqrt(s)
    order_np = np.argsort(lb_np, kind="stable").astype(np.intp)
    cdef Py_ssize_t[::1] order = order_np
    cdef double best = INFINITY, d
    with nogil:
        for k in range(na * nb):
            idx = order[k]
            if lb[idx] >= best:
                break
            d = tri_tri(&a[idx // nb, 0, 0], &b[idx % nb, 0, 0])
            if d < best:
                best = d
                if best == 0.0:
                    break
    return best


cdef bint ray_hits(const double* p, const double* d, const double* a,
                   const double* b, const double* c) noexcept nogil:
    cdef double ab[3]
    cdef double ac[3]
    cdef double h[3]
    cdef double s[3]
    cdef double qv[3]
    cdef double det, inv, u, v, t
    sub3(b, a, ab)
    sub3(c, a, ac)
    cross3(d, ac, h)
    det = dot3(ab, h)
    if not (fabs(det) > 1e-15):
        return False
    inv = 1.0 / det
    sub3(p, a, s)
    u = inv * dot3(s, h)
    if u < 0.0 or u > 1.0:
        return False
    cross3(s, ab, qv)
    v = inv * dot3(d, qv)
    if v < 0.0 or u + v > 1.0:
        return False
    t = inv * dot3(ac, qv)
    return t > 0.0


def points_inside(points, tris):
    """Ray-parity inside test; three rays vote, two odd counts mean inside."""
    cdef const double[:, ::1] p = np.ascontiguousarray(points, dtype=np.float64).reshape(-1, 3)
    cdef const double[:, :, ::1] t = np.ascontiguousarray(tris, dtype=np.float64)
    cdef double[3][3] rays
    cdef Py_ssize_t i, j, r, k
    cdef int crossings, votes
    cdef double norm
    for r in range(3):
        norm = sqrt(RAYS[r][0] ** 2 + RAYS[r][1] ** 2 + RAYS[r][2] ** 2)
        for k in range(3):
            rays[r][k] = RAYS[r][k] / norm
    out = np.zeros(p.shape[0], dtype=bool)
    cdef cnp.npy_bool[::1] o = out
    with nogil:
        for i in range(p.shape[0]):
            votes = 0
            for r in range(3):
                crossings = 0
                for j in range(t.shape[0]):
                    if ray_hits(&p[i, 0], rays[r], &t[j, 0, 0], &t[j, 1, 0], &t[j, 2, 0]):
                        crossings += 1
                votes += crossings % 2
            o[i] = votes >= 2
    return out


def points_surface_distance(points, tris):
    cdef const double[:, ::1] p = np.ascontiguousarray(points, dtype=np.float64).reshape(-1, 3)
    cdef const double[:, :, ::1] t = np.ascontiguousarray(tris, dtype=np.float64)
    cdef Py_ssize_t i, j
    cdef double best, d
    out = np.empty(p.shape[0])
    cdef double[::1] o = out
    with nogil:
        for i in range(p.shape[0]):
            best = INFINITY
            for j in range(t.shape[0]):
                d = point_tri_dist2(&p[i, 0], &t[j, 0, 0], &t[j, 1, 0], &t[j, 2, 0])
                if d < best:
                    best = d
            o[i] = sqrt(best)
    return out
