"""Vectorized numpy geometry kernels.

This is the fallback used when the compiled ``_ckernels`` extension is not
built, and the brute-force reference the compiled path is tested against.
All functions take triangles as ``(k, 3, 3)`` float arrays of corners.
"""

import numpy as np

# Ray directions for parity tests; deliberately not aligned with any axis
# or lattice diagonal.
RAY_DIRECTIONS = np.array(
    [
        [0.5381710517, 0.2893412257, 0.7916971324],
        [-0.3338501113, 0.8426124918, 0.4225839027],
        [0.7072134371, -0.5319728314, -0.4657120135],
    ]
)
RAY_DIRECTIONS = RAY_DIRECTIONS / np.linalg.norm(RAY_DIRECTIONS, axis=1)[:, None]

_PARALLEL_EPS = 1e-12


def _dot(a, b):
    return np.einsum("...i,...i->...", a, b)


def _safe_div(num, den):
    out = np.zeros(np.broadcast(num, den).shape)
    np.divide(num, den, out=out, where=den != 0)
    return out


def closest_point_on_triangle(p, a, b, c):
    """Closest point to ``p`` on triangle ``abc``; all ``(k, 3)`` arrays."""
    ab = b - a
    ac = c - a
    ap = p - a
    d1 = _dot(ab, ap)
    d2 = _dot(ac, ap)
    bp = p - b
    d3 = _dot(ab, bp)
    d4 = _dot(ac, bp)
    cp = p - c
    d5 = _dot(ab, cp)
    d6 = _dot(ac, cp)
    vc = d1 * d4 - d3 * d2
    vb = d5 * d2 - d1 * d6
    va = d3 * d6 - d5 * d4

    denom = va + vb + vc
    v = _safe_div(vb, denom)
    w = _safe_div(vc, denom)
    result = a + ab * v[:, None] + ac * w[:, None]
    done = np.zeros(len(p), dtype=bool)

    def take(mask, value):
        nonlocal result, done
        m = mask & ~done
        result = np.where(m[:, None], value, result)
        done |= m

    # Voronoi regions tested in order: vertex a, vertex b, edge ab, vertex c,
    # edge ac, edge bc, then the face interior.
    take((d1 <= 0) & (d2 <= 0), a)
    take((d3 >= 0) & (d4 <= d3), b)
    t_ab = _safe_div(d1, d1 - d3)
    take((vc <= 0) & (d1 >= 0) & (d3 <= 0), a + ab * t_ab[:, None])
    take((d6 >= 0) & (d5 <= d6), c)
    t_ac = _safe_div(d2, d2 - d6)
    take((vb <= 0) & (d2 >= 0) & (d6 <= 0), a + ac * t_ac[:, None])
    e1 = d4 - d3
    e2 = d5 - d6
    t_bc = _safe_div(e1, e1 + e2)
    take((va <= 0) & (e1 >= 0) & (e2 >= 0), b + (c - b) * t_bc[:, None])
    # Degenerate triangles reaching the face branch: fall back to edges.
    degen = ~done & (denom == 0)
    if np.any(degen):
        idx = np.nonzero(degen)[0]
        best = None
        for s0, s1 in ((a, b), (b, c), (c, a)):
            q, _ = closest_points_segments(p[idx], p[idx], s0[idx], s1[idx])
            d = np.linalg.norm(q - p[idx], axis=1)
            if best is None:
                best, best_q = d, q
            else:
                better = d < best
                best = np.where(better, d, best)
                best_q = np.where(better[:, None], q, best_q)
        result[idx] = best_q
    return result


def closest_points_segments(p1, q1, p2, q2):
    """Closest points between segments ``p1q1`` and ``p2q2``.

    Returns the point on the second segment and the point on the first.
    """
    d1 = q1 - p1
    d2 = q2 - p2
    r = p1 - p2
    a = _dot(d1, d1)
    e = _dot(d2, d2)
    f = _dot(d2, r)
    c = _dot(d1, r)
    b = _dot(d1, d2)
    denom = a * e - b * b

    s = np.where(denom > 0, np.clip(_safe_div(b * f - c * e, denom), 0.0, 1.0), 0.0)
    t = _safe_div(b * s + f, e)
    # t outside [0, 1]: clamp and recompute s.
    low = t < 0
    high = t > 1
    s = np.where(low, np.clip(_safe_div(-c, a), 0.0, 1.0), s)
    s = np.where(high, np.clip(_safe_div(b - c, a), 0.0, 1.0), s)
    t = np.clip(t, 0.0, 1.0)
    # Degenerate first segment (a point).
    pa = a == 0
    s = np.where(pa, 0.0, s)
    t = np.where(pa, np.clip(_safe_div(f, e), 0.0, 1.0), t)
    # Degenerate second segment.
    pe = e == 0
    t = np.where(pe, 0.0, t)
    s = np.where(pe & ~pa, np.clip(_safe_div(-c, a), 0.0, 1.0), s)
    c1 = p1 + d1 * s[:, None]
    c2 = p2 + d2 * t[:, None]
    return c2, c1


def segments_hit_triangles(p, q, a, b, c):
    """Boolean mask: segment ``pq`` crosses triangle ``abc`` (non-coplanar)."""
    d = q - p
    ab = b - a
    ac = c - a
    h = np.cross(d, ac)
    det = _dot(ab, h)
    scale = (
        np.linalg.norm(d, axis=1) * np.linalg.norm(ab, axis=1) * np.linalg.norm(ac, axis=1)
    )
    ok = np.abs(det) > _PARALLEL_EPS * scale
    inv = _safe_div(np.ones_like(det), det)
    s = p - a
    u = inv * _dot(s, h)
    qv = np.cross(s, ab)
    v = inv * _dot(d, qv)
    t = inv * _dot(ac, qv)
    return ok & (u >= 0) & (u <= 1) & (v >= 0) & (u + v <= 1) & (t >= 0) & (t <= 1)


def tri_tri_distance(A, B):
    """Minimum distance between paired triangles ``A[k]`` and ``B[k]``."""
    A = np.asarray(A, dtype=float).reshape(-1, 3, 3)
    B = np.asarray(B, dtype=float).reshape(-1, 3, 3)
    k = len(A)
    best = np.full(k, np.inf)
    for i in range(3):
        for j in range(3):
            cb, ca = closest_points_segments(
                A[:, i], A[:, (i + 1) % 3], B[:, j], B[:, (j + 1) % 3]
            )
            best = np.minimum(best, np.linalg.norm(cb - ca, axis=1))
    for i in range(3):
        q = closest_point_on_triangle(A[:, i], B[:, 0], B[:, 1], B[:, 2])
        best = np.minimum(best, np.linalg.norm(q - A[:, i], axis=1))
        q = closest_point_on_triangle(B[:, i], A[:, 0], A[:, 1], A[:, 2])
        best = np.minimum(best, np.linalg.norm(q - B[:, i], axis=1))
    hit = np.zeros(k, dtype=bool)
    for i in range(3):
        hit |= segments_hit_triangles(
            A[:, i], A[:, (i + 1) % 3], B[:, 0], B[:, 1], B[:, 2]
        )
        hit |= segments_hit_triangles(
            B[:, i], B[:, (i + 1) % 3], A[:, 0], A[:, 1], A[:, 2]
        )
    return np.where(hit, 0.0, best)


def _box_distance(lo_a, hi_a, lo_b, hi_b):
    gap = np.maximum(0.0, np.maximum(lo_a - hi_b, lo_b - hi_a))
    return np.sqrt(_dot(gap, gap))


def mesh_distance_bruteforce(ta, tb):
    """Minimum over every triangle pair, no pruning."""
    ta = np.asarray(ta, dtype=float)
    tb = np.asarray(tb, dtype=float)
    ia, ib = np.meshgrid(np.arange(len(ta)), np.arange(len(tb)), indexing="ij")
    return float(tri_tri_distance(ta[ia.ravel()], tb[ib.ravel()]).min())


def mesh_distance(ta, tb, chunk=512):
    """Minimum triangle-pair distance, pruned by per-triangle boxes.

    Pairs are visited in ascending order of box distance, a lower bound on
    their exact distance, so evaluation stops once the bound reaches the
    best exact value found.
    """
    ta = np.asarray(ta, dtype=float)
    tb = np.asarray(tb, dtype=float)
    lo_a, hi_a = ta.min(axis=1), ta.max(axis=1)
    lo_b, hi_b = tb.min(axis=1), tb.max(axis=1)
    lb = _box_distance(lo_a[:, None], hi_a[:, None], lo_b[None], hi_b[None]).ravel()
    order = np.argsort(lb, kind="stable")
    nb = len(tb)
    best = np.inf
    for start in range(0, len(order), chunk):
        if lb[order[start]] >= best:
            break
        sel = order[start : start + chunk]
        sel = sel[lb[sel] < best]
        d = tri_tri_distance(ta[sel // nb], tb[sel % nb])
        best = min(best, float(d.min()))
        if best == 0.0:
            break
    return best


def points_inside(points, tris):
    """Ray-parity inside test against a closed triangle mesh.

    Three rays vote; a point is inside when at least two report an odd
    number of crossings.
    """
    points = np.asarray(points, dtype=float).reshape(-1, 3)
    tris = np.asarray(tris, dtype=float)
    a, b, c = tris[:, 0], tris[:, 1], tris[:, 2]
    ab = b - a
    ac = c - a
    votes = np.zeros(len(points), dtype=int)
    for d in RAY_DIRECTIONS:
        h = np.cross(d, ac)
        det = _dot(ab, h)
        ok = np.abs(det) > 1e-15
        inv = np.where(ok, 1.0 / np.where(ok, det, 1.0), 0.0)
        s = points[:, None, :] - a[None]
        u = inv * _dot(s, h[None])
        qv = np.cross(s, ab[None])
        v = inv * _dot(d, qv)
        t = inv * _dot(ac[None], qv)
        hits = ok & (u >= 0) & (u <= 1) & (v >= 0) & (u + v <= 1) & (t > 0)
        votes += hits.sum(axis=1) % 2
    return votes >= 2


def points_surface_distance(points, tris):
    points = np.asarray(points, dtype=float).reshape(-1, 3)
    tris = np.asarray(tris, dtype=float)
    out = np.empty(len(points))
    for i, p in enumerate(points):
        rep = np.broadcast_to(p, (len(tris), 3))
        q = closest_point_on_triangle(rep, tris[:, 0], tris[:, 1], tris[:, 2])
        out[i] = np.linalg.norm(q - rep, axis=1).min()
    return out
