"""Independent reference implementations used to check the library.

Everything here is deliberately written from scratch against the definitions,
not by calling the code under test: point-in-shape tests use inline cross
products, distances come from dense boundary sampling with local refinement.
"""

from __future__ import annotations

import numpy as np


def point_in_convex_polygon(p, verts) -> bool:
    """Inline CCW cross-product containment test."""
    verts = np.asarray(verts, dtype=float)
    n = len(verts)
    for i in range(n):
        a = verts[i]
        b = verts[(i + 1) % n]
        cross = (b[0] - a[0]) * (p[1] - a[1]) - (b[1] - a[1]) * (p[0] - a[0])
        if cross < -1e-12:
            return False
    return True


def point_in_polygon_raycast(p, verts) -> bool:
    """Even-odd ray casting test; works for non-convex polygons too."""
    x, y = float(p[0]), float(p[1])
    inside = False
    n = len(verts)
    j = n - 1
    for i in range(n):
        xi, yi = verts[i]
        xj, yj = verts[j]
        if (yi > y) != (yj > y) and x < (xj - xi) * (y - yi) / (yj - yi) + xi:
            inside = not inside
        j = i
    return inside


def capsule_boundary_points(a, b, r, num: int) -> np.ndarray:
    """Sample `num` points along a capsule boundary parameterized by arc/edge.

    Works for degenerate cases: a zero-length axis gives a circle, zero radius
    gives the bare segment.
    """
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    ts = np.linspace(0.0, 1.0, num, endpoint=False)
    return _capsule_boundary_at(a, b, r, ts)


def _capsule_boundary_at(a, b, r, ts) -> np.ndarray:
    """Boundary point at normalized parameter t in [0, 1).

    Parameterization: edge a->b on the left side, arc around b, edge b->a on
    the right side, arc around a, each allocated length-proportional spans.
    """
    ab = b - a
    length = float(np.hypot(*ab))
    if r <= 0.0:
        # Bare segment: go out and back.
        ts = np.asarray(ts)
        out = ts < 0.5
        pts = np.where(out[:, None], a + (2.0 * ts)[:, None] * ab, b - (2.0 * (ts - 0.5))[:, None] * ab)
        return pts
    if length <= 1e-12:
        ang = 2.0 * np.pi * np.asarray(ts)
        return a + r * np.stack([np.cos(ang), np.sin(ang)], axis=1)

    un = ab / length
    nl = np.array([-un[1], un[0]])
    perim_edge = length
    perim_arc = np.pi * r
    total = 2.0 * perim_edge + 2.0 * perim_arc
    s = np.asarray(ts) * total

    pts = np.empty((len(s), 2))
    theta0 = np.arctan2(nl[1], nl[0])
    for i, si in enumerate(s):
        if si < perim_edge:
            pts[i] = a + nl * r + un * si
        elif si < perim_edge + perim_arc:
            phi = (si - perim_edge) / r
            ang = theta0 - phi
            pts[i] = b + r * np.array([np.cos(ang), np.sin(ang)])
        elif si < 2.0 * perim_edge + perim_arc:
            si2 = si - perim_edge - perim_arc
            pts[i] = b - nl * r - un * si2
        else:
            phi = (si - 2.0 * perim_edge - perim_arc) / r
            ang = theta0 + np.pi - phi
            pts[i] = a + r * np.array([np.cos(ang), np.sin(ang)])
    return pts


def point_in_capsule(p, a, b, r) -> bool:
    """Containment via the two disks plus axis-frame rectangle coordinates."""
    p = np.asarray(p, dtype=float)
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if np.hypot(*(p - a)) <= r or np.hypot(*(p - b)) <= r:
        return True
    ab = b - a
    length = float(np.hypot(*ab))
    if length <= 1e-12 or r <= 0.0:
        return False
    un = ab / length
    nl = np.array([-un[1], un[0]])
    s = float((p - a) @ un)
    t = float((p - a) @ nl)
    return 0.0 <= s <= length and abs(t) <= r


def capsule_distance_sampled(p, a, b, r, coarse: int = 2048, refine_rounds: int = 3) -> float:
    """Distance to a capsule by boundary sampling with local refinement.

    A coarse sweep locates the nearest boundary sample; each refinement round
    re-samples densely inside the bracketing parameter interval. Interior
    points are detected by the independent containment test and return 0.
    """
    p = np.asarray(p, dtype=float)
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if point_in_capsule(p, a, b, r):
        return 0.0

    ts = np.linspace(0.0, 1.0, coarse, endpoint=False)
    pts = _capsule_boundary_at(a, b, r, ts)
    d = np.hypot(pts[:, 0] - p[0], pts[:, 1] - p[1])
    i = int(np.argmin(d))
    lo = ts[i] - 1.5 / coarse
    hi = ts[i] + 1.5 / coarse
    for _ in range(refine_rounds):
        ts = np.mod(np.linspace(lo, hi, 512), 1.0)
        pts = _capsule_boundary_at(a, b, r, ts)
        d = np.hypot(pts[:, 0] - p[0], pts[:, 1] - p[1])
        j = int(np.argmin(d))
        span = (hi - lo) / 512
        center = lo + j * (hi - lo) / 511 if j > 0 else lo
        lo, hi = center - 1.5 * span, center + 1.5 * span
    return float(d.min())


def polygon_distance_sampled(p, verts, samples_per_edge: int = 4000) -> float:
    """Distance to a convex polygon by dense edge sampling (0 if inside)."""
    p = np.asarray(p, dtype=float)
    verts = np.asarray(verts, dtype=float)
    if point_in_convex_polygon(p, verts):
        return 0.0
    best = np.inf
    n = len(verts)
    for i in range(n):
        a = verts[i]
        b = verts[(i + 1) % n]
        ts = np.linspace(0.0, 1.0, samples_per_edge)
        pts = a + ts[:, None] * (b - a)
        d = np.hypot(pts[:, 0] - p[0], pts[:, 1] - p[1]).min()
        best = min(best, float(d))
    return best
