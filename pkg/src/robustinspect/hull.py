"""Lower convex hull of planar points and its piecewise-linear evaluation."""
from __future__ import annotations

import numpy as np


def _cross(o, a, b) -> float:
    return (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])


def lower_hull(x, y) -> tuple[np.ndarray, np.ndarray]:
    """Vertices of the lower convex hull, sorted by x (monotone chain).

    Points with equal x keep only the lowest y.  Collinear interior points
    are dropped.
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    order = np.lexsort((y, x))
    pts = []
    last_x = None
    for i in order:
        if x[i] == last_x:
            continue
        last_x = x[i]
        p = (x[i], y[i])
        while len(pts) >= 2 and _cross(pts[-2], pts[-1], p) <= 0.0:
            pts.pop()
        pts.append(p)
    hx = np.array([p[0] for p in pts])
    hy = np.array([p[1] for p in pts])
    return hx, hy


def envelope_at(x, y, at):
    """Greatest convex minorant of the points, evaluated at ``at`` (inside the x range)."""
    hx, hy = lower_hull(x, y)
    return np.interp(at, hx, hy)
