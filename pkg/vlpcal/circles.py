"""Circle fitting and smallest enclosing circles in the plane."""
import math
from collections import namedtuple

import numpy as np

from vlpcal.errors import DegenerateGeometry, EmptyInput, InsufficientSamples

# Normal-matrix condition number above which a circle fit is treated as collinear.
MAX_CONDITION = 1e12
# Relative slack when testing whether a point lies inside a circle.
_CONTAINMENT_EPS = 1e-12


class Circle2D(namedtuple('Circle2D', ['center', 'radius', 'residual'])):
    """center (x, y), radius and, for fitted circles, the RMS radial residual."""
    __slots__ = ()

    def __new__(cls, center, radius, residual=0.):
        center = (float(center[0]), float(center[1]))
        radius = float(radius)
        if not (math.isfinite(center[0]) and math.isfinite(center[1])):
            raise DegenerateGeometry('Circle center is not finite: {}'.format(center))
        if not radius >= 0:
            raise DegenerateGeometry('Circle radius must be non-negative, got {}'.format(radius))
        return super(Circle2D, cls).__new__(cls, center, radius, float(residual))

    def distance(self, p):
        return math.hypot(p[0] - self.center[0], p[1] - self.center[1])

    def contains(self, p, tol=0.):
        return self.distance(p) <= self.radius + tol


def _as_points(points):
    arr = np.asarray(points, dtype=float)
    if arr.ndim != 2 or arr.shape[1] != 2:
        raise ValueError('Expected a list of 2-vectors, got shape {}'.format(arr.shape))
    if not np.all(np.isfinite(arr)):
        raise ValueError('Non-finite point')
    return arr


def fit_circle(points, max_condition=MAX_CONDITION):
    """Algebraic least-squares (Kasa) circle.

    Minimizes sum_i (|p_i - c|^2 - r^2)^2 with one linear solve of
    [2x, 2y, 1] (cx, cy, r^2 - |c|^2) = x^2 + y^2. The points are centered and scaled to unit
    RMS radius first so the condition number does not depend on where the circle is.

    Args:
        points (list[2-vector]): at least 3
        max_condition (float): normal-matrix condition number treated as singular

    Returns:
        Circle2D: with the RMS radial residual filled in
    """
    pts = _as_points(points)
    if len(pts) < 3:
        raise InsufficientSamples('Circle fit needs at least 3 points, got {}'.format(len(pts)))
    origin = pts.mean(axis=0)
    centered = pts - origin
    scale = math.sqrt(np.mean(np.sum(centered ** 2, axis=1)))
    if scale == 0:
        raise DegenerateGeometry('All points coincide')
    q = centered / scale

    A = np.column_stack([2 * q[:, 0], 2 * q[:, 1], np.ones(len(q))])
    y = np.sum(q ** 2, axis=1)
    cond = np.linalg.cond(A.T.dot(A))
    if not cond < max_condition:
        raise DegenerateGeometry('Points are collinear (condition number {:.3g})'.format(cond))
    (cx, cy, c), _, _, _ = np.linalg.lstsq(A, y, rcond=None)
    r = math.sqrt(c + cx * cx + cy * cy)

    center = origin + scale * np.array([cx, cy])
    radius = scale * r
    radial = np.hypot(pts[:, 0] - center[0], pts[:, 1] - center[1]) - radius
    return Circle2D(center, radius, math.sqrt(np.mean(radial ** 2)))


def circumcircle(p, q, r):
    """The circle through three points.

    Raises:
        DegenerateGeometry: if the points are collinear
    """
    # offset to the bounding-box middle for precision
    ox = (min(p[0], q[0], r[0]) + max(p[0], q[0], r[0])) / 2.
    oy = (min(p[1], q[1], r[1]) + max(p[1], q[1], r[1])) / 2.
    ax, ay = p[0] - ox, p[1] - oy
    bx, by = q[0] - ox, q[1] - oy
    cx, cy = r[0] - ox, r[1] - oy
    d = 2. * (ax * (by - cy) + bx * (cy - ay) + cx * (ay - by))
    if d == 0:
        raise DegenerateGeometry('Collinear points have no circumcircle')
    a2, b2, c2 = ax * ax + ay * ay, bx * bx + by * by, cx * cx + cy * cy
    x = ox + (a2 * (by - cy) + b2 * (cy - ay) + c2 * (ay - by)) / d
    y = oy + (a2 * (cx - bx) + b2 * (ax - cx) + c2 * (bx - ax)) / d
    radius = max(math.hypot(x - P[0], y - P[1]) for P in (p, q, r))
    return Circle2D((x, y), radius)


def _diameter(p, q):
    center = ((p[0] + q[0]) / 2., (p[1] + q[1]) / 2.)
    radius = max(math.hypot(center[0] - p[0], center[1] - p[1]),
                 math.hypot(center[0] - q[0], center[1] - q[1]))
    return Circle2D(center, radius)


def _inside(circle, p):
    return circle.distance(p) <= circle.radius * (1 + _CONTAINMENT_EPS) + _CONTAINMENT_EPS


def _cross(p, q, r):
    """z-component of (q - p) x (r - p)."""
    return (q[0] - p[0]) * (r[1] - p[1]) - (q[1] - p[1]) * (r[0] - p[0])


def _circle_with_two(points, p, q):
    circle = _diameter(p, q)
    left = right = None
    for r in points:
        if _inside(circle, r):
            continue
        side = _cross(p, q, r)
        try:
            c = circumcircle(p, q, r)
        except DegenerateGeometry:
            continue
        if side > 0 and (left is None or _cross(p, q, c.center) > _cross(p, q, left.center)):
            left = c
        elif side < 0 and (right is None or _cross(p, q, c.center) < _cross(p, q, right.center)):
            right = c
    if left is None and right is None:
        return circle
    if left is None:
        return right
    if right is None:
        return left
    return left if left.radius <= right.radius else right


def _circle_with_one(points, p):
    circle = Circle2D(p, 0.)
    for i, q in enumerate(points):
        if not _inside(circle, q):
            if circle.radius == 0:
                circle = _diameter(p, q)
            else:
                circle = _circle_with_two(points[:i + 1], p, q)
    return circle


def min_enclosing_circle(points, seed=0):
    """Smallest circle containing every point (randomized incremental construction).

    The shuffle uses a fixed seed, so the result is a deterministic function of the input.

    Args:
        points (list[2-vector]): at least one

    Returns:
        Circle2D
    """
    pts = _as_points(points) if len(points) else np.zeros((0, 2))
    if len(pts) == 0:
        raise EmptyInput('No points to enclose')
    order = np.random.default_rng(seed).permutation(len(pts))
    shuffled = [(float(pts[i, 0]), float(pts[i, 1])) for i in order]

    circle = None
    for i, p in enumerate(shuffled):
        if circle is None or not _inside(circle, p):
            circle = _circle_with_one(shuffled[:i + 1], p)
    return circle


def sweep_coverage(points, center):
    """Angle subtended by a set of points as seen from `center`: 2 pi minus the largest gap.

    Returns:
        float: radians in [0, 2 pi)
    """
    pts = _as_points(points)
    if len(pts) < 2:
        return 0.
    angles = np.sort(np.arctan2(pts[:, 1] - center[1], pts[:, 0] - center[0]))
    gaps = np.diff(np.concatenate([angles, [angles[0] + 2 * math.pi]]))
    return float(2 * math.pi - gaps.max())
