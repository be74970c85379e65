"""Positioning error statistics and trajectory line fits."""
import math
from collections import namedtuple

import numpy as np

from vlpcal.errors import DegenerateGeometry, EmptyInput


class ErrorSummary(namedtuple('ErrorSummary', [
        'n', 'mean_mm', 'max_mm', 'p50_mm', 'p90_mm', 'rms_mm', 'std_mm', 'n_failed', 'cdf'])):
    """Statistics over the successful trials of a run.

    cdf is a list of (error_mm, fraction of trials with error <= error_mm), one entry per
    distinct error value, ending at fraction 1.0.
    """
    __slots__ = ()

    def cdf_at(self, error_mm):
        frac = 0.
        for e, f in self.cdf:
            if e > error_mm:
                break
            frac = f
        return frac


class FittedLine(namedtuple('FittedLine', ['point', 'direction', 'rms_residual_mm'])):
    __slots__ = ()

    def distance(self, p):
        dx, dy = p[0] - self.point[0], p[1] - self.point[1]
        return abs(dx * self.direction[1] - dy * self.direction[0])


def nearest_rank(sorted_values, p):
    """The smallest value with at least a fraction p of the sample at or below it."""
    n = len(sorted_values)
    k = max(1, int(math.ceil(p * n - 1e-9)))
    return sorted_values[min(k, n) - 1]


def empirical_cdf(sorted_values):
    n = len(sorted_values)
    cdf = []
    for i, e in enumerate(sorted_values):
        if cdf and cdf[-1][0] == e:
            cdf[-1] = (e, (i + 1) / float(n))
        else:
            cdf.append((e, (i + 1) / float(n)))
    return cdf


def summarize(errors, n_failed=0):
    """ErrorSummary of a list of non-negative errors in mm."""
    errors = [float(e) for e in errors]
    if not errors:
        raise EmptyInput('No successful trials to summarize ({} failed)'.format(n_failed))
    s = sorted(errors)
    n = len(s)
    arr = np.array(s)
    return ErrorSummary(
        n=n,
        mean_mm=math.fsum(s) / n,
        max_mm=s[-1],
        p50_mm=nearest_rank(s, 0.5),
        p90_mm=nearest_rank(s, 0.9),
        rms_mm=math.sqrt(math.fsum(e * e for e in s) / n),
        std_mm=float(arr.std()),
        n_failed=int(n_failed),
        cdf=empirical_cdf(s),
    )


def error_stats(records, plan_only=False):
    """Euclidean error between estimate and truth for every successful record.

    Args:
        records (list[TrialRecord])
        plan_only (bool): 2-D plan error instead of 3-D
    """
    errors = [r.error_mm(plan_only) for r in records if r.ok]
    return summarize(errors, n_failed=len(records) - len(errors))


def fit_line(points):
    """Total least-squares line: the principal direction of the centered points.

    The direction is oriented with a positive x component (positive y for vertical lines).
    """
    pts = np.asarray(points, dtype=float)
    if pts.ndim != 2 or pts.shape[1] != 2:
        raise ValueError('Expected a list of 2-vectors, got shape {}'.format(pts.shape))
    if len(pts) < 2:
        raise DegenerateGeometry('Line fit needs at least 2 points, got {}'.format(len(pts)))
    center = pts.mean(axis=0)
    centered = pts - center
    if not np.any(centered):
        raise DegenerateGeometry('All points coincide')
    _, _, vt = np.linalg.svd(centered, full_matrices=False)
    d = vt[0] / np.linalg.norm(vt[0])
    if d[0] < 0 or (d[0] == 0 and d[1] < 0):
        d = -d
    normal = np.array([-d[1], d[0]])
    residual = math.sqrt(np.mean(centered.dot(normal) ** 2))
    return FittedLine((float(center[0]), float(center[1])), (float(d[0]), float(d[1])), residual)


def line_angle(line, command_line):
    """Angle in [0, pi/2] between a fitted line and the segment (start, end)."""
    start, end = command_line
    cx, cy = end[0] - start[0], end[1] - start[1]
    norm = math.hypot(cx, cy)
    if norm == 0:
        raise DegenerateGeometry('Command line start and end coincide')
    cos = abs(line.direction[0] * cx + line.direction[1] * cy) / norm
    return math.acos(min(1., cos))


def point_segment_distance(p, start, end):
    """Distance from p to the closed segment [start, end]."""
    sx, sy = start
    ex, ey = end
    dx, dy = ex - sx, ey - sy
    length2 = dx * dx + dy * dy
    if length2 == 0:
        raise DegenerateGeometry('Segment start and end coincide')
    t = ((p[0] - sx) * dx + (p[1] - sy) * dy) / length2
    t = min(1., max(0., t))
    return math.hypot(p[0] - (sx + t * dx), p[1] - (sy + t * dy))


def dynamic_errors(records, command_line):
    """Distance from every estimate to the command segment.

    Args:
        records (list[TrialRecord])
        command_line (((float, float), (float, float))): start and end, plan mm
    """
    start, end = command_line
    if start[0] == end[0] and start[1] == end[1]:
        raise DegenerateGeometry('Command line start and end coincide')
    errors = [point_segment_distance(r.estimate.plan, start, end) for r in records if r.ok]
    return summarize(errors, n_failed=len(records) - len(errors))


def trajectory_line(records):
    """TLS line through the estimated plan positions of a dynamic run."""
    return fit_line([r.estimate.plan for r in records if r.ok])
