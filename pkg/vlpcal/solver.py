"""Recover the receiver pose from one frame of LED detections.

The pipeline goes yaw first, then position:
    1. pixel centroids -> image plane about the calibrated rotation center
    2. H from the ratio of world to image distances, averaged over LED pairs
    3. Z_s = ceiling z - H
    4. yaw from the rotation between world and image difference vectors
    5. plan position by inverting the projection for every LED and averaging
    6. subtract the dispersion offset (world_plane calibrations only)
"""
import logging
import math
from collections import namedtuple
from itertools import combinations

import numpy as np

from vlpcal.errors import (DegenerateGeometry, FrameFileError, TooFewAnchors, VLPError)
from vlpcal.geometry import (MIN_IMAGE_DISTANCE_MM, PixelPoint, Pose, WorldPoint, normalize_angle,
                             pairwise_heights, pixel_to_image, receiver_z)
from vlpcal.io import fmt_float, read_csv, write_csv
from vlpcal.utils import OrderedExecutor, TrialFailure

FRAME_HEADER = ('uid', 'u', 'v')

TWO_LED = 'two-led'
N_LED = 'n-led'

# |world delta| below this cannot fix a direction.
MIN_WORLD_DISTANCE_MM = 1e-9


class Detection(namedtuple('Detection', ['uid', 'centroid'])):
    __slots__ = ()

    def __new__(cls, uid, centroid):
        return super(Detection, cls).__new__(cls, str(uid), PixelPoint(*centroid))


class Frame(namedtuple('Frame', ['detections', 'timestamp'])):
    """The LEDs seen in one image."""
    __slots__ = ()

    def __new__(cls, detections, timestamp=0.):
        detections = tuple(detections)
        seen = set()
        for d in detections:
            if d.uid in seen:
                raise ValueError('Duplicate uid {} in frame'.format(d.uid))
            seen.add(d.uid)
        return super(Frame, cls).__new__(cls, detections, float(timestamp))

    @property
    def uids(self):
        return [d.uid for d in self.detections]

    def __len__(self):
        return len(self.detections)


class YawSolution(namedtuple('YawSolution', ['a', 'b', 'gamma', 'residual', 'method'])):
    """(a, b) = (cos gamma, sin gamma) after normalization.

    residual is |a^2 + b^2 - 1| before normalization for the two-LED method, and the RMS
    of the stacked pair equations (image-plane mm) for the N-LED method.
    """
    __slots__ = ()


class PoseEstimate(namedtuple('PoseEstimate', [
        'position', 'yaw', 'height_H', 'n_leds_used', 'plan_residual_mm',
        'height_spread_mm', 'yaw_residual', 'method'])):
    __slots__ = ()

    @property
    def pose(self):
        return Pose(self.position, self.yaw)

    @property
    def plan(self):
        return self.position.plan


def solve_yaw_two_led(world_delta, image_delta, scale):
    """Solve image_delta = scale [[a, b], [-b, a]] world_delta for (a, b).

    Args:
        world_delta (2-vector): P2 - P1 in plan, mm
        image_delta (2-vector): p2 - p1 on the image plane, mm
        scale (float): -f / H

    Returns:
        YawSolution
    """
    wx, wy = float(world_delta[0]), float(world_delta[1])
    ix, iy = float(image_delta[0]), float(image_delta[1])
    w2 = wx * wx + wy * wy
    if math.sqrt(w2) < MIN_WORLD_DISTANCE_MM:
        raise DegenerateGeometry('LED pair has no plan separation')
    if math.hypot(ix, iy) < MIN_IMAGE_DISTANCE_MM:
        raise DegenerateGeometry('LED pair images coincide')
    if scale == 0 or not math.isfinite(scale):
        raise DegenerateGeometry('Projection scale must be finite and nonzero, got {}'.format(scale))

    det = scale * w2
    a = (wx * ix + wy * iy) / det
    b = (wy * ix - wx * iy) / det
    norm = math.hypot(a, b)
    residual = abs(a * a + b * b - 1.)
    a, b = a / norm, b / norm
    return YawSolution(a, b, normalize_angle(math.atan2(b, a)), residual, TWO_LED)


def _pair_system(world_xy, image_xy, scale):
    rows, rhs = [], []
    for i, j in combinations(range(len(world_xy)), 2):
        wx, wy = world_xy[j] - world_xy[i]
        ix, iy = image_xy[j] - image_xy[i]
        rows.append((scale * wx, scale * wy))
        rows.append((scale * wy, -scale * wx))
        rhs.extend((ix, iy))
    return np.array(rows), np.array(rhs)


def solve_yaw_n_led(correspondences, scale):
    """Least-squares yaw over every LED pair.

    Each pair contributes the two rows of scale [[wx, wy], [wy, -wx]] (a, b) = (ix, iy). The
    normal matrix is a multiple of the identity, so normalizing the unconstrained solution
    gives the constrained optimum on the unit circle.

    Args:
        correspondences (list[(WorldPoint, ImagePoint)]): at least 3
        scale (float): -f / H
    """
    if len(correspondences) < 3:
        raise TooFewAnchors('N-LED yaw needs at least 3 LEDs, got {}'.format(len(correspondences)))
    if scale == 0 or not math.isfinite(scale):
        raise DegenerateGeometry('Projection scale must be finite and nonzero, got {}'.format(scale))
    world_xy = np.array([(P.x, P.y) for P, _ in correspondences], dtype=float)
    image_xy = np.array([(p.x, p.y) for _, p in correspondences], dtype=float)
    A, y = _pair_system(world_xy, image_xy, scale)

    (a, b), _, rank, _ = np.linalg.lstsq(A, y, rcond=None)
    if rank < 2:
        raise DegenerateGeometry('Stacked yaw system is rank deficient (rank {})'.format(rank))
    norm = math.hypot(a, b)
    if norm == 0:
        raise DegenerateGeometry('Yaw system has the zero solution')
    a, b = float(a / norm), float(b / norm)
    residual = float(np.sqrt(np.mean((A.dot([a, b]) - y) ** 2)))
    return YawSolution(a, b, normalize_angle(math.atan2(b, a)), residual, N_LED)


def solve_plan_position(correspondences, yaw, H, intr):
    """Invert the projection for every LED and average.

    (X_s, Y_s)_i = (X_i, Y_i) + (H / f) [[a, -b], [b, a]] (x_i, y_i)

    Returns:
        (float, float, float): X_s, Y_s and the RMS spread of the per-LED answers
    """
    if not H > 0:
        raise DegenerateGeometry('H must be positive, got {}'.format(H))
    if not correspondences:
        raise TooFewAnchors('no correspondences')
    k = H / intr.focal_length_mm
    a, b = yaw.a, yaw.b
    per_led = np.array([(P.x + k * (a * p.x - b * p.y), P.y + k * (b * p.x + a * p.y))
                        for P, p in correspondences])
    mean = per_led.mean(axis=0)
    spread = float(np.sqrt(np.mean(np.sum((per_led - mean) ** 2, axis=1))))
    return float(mean[0]), float(mean[1]), spread


def solve_pose(frame, anchors, intr, calib=None):
    """Full pose from one frame.

    Args:
        frame (Frame)
        anchors (AnchorTable)
        intr (CameraIntrinsics)
        calib (CalibrationState): None means uncalibrated (nominal principal point, no offset)

    Returns:
        PoseEstimate
    """
    if len(frame.detections) < 2:
        raise TooFewAnchors('Need at least 2 LEDs, frame has {}'.format(len(frame.detections)))
    world = [anchors.resolve(d.uid) for d in frame.detections]
    center = intr.principal_point if calib is None else calib.effective_center()
    image = [pixel_to_image(d.centroid, intr, center) for d in frame.detections]
    correspondences = list(zip(world, image))

    world_xy = np.array([P.plan for P in world], dtype=float)
    image_xy = np.array(image, dtype=float)
    heights = pairwise_heights(world_xy, image_xy, intr)
    H = float(np.mean(heights))
    z_s = receiver_z([P.z for P in world], H, anchors.ceiling_tolerance_mm)

    scale = -intr.focal_length_mm / H
    if len(world) == 2:
        yaw = solve_yaw_two_led(world_xy[1] - world_xy[0], image_xy[1] - image_xy[0], scale)
    else:
        yaw = solve_yaw_n_led(correspondences, scale)

    x_s, y_s, plan_residual = solve_plan_position(correspondences, yaw, H, intr)
    if calib is not None:
        dx, dy = calib.world_offset
        x_s, y_s = x_s - dx, y_s - dy

    estimate = PoseEstimate(WorldPoint(x_s, y_s, z_s), yaw.gamma, H, len(world), plan_residual,
                            float(np.std(heights)), yaw.residual, yaw.method)
    if not all(math.isfinite(c) for c in estimate.position):
        raise DegenerateGeometry('Solver produced a non-finite position')
    return estimate


def try_solve_pose(frame, anchors, intr, calib=None):
    """solve_pose, but domain failures come back as a TrialFailure."""
    try:
        return solve_pose(frame, anchors, intr, calib)
    except (VLPError, ValueError) as e:
        logging.debug('solve failed: %s', e)
        return TrialFailure(e)


def solve_frames(frames, anchors, intr, calib=None, threads=1, verbose=False):
    """Solve many independent frames.

    Returns:
        list[PoseEstimate | TrialFailure]: in the order of `frames`
    """
    executor = OrderedExecutor(lambda frame: try_solve_pose(frame, anchors, intr, calib), threads)
    return executor.map(enumerate(frames), desc='Solving frames', verbose=verbose)


def load_frame(path, timestamp=0.):
    """Read a `uid,u,v` detection file.

    Raises:
        FrameFileError: naming the offending row
    """
    detections = []
    seen = {}
    try:
        for row_num, row in read_csv(path, FRAME_HEADER):
            uid = row['uid']
            if not uid:
                raise FrameFileError(path, row_num, 'empty uid')
            if uid in seen:
                raise FrameFileError(path, row_num, 'duplicate uid {} (first seen on row {})'.format(
                    uid, seen[uid]))
            seen[uid] = row_num
            try:
                u, v = float(row['u']), float(row['v'])
            except ValueError as e:
                raise FrameFileError(path, row_num, str(e))
            if not (math.isfinite(u) and math.isfinite(v)):
                raise FrameFileError(path, row_num, 'non-finite centroid')
            detections.append(Detection(uid, (u, v)))
    except ValueError as e:
        raise FrameFileError(path, None, str(e))
    return Frame(detections, timestamp)


def save_frame(frame, path):
    rows = [(d.uid, fmt_float(d.centroid.u), fmt_float(d.centroid.v)) for d in frame.detections]
    write_csv(path, FRAME_HEADER, rows)
