"""Synthetic scenes: project ceiling LEDs through a camera with known errors, then solve.

Error sources injected by the ErrorModel:
    * installation: surveyed LED positions differ from the true ones (applied once per scene)
    * measurement: Gaussian noise on every centroid, optionally rounded to whole pixels
    * coordinate conversion: a constant plan shift of the receiver before projection
    * fabrication: the optical axis meets the sensor at true_rotation_center, not (u0, v0)

Every trial draws from its own generator, derived from (seed, stream, trial index), so
results do not depend on execution order or thread count.
"""
import logging
import math
from collections import OrderedDict, namedtuple

import numpy as np

from vlpcal.calibration import (CalibrationState, DispersionSample, RotationSweepSample,
                                calibrate_dispersion, calibrate_rotation_center)
from vlpcal.errors import DegenerateGeometry, InsufficientSamples, NoVisibleAnchors, VLPError
from vlpcal.geometry import PixelPoint, Pose, WorldPoint, project
from vlpcal.solver import Detection, Frame, solve_pose, try_solve_pose
from vlpcal.utils import OrderedExecutor, TrialFailure, trial_rng

STREAM_SCENE = 0
STREAM_STATIC = 1
STREAM_DYNAMIC = 2
STREAM_SWEEP = 3
STREAM_DISPERSION = 4

UNCALIBRATED = 'uncalibrated'
ROTATION_CALIBRATED = 'rotation-calibrated'
DISPERSION_CALIBRATED = 'dispersion-calibrated'
ARMS = (UNCALIBRATED, ROTATION_CALIBRATED, DISPERSION_CALIBRATED)


class Room(namedtuple('Room', ['length_mm', 'width_mm', 'height_mm'])):
    """A box centered on the world origin in plan, floor at z = 0."""
    __slots__ = ()

    def __new__(cls, length_mm, width_mm, height_mm):
        if not (length_mm > 0 and width_mm > 0 and height_mm > 0):
            raise ValueError('Room dimensions must be positive, got {}'.format((length_mm, width_mm, height_mm)))
        return super(Room, cls).__new__(cls, float(length_mm), float(width_mm), float(height_mm))

    @property
    def x_range(self):
        return (-self.length_mm / 2, self.length_mm / 2)

    @property
    def y_range(self):
        return (-self.width_mm / 2, self.width_mm / 2)

    def contains_plan(self, x, y):
        return (self.x_range[0] <= x <= self.x_range[1]) and (self.y_range[0] <= y <= self.y_range[1])

    def contains(self, P):
        return self.contains_plan(P.x, P.y) and 0 <= P.z <= self.height_mm


class ErrorModel(namedtuple('ErrorModel', [
        'true_rotation_center', 'anchor_position_noise_mm', 'pixel_noise_sigma_px',
        'constant_plan_shift_mm', 'quantize_pixels', 'seed'])):
    __slots__ = ()

    def __new__(cls, true_rotation_center, anchor_position_noise_mm=0., pixel_noise_sigma_px=0.,
                constant_plan_shift_mm=(0., 0.), quantize_pixels=False, seed=0):
        if not anchor_position_noise_mm >= 0:
            raise ValueError('anchor_position_noise_mm must be >= 0, got {}'.format(anchor_position_noise_mm))
        if not pixel_noise_sigma_px >= 0:
            raise ValueError('pixel_noise_sigma_px must be >= 0, got {}'.format(pixel_noise_sigma_px))
        shift = (float(constant_plan_shift_mm[0]), float(constant_plan_shift_mm[1]))
        return super(ErrorModel, cls).__new__(
            cls, PixelPoint(float(true_rotation_center[0]), float(true_rotation_center[1])),
            float(anchor_position_noise_mm), float(pixel_noise_sigma_px), shift, bool(quantize_pixels),
            int(seed))

    @classmethod
    def zero(cls, intr, seed=0):
        """No error at all: the optical axis meets the sensor at the nominal principal point."""
        return cls(intr.principal_point, seed=seed)

    @classmethod
    def from_center_offset(cls, intr, center_offset_px=(0., 0.), **kwargs):
        return cls(intr.principal_point.offset(*center_offset_px), **kwargs)

    def replace(self, **kwargs):
        return self._replace(**kwargs)


class Scene(namedtuple('Scene', ['anchors', 'true_anchors', 'intrinsics', 'room'])):
    """anchors is the surveyed table handed to the solver; true_anchors is what the camera sees."""
    __slots__ = ()


class GridSpec(namedtuple('GridSpec', ['rows', 'cols', 'x_range', 'y_range'])):
    """rows x cols evenly spaced plan positions, corners included."""
    __slots__ = ()

    def __new__(cls, rows, cols, x_range, y_range):
        if rows < 1 or cols < 1:
            raise ValueError('Grid needs at least one row and column, got {}x{}'.format(rows, cols))
        return super(GridSpec, cls).__new__(cls, int(rows), int(cols), tuple(map(float, x_range)),
                                            tuple(map(float, y_range)))

    @property
    def positions(self):
        xs = np.linspace(self.x_range[0], self.x_range[1], self.cols) if self.cols > 1 else [np.mean(self.x_range)]
        ys = np.linspace(self.y_range[0], self.y_range[1], self.rows) if self.rows > 1 else [np.mean(self.y_range)]
        return [(float(x), float(y)) for y in ys for x in xs]

    def __len__(self):
        return self.rows * self.cols


class TrialRecord(namedtuple('TrialRecord', ['index', 'true_pose', 'frame', 'estimate', 'seed'])):
    """One simulated trial.

    Attributes:
        index (int): position in the run
        true_pose (Pose)
        frame (Frame): None if the frame could not be generated
        estimate (PoseEstimate | TrialFailure)
        seed ((int, int, int)): (master seed, stream, index) the trial's generator came from
    """
    __slots__ = ()

    @property
    def ok(self):
        return not isinstance(self.estimate, TrialFailure)

    @property
    def status(self):
        return 'ok' if self.ok else self.estimate.error_name

    def error_mm(self, plan_only=False):
        if not self.ok:
            return None
        t, e = self.true_pose.position, self.estimate.position
        if plan_only:
            return math.hypot(e.x - t.x, e.y - t.y)
        return math.sqrt((e.x - t.x) ** 2 + (e.y - t.y) ** 2 + (e.z - t.z) ** 2)


def build_scene(anchors, intrinsics, room, err):
    """Place the LEDs, moving each true position away from the surveyed one by the installation error.

    Args:
        anchors (AnchorTable): surveyed positions
        intrinsics (CameraIntrinsics)
        room (Room)
        err (ErrorModel)

    Returns:
        Scene
    """
    for uid, P in anchors.items():
        if not room.contains(P):
            raise ValueError('LED {} at {} is outside the {} room'.format(uid, tuple(P), tuple(room)))
    rng = trial_rng(err.seed, STREAM_SCENE)
    noise = rng.normal(0., err.anchor_position_noise_mm, size=(len(anchors), 3))
    true_positions = OrderedDict(
        (uid, P.shifted(*noise[i])) for i, (uid, P) in enumerate(anchors.items()))
    return Scene(anchors, anchors.with_positions(true_positions), intrinsics, room)


def generate_frame(scene, true_pose, err, trial_seed=0, timestamp=0., min_visible=2):
    """Detections of every in-frame LED at `true_pose`.

    Args:
        scene (Scene)
        true_pose (Pose)
        err (ErrorModel)
        trial_seed (int | np.random.Generator): trial index on the static stream, or a generator
        timestamp (float): seconds
        min_visible (int): fewest in-frame LEDs to accept

    Raises:
        NoVisibleAnchors: fewer than `min_visible` LEDs land on the sensor
    """
    rng = trial_seed if isinstance(trial_seed, np.random.Generator) else \
        trial_rng(err.seed, STREAM_STATIC, trial_seed)
    intr = scene.intrinsics
    dx, dy = err.constant_plan_shift_mm
    apparent = Pose(true_pose.position.shifted(dx, dy), true_pose.yaw)
    # drawn for every LED so visibility never shifts the stream
    noise = rng.normal(0., err.pixel_noise_sigma_px, size=(len(scene.true_anchors), 2))

    detections = []
    for i, (uid, P) in enumerate(scene.true_anchors.items()):
        try:
            p = project(P, apparent, intr, err.true_rotation_center)
        except DegenerateGeometry:
            continue
        p = p.offset(*noise[i])
        if err.quantize_pixels:
            p = PixelPoint(float(np.round(p.u)), float(np.round(p.v)))
        if intr.contains(p):
            detections.append(Detection(uid, p))
    if len(detections) < min_visible:
        raise NoVisibleAnchors('Only {} LED(s) in frame at {}'.format(len(detections), tuple(true_pose.position)))
    return Frame(detections, timestamp)


def _run_trial(scene, err, calib, stream, index, pose, timestamp=0., draw_yaw=False):
    rng = trial_rng(err.seed, stream, index)
    if draw_yaw:
        pose = Pose(pose.position, rng.uniform(-math.pi, math.pi))
    try:
        frame = generate_frame(scene, pose, err, rng, timestamp)
    except VLPError as e:
        logging.debug('trial %d: %s', index, e)
        return TrialRecord(index, pose, None, TrialFailure(e), (err.seed, stream, index))
    estimate = try_solve_pose(frame, scene.anchors, scene.intrinsics, calib)
    return TrialRecord(index, pose, frame, estimate, (err.seed, stream, index))


def _run(trials, scene, err, calib, stream, threads, verbose, desc):
    """trials: list of (index, (pose, timestamp, draw_yaw))"""
    def run_one(args):
        index, (pose, timestamp, draw_yaw) = args
        return _run_trial(scene, err, calib, stream, index, pose, timestamp, draw_yaw)

    executor = OrderedExecutor(run_one, threads)
    records = executor.map([(i, (i, t)) for i, t in trials], desc=desc, verbose=verbose)
    n_failed = sum(1 for r in records if not r.ok)
    if n_failed:
        logging.warning('%s: %d of %d trials failed', desc, n_failed, len(records))
    return records


def static_grid_poses(grid, reps, heights):
    """Trial poses in run order: height, then row, then column, then repetition."""
    poses = []
    for z in heights:
        for x, y in grid.positions:
            for _ in range(reps):
                poses.append(WorldPoint(x, y, float(z)))
    return poses


def run_static_grid(scene, err, grid, reps, heights, calib, yaw=None, threads=1, verbose=False):
    """Repeated fixes at every grid point.

    Args:
        grid (GridSpec)
        reps (int): repetitions per point and height
        heights (list[float]): receiver z values, mm
        calib (CalibrationState)
        yaw (float): fixed yaw for every trial; None draws it uniformly per trial

    Returns:
        list[TrialRecord]: rows * cols * reps * len(heights) records
    """
    for x, y in grid.positions:
        if not scene.room.contains_plan(x, y):
            raise ValueError('Grid point {} is outside the room'.format((x, y)))
    positions = static_grid_poses(grid, reps, heights)
    fixed_yaw = 0. if yaw is None else yaw
    trials = [(i, (Pose(P, fixed_yaw), 0., yaw is None)) for i, P in enumerate(positions)]
    return _run(trials, scene, err, calib, STREAM_STATIC, threads, verbose, 'Static grid')


def dynamic_poses(start, end, speed, frame_rate, height, heading=None):
    """(pose, timestamp) pairs along a straight constant-speed run, both endpoints inclusive."""
    if not speed > 0:
        raise ValueError('speed must be positive, got {}'.format(speed))
    if not frame_rate > 0:
        raise ValueError('frame_rate must be positive, got {}'.format(frame_rate))
    start, end = np.asarray(start, dtype=float), np.asarray(end, dtype=float)
    length = float(np.linalg.norm(end - start))
    if length == 0:
        raise DegenerateGeometry('Trajectory start and end coincide')
    direction = (end - start) / length
    duration = length / speed
    n_frames = int(math.floor(duration * frame_rate + 1e-9)) + 1
    if heading is None:
        heading = math.atan2(direction[1], direction[0])
    poses = []
    for k in range(n_frames):
        t = k / float(frame_rate)
        x, y = start + direction * speed * t
        poses.append((Pose((float(x), float(y), float(height)), heading), t))
    return poses


def run_dynamic(scene, err, start, end, speed, frame_rate, calib, height=300., heading=None, threads=1,
                verbose=False):
    """Frames along the command trajectory from `start` to `end` at constant speed.

    Args:
        start, end ((float, float)): plan mm
        speed (float): mm/s
        frame_rate (float): Hz
        heading (float): receiver yaw; defaults to the direction of travel
    """
    for p in (start, end):
        if not scene.room.contains_plan(*p):
            raise ValueError('Trajectory endpoint {} is outside the room'.format(tuple(p)))
    poses = dynamic_poses(start, end, speed, frame_rate, height, heading)
    trials = [(i, (pose, t, False)) for i, (pose, t) in enumerate(poses)]
    return _run(trials, scene, err, calib, STREAM_DYNAMIC, threads, verbose, 'Dynamic run')


def sweep_yaws(n_angles=12, jitter_deg=5., seed=0):
    """n_angles yaws on an even lattice, each nudged by up to +-jitter_deg."""
    if n_angles < 1:
        raise ValueError('n_angles must be positive')
    rng = trial_rng(seed, STREAM_SWEEP, 0)
    jitter = rng.uniform(-jitter_deg, jitter_deg, size=n_angles)
    step = 360. / n_angles
    return [math.radians(i * step + j) for i, j in enumerate(jitter)]


def nearest_anchor(anchors, position):
    return min(anchors, key=lambda uid: math.hypot(anchors[uid].x - position[0], anchors[uid].y - position[1]))


def run_rotation_sweep(scene, err, fixed_position, yaw_angles=None, tracked_uid=None, height=300.):
    """Yaw the receiver in place and record where one LED lands at each angle.

    Args:
        fixed_position ((float, float)): plan mm
        yaw_angles (list[float]): radians; defaults to sweep_yaws(seed=err.seed)
        tracked_uid (str): defaults to the LED nearest fixed_position

    Returns:
        list[RotationSweepSample]
    """
    if yaw_angles is None:
        yaw_angles = sweep_yaws(seed=err.seed)
    if tracked_uid is None:
        tracked_uid = nearest_anchor(scene.anchors, fixed_position)
    scene.anchors.resolve(tracked_uid)

    samples = []
    for i, yaw in enumerate(yaw_angles):
        pose = Pose((fixed_position[0], fixed_position[1], height), yaw)
        frame = generate_frame(scene, pose, err, trial_rng(err.seed, STREAM_SWEEP, i + 1),
                               min_visible=1)
        hits = [d for d in frame.detections if d.uid == tracked_uid]
        if not hits:
            raise NoVisibleAnchors('Tracked LED {} left the frame at yaw {:.1f} deg'.format(
                tracked_uid, math.degrees(yaw)))
        samples.append(RotationSweepSample(i, hits[0].centroid))
    return samples


def run_dispersion_samples(scene, err, reference, n, calib, yaw=0., height=300.):
    """n solutions with the receiver held at `reference`.

    Args:
        reference ((float, float)): plan mm
        yaw (float): receiver yaw; None draws it uniformly per sample

    Returns:
        list[DispersionSample]
    """
    if n < 1:
        raise InsufficientSamples('Need at least one dispersion sample, got {}'.format(n))
    samples = []
    for i in range(n):
        rng = trial_rng(err.seed, STREAM_DISPERSION, i)
        y = rng.uniform(-math.pi, math.pi) if yaw is None else yaw
        pose = Pose((reference[0], reference[1], height), y)
        try:
            frame = generate_frame(scene, pose, err, rng)
            estimate = solve_pose(frame, scene.anchors, scene.intrinsics, calib)
        except VLPError as e:
            logging.warning('dispersion sample %d failed: %s', i, e)
            continue
        samples.append(DispersionSample(estimate.plan))
    if not samples:
        raise InsufficientSamples('Every dispersion sample failed')
    return samples


ComparisonResult = namedtuple('ComparisonResult', ['records', 'states'])


def run_calibration_comparison(scene, err, grid, reps, heights, sweep_position, reference, n_dispersion,
                               base_calib=None, yaw_angles=None, tracked_uid=None, sweep_height=300.,
                               static_yaw=None, threads=1, verbose=False):
    """The same static grid under three calibrations.

    uncalibrated: nominal principal point, no offset
    rotation-calibrated: rotation center fitted from a yaw sweep
    dispersion-calibrated: rotation center plus the dispersion offset measured under it

    The three arms share trial generators, so they see identical frames.

    Returns:
        ComparisonResult: records and calibration states keyed by arm name
    """
    if base_calib is None:
        base_calib = CalibrationState.uncalibrated(scene.intrinsics)
    base_calib = base_calib.without_dispersion()._replace(rotation_center=base_calib.nominal_center)

    sweep = run_rotation_sweep(scene, err, sweep_position, yaw_angles, tracked_uid, sweep_height)
    rotation = calibrate_rotation_center(sweep, base_calib, scene.intrinsics)
    samples = run_dispersion_samples(scene, err, reference, n_dispersion, rotation, height=sweep_height)
    dispersion = calibrate_dispersion(samples, reference, rotation)

    states = OrderedDict([(UNCALIBRATED, base_calib), (ROTATION_CALIBRATED, rotation),
                          (DISPERSION_CALIBRATED, dispersion)])
    records = OrderedDict()
    for arm, calib in states.items():
        logging.info('Running static grid: %s', arm)
        records[arm] = run_static_grid(scene, err, grid, reps, heights, calib, static_yaw, threads, verbose)
    return ComparisonResult(records, states)
