"""Turn a HOCON run config into validated scene, error-model and experiment objects.

Everything is checked here, before any output directory exists; every failure is a
ConfigValidationError naming the dotted key.
"""
import glob
import math
import numbers
import os
from collections import namedtuple

from vlpcal.anchors import load_anchor_table
from vlpcal.calibration import DISPERSION_MODES, CalibrationState, load_calibration
from vlpcal.errors import ConfigValidationError
from vlpcal.geometry import CameraIntrinsics
from vlpcal.simulator import ErrorModel, GridSpec, Room, build_scene
from vlpcal.utils import Config

SRC_DIR = os.path.dirname(os.path.dirname(os.path.realpath(__file__)))
CONFIGS_DIR = os.path.join(SRC_DIR, 'configs')
ANCHORS_DIR = os.path.join(SRC_DIR, 'data', 'anchors')
BASE_CONFIG = os.path.join(CONFIGS_DIR, 'default-base.txt')

STATIC = 'static'
DYNAMIC = 'dynamic'
COMPARISON = 'comparison'
EXPERIMENT_TYPES = (STATIC, DYNAMIC, COMPARISON)

MAX_SEED = 2 ** 64 - 1


def preset_names():
    """Bundled presets: every config file at the top of configs/ except the base."""
    paths = glob.glob(os.path.join(CONFIGS_DIR, '*.txt'))
    return sorted(os.path.splitext(os.path.basename(p))[0] for p in paths if p != BASE_CONFIG)


def preset_path(name):
    path = os.path.join(CONFIGS_DIR, '{}.txt'.format(name))
    if name not in preset_names():
        raise ConfigValidationError('--preset', 'unknown preset {!r}; available: {}'.format(
            name, ', '.join(preset_names())))
    return path


def anchor_path(name_or_path):
    """A bundled layout name (two-led, three-led) or a file path."""
    bundled = os.path.join(ANCHORS_DIR, '{}.csv'.format(name_or_path))
    if os.path.exists(bundled):
        return bundled
    return name_or_path


def load_config(preset=None, config_paths=()):
    """The base config, then the preset, then user configs in order, later ones winning."""
    config = Config.from_file(preset_path(preset) if preset else BASE_CONFIG)
    for path in config_paths:
        if not os.path.exists(path):
            raise ConfigValidationError('--config', 'no such file: {}'.format(path))
        config = Config.merge(config, Config.from_file(path))
    return config


################################
# Typed accessors

def _value(config, key):
    return config.require(key)


def number(config, key, lo=None, hi=None, lo_open=False, integer=False):
    val = _value(config, key)
    full = config.key(key)
    if isinstance(val, bool) or not isinstance(val, numbers.Real):
        raise ConfigValidationError(full, 'expected a number, got {!r}'.format(val))
    if not math.isfinite(val):
        raise ConfigValidationError(full, 'must be finite, got {}'.format(val))
    if integer and int(val) != val:
        raise ConfigValidationError(full, 'expected an integer, got {}'.format(val))
    if lo is not None and (val < lo or (lo_open and val == lo)):
        raise ConfigValidationError(full, 'must be {} {}, got {}'.format('>' if lo_open else '>=', lo, val))
    if hi is not None and val > hi:
        raise ConfigValidationError(full, 'must be <= {}, got {}'.format(hi, val))
    return int(val) if integer else float(val)


def vector(config, key, length=None, min_length=None):
    val = _value(config, key)
    full = config.key(key)
    if not isinstance(val, list):
        raise ConfigValidationError(full, 'expected a list, got {!r}'.format(val))
    if length is not None and len(val) != length:
        raise ConfigValidationError(full, 'expected {} values, got {}'.format(length, len(val)))
    if min_length is not None and len(val) < min_length:
        raise ConfigValidationError(full, 'expected at least {} values, got {}'.format(min_length, len(val)))
    for v in val:
        if isinstance(v, bool) or not isinstance(v, numbers.Real) or not math.isfinite(v):
            raise ConfigValidationError(full, 'expected finite numbers, got {!r}'.format(v))
    return [float(v) for v in val]


def boolean(config, key):
    val = _value(config, key)
    if not isinstance(val, bool):
        raise ConfigValidationError(config.key(key), 'expected true or false, got {!r}'.format(val))
    return val


def choice(config, key, options):
    val = _value(config, key)
    if val not in options:
        raise ConfigValidationError(config.key(key), 'expected one of {}, got {!r}'.format(
            ', '.join(options), val))
    return val


def optional(config, key, parse, *args, **kwargs):
    """parse(config, key) unless the key is absent or null."""
    if config.get(key) is None:
        return None
    return parse(config, key, *args, **kwargs)


def _same(a, b):
    return all(math.isclose(x, y, rel_tol=1e-9, abs_tol=1e-12) for x, y in zip(a, b))


################################
# Blocks

StaticParams = namedtuple('StaticParams', ['grid', 'reps', 'heights', 'yaw'])
DynamicParams = namedtuple('DynamicParams', ['start', 'end', 'speed', 'frame_rate', 'height', 'heading'])
SweepParams = namedtuple('SweepParams', ['position', 'yaws', 'n_angles', 'jitter_deg', 'tracked_uid', 'height'])
DispersionParams = namedtuple('DispersionParams', ['reference', 'n', 'yaw', 'height', 'mode'])


class RunConfig(object):
    """A fully validated run.

    Args:
        config (Config): merged run config
        calibration_path (str): calibration file to solve with (and, for calibration commands, to update)
        calibration_must_exist (bool): whether a missing calibration file is an error
        seed (int): overrides error.seed
        threads (int): overrides experiment.threads
    """
    def __init__(self, config, calibration_path=None, calibration_must_exist=True, seed=None, threads=None):
        self.config = config
        if seed is not None:
            if not 0 <= seed <= MAX_SEED:
                raise ConfigValidationError('--seed', 'must be an unsigned 64-bit integer, got {}'.format(seed))
            config.put('error.seed', int(seed))
        if threads is not None and threads < 1:
            raise ConfigValidationError('--threads', 'must be at least 1, got {}'.format(threads))

        scene = config.scene
        self.room = Room(*self._room(scene))
        self.intrinsics = self._intrinsics(scene.intrinsics)
        self.height_range = vector(scene, 'camera_height_range_mm', length=2)
        self.plan_range = vector(scene, 'plan_range_mm', length=2)
        if not 0 <= self.height_range[0] <= self.height_range[1] < self.room.height_mm:
            raise ConfigValidationError(scene.key('camera_height_range_mm'),
                                        'must satisfy 0 <= low <= high < room height')
        if not 0 <= self.plan_range[0] <= self.plan_range[1]:
            raise ConfigValidationError(scene.key('plan_range_mm'), 'must satisfy 0 <= low <= high')

        anchors_key = scene.key('anchors')
        path = anchor_path(_value(scene, 'anchors'))
        if not os.path.exists(path):
            raise ConfigValidationError(anchors_key, 'no such anchor file: {}'.format(path))
        tolerance = number(scene, 'ceiling_tolerance_mm', lo=0)
        self.anchors = load_anchor_table(path, tolerance)
        for uid, P in self.anchors.items():
            if not self.room.contains(P):
                raise ConfigValidationError(anchors_key, 'LED {} at {} is outside the room'.format(uid, tuple(P)))
            if not P.z > self.height_range[1]:
                raise ConfigValidationError(anchors_key, 'LED {} is not above the highest camera position'.format(uid))

        self.error_model = self._error_model(config.error)

        exp = config.experiment
        self.experiment_type = choice(exp, 'type', EXPERIMENT_TYPES)
        self.plan_only = boolean(exp, 'plan_only')
        self.dump_frames = boolean(exp, 'dump_frames')
        # --threads is not written back into the config, so it does not affect the config hash
        self.threads = number(exp, 'threads', lo=1, integer=True) if threads is None else int(threads)
        self.static = self._static(exp.static)
        self.dynamic = self._dynamic(exp.dynamic)
        self.sweep = self._sweep(exp.sweep)
        self.dispersion = self._dispersion(exp.dispersion)

        self.calibration_path = calibration_path
        self.calibration = self._calibration(calibration_path, calibration_must_exist)

    def _room(self, scene):
        dims = vector(scene, 'room_mm', length=3)
        if not all(d > 0 for d in dims):
            raise ConfigValidationError(scene.key('room_mm'), 'dimensions must be positive, got {}'.format(dims))
        return dims

    def _intrinsics(self, block):
        f = number(block, 'focal_length_mm', lo=0, lo_open=True)
        pitch = vector(block, 'pixel_pitch_mm', length=2)
        if not all(p > 0 for p in pitch):
            raise ConfigValidationError(block.key('pixel_pitch_mm'), 'must be positive, got {}'.format(pitch))
        res = vector(block, 'resolution', length=2)
        if not all(r >= 1 and int(r) == r for r in res):
            raise ConfigValidationError(block.key('resolution'), 'must be positive integers, got {}'.format(res))
        center = optional(block, 'principal_point', vector, length=2)
        if center is None:
            center = (res[0] / 2., res[1] / 2.)
        if not (0 <= center[0] <= res[0] and 0 <= center[1] <= res[1]):
            raise ConfigValidationError(block.key('principal_point'), 'must lie on the sensor, got {}'.format(center))
        return CameraIntrinsics(f, pitch[0], pitch[1], center, int(res[0]), int(res[1]))

    def _error_model(self, block):
        seed = number(block, 'seed', lo=0, hi=MAX_SEED, integer=True)
        offset = vector(block, 'true_center_offset_px', length=2)
        true_center = self.intrinsics.principal_point.offset(*offset)
        if not self.intrinsics.contains(true_center):
            raise ConfigValidationError(block.key('true_center_offset_px'), 'puts the optical axis off the sensor')
        return ErrorModel(
            true_center,
            number(block, 'anchor_position_noise_mm', lo=0),
            number(block, 'pixel_noise_sigma_px', lo=0),
            vector(block, 'constant_plan_shift_mm', length=2),
            boolean(block, 'quantize_pixels'),
            seed)

    def _check_height(self, block, key):
        z = number(block, key)
        if not self.height_range[0] <= z <= self.height_range[1]:
            raise ConfigValidationError(block.key(key), 'camera height {} mm is outside {}'.format(
                z, self.height_range))
        return z

    def _check_plan(self, block, key, point):
        full = block.key(key)
        if not self.room.contains_plan(*point):
            raise ConfigValidationError(full, '{} is outside the room'.format(tuple(point)))
        if math.hypot(*point) > self.plan_range[1]:
            raise ConfigValidationError(full, '{} is farther than {} mm from the room center'.format(
                tuple(point), self.plan_range[1]))

    def _yaw(self, block, key):
        """A number of degrees, or `random`."""
        val = _value(block, key)
        if val == 'random':
            return None
        return math.radians(number(block, key))

    def _static(self, block):
        rows = number(block, 'rows', lo=1, integer=True)
        cols = number(block, 'cols', lo=1, integer=True)
        x_range = vector(block, 'x_range_mm', length=2)
        y_range = vector(block, 'y_range_mm', length=2)
        grid = GridSpec(rows, cols, x_range, y_range)
        for p in grid.positions:
            self._check_plan(block, 'x_range_mm', p)
        reps = number(block, 'reps', lo=1, integer=True)
        heights = vector(block, 'heights_mm', min_length=1)
        for z in heights:
            if not self.height_range[0] <= z <= self.height_range[1]:
                raise ConfigValidationError(block.key('heights_mm'), 'camera height {} mm is outside {}'.format(
                    z, self.height_range))
        return StaticParams(grid, reps, heights, self._yaw(block, 'yaw_deg'))

    def _dynamic(self, block):
        start = vector(block, 'start_mm', length=2)
        end = vector(block, 'end_mm', length=2)
        self._check_plan(block, 'start_mm', start)
        self._check_plan(block, 'end_mm', end)
        if start == end:
            raise ConfigValidationError(block.key('end_mm'), 'trajectory start and end coincide')
        heading = _value(block, 'heading_deg')
        heading = None if heading == 'travel' else math.radians(number(block, 'heading_deg'))
        return DynamicParams(start, end, number(block, 'speed_mm_s', lo=0, lo_open=True),
                             number(block, 'frame_rate_hz', lo=0, lo_open=True),
                             self._check_height(block, 'height_mm'), heading)

    def _sweep(self, block):
        position = vector(block, 'position_mm', length=2)
        self._check_plan(block, 'position_mm', position)
        yaws = optional(block, 'yaws_deg', vector)
        if yaws is not None:
            if len(yaws) < 3:
                raise ConfigValidationError(block.key('yaws_deg'), 'a sweep needs at least 3 angles, got {}'.format(
                    len(yaws)))
            yaws = [math.radians(y) for y in yaws]
        n_angles = number(block, 'n_angles', lo=3, integer=True)
        jitter = number(block, 'jitter_deg', lo=0)
        tracked = block.get('tracked_uid')
        if tracked is not None and tracked not in self.anchors:
            raise ConfigValidationError(block.key('tracked_uid'), 'unknown LED uid {}'.format(tracked))
        return SweepParams(position, yaws, n_angles, jitter, tracked, self._check_height(block, 'height_mm'))

    def _dispersion(self, block):
        reference = vector(block, 'reference_mm', length=2)
        self._check_plan(block, 'reference_mm', reference)
        n = number(block, 'n', lo=1, integer=True)
        mode = choice(block, 'mode', DISPERSION_MODES)
        return DispersionParams(reference, n, self._yaw(block, 'yaw_deg'), self._check_height(block, 'height_mm'),
                                mode)

    def _calibration(self, path, must_exist):
        if path is None or (not must_exist and not os.path.exists(path)):
            return CalibrationState.uncalibrated(self.intrinsics, self.dispersion.mode)
        if not os.path.exists(path):
            raise ConfigValidationError('--calibration', 'no such file: {}'.format(path))
        calib = load_calibration(path)
        intr = self.intrinsics
        if not _same(calib.nominal_center, intr.principal_point):
            raise ConfigValidationError('--calibration', 'nominal center {} is not the principal point {}'.format(
                tuple(calib.nominal_center), tuple(intr.principal_point)))
        if not _same(calib.pixel_pitch, intr.pitch):
            raise ConfigValidationError('--calibration', 'pixel pitch {} is not the sensor pitch {}'.format(
                tuple(calib.pixel_pitch), tuple(intr.pitch)))
        if not intr.contains(calib.rotation_center):
            raise ConfigValidationError('--calibration', 'rotation center {} is off the sensor'.format(
                tuple(calib.rotation_center)))
        return calib

    def build_scene(self):
        return build_scene(self.anchors, self.intrinsics, self.room, self.error_model)

    @property
    def seed(self):
        return self.error_model.seed
