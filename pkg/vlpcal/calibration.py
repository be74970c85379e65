"""Rotation-center and dispersion-circle calibration of an upward-looking camera.

Rotation calibration: yaw the receiver about its lens center while tracking one LED. The LED
image moves on a circle whose center is where the optical axis really meets the sensor,
(u1, v1), which replaces the nominal principal point (u0, v0).

Dispersion calibration: hold the receiver at a known reference point, collect many position
solutions, and take their mean as the center of the dispersion circle. The mean's offset from
the reference is subtracted from every later solution; the radius of the smallest circle
around the solutions is kept as a measure of the random spread.
"""
import logging
import math
import warnings
from collections import OrderedDict, namedtuple

import numpy as np
from pyhocon import ConfigFactory, ConfigTree, HOCONConverter
from pyhocon.exceptions import ConfigException
from pyparsing import ParseBaseException

from vlpcal.circles import fit_circle, min_enclosing_circle, sweep_coverage
from vlpcal.errors import (CalibrationFileError, DegenerateGeometry, InsufficientSamples,
                           InsufficientSweep)
from vlpcal.geometry import PixelPoint

WORLD_PLANE = 'world_plane'
PIXEL_LITERAL = 'pixel_literal'
DISPERSION_MODES = (WORLD_PLANE, PIXEL_LITERAL)

# Sweeps narrower than half a turn give a poorly conditioned circle fit.
MIN_SWEEP_COVERAGE = math.pi


class RotationSweepSample(namedtuple('RotationSweepSample', ['yaw_index', 'centroid'])):
    __slots__ = ()

    def __new__(cls, yaw_index, centroid):
        return super(RotationSweepSample, cls).__new__(cls, int(yaw_index), PixelPoint(*centroid))


class DispersionSample(namedtuple('DispersionSample', ['plan_estimate'])):
    __slots__ = ()

    def __new__(cls, plan_estimate):
        x, y = float(plan_estimate[0]), float(plan_estimate[1])
        if not (math.isfinite(x) and math.isfinite(y)):
            raise ValueError('Non-finite dispersion sample: {}'.format((x, y)))
        return super(DispersionSample, cls).__new__(cls, (x, y))


def default_provenance():
    return OrderedDict([
        ('rotation_samples', 0),
        ('rotation_residual_px', 0.),
        ('sweep_coverage_rad', 0.),
        ('dispersion_samples', 0),
        ('dispersion_reference_mm', [0., 0.]),
    ])


class CalibrationState(namedtuple('CalibrationState', [
        'rotation_center', 'nominal_center', 'dispersion_offset', 'dispersion_radius',
        'dispersion_mode', 'pixel_pitch', 'provenance'])):
    """Everything the solver needs to undo the camera's intrinsic errors.

    Attributes:
        rotation_center (PixelPoint): (u1, v1); equals nominal_center when uncalibrated
        nominal_center (PixelPoint): (u0, v0)
        dispersion_offset ((float, float)): (dx, dy) mm
        dispersion_radius (float): mm
        dispersion_mode (str): WORLD_PLANE subtracts the offset from solved positions;
            PIXEL_LITERAL moves the image center by (dx / di, dy / dj) pixels instead
        pixel_pitch ((float, float)): (di, dj) mm/px, needed by PIXEL_LITERAL
        provenance (OrderedDict): sample counts and fit residuals
    """
    __slots__ = ()

    def __new__(cls, rotation_center, nominal_center, dispersion_offset=(0., 0.), dispersion_radius=0.,
                dispersion_mode=WORLD_PLANE, pixel_pitch=(1., 1.), provenance=None):
        if dispersion_mode not in DISPERSION_MODES:
            raise ValueError('Unknown dispersion mode {!r}, expected one of {}'.format(
                dispersion_mode, ', '.join(DISPERSION_MODES)))
        if not dispersion_radius >= 0:
            raise ValueError('Dispersion radius must be non-negative, got {}'.format(dispersion_radius))
        if not (pixel_pitch[0] > 0 and pixel_pitch[1] > 0):
            raise ValueError('Pixel pitch must be positive, got {}'.format(tuple(pixel_pitch)))
        merged = default_provenance()
        merged.update(provenance or {})
        return super(CalibrationState, cls).__new__(
            cls, PixelPoint(float(rotation_center[0]), float(rotation_center[1])),
            PixelPoint(float(nominal_center[0]), float(nominal_center[1])),
            (float(dispersion_offset[0]), float(dispersion_offset[1])), float(dispersion_radius),
            dispersion_mode, (float(pixel_pitch[0]), float(pixel_pitch[1])), merged)

    @classmethod
    def uncalibrated(cls, intr, dispersion_mode=WORLD_PLANE):
        return cls(intr.principal_point, intr.principal_point, dispersion_mode=dispersion_mode,
                   pixel_pitch=intr.pitch)

    @property
    def pixel_shift(self):
        """Pixel-literal center shift (dx / di, dy / dj)."""
        if self.dispersion_mode != PIXEL_LITERAL:
            return (0., 0.)
        return (self.dispersion_offset[0] / self.pixel_pitch[0],
                self.dispersion_offset[1] / self.pixel_pitch[1])

    def effective_center(self):
        """The image center the solver measures pixel offsets from."""
        if self.dispersion_mode != PIXEL_LITERAL:
            return self.rotation_center
        du, dv = self.pixel_shift
        return self.rotation_center.offset(du, dv)

    @property
    def world_offset(self):
        """Offset subtracted from solved plan positions."""
        if self.dispersion_mode != WORLD_PLANE:
            return (0., 0.)
        return self.dispersion_offset

    @property
    def rotation_offset(self):
        """(u1 - u0, v1 - v0)"""
        return (self.rotation_center.u - self.nominal_center.u, self.rotation_center.v - self.nominal_center.v)

    def updated(self, provenance=None, **fields):
        merged = OrderedDict(self.provenance)
        merged.update(provenance or {})
        return self._replace(provenance=merged, **fields)

    def without_dispersion(self):
        return self.updated(dispersion_offset=(0., 0.), dispersion_radius=0.,
                            provenance={'dispersion_samples': 0, 'dispersion_reference_mm': [0., 0.]})

    def with_mode(self, mode):
        if mode not in DISPERSION_MODES:
            raise ValueError('Unknown dispersion mode {!r}'.format(mode))
        return self._replace(dispersion_mode=mode)


def calibrate_rotation_center(samples, calib, intr=None, min_coverage=MIN_SWEEP_COVERAGE):
    """Fit a circle through the tracked LED's centroids and adopt its center as (u1, v1).

    Args:
        samples (list[RotationSweepSample]): at least 3, pairwise distinct
        calib (CalibrationState): state to update
        intr (CameraIntrinsics): if given, the fitted center must lie on its sensor
        min_coverage (float): radians of sweep below which InsufficientSweep is issued

    Returns:
        CalibrationState
    """
    if len(samples) < 3:
        raise InsufficientSamples('Rotation calibration needs at least 3 sweep samples, got {}'.format(
            len(samples)))
    points = [tuple(s.centroid) for s in samples]
    if len(set(points)) != len(points):
        raise DegenerateGeometry('Rotation sweep samples must be pairwise distinct')

    circle = fit_circle(points)
    center = PixelPoint(*circle.center)
    if intr is not None and not intr.contains(center):
        raise DegenerateGeometry('Fitted rotation center {} lies outside the {}x{} sensor'.format(
            tuple(center), intr.resolution_u, intr.resolution_v))

    coverage = sweep_coverage(points, circle.center)
    if coverage < min_coverage:
        msg = 'Yaw sweep covers only {:.1f} degrees; the rotation center fit is poorly conditioned'.format(
            math.degrees(coverage))
        logging.warning(msg)
        warnings.warn(msg, InsufficientSweep)

    logging.info('Rotation center (%.4f, %.4f) px from %d samples, residual %.3g px',
                 center.u, center.v, len(samples), circle.residual)
    return calib.updated(rotation_center=center, provenance={
        'rotation_samples': len(samples),
        'rotation_residual_px': circle.residual,
        'sweep_coverage_rad': coverage,
    })


def calibrate_dispersion(samples, reference, calib, mode=None):
    """Adopt the mean of repeated solutions at `reference` as the dispersion-circle center.

    The samples were solved with `calib` active, so the new offset is the old one plus whatever
    deviation remains. Starting from a zero offset this is just mean - reference. An offset only
    composes with one solved in the same mode: to switch modes, collect the samples under
    `calib.without_dispersion()`.

    Args:
        samples (list[DispersionSample]): at least one
        reference ((float, float)): true plan position of the receiver, mm
        calib (CalibrationState)
        mode (str): dispersion mode of the result; defaults to calib's

    Returns:
        CalibrationState

    Raises:
        InsufficientSamples: no samples
        ValueError: `mode` differs from calib's and calib carries a nonzero offset
    """
    if len(samples) < 1:
        raise InsufficientSamples('Dispersion calibration needs at least 1 sample')
    pts = np.array([s.plan_estimate for s in samples], dtype=float)
    mean = pts.mean(axis=0)
    dx = float(mean[0] - reference[0])
    dy = float(mean[1] - reference[1])
    radius = min_enclosing_circle(pts - mean).radius

    mode = calib.dispersion_mode if mode is None else mode
    old_dx, old_dy = calib.dispersion_offset
    if mode != calib.dispersion_mode and (old_dx, old_dy) != (0., 0.):
        raise ValueError('Samples solved with a {} offset cannot calibrate a {} offset'.format(
            calib.dispersion_mode, mode))
    offset = (old_dx + dx, old_dy + dy)
    logging.info('Dispersion offset (%.4f, %.4f) mm, radius %.4f mm from %d samples (%s)',
                 offset[0], offset[1], radius, len(samples), mode)
    return calib.updated(
        dispersion_offset=offset, dispersion_radius=radius, dispersion_mode=mode,
        provenance={
            'dispersion_samples': len(samples),
            'dispersion_reference_mm': [float(reference[0]), float(reference[1])],
        })


################################
# Persistence

_FIELDS = [
    'rotation_center_u', 'rotation_center_v', 'nominal_center_u', 'nominal_center_v',
    'dispersion_dx_mm', 'dispersion_dy_mm', 'dispersion_radius_mm', 'dispersion_mode',
    'pixel_pitch_u_mm', 'pixel_pitch_v_mm',
]


def _plain(value):
    """pyhocon writes str(value), so numpy scalars must become Python numbers first."""
    if isinstance(value, (list, tuple)):
        return [_plain(v) for v in value]
    if isinstance(value, bool) or isinstance(value, str):
        return value
    if isinstance(value, (int, np.integer)):
        return int(value)
    return float(value)


def calibration_to_str(calib):
    d = OrderedDict([
        ('rotation_center_u', calib.rotation_center.u),
        ('rotation_center_v', calib.rotation_center.v),
        ('nominal_center_u', calib.nominal_center.u),
        ('nominal_center_v', calib.nominal_center.v),
        ('dispersion_dx_mm', calib.dispersion_offset[0]),
        ('dispersion_dy_mm', calib.dispersion_offset[1]),
        ('dispersion_radius_mm', calib.dispersion_radius),
        ('dispersion_mode', calib.dispersion_mode),
        ('pixel_pitch_u_mm', calib.pixel_pitch[0]),
        ('pixel_pitch_v_mm', calib.pixel_pitch[1]),
    ])
    for k in d:
        d[k] = _plain(d[k])
    tree = ConfigTree()
    for k, v in d.items():
        tree.put(k, v)
    provenance = ConfigTree()
    for k, v in calib.provenance.items():
        provenance.put(k, _plain(v))
    tree.put('provenance', provenance)
    return HOCONConverter.convert(tree, 'hocon')


def save_calibration(calib, path):
    with open(path, 'w') as f:
        f.write(calibration_to_str(calib))
        f.write('\n')


def _number(tree, key, path):
    try:
        val = tree.get(key)
    except ConfigException:
        raise CalibrationFileError(path, 'missing field {}'.format(key), field=key)
    if isinstance(val, bool) or not isinstance(val, (int, float)):
        raise CalibrationFileError(path, 'field {} must be a number, got {!r}'.format(key, val), field=key)
    return float(val)


def calibration_from_str(text, path='<string>'):
    try:
        tree = ConfigFactory.parse_string(text)
    except ParseBaseException as e:
        raise CalibrationFileError(path, 'syntax error: {}'.format(e.msg), line=e.lineno, col=e.col)
    except ConfigException as e:
        raise CalibrationFileError(path, str(e))

    for key in _FIELDS:
        if key not in tree:
            raise CalibrationFileError(path, 'missing field {}'.format(key), field=key)
    mode = tree.get('dispersion_mode')
    if mode not in DISPERSION_MODES:
        raise CalibrationFileError(path, 'dispersion_mode must be one of {}, got {!r}'.format(
            ', '.join(DISPERSION_MODES), mode), field='dispersion_mode')
    num = {key: _number(tree, key, path) for key in _FIELDS if key != 'dispersion_mode'}

    provenance = default_provenance()
    if 'provenance' not in tree:
        raise CalibrationFileError(path, 'missing field provenance', field='provenance')
    stored = tree.get('provenance')
    if not isinstance(stored, ConfigTree):
        raise CalibrationFileError(path, 'provenance must be a block', field='provenance')
    for key in provenance:
        if key not in stored:
            raise CalibrationFileError(path, 'missing field provenance.{}'.format(key),
                                       field='provenance.{}'.format(key))
    provenance.update((k, list(v) if isinstance(v, list) else v) for k, v in stored.items())

    try:
        return CalibrationState(
            (num['rotation_center_u'], num['rotation_center_v']),
            (num['nominal_center_u'], num['nominal_center_v']),
            (num['dispersion_dx_mm'], num['dispersion_dy_mm']), num['dispersion_radius_mm'], mode,
            (num['pixel_pitch_u_mm'], num['pixel_pitch_v_mm']), provenance)
    except ValueError as e:
        raise CalibrationFileError(path, str(e))


def load_calibration(path):
    """Read a calibration file written by save_calibration.

    Raises:
        CalibrationFileError: with the line and column of a syntax error, or the name of a
            missing field
    """
    with open(path, 'r') as f:
        text = f.read()
    return calibration_from_str(text, path)
