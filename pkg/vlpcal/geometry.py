"""Coordinate systems of an upward-looking camera and the transforms between them.

Conventions:
    * world frame: millimeters, z up, LEDs on the ceiling above the receiver
    * camera frame: P_c = R (P - O_s), so an LED above the camera has Z_c = H > 0
    * image plane: millimeters, x = -f X_c / Z_c, y = -f Y_c / Z_c
    * pixel frame: real-valued (sub-pixel) u, v with x = (u - u_c) di, y = (v - v_c) dj
    * angles in radians, yaw normalized to (-pi, pi]

Only yaw is ever non-zero for positioning; the three-angle rotation is kept for completeness.
"""
import math
import numbers
from collections import namedtuple

import numpy as np
from scipy.spatial.distance import pdist

from vlpcal.errors import DegenerateGeometry, InconsistentAnchors

# Below this vertical distance the projection divides by (nearly) zero.
MIN_HEIGHT_MM = 1e-6
# Image distances shorter than this cannot be inverted into a height.
MIN_IMAGE_DISTANCE_MM = 1e-9


def _check_finite(*values):
    for v in values:
        if not math.isfinite(v):
            raise ValueError('Non-finite coordinate: {}'.format(v))


def normalize_angle(theta):
    """Wrap an angle into (-pi, pi]."""
    if -math.pi < theta <= math.pi:
        return float(theta)
    return angle_difference(theta, 0.)


def angle_difference(a, b):
    """Signed difference a - b wrapped into (-pi, pi]."""
    d = math.fmod(a - b, 2 * math.pi)
    if d > math.pi:
        d -= 2 * math.pi
    elif d <= -math.pi:
        d += 2 * math.pi
    return d


class WorldPoint(namedtuple('WorldPoint', ['x', 'y', 'z'])):
    __slots__ = ()

    @property
    def plan(self):
        return (self.x, self.y)

    def shifted(self, dx=0., dy=0., dz=0.):
        return WorldPoint(self.x + dx, self.y + dy, self.z + dz)


class CameraPoint(namedtuple('CameraPoint', ['x', 'y', 'z'])):
    __slots__ = ()


class ImagePoint(namedtuple('ImagePoint', ['x', 'y'])):
    __slots__ = ()


class PixelPoint(namedtuple('PixelPoint', ['u', 'v'])):
    __slots__ = ()

    def offset(self, du, dv):
        return PixelPoint(self.u + du, self.v + dv)


class Pose(namedtuple('Pose', ['position', 'yaw'])):
    """Receiver pose: lens center O_s and azimuth gamma."""
    __slots__ = ()

    def __new__(cls, position, yaw=0.):
        if not isinstance(position, WorldPoint):
            position = WorldPoint(*position)
        return super(Pose, cls).__new__(cls, position, normalize_angle(yaw))


class CameraIntrinsics(namedtuple('CameraIntrinsics', [
        'focal_length_mm', 'pixel_pitch_u_mm', 'pixel_pitch_v_mm',
        'principal_point', 'resolution_u', 'resolution_v'])):
    """Focal length f, pixel pitch (di, dj), nominal principal point (u0, v0) and sensor size."""
    __slots__ = ()

    def __new__(cls, focal_length_mm, pixel_pitch_u_mm, pixel_pitch_v_mm, principal_point,
                resolution_u, resolution_v):
        if not focal_length_mm > 0:
            raise ValueError('focal length must be positive, got {}'.format(focal_length_mm))
        if not (pixel_pitch_u_mm > 0 and pixel_pitch_v_mm > 0):
            raise ValueError('pixel pitch must be positive, got ({}, {})'.format(
                pixel_pitch_u_mm, pixel_pitch_v_mm))
        if not (resolution_u > 0 and resolution_v > 0):
            raise ValueError('resolution must be positive, got {}x{}'.format(resolution_u, resolution_v))
        principal_point = PixelPoint(*principal_point)
        if not (0 <= principal_point.u <= resolution_u and 0 <= principal_point.v <= resolution_v):
            raise ValueError('principal point {} outside the {}x{} sensor'.format(
                tuple(principal_point), resolution_u, resolution_v))
        return super(CameraIntrinsics, cls).__new__(
            cls, float(focal_length_mm), float(pixel_pitch_u_mm), float(pixel_pitch_v_mm),
            principal_point, int(resolution_u), int(resolution_v))

    @classmethod
    def centered(cls, focal_length_mm, pixel_pitch_mm, resolution_u, resolution_v, pixel_pitch_v_mm=None):
        """Intrinsics whose nominal principal point is the middle of the sensor."""
        if pixel_pitch_v_mm is None:
            pixel_pitch_v_mm = pixel_pitch_mm
        center = PixelPoint(resolution_u / 2., resolution_v / 2.)
        return cls(focal_length_mm, pixel_pitch_mm, pixel_pitch_v_mm, center, resolution_u, resolution_v)

    @property
    def pitch(self):
        return (self.pixel_pitch_u_mm, self.pixel_pitch_v_mm)

    def contains(self, p):
        """Whether a pixel centroid lies on the sensor."""
        return 0 <= p.u <= self.resolution_u and 0 <= p.v <= self.resolution_v


class RotationMatrix(namedtuple('RotationMatrix', ['matrix', 'alpha', 'beta', 'gamma'])):
    __slots__ = ()

    def apply(self, vec):
        return self.matrix.dot(vec)


def pixel_to_image(p, intr, center):
    """Pixel centroid to image-plane millimeters about `center`.

    `center` is the nominal (u0, v0) before rotation calibration and the fitted
    rotation center (u1, v1) after it; the formula is the same.
    """
    _check_finite(p.u, p.v, center.u, center.v)
    return ImagePoint((p.u - center.u) * intr.pixel_pitch_u_mm, (p.v - center.v) * intr.pixel_pitch_v_mm)


def image_to_pixel(p, intr, center):
    _check_finite(p.x, p.y, center.u, center.v)
    return PixelPoint(p.x / intr.pixel_pitch_u_mm + center.u, p.y / intr.pixel_pitch_v_mm + center.v)


def rotation_matrix(alpha, beta, gamma):
    """R = Rx(alpha) Ry(beta) Rz(gamma), world to camera.

    With alpha = beta = 0 this is [[a, -b, 0], [b, a, 0], [0, 0, 1]] with a = cos(gamma), b = sin(gamma).
    """
    _check_finite(alpha, beta, gamma)
    ca, sa = math.cos(alpha), math.sin(alpha)
    cb, sb = math.cos(beta), math.sin(beta)
    cg, sg = math.cos(gamma), math.sin(gamma)
    rx = np.array([[1., 0., 0.],
                   [0., ca, sa],
                   [0., -sa, ca]])
    ry = np.array([[cb, 0., -sb],
                   [0., 1., 0.],
                   [sb, 0., cb]])
    rz = np.array([[cg, -sg, 0.],
                   [sg, cg, 0.],
                   [0., 0., 1.]])
    return RotationMatrix(rx.dot(ry).dot(rz), alpha, beta, gamma)


def plan_rotation(gamma):
    """The 2x2 block [[a, b], [-b, a]] that maps world plan offsets onto the image plane."""
    a, b = math.cos(gamma), math.sin(gamma)
    return np.array([[a, b], [-b, a]])


def world_to_camera(P, pose):
    """P_c = R(gamma) (P - O_s)."""
    R = rotation_matrix(0., 0., pose.yaw)
    d = np.array(P, dtype=float) - np.array(pose.position, dtype=float)
    return CameraPoint(*R.apply(d))


def camera_to_image(Pc, intr, min_height=MIN_HEIGHT_MM):
    """Similar triangles through the lens: X_c / x = Y_c / y = Z_c / -f."""
    if abs(Pc.z) < min_height:
        raise DegenerateGeometry('Camera-frame depth {} mm is too small to project'.format(Pc.z))
    f = intr.focal_length_mm
    return ImagePoint(-f * Pc.x / Pc.z, -f * Pc.y / Pc.z)


def project_to_image(P, pose, intr, min_height=MIN_HEIGHT_MM):
    """Image-plane position of an LED: (x, y) = (-f/H) [[a, b], [-b, a]] (X - X_s, Y - Y_s)."""
    H = P.z - pose.position.z
    if not H > min_height:
        raise DegenerateGeometry('LED is not above the receiver (H = {} mm)'.format(H))
    a, b = math.cos(pose.yaw), math.sin(pose.yaw)
    dx = P.x - pose.position.x
    dy = P.y - pose.position.y
    s = -intr.focal_length_mm / H
    return ImagePoint(s * (a * dx + b * dy), s * (-b * dx + a * dy))


def project(P, pose, intr, true_center, min_height=MIN_HEIGHT_MM):
    """Ground-truth pixel centroid of an LED.

    Args:
        P (WorldPoint): LED position
        pose (Pose): receiver pose
        intr (CameraIntrinsics)
        true_center (PixelPoint): where the optical axis actually meets the sensor; differs from
            intr.principal_point when the lens is mounted off-center
    """
    return image_to_pixel(project_to_image(P, pose, intr, min_height), intr, true_center)


def estimate_height(world_pair, image_pair, intr, min_image_distance=MIN_IMAGE_DISTANCE_MM):
    """Vertical LED-to-lens distance from one LED pair: H = f D12 / d12."""
    (P1, P2), (p1, p2) = world_pair, image_pair
    D12 = math.hypot(P1.x - P2.x, P1.y - P2.y)
    d12 = math.hypot(p1.x - p2.x, p1.y - p2.y)
    if d12 < min_image_distance:
        raise DegenerateGeometry('LED images coincide (d12 = {} mm)'.format(d12))
    if D12 == 0:
        raise DegenerateGeometry('LEDs coincide in plan')
    return intr.focal_length_mm * D12 / d12


def pairwise_heights(world_xy, image_xy, intr, min_image_distance=MIN_IMAGE_DISTANCE_MM):
    """H for every LED pair at once.

    Args:
        world_xy (np.ndarray): (N, 2) LED plan positions
        image_xy (np.ndarray): (N, 2) image-plane positions

    Returns:
        np.ndarray: N (N - 1) / 2 heights, in pdist order
    """
    D = pdist(world_xy)
    d = pdist(image_xy)
    if np.any(d < min_image_distance):
        raise DegenerateGeometry('Two LED images coincide (min d12 = {} mm)'.format(d.min()))
    if np.any(D == 0):
        raise DegenerateGeometry('Two LEDs coincide in plan')
    return intr.focal_length_mm * D / d


def common_ceiling_z(zs, tolerance):
    """Mean height of the visible LEDs, which must agree to within `tolerance` mm."""
    zs = [float(z) for z in zs]
    if max(zs) - min(zs) > tolerance:
        raise InconsistentAnchors('LED heights span {:.6g} mm, more than the {:.6g} mm tolerance'.format(
            max(zs) - min(zs), tolerance))
    return sum(zs) / len(zs)


def receiver_z(led_z, H, tolerance=1.0):
    """Z_s = Z_i - H.

    Args:
        led_z (float or list[float]): ceiling height, or heights of all visible LEDs
        H (float): vertical distance between LED plane and lens
        tolerance (float): allowed spread of LED heights
    """
    if not H > 0:
        raise DegenerateGeometry('H must be positive, got {}'.format(H))
    if not isinstance(led_z, numbers.Real):
        led_z = common_ceiling_z(led_z, tolerance)
    return led_z - H


