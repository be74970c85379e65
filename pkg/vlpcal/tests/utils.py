import math

import numpy as np

from vlpcal.anchors import AnchorTable
from vlpcal.geometry import CameraIntrinsics, Pose, WorldPoint, project
from vlpcal.simulator import ErrorModel, Room, build_scene
from vlpcal.solver import Detection, Frame

CEILING_Z = 1600.


def intrinsics(pitch=0.003):
    """3 mm lens on an 800 x 600 sensor."""
    return CameraIntrinsics.centered(3., pitch, 800, 600)


def room():
    return Room(2000., 1100., 1600.)


def two_led_table():
    return AnchorTable([('L1', (-100., 0., CEILING_Z)), ('L2', (100., 0., CEILING_Z))])


def three_led_table():
    return AnchorTable([('L1', (-100., -60., CEILING_Z)), ('L2', (100., -60., CEILING_Z)),
                        ('L3', (0., 110., CEILING_Z))])


def four_led_table():
    return AnchorTable([('L1', (-100., -60., CEILING_Z)), ('L2', (100., -60., CEILING_Z)),
                        ('L3', (0., 110., CEILING_Z)), ('L4', (150., 120., CEILING_Z))])


def synthetic_frame(anchors, pose, intr, true_center=None, uids=None):
    """Noiseless detections of every LED (or just `uids`), on the sensor or not."""
    if true_center is None:
        true_center = intr.principal_point
    if uids is None:
        uids = list(anchors)
    return Frame([Detection(uid, project(anchors[uid], pose, intr, true_center)) for uid in uids])


def zero_scene(anchors=None, intr=None):
    anchors = anchors or two_led_table()
    intr = intr or intrinsics()
    return build_scene(anchors, intr, room(), ErrorModel.zero(intr))


def random_pose(rng, x_range=(-175., 175.), y_range=(-125., 125.), z_range=(0., 300.)):
    return Pose((rng.uniform(*x_range), rng.uniform(*y_range), rng.uniform(*z_range)),
                rng.uniform(-math.pi, math.pi))


def plan_distance(p, q):
    return math.hypot(p[0] - q[0], p[1] - q[1])


def position_error(estimate, pose):
    return float(np.linalg.norm(np.array(estimate.position) - np.array(pose.position)))


def rotate_about(point, center, delta):
    c, s = math.cos(delta), math.sin(delta)
    dx, dy = point[0] - center[0], point[1] - center[1]
    return (center[0] + c * dx - s * dy, center[1] + s * dx + c * dy)


def world_point(x, y, z=CEILING_Z):
    return WorldPoint(x, y, z)
