"""
Route geometry: projection of global coordinates onto route arc length
"""
import logging
from typing import Tuple

import numpy as np

from ..models.errors import OffRouteError
from ..models.trajectory import Route

LOG = logging.getLogger(__name__)

DEFAULT_LATERAL_TOLERANCE = 10.0


def _closest_points(route: Route, xs: np.ndarray, ys: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """
    Arc length and distance of the closest route point for every query point.

    Every segment is clamped to its end points, so a point beyond either end
    of the route projects onto that end and reports its full distance to it.
    """
    start = route.points[:-1]
    seg = np.diff(route.points, axis=0)
    seg_len_sq = route.segment_lengths ** 2

    # points x segments
    rel_x = xs[:, None] - start[None, :, 0]
    rel_y = ys[:, None] - start[None, :, 1]
    t = np.clip((rel_x * seg[None, :, 0] + rel_y * seg[None, :, 1]) / seg_len_sq[None, :], 0.0, 1.0)
    dx = rel_x - t * seg[None, :, 0]
    dy = rel_y - t * seg[None, :, 1]
    dist = np.hypot(dx, dy)

    best = np.argmin(dist, axis=1)
    rows = np.arange(xs.size)
    s = route.cumulative[best] + t[rows, best] * route.segment_lengths[best]
    return s, dist[rows, best]


def project_points(
    xs: np.ndarray,
    ys: np.ndarray,
    route: Route,
    tolerance: float = DEFAULT_LATERAL_TOLERANCE,
) -> np.ndarray:
    """
    Project many (x, y) points to route arc length

    Raises:
        OffRouteError: for the first point farther than tolerance from the route
    """
    xs = np.atleast_1d(np.asarray(xs, dtype=np.float64))
    ys = np.atleast_1d(np.asarray(ys, dtype=np.float64))
    if xs.size == 0:
        return np.zeros(0)
    s, dist = _closest_points(route, xs, ys)
    off = np.flatnonzero(dist > tolerance)
    if off.size:
        i = int(off[0])
        raise OffRouteError(float(xs[i]), float(ys[i]), float(dist[i]), tolerance)
    return s


def project_to_route(x: float, y: float, route: Route, tolerance: float = DEFAULT_LATERAL_TOLERANCE) -> float:
    """Arc length of the route point closest to (x, y)"""
    return float(project_points(np.array([x]), np.array([y]), route, tolerance)[0])


def point_at(route: Route, s: np.ndarray, lateral: np.ndarray = 0.0) -> Tuple[np.ndarray, np.ndarray]:
    """
    Global coordinates of arc length s, offset sideways by lateral meters
    (positive to the left of the direction of travel)
    """
    s = np.atleast_1d(np.asarray(s, dtype=np.float64))
    lateral = np.broadcast_to(np.asarray(lateral, dtype=np.float64), s.shape)
    idx = np.clip(np.searchsorted(route.cumulative, s, side="right") - 1, 0, route.segment_lengths.size - 1)
    seg = np.diff(route.points, axis=0)[idx]
    unit = seg / route.segment_lengths[idx][:, None]
    along = s - route.cumulative[idx]
    base = route.points[idx] + unit * along[:, None]
    normal = np.stack([-unit[:, 1], unit[:, 0]], axis=1)
    xy = base + normal * lateral[:, None]
    return xy[:, 0], xy[:, 1]
