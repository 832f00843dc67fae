import math
import numpy as np
import shapely
from shapely.geometry import Polygon

from .scenario import MapSpec, Pose


EGO_LENGTH = 4.6
EGO_WIDTH = 1.9


class Polyline:
    """Arc-length parameterized polyline (numpy, metres)."""

    def __init__(self, points):
        self.points = np.asarray(points, dtype=np.float64)
        deltas = np.diff(self.points, axis=0)
        self.segment_lengths = np.hypot(deltas[:, 0], deltas[:, 1])
        self.cumulative = np.concatenate([[0.0], np.cumsum(self.segment_lengths)])
        self.headings = np.arctan2(deltas[:, 1], deltas[:, 0])

    @property
    def length(self) -> float:
        return float(self.cumulative[-1])

    def _segment(self, s: float) -> int:
        idx = int(np.searchsorted(self.cumulative, s, side="right")) - 1
        return min(max(idx, 0), len(self.segment_lengths) - 1)

    def point_at(self, s: float) -> np.ndarray:
        s = min(max(s, 0.0), self.length)
        i = self._segment(s)
        ratio = (s - self.cumulative[i]) / self.segment_lengths[i] if self.segment_lengths[i] > 0 else 0.0
        return self.points[i] + ratio * (self.points[i + 1] - self.points[i])

    def heading_at(self, s: float) -> float:
        return float(self.headings[self._segment(min(max(s, 0.0), self.length))])

    # 最近点の弧長と符号付き横偏差 (右が正)
    def project(self, point) -> tuple[float, float]:
        p = np.asarray(point, dtype=np.float64)
        a = self.points[:-1]
        d = self.points[1:] - a
        sq = np.maximum(self.segment_lengths ** 2, 1e-12)
        u = np.clip(np.einsum("ij,ij->i", p - a, d) / sq, 0.0, 1.0)
        closest = a + u[:, None] * d
        dist = np.hypot(*(p - closest).T)
        i = int(np.argmin(dist))
        s = float(self.cumulative[i] + u[i] * self.segment_lengths[i])
        cross = d[i, 0] * (p[1] - a[i, 1]) - d[i, 1] * (p[0] - a[i, 0])
        return s, float(math.copysign(dist[i], cross) if dist[i] > 0 else 0.0)

    # 内部頂点ごとの符号付き曲率 (右旋回が正)
    def curvature(self) -> np.ndarray:
        turn = np.diff(self.headings)
        turn = (turn + np.pi) % (2 * np.pi) - np.pi
        spacing = 0.5 * (self.segment_lengths[:-1] + self.segment_lengths[1:])
        return turn / np.maximum(spacing, 1e-9)


def wrap_angle(angle):
    return (np.asarray(angle) + np.pi) % (2 * np.pi) - np.pi


def rectangle_corners(x: float, y: float, heading: float, length: float, width: float) -> np.ndarray:
    c, s = math.cos(heading), math.sin(heading)
    half = np.array([[0.5, 0.5], [0.5, -0.5], [-0.5, -0.5], [-0.5, 0.5]]) * [length, width]
    return np.stack([x + half[:, 0] * c - half[:, 1] * s, y + half[:, 0] * s + half[:, 1] * c], axis=1)


def rectangle_polygon(x: float, y: float, heading: float, length: float, width: float) -> Polygon:
    return Polygon(rectangle_corners(x, y, heading, length, width))


def points_in_rectangle(px: np.ndarray, py: np.ndarray, x: float, y: float, heading: float, length: float, width: float) -> np.ndarray:
    c, s = math.cos(heading), math.sin(heading)
    dx, dy = px - x, py - y
    lon = dx * c + dy * s
    lat = -dx * s + dy * c
    return (np.abs(lon) <= 0.5 * length) & (np.abs(lat) <= 0.5 * width)


# 世界座標 → frame 座標 (x 前方 / y 右)
def to_local(frame: Pose, points: np.ndarray) -> np.ndarray:
    c, s = math.cos(frame.heading), math.sin(frame.heading)
    d = np.asarray(points, dtype=np.float64) - [frame.x, frame.y]
    return np.stack([d[..., 0] * c + d[..., 1] * s, -d[..., 0] * s + d[..., 1] * c], axis=-1)


def to_world(frame: Pose, points: np.ndarray) -> np.ndarray:
    c, s = math.cos(frame.heading), math.sin(frame.heading)
    p = np.asarray(points, dtype=np.float64)
    return np.stack([frame.x + p[..., 0] * c - p[..., 1] * s, frame.y + p[..., 0] * s + p[..., 1] * c], axis=-1)


class WorldMap:
    """Geometry built once from a ``MapSpec``: drivable area, route and boundary segments."""

    def __init__(self, spec: MapSpec):
        self.spec = spec
        self.drivable = shapely.unary_union([Polygon(ring) for ring in spec.drivable])
        shapely.prepare(self.drivable)
        self.route = Polyline(spec.route)
        self.boundary_segments = _boundary_segments(self.drivable)

    def contains(self, x: np.ndarray, y: np.ndarray) -> np.ndarray:
        return shapely.contains_xy(self.drivable, x, y)

    def covers_footprint(self, x: float, y: float, heading: float, length: float = EGO_LENGTH, width: float = EGO_WIDTH) -> bool:
        corners = rectangle_corners(x, y, heading, length, width)
        return bool(np.all(shapely.intersects_xy(self.drivable, corners[:, 0], corners[:, 1])))


def _boundary_segments(geometry) -> np.ndarray:
    segments = []
    for ring in shapely.get_rings(geometry):
        coords = np.asarray(ring.coords)
        segments.append(np.stack([coords[:-1], coords[1:]], axis=1))
    return np.concatenate(segments) if segments else np.zeros((0, 2, 2))


def ray_segment_distances(origin: np.ndarray, directions: np.ndarray, segments: np.ndarray) -> np.ndarray:
    """Distance along each unit ray to its nearest segment hit (inf when none)."""
    if len(segments) == 0:
        return np.full(len(directions), np.inf)
    a = segments[:, 0][None, :, :]
    e = (segments[:, 1] - segments[:, 0])[None, :, :]
    d = directions[:, None, :]
    ao = a - origin
    denom = d[..., 0] * e[..., 1] - d[..., 1] * e[..., 0]
    parallel = np.abs(denom) < 1e-12
    safe = np.where(parallel, 1.0, denom)
    t = (ao[..., 0] * e[..., 1] - ao[..., 1] * e[..., 0]) / safe
    u = (ao[..., 0] * d[..., 1] - ao[..., 1] * d[..., 0]) / safe
    hit = ~parallel & (t >= 0.0) & (u >= 0.0) & (u <= 1.0)
    return np.min(np.where(hit, t, np.inf), axis=1)
