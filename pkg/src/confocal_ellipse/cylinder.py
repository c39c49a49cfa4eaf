"""Cylinder parameters from planar cross-sections of a point cloud.

A plane cuts a cylinder of radius R in an ellipse with semi-minor R and
semi-major R / cos(delta), where delta is the angle between the plane
normal and the cylinder axis. The ellipse center is where the axis pierces
the plane and the major axis is the in-plane projection of the axis. A
single section cannot tell the tilt +delta from -delta, so recovery takes
an ``axis_hint``.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .conic import Ellipse, canonicalize
from .errors import EllipseError, EmptyInput, InsufficientPoints
from .fitters import fit_confocal_lm, fit_halir
from .simulate import read_points

__all__ = [
    "PointCloud",
    "CuttingPlane",
    "CylinderParams",
    "SectionSample",
    "CylinderBenchmarkRow",
    "load_point_cloud",
    "rotation_to_z",
    "make_section",
    "sample_section",
    "section_ellipse",
    "recover_cylinder",
    "axis_point_in_plane",
    "cylinder_errors",
    "run_cylinder_benchmark",
    "synthetic_cylinder_cloud",
    "write_benchmark_csv",
    "load_reference",
    "FITTERS",
]

MIN_SECTION_POINTS = 6


class PointCloud(NamedTuple):
    points: np.ndarray  # (N, 3), metres

    @property
    def bounds(self):
        return self.points.min(axis=0), self.points.max(axis=0)


def _unit(v, what="vector"):
    v = np.asarray(v, dtype=float).reshape(3)
    n = np.linalg.norm(v)
    if not (np.isfinite(n) and n > 0):
        raise ValueError(f"{what} must be finite and nonzero")
    return v / n


@dataclass(frozen=True)
class CuttingPlane:
    normal: np.ndarray
    anchor: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "normal", _unit(self.normal, "plane normal"))
        object.__setattr__(self, "anchor", np.asarray(self.anchor, dtype=float).reshape(3))

    def signed_distance(self, points):
        return (np.asarray(points, dtype=float) - self.anchor) @ self.normal


@dataclass(frozen=True)
class CylinderParams:
    """Infinite cylinder; ``axis_point`` is the foot of the perpendicular from the origin."""

    radius: float
    axis: np.ndarray
    axis_point: np.ndarray

    def __post_init__(self):
        if not (math.isfinite(self.radius) and self.radius > 0):
            raise ValueError("radius must be positive")
        a = _unit(self.axis, "axis")
        p = np.asarray(self.axis_point, dtype=float).reshape(3)
        object.__setattr__(self, "axis", a)
        object.__setattr__(self, "axis_point", p - (p @ a) * a)

    def distance_to_axis(self, points):
        d = np.asarray(points, dtype=float) - self.axis_point
        return np.linalg.norm(d - np.outer(d @ self.axis, self.axis), axis=-1)

    def as_dict(self):
        return {"radius": self.radius, "axis": self.axis.tolist(),
                "axis_point": self.axis_point.tolist()}


class SectionSample(NamedTuple):
    points: np.ndarray  # (M, 2) in the plane frame
    rotation: np.ndarray  # rows u, v, n; maps world to plane frame
    plane: CuttingPlane

    @property
    def offset(self) -> float:
        """Constant third coordinate of the plane in the rotated frame."""
        return float(self.plane.normal @ self.plane.anchor)


def load_point_cloud(path) -> PointCloud:
    """Read ``x y z`` rows (comma or whitespace separated, ``#`` comments).

    Raises
    ------
    OSError
        File missing or unreadable.
    ParseError
        Malformed row, with its line number.
    EmptyInput
        No points in the file.
    """
    pts = read_points(path, ncols=3)
    if len(pts) == 0:
        raise EmptyInput(f"{path}: no points")
    return PointCloud(pts)


def rotation_to_z(normal) -> np.ndarray:
    """Proper rotation whose third row is ``normal``, so it maps ``normal`` to ``(0, 0, 1)``."""
    n = _unit(normal, "normal")
    helper = np.zeros(3)
    helper[int(np.argmin(np.abs(n)))] = 1.0
    u = np.cross(helper, n)
    u /= np.linalg.norm(u)
    v = np.cross(n, u)
    return np.vstack([u, v, n])


def make_section(points3d, plane: CuttingPlane) -> SectionSample:
    """Rotate 3D points into the plane frame and drop the out-of-plane coordinate."""
    rot = rotation_to_z(plane.normal)
    local = np.asarray(points3d, dtype=float).reshape(-1, 3) @ rot.T
    return SectionSample(local[:, :2], rot, plane)


def sample_section(cloud: PointCloud, seed, band=0.001, max_points=50) -> SectionSample:
    """Random plane through a random cloud point, with its nearest in-band points.

    ``seed`` is anything :func:`numpy.random.default_rng` accepts. The normal
    is a normalized Gaussian draw, i.e. uniform on the sphere.

    Raises
    ------
    InsufficientPoints
        Fewer than six points within ``band`` of the plane.
    """
    pts = np.asarray(cloud.points, dtype=float)
    if len(pts) == 0:
        raise EmptyInput("point cloud is empty")
    rng = np.random.default_rng(seed)
    anchor = pts[rng.integers(len(pts))]
    normal = rng.normal(size=3)
    while np.linalg.norm(normal) == 0.0:
        normal = rng.normal(size=3)
    plane = CuttingPlane(normal, anchor)
    dist = np.abs(plane.signed_distance(pts))
    inside = np.flatnonzero(dist <= band)
    if inside.size < MIN_SECTION_POINTS:
        raise InsufficientPoints(
            f"insufficient points: {inside.size} within {band} of the plane, need "
            f"{MIN_SECTION_POINTS}"
        )
    keep = inside[np.argsort(dist[inside], kind="stable")[:max_points]]
    return make_section(pts[keep], plane)


def section_ellipse(cyl: CylinderParams, plane: CuttingPlane) -> Ellipse:
    """Exact intersection ellipse of ``cyl`` and ``plane`` in the plane frame."""
    rot = rotation_to_z(plane.normal)
    cos_d = abs(float(cyl.axis @ plane.normal))
    if cos_d < 1e-12:
        raise ValueError("plane is parallel to the cylinder axis")
    center = rot @ axis_point_in_plane(cyl, plane)
    along = rot @ (cyl.axis - (cyl.axis @ plane.normal) * plane.normal)
    theta = math.atan2(along[1], along[0]) if np.linalg.norm(along[:2]) > 0 else 0.0
    # a = R / cos(delta), with sin(delta) from the cross product so that a
    # nearly perpendicular cut does not gain an ulp-sized tilt
    sin_d = float(np.linalg.norm(np.cross(cyl.axis, plane.normal)))
    a = cyl.radius * math.hypot(1.0, sin_d / cos_d)
    return canonicalize((center[0], center[1], a, cyl.radius, theta))


def recover_cylinder(ellipse, section: SectionSample, axis_hint) -> CylinderParams:
    """Cylinder from a section ellipse.

    ``R = b`` and ``delta = arccos(b / a)``. The axis is the plane normal
    tilted by ``delta`` towards the ellipse major axis; of the two tilts the
    one closer to ``axis_hint`` (in absolute cosine) is kept and oriented
    so that ``axis . axis_hint >= 0``. The ellipse center, lifted back to
    3D at the plane's offset, lies on the axis.
    """
    e = canonicalize(ellipse)
    hint = _unit(axis_hint, "axis hint")
    delta = math.acos(min(e.b / e.a, 1.0))
    major = np.array([math.cos(e.theta), math.sin(e.theta), 0.0])
    rot_t = section.rotation.T
    best = None
    for sign in (1.0, -1.0):
        local = np.array([0.0, 0.0, math.cos(delta)]) + sign * math.sin(delta) * major
        axis = rot_t @ local
        score = abs(float(axis @ hint))
        if best is None or score > best[0]:
            best = (score, axis)
    axis = best[1]
    if axis @ hint < 0:
        axis = -axis
    point = rot_t @ np.array([e.xc, e.yc, section.offset])
    return CylinderParams(float(e.b), axis, point)


def axis_point_in_plane(cyl: CylinderParams, plane: CuttingPlane) -> np.ndarray:
    """Point where the axis of ``cyl`` pierces ``plane``."""
    denom = float(cyl.axis @ plane.normal)
    if abs(denom) < 1e-15:
        raise ValueError("plane is parallel to the cylinder axis")
    t = float((plane.anchor - cyl.axis_point) @ plane.normal) / denom
    return cyl.axis_point + t * cyl.axis


def cylinder_errors(est: CylinderParams, ref: CylinderParams, plane: CuttingPlane | None = None):
    """``(center_mm, radius_mm, axis_deg)`` between an estimate and the reference.

    The center error is the distance from a point of the estimated axis to
    the reference axis line. With ``plane`` that point is where the
    estimated axis crosses the plane, i.e. the lifted ellipse center;
    otherwise it is the canonical foot point. Measuring at the section keeps
    axis-direction errors from being scaled by the section's distance to
    the origin.
    """
    p = est.axis_point if plane is None else axis_point_in_plane(est, plane)
    center = float(ref.distance_to_axis(p[None])[0]) * 1e3
    radius = abs(est.radius - ref.radius) * 1e3
    # atan2 form: arccos of the dot product cannot resolve angles below ~1e-8
    sin = float(np.linalg.norm(np.cross(est.axis, ref.axis)))
    return center, radius, math.degrees(math.atan2(sin, abs(float(est.axis @ ref.axis))))


def _fit_halir(points):
    return fit_halir(points)


def _fit_confocal(points):
    return fit_confocal_lm(points).ellipse


FITTERS = {"halir": _fit_halir, "confocal": _fit_confocal}


class CylinderBenchmarkRow(NamedTuple):
    fitter: str
    sections_used: int
    sections_skipped: int
    mean_center_mm: float
    mean_radius_mm: float
    mean_axis_deg: float


def run_cylinder_benchmark(cloud, reference: CylinderParams, n_planes, seed,
                           fitters=("halir", "confocal"), band=0.001, max_points=50):
    """Mean recovery errors of each fitter over ``n_planes`` random sections.

    Plane ``i`` is drawn from ``SeedSequence(seed, spawn_key=(i,))``, so
    every fitter sees the same sections. Sections with too few points, and
    fits that raise, are counted as skipped for the affected fitter.
    """
    if n_planes < 1:
        raise ValueError("n_planes must be at least 1")
    unknown = [f for f in fitters if f not in FITTERS]
    if unknown:
        raise ValueError(f"unknown fitter(s): {', '.join(unknown)}")
    errs = {f: [] for f in fitters}
    skipped = {f: 0 for f in fitters}
    for i in range(n_planes):
        ss = np.random.SeedSequence(int(seed), spawn_key=(i,))
        try:
            section = sample_section(cloud, ss, band, max_points)
        except EllipseError:
            for f in fitters:
                skipped[f] += 1
            continue
        for f in fitters:
            try:
                est = recover_cylinder(FITTERS[f](section.points), section, reference.axis)
            except (EllipseError, ValueError):
                skipped[f] += 1
                continue
            errs[f].append(cylinder_errors(est, reference, section.plane))
    rows = []
    for f in fitters:
        e = np.array(errs[f]).reshape(-1, 3)
        means = e.mean(axis=0) if len(e) else np.full(3, math.nan)
        rows.append(CylinderBenchmarkRow(f, len(e), skipped[f], *map(float, means)))
    return rows


def write_benchmark_csv(path_or_file, rows):
    def _write(fh):
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(CylinderBenchmarkRow._fields)
        for r in rows:
            w.writerow([r.fitter, r.sections_used, r.sections_skipped,
                        *(repr(v) for v in r[3:])])

    if hasattr(path_or_file, "write"):
        _write(path_or_file)
    else:
        with open(path_or_file, "w", newline="") as fh:
            _write(fh)


def load_reference(path) -> CylinderParams:
    """Reference cylinder from JSON ``{"radius", "axis", "axis_point"}``."""
    with open(path) as fh:
        doc = json.load(fh)
    try:
        return CylinderParams(float(doc["radius"]), doc["axis"], doc["axis_point"])
    except (KeyError, TypeError) as exc:
        raise ValueError(f"{path}: reference needs radius, axis and axis_point") from exc


def synthetic_cylinder_cloud(cyl: CylinderParams, length, n_points, seed, sigma=0.0,
                             span=2 * math.pi, center=None):
    """Points on a finite piece of ``cyl`` with Gaussian radial noise.

    Parameters
    ----------
    length : float
        Extent along the axis, centred on ``center`` (default: the canonical
        axis point).
    span : float
        Angular extent of the surface; ``pi`` gives a half cylinder.
    sigma : float
        Standard deviation of the radial offset from the surface.
    """
    rng = np.random.default_rng(seed)
    a = cyl.axis
    u = rotation_to_z(a)[0]
    v = np.cross(a, u)
    c = cyl.axis_point if center is None else np.asarray(center, dtype=float)
    c = cyl.axis_point + ((c - cyl.axis_point) @ a) * a
    t = rng.uniform(-0.5 * length, 0.5 * length, n_points)
    phi = rng.uniform(0.0, span, n_points)
    r = cyl.radius + (rng.normal(0.0, sigma, n_points) if sigma > 0 else 0.0)
    return PointCloud(c + np.outer(t, a) + np.outer(r * np.cos(phi), u)
                      + np.outer(r * np.sin(phi), v))
