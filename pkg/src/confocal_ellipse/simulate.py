"""Pixel-accurate elliptical edge points and fit-quality metrics.

Edge points are simulated the way an edge detector would see them: a pixel
belongs to the ellipse when its orthogonal projection onto the curve lies
within half a pixel in both x and y. The projected points are then
perturbed with Gaussian noise and snapped back onto the pixel grid.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .conic import Ellipse, canonicalize, from_ellipse_frame
from .distance import oracle_distance, project_point_oracle
from .errors import EmptyInput, EmptyResult, ParseError

__all__ = [
    "SimConfig",
    "PixelRect",
    "circumscribed_rect",
    "edge_contacts",
    "noisy_pixels",
    "rasterize_ellipse",
    "contact_angle",
    "rmse",
    "p_error",
    "format_points",
    "write_points",
    "read_points",
]

TWO_PI = 2.0 * math.pi
# slack on the arc-end comparison, in radians
ARC_TOL = 1e-12
# arc-length spacing of the samples that seed candidate pixels; must stay below 2
_SEED_SPACING = 0.5


@dataclass(frozen=True)
class SimConfig:
    rho: Ellipse
    alpha_s: float = 0.0
    alpha_f: float = TWO_PI
    sigma: float = 0.0
    seed: int = 0

    def __post_init__(self):
        object.__setattr__(self, "rho", canonicalize(self.rho))
        if not self.alpha_s < self.alpha_f <= self.alpha_s + TWO_PI + ARC_TOL:
            raise ValueError("need alpha_s < alpha_f <= alpha_s + 2*pi")
        if not (math.isfinite(self.sigma) and self.sigma >= 0):
            raise ValueError("sigma must be finite and non-negative")


class PixelRect(NamedTuple):
    x_min: int
    x_max: int
    y_min: int
    y_max: int


def circumscribed_rect(rho) -> PixelRect:
    """Integer axis-aligned bounding box of the ellipse (floor/ceil of the extents)."""
    xc, yc, a, b, theta = rho
    c, s = math.cos(theta), math.sin(theta)
    hx = math.sqrt(a * a * c * c + b * b * s * s)
    hy = math.sqrt(b * b * c * c + a * a * s * s)
    return PixelRect(
        math.floor(xc - hx), math.ceil(xc + hx), math.floor(yc - hy), math.ceil(yc + hy)
    )


def contact_angle(rho, contacts_frame):
    """Parametric angle in ``[0, 2*pi)`` of ellipse-frame contact points."""
    c = np.asarray(contacts_frame, dtype=float)
    ang = np.arctan2(c[..., 1] / rho[3], c[..., 0] / rho[2])
    return np.mod(ang, TWO_PI)


def _in_arc(angle, alpha_s, alpha_f):
    span = alpha_f - alpha_s
    if span >= TWO_PI - ARC_TOL:
        return np.ones(np.shape(angle), dtype=bool)
    rel = np.mod(angle - alpha_s, TWO_PI)
    # angles just below alpha_s wrap to ~2*pi
    return (rel <= span + ARC_TOL) | (rel >= TWO_PI - ARC_TOL)


def _candidate_pixels(rho, alpha_s, alpha_f, rect):
    span = alpha_f - alpha_s
    n = max(int(math.ceil(span * rho.a / _SEED_SPACING)), 8) + 1
    seeds = np.floor(
        from_ellipse_frame(
            rho,
            rho.a * np.cos(np.linspace(alpha_s, alpha_f, n)),
            rho.b * np.sin(np.linspace(alpha_s, alpha_f, n)),
        )
        + 0.5
    ).astype(np.int64)
    offs = np.array([(i, j) for i in (-1, 0, 1) for j in (-1, 0, 1)], dtype=np.int64)
    cand = (seeds[:, None, :] + offs[None, :, :]).reshape(-1, 2)
    keep = (
        (cand[:, 0] >= rect.x_min) & (cand[:, 0] <= rect.x_max)
        & (cand[:, 1] >= rect.y_min) & (cand[:, 1] <= rect.y_max)
    )
    return np.unique(cand[keep], axis=0)


def edge_contacts(rho, alpha_s=0.0, alpha_f=TWO_PI, full_grid=False):
    """Pixels on the ellipse edge and their orthogonal contact points.

    A pixel is kept when its contact point is within 0.5 px of it in x and
    in y and the contact's parametric angle lies in ``[alpha_s, alpha_f]``.

    With ``full_grid`` every pixel of :func:`circumscribed_rect` is tested.
    Otherwise only the 3x3 neighbourhoods of points sampled along the arc
    are tested. That yields the same set, because any contact is within
    half a sample spacing (< 1 px) of a sample.

    Returns
    -------
    pixels : (M, 2) int array, sorted lexicographically
    contacts : (M, 2) float array, image coordinates
    """
    rho = canonicalize(rho)
    rect = circumscribed_rect(rho)
    if full_grid:
        gx, gy = np.meshgrid(
            np.arange(rect.x_min, rect.x_max + 1), np.arange(rect.y_min, rect.y_max + 1),
            indexing="ij",
        )
        cand = np.column_stack([gx.ravel(), gy.ravel()]).astype(np.int64)
    else:
        cand = _candidate_pixels(rho, alpha_s, alpha_f, rect)
    proj = project_point_oracle(rho, cand.astype(float))
    contacts = from_ellipse_frame(rho, proj.contact[:, 0], proj.contact[:, 1])
    near = np.all(np.abs(contacts - cand) <= 0.5, axis=1)
    keep = near & _in_arc(contact_angle(rho, proj.contact), alpha_s, alpha_f)
    return cand[keep], contacts[keep]


def noisy_pixels(pixels, contacts, sigma, rng):
    """Add i.i.d. Gaussian noise to contact coordinates and snap to unique pixels.

    Without noise the source pixels are returned as they are, so ties at
    exactly half a pixel cannot move a point off the edge set.
    """
    if sigma == 0:
        pts = np.asarray(pixels, dtype=np.int64)
    else:
        noisy = contacts + rng.normal(0.0, sigma, size=contacts.shape)
        pts = np.floor(noisy + 0.5).astype(np.int64)
    return np.unique(pts, axis=0).astype(float)


def rasterize_ellipse(config: SimConfig) -> np.ndarray:
    """Simulated edge pixels for ``config``; deterministic given ``config.seed``.

    Raises
    ------
    EmptyResult
        When no pixel passes the half-pixel and arc tests.
    """
    pixels, contacts = edge_contacts(config.rho, config.alpha_s, config.alpha_f)
    if len(pixels) == 0:
        raise EmptyResult("no pixel lies within half a pixel of the ellipse arc")
    rng = np.random.default_rng(config.seed)
    return noisy_pixels(pixels, contacts, config.sigma, rng)


def rmse(rho, points) -> float:
    """Root mean square of the orthogonal distances from points to the ellipse."""
    p = np.asarray(points, dtype=float).reshape(-1, 2)
    if len(p) == 0:
        raise EmptyInput("rmse needs at least one point")
    d = oracle_distance(rho, p)
    return float(np.sqrt(np.mean(d * d)))


def p_error(est, truth) -> float:
    """Parameter error in percent: ``100 |est - truth| / |truth|``.

    Both ellipses are canonicalized first and the angle residual is taken
    modulo pi, as the smaller of ``|d theta|`` and ``pi - |d theta|``.
    """
    e = np.array(canonicalize(est))
    t = np.array(canonicalize(truth))
    diff = e - t
    dth = abs(diff[4]) % math.pi
    diff[4] = min(dth, math.pi - dth)
    return float(100.0 * np.linalg.norm(diff) / np.linalg.norm(t))


def format_points(points, header=None) -> str:
    """Two decimal columns, one point per line, after ``# key: value`` header lines."""
    p = np.asarray(points, dtype=float).reshape(-1, 2)
    lines = [f"# {k}: {v}\n" for k, v in (header or {}).items()]
    lines += [f"{float(x)!r} {float(y)!r}\n" for x, y in p]
    return "".join(lines)


def write_points(path, points, header=None):
    """Write :func:`format_points` output to ``path``."""
    with open(path, "w") as fh:
        fh.write(format_points(points, header))


def read_points(path, ncols=2) -> np.ndarray:
    """Read whitespace- or comma-separated rows of ``ncols`` numbers.

    Blank lines and lines starting with ``#`` are skipped.

    Raises
    ------
    OSError
        If the file cannot be read.
    ParseError
        With the 1-based line number of the first malformed row.
    """
    rows = []
    with open(path) as fh:
        for lineno, line in enumerate(fh, start=1):
            text = line.strip()
            if not text or text.startswith("#"):
                continue
            fields = text.replace(",", " ").split()
            if len(fields) != ncols:
                raise ParseError(f"expected {ncols} values, found {len(fields)}", lineno)
            try:
                vals = [float(f) for f in fields]
            except ValueError as exc:
                raise ParseError(str(exc), lineno) from None
            if not all(math.isfinite(v) for v in vals):
                raise ParseError("non-finite coordinate", lineno)
            rows.append(vals)
    return np.array(rows, dtype=float).reshape(-1, ncols)
