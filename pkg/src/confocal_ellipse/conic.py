"""Ellipse and conic representations.

An ellipse is carried either geometrically, as ``(xc, yc, a, b, theta)``
(center, semi-major, semi-minor, rotation), or algebraically, as the six
coefficients ``(A, B, C, D, E, F)`` of

    A x^2 + B xy + C y^2 + D x + E y + F = 0.

Algebraic vectors are kept at unit L2 norm with the first nonzero of
``(A, B, C)`` positive, which removes their scale ambiguity.
"""

from __future__ import annotations

import enum
import math
from typing import NamedTuple

import numpy as np

from .errors import InvalidAxes, NotAnEllipse

__all__ = [
    "Ellipse",
    "ConicClass",
    "canonicalize",
    "normalize_conic",
    "geometric_to_algebraic",
    "algebraic_to_geometric",
    "classify_conic",
    "conic_matrix",
    "to_ellipse_frame",
    "from_ellipse_frame",
    "ellipse_points",
    "design_matrix",
]

# relative band under which a_e and b_e are considered equal
CIRCLE_RTOL = 1e-12
# a determinant or discriminant counts as zero when it is below DEGENERACY_TOL
# times the summed magnitudes of the terms it is computed from
DEGENERACY_TOL = 1e-12


class Ellipse(NamedTuple):
    """Geometric ellipse parameters.

    ``a`` and ``b`` are the semi-axis lengths and ``theta`` is the angle
    of the ``a`` axis from the x axis, in radians. Use :func:`canonicalize`
    to get the unique form with ``a >= b`` and ``theta`` in ``[0, pi)``.
    """

    xc: float
    yc: float
    a: float
    b: float
    theta: float

    @property
    def focal(self) -> float:
        """Center-to-focus distance ``sqrt(a^2 - b^2)`` (0 for circles)."""
        return math.sqrt(max(self.a * self.a - self.b * self.b, 0.0))

    @property
    def center(self) -> np.ndarray:
        return np.array([self.xc, self.yc])

    def as_array(self) -> np.ndarray:
        return np.array(self, dtype=float)


class ConicClass(enum.Enum):
    ELLIPSE = "ellipse"
    HYPERBOLA = "hyperbola"
    PARABOLA = "parabola"
    DEGENERATE = "degenerate"


def canonicalize(rho) -> Ellipse:
    """Return the canonical form of a 5-parameter ellipse.

    Axes are swapped (with a quarter-turn of ``theta``) when ``a < b``,
    ``theta`` is reduced into ``[0, pi)``, and circles get ``theta = 0``.

    Raises
    ------
    InvalidAxes
        If either axis length is not strictly positive.
    """
    xc, yc, a, b, theta = (float(v) for v in rho)
    if not (a > 0.0 and b > 0.0) or not (math.isfinite(a) and math.isfinite(b)):
        raise InvalidAxes(f"axis lengths must be positive and finite, got a={a}, b={b}")
    if a < b:
        a, b = b, a
        theta += 0.5 * math.pi
    if a - b <= CIRCLE_RTOL * a:
        theta = 0.0
    else:
        theta = math.fmod(theta, math.pi)
        if theta < 0.0:
            theta += math.pi
        if theta >= math.pi:
            theta = 0.0
    return Ellipse(xc, yc, a, b, theta)


def normalize_conic(tau) -> np.ndarray:
    """Scale ``tau`` to unit norm with the leading nonzero quadratic term positive."""
    tau = np.asarray(tau, dtype=float).reshape(6)
    norm = np.linalg.norm(tau)
    if norm == 0.0 or not np.isfinite(norm):
        raise ValueError("conic coefficients must be finite and not all zero")
    tau = tau / norm
    lead = tau[:3][tau[:3] != 0.0]
    if lead.size == 0:
        lead = tau[tau != 0.0]
    if lead[0] < 0.0:
        tau = -tau
    return tau


def geometric_to_algebraic(rho) -> np.ndarray:
    """Expand the geometric ellipse into normalized conic coefficients."""
    xc, yc, a, b, theta = (float(v) for v in rho)
    c, s = math.cos(theta), math.sin(theta)
    ia2, ib2 = 1.0 / (a * a), 1.0 / (b * b)
    A = c * c * ia2 + s * s * ib2
    B = 2.0 * c * s * (ia2 - ib2)
    C = s * s * ia2 + c * c * ib2
    D = -2.0 * A * xc - B * yc
    E = -B * xc - 2.0 * C * yc
    F = A * xc * xc + B * xc * yc + C * yc * yc - 1.0
    return normalize_conic([A, B, C, D, E, F])


def conic_matrix(tau) -> np.ndarray:
    """Symmetric 3x3 matrix of the conic (the determinant test matrix)."""
    A, B, C, D, E, F = np.asarray(tau, dtype=float)
    return np.array(
        [
            [A, B / 2.0, D / 2.0],
            [B / 2.0, C, E / 2.0],
            [D / 2.0, E / 2.0, F],
        ]
    )


def classify_conic(tau) -> ConicClass:
    """Classify a conic from its discriminant and the 3x3 determinant.

    Each quantity is compared with the magnitude of the products it is
    summed from, so the tests are unaffected by scaling ``tau`` and by
    moving the conic away from the origin.
    """
    tau = np.asarray(tau, dtype=float)
    scale = float(np.max(np.abs(tau)))
    if scale == 0.0:
        return ConicClass.DEGENERATE
    A, B, C, D, E, F = tau / scale
    terms = np.array([
        A * C * F, -A * E * E / 4, -B * B * F / 4, B * D * E / 8, B * D * E / 8, -C * D * D / 4,
    ])
    det = float(terms.sum())
    if abs(det) <= DEGENERACY_TOL * float(np.abs(terms).sum()):
        return ConicClass.DEGENERATE
    disc = B * B - 4.0 * A * C
    if abs(disc) <= DEGENERACY_TOL * (B * B + 4.0 * abs(A * C)):
        return ConicClass.PARABOLA
    return ConicClass.ELLIPSE if disc < 0.0 else ConicClass.HYPERBOLA


def algebraic_to_geometric(tau) -> Ellipse:
    """Convert conic coefficients to a canonical geometric ellipse.

    The center solves the vanishing-gradient system, the axes come from the
    eigenvalues of the quadratic part with the constant re-evaluated at the
    center, and the orientation from ``atan2(B, A - C) / 2``.

    Raises
    ------
    NotAnEllipse
        For hyperbolas, parabolas, degenerate and imaginary ellipses.
    """
    cls = classify_conic(tau)
    if cls is not ConicClass.ELLIPSE:
        raise NotAnEllipse(f"conic is a {cls.value}, not an ellipse")
    A, B, C, D, E, F = normalize_conic(tau)
    if A + C < 0.0:
        A, B, C, D, E, F = -A, -B, -C, -D, -E, -F
    xc, yc = np.linalg.solve([[2.0 * A, B], [B, 2.0 * C]], [-D, -E])
    f0 = F + 0.5 * (D * xc + E * yc)
    root = math.hypot(A - C, B)
    lam_max = 0.5 * (A + C + root)
    lam_min = 0.5 * (A + C - root)
    if lam_min <= 0.0 or f0 >= 0.0:
        raise NotAnEllipse("conic has no real points")
    a = math.sqrt(-f0 / lam_min)
    b = math.sqrt(-f0 / lam_max)
    # atan2(B, A - C) / 2 is the direction of the larger eigenvalue, i.e. the minor axis
    theta = 0.5 * math.atan2(B, A - C) + 0.5 * math.pi
    return canonicalize((float(xc), float(yc), a, b, theta))


def to_ellipse_frame(rho, points):
    """Translate and rotate points into the ellipse-aligned frame.

    Returns ``(X, Y)`` arrays with the shape of ``points[..., 0]``.
    """
    p = np.asarray(points, dtype=float)
    xc, yc, _, _, theta = rho
    c, s = math.cos(theta), math.sin(theta)
    dx = p[..., 0] - xc
    dy = p[..., 1] - yc
    return dx * c + dy * s, -dx * s + dy * c


def from_ellipse_frame(rho, X, Y) -> np.ndarray:
    """Inverse of :func:`to_ellipse_frame`; returns an ``(..., 2)`` array."""
    xc, yc, _, _, theta = rho
    c, s = math.cos(theta), math.sin(theta)
    X = np.asarray(X, dtype=float)
    Y = np.asarray(Y, dtype=float)
    return np.stack([xc + X * c - Y * s, yc + X * s + Y * c], axis=-1)


def ellipse_points(rho, phi) -> np.ndarray:
    """Points on the ellipse at parametric angles ``phi``."""
    phi = np.asarray(phi, dtype=float)
    return from_ellipse_frame(rho, rho[2] * np.cos(phi), rho[3] * np.sin(phi))


def design_matrix(points) -> np.ndarray:
    """Rows ``(x^2, xy, y^2, x, y, 1)`` for each point."""
    p = np.atleast_2d(np.asarray(points, dtype=float))
    x, y = p[:, 0], p[:, 1]
    return np.column_stack([x * x, x * y, y * y, x, y, np.ones_like(x)])
