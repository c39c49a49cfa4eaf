"""Point-to-ellipse distance measures.

Every function accepts a single point ``(x, y)`` or an ``(N, 2)`` array and
returns results of matching shape.

The confocal hyperbola distance takes, in the ellipse frame, the point where
the hyperbola confocal with the ellipse and passing through the query point
meets the ellipse. Confocal conics cross at right angles, so that point is
close to the true orthogonal projection. Its closed form is evaluated in a
rearranged way that stays finite for circles (focal distance 0) and on the
axes, where the value is exactly the geometric distance.

:func:`project_point_oracle` is the ground truth: it projects onto the
ellipse by solving the Lagrange multiplier equation, which has a single
root on the bracket used.
"""

from __future__ import annotations

import math
from typing import NamedTuple

import numpy as np

from .conic import to_ellipse_frame
from .errors import UndefinedAtCriticalPoint

__all__ = [
    "DistanceVec",
    "ProjectionResult",
    "algebraic_distance",
    "sampson_distance",
    "confocal_contact_point",
    "confocal_distance",
    "confocal_jacobian",
    "confocal_residuals",
    "project_point_oracle",
    "oracle_distance",
]

# |Y| (resp. |X|) at or below AXIS_BAND * a is treated as lying on the axis
AXIS_BAND = 1e-12
# |X_I - a| at or below VERTEX_RTOL * a selects the major-vertex Jacobian rows
VERTEX_RTOL = 1e-10
SAMPSON_GRAD_MIN = 1e-14
_SNAP = 1e-100


class DistanceVec(NamedTuple):
    """Signed ellipse-frame components ``(|X| - |X_I|, |Y| - |Y_I|)`` and their norm."""

    d_x: np.ndarray
    d_y: np.ndarray
    norm: np.ndarray


class ProjectionResult(NamedTuple):
    """Orthogonal projection onto the ellipse.

    ``contact`` is in the ellipse frame, in the same quadrant as the query
    point. ``distance`` is the unsigned Euclidean distance to it.
    """

    contact: np.ndarray
    distance: np.ndarray
    inside: np.ndarray


def _points(points):
    p = np.asarray(points, dtype=float)
    if p.ndim == 1:
        return p.reshape(1, 2), True
    return p, False


def _unwrap(single, *arrays):
    if single:
        arrays = tuple(float(arr[0]) for arr in arrays)
    return arrays if len(arrays) > 1 else arrays[0]


def algebraic_distance(tau, points):
    """Value of the conic polynomial ``tau . (x^2, xy, y^2, x, y, 1)``."""
    p, single = _points(points)
    A, B, C, D, E, F = np.asarray(tau, dtype=float)
    x, y = p[:, 0], p[:, 1]
    val = A * x * x + B * x * y + C * y * y + D * x + E * y + F
    return _unwrap(single, val)


def sampson_distance(tau, points, strict=True):
    """Algebraic distance divided by the norm of its gradient.

    With ``strict`` (the default) a point where the gradient vanishes
    raises :class:`UndefinedAtCriticalPoint`; otherwise such points yield
    NaN.
    """
    p, single = _points(points)
    A, B, C, D, E, F = np.asarray(tau, dtype=float)
    x, y = p[:, 0], p[:, 1]
    val = A * x * x + B * x * y + C * y * y + D * x + E * y + F
    grad = np.hypot(2.0 * A * x + B * y + D, B * x + 2.0 * C * y + E)
    bad = grad < SAMPSON_GRAD_MIN
    if strict and bad.any():
        raise UndefinedAtCriticalPoint("gradient of the conic vanishes at the query point")
    with np.errstate(divide="ignore", invalid="ignore"):
        out = np.where(bad, np.nan, val / np.where(bad, 1.0, grad))
    return _unwrap(single, out)


def _contact(a, b, X, Y):
    """First-quadrant contact magnitudes plus the intermediates the Jacobian needs."""
    u = np.abs(X)
    v = np.abs(Y)
    on_minor = u <= AXIS_BAND * a
    on_major = v <= AXIS_BAND * a
    u = np.where(on_minor, 0.0, u)
    v = np.where(on_major, 0.0, v)
    F = (a - b) * (a + b)
    p = u * u
    q = v * v
    T = p + q + F
    # T^2 - 4 p F regrouped so it is a sum of non-negative terms
    delta = (p - F) ** 2 + q * (2.0 * p + 2.0 * F + q)
    sd = np.sqrt(delta)
    s2 = 0.5 * (T + sd)
    s = np.sqrt(s2)
    # s^2 - X^2, cancellation-free on both sides of the foci
    beyond = p >= F
    den = sd + p - F
    w2 = np.where(
        beyond,
        0.5 * (q + q * (2.0 * p + 2.0 * F + q) / np.where(den > 0.0, den, 1.0)),
        0.5 * (F - p + q + sd),
    )
    w2 = np.maximum(w2, 0.0)
    w = np.sqrt(w2)
    origin = s == 0.0
    s_safe = np.where(origin, 1.0, s)
    L = np.where(origin, 0.0, u / s_safe)
    root = np.where(origin, 1.0, w / s_safe)  # sqrt(1 - L^2)
    XI = a * L
    YI = b * root
    vertex = on_major & beyond
    XI = np.where(vertex, a, XI)
    YI = np.where(vertex, 0.0, YI)
    XI = np.where(on_minor, 0.0, XI)
    YI = np.where(on_minor, b, YI)
    return dict(u=u, v=v, F=F, p=p, q=q, T=T, sd=sd, s=s_safe, w=w, L=L, root=root,
                XI=XI, YI=YI, on_minor=on_minor, vertex=vertex, origin=origin)


def confocal_contact_point(rho, frame_points):
    """Magnitudes ``(|X_I|, |Y_I|)`` of the confocal contact point.

    ``frame_points`` are already in the ellipse frame (see
    :func:`~confocal_ellipse.conic.to_ellipse_frame`).
    """
    q, single = _points(frame_points)
    a, b = float(rho[2]), float(rho[3])
    c = _contact(a, b, q[:, 0], q[:, 1])
    return _unwrap(single, c["XI"], c["YI"])


def confocal_distance(rho, points) -> DistanceVec:
    """Confocal hyperbola distance of points to a canonical ellipse."""
    p, single = _points(points)
    a, b = float(rho[2]), float(rho[3])
    X, Y = to_ellipse_frame(rho, p)
    c = _contact(a, b, X, Y)
    dx = c["u"] - c["XI"]
    dy = c["v"] - c["YI"]
    norm = np.hypot(dx, dy)
    return DistanceVec(*_unwrap(single, dx, dy, norm))


def _residuals_and_jacobian(rho, p, want_jac=True):
    a, b, theta = float(rho[2]), float(rho[3]), float(rho[4])
    X, Y = to_ellipse_frame(rho, p)
    c = _contact(a, b, X, Y)
    u, v, XI, YI = c["u"], c["v"], c["XI"], c["YI"]
    dx = u - XI
    dy = v - YI
    norm = np.hypot(dx, dy)
    if not want_jac:
        return norm, None

    n = X.shape[0]
    C, S = math.cos(theta), math.sin(theta)
    sx = np.sign(np.where(c["on_minor"], 0.0, X))[:, None]
    sy = np.sign(np.where(v == 0.0, 0.0, Y))[:, None]
    Xc = X[:, None]
    Yc = Y[:, None]
    zero = np.zeros((n, 1))
    one = np.ones((n, 1))
    dX = np.hstack([-C * one, -S * one, zero, zero, Yc])
    dY = np.hstack([S * one, -C * one, zero, zero, -Xc])
    da = np.zeros((1, 5))
    da[0, 2] = 1.0
    db = np.zeros((1, 5))
    db[0, 3] = 1.0
    du = sx * dX
    dv = sy * dY
    dF = 2.0 * a * da - 2.0 * b * db
    dp = 2.0 * Xc * dX
    dq = 2.0 * Yc * dY
    T = c["T"][:, None]
    dT = dp + dq + dF
    dDelta = 2.0 * T * dT - 4.0 * (c["F"] * dp + c["p"][:, None] * dF)
    sd = c["sd"][:, None]
    s = c["s"][:, None]
    uu = u[:, None]
    L = c["L"][:, None]
    root = c["root"][:, None]
    w = c["w"][:, None]

    regular = ~(c["vertex"] | c["on_minor"] | c["origin"]
                | (np.abs(XI - a) <= VERTEX_RTOL * a) | (c["sd"] == 0.0))
    with np.errstate(divide="ignore", invalid="ignore"):
        dsd = dDelta / (2.0 * sd)
        ds = 0.5 * (dT + dsd) / (2.0 * s)
        dL = du / s - uu * ds / (s * s)
        dXI = da * L + a * dL
        dYI = db * root - b * uu * dL / w
    dDX = du - dXI
    dDY = dv - dYI

    # major-axis vertex: only the X component moves
    vert = ~regular & ~(c["on_minor"] | c["origin"])
    row_x = np.hstack([-sx * C, -sx * S, -one, zero, sx * Yc])
    dDX = np.where(vert[:, None], row_x, dDX)
    dDY = np.where(vert[:, None], 0.0, dDY)
    dy = np.where(vert, 0.0, dy)
    # minor-axis contact: only the Y component moves
    minor = c["on_minor"] | c["origin"]
    row_y = np.hstack([sy * S, -sy * C, zero, -one, -sy * Xc])
    dDX = np.where(minor[:, None], 0.0, dDX)
    dDY = np.where(minor[:, None], row_y, dDY)

    jac = _combine(dx, dy, np.hypot(dx, dy), dDX, dDY)
    return norm, jac


def _combine(dx, dy, norm, dDX, dDY):
    """Chain rule through the norm, in the overflow-safe ratio form.

    The ratio terms carry ``sign(d)`` explicitly: ``d / |(dx, dy)|`` equals
    ``sign(d) / sqrt(1 + (other / d)^2)``.
    """
    n = dx.shape[0]
    jac = np.empty((n, 5))
    zx = dx == 0.0
    zy = dy == 0.0
    both = zx & zy
    one_zero = (zx | zy) & ~both
    equal = ~(zx | zy) & (np.abs(dx) == np.abs(dy))
    other = ~(zx | zy | equal)

    jac[both] = 0.5 * math.sqrt(2.0) * (dDX[both] + dDY[both])
    if one_zero.any():
        nz = norm[one_zero][:, None]
        jac[one_zero] = (dx[one_zero][:, None] * dDX[one_zero]
                         + dy[one_zero][:, None] * dDY[one_zero]) / nz
    if equal.any():
        jac[equal] = 0.5 * math.sqrt(2.0) * (np.sign(dx[equal])[:, None] * dDX[equal]
                                             + np.sign(dy[equal])[:, None] * dDY[equal])
    if other.any():
        ox, oy = dx[other], dy[other]
        wx = np.sign(ox) / np.sqrt(1.0 + (oy / ox) ** 2)
        wy = np.sign(oy) / np.sqrt((ox / oy) ** 2 + 1.0)
        jac[other] = wx[:, None] * dDX[other] + wy[:, None] * dDY[other]
    return jac


def confocal_jacobian(rho, points):
    """Gradient of the confocal distance with respect to ``(xc, yc, a, b, theta)``.

    Returns shape ``(5,)`` for one point, ``(N, 5)`` for an array. Rows are
    finite everywhere: the major-vertex and minor-axis branches use their
    reduced forms, and points exactly on the ellipse use the symmetric
    limit of the norm's gradient.
    """
    p, single = _points(points)
    _, jac = _residuals_and_jacobian(rho, p)
    return jac[0] if single else jac


def confocal_residuals(rho, points, jacobian=True):
    """Stacked distances ``D_h`` and, optionally, the ``(N, 5)`` Jacobian."""
    p, _ = _points(points)
    return _residuals_and_jacobian(rho, p, want_jac=jacobian)


def _project_first_quadrant(a, b, u, v):
    """Nearest ellipse point to first-quadrant points ``(u, v)``; returns contact coordinates."""
    n = u.shape[0]
    cx = np.empty(n)
    cy = np.empty(n)
    # coordinates this small would overflow the Newton derivative; the snap
    # moves the distance by less than the snapped amount
    u = np.where(u <= _SNAP * a, 0.0, u)
    v = np.where(v <= _SNAP * a, 0.0, v)

    minor = u == 0.0
    cx[minor] = 0.0
    cy[minor] = b

    major = (v == 0.0) & ~minor
    if major.any():
        F = (a - b) * (a + b)
        uu = u[major]
        inner = uu * a < F
        x = np.where(inner, a * a * uu / np.where(inner, F, 1.0), a)
        x = np.minimum(x, a)
        cx[major] = x
        cy[major] = b * np.sqrt(np.maximum(1.0 - (x / a) ** 2, 0.0))

    gen = ~(minor | major)
    if gen.any():
        uu, vv = u[gen], v[gen]
        z0 = uu / a
        z1 = vv / b
        r0 = (a / b) ** 2
        g0 = r0 * z0
        # iterate on w = s + 1 so that points near the center keep full precision
        k = (a - b) * (a + b) / (b * b)
        lo = np.maximum(z1, g0 - k)
        hi = np.hypot(g0, z1)
        w = lo.copy()
        active = np.ones(w.shape, dtype=bool)
        # G is convex and decreasing, so Newton from the left is monotone
        for _ in range(200):
            idx = np.nonzero(active)[0]
            if idx.size == 0:
                break
            wi = w[idx]
            t0 = g0[idx] / (wi + k)
            t1 = z1[idx] / wi
            G = t0 * t0 + t1 * t1 - 1.0
            dG = -2.0 * (t0 * t0 / (wi + k) + t1 * t1 / wi)
            step = -G / dG
            new = np.minimum(wi + np.maximum(step, 0.0), hi[idx])
            done = (G <= 0.0) | (new <= wi) | (step <= 1e-16 * wi)
            w[idx] = new
            active[idx[done]] = False
        phi = np.arctan2(z1 / w, g0 / (w + k))
        phi = _polish_angle(a, b, uu, vv, phi)
        cx[gen] = a * np.cos(phi)
        cy[gen] = b * np.sin(phi)
    return cx, cy


def _polish_angle(a, b, u, v, phi):
    """Newton steps on the orthogonality condition in the parametric angle."""
    F = (a - b) * (a + b)

    def g(t):
        st, ct = np.sin(t), np.cos(t)
        return F * st * ct - u * a * st + v * b * ct

    gv = g(phi)
    for _ in range(4):
        st, ct = np.sin(phi), np.cos(phi)
        dg = F * (ct * ct - st * st) - u * a * ct - v * b * st
        with np.errstate(divide="ignore", invalid="ignore"):
            cand = np.clip(phi - gv / dg, 0.0, 0.5 * math.pi)
        gc = g(cand)
        better = np.isfinite(cand) & (np.abs(gc) < np.abs(gv))
        phi = np.where(better, cand, phi)
        gv = np.where(better, gc, gv)
    return phi


def project_point_oracle(rho, points) -> ProjectionResult:
    """Orthogonal projection of points onto the ellipse (ground truth).

    In the first quadrant of the ellipse frame the contact is
    ``(a^2 X / (t + a^2), b^2 Y / (t + b^2))`` where ``t > -b^2`` is the
    unique root of

        (a X / (t + a^2))^2 + (b Y / (t + b^2))^2 = 1.

    The root is found by safeguarded Newton iteration (monotone, since the
    left side is convex and decreasing in ``t``), then the contact angle is
    refined on the orthogonality condition so the result lies on the ellipse
    to rounding. Points on the axes are handled in closed form.
    """
    p, single = _points(points)
    a, b = float(rho[2]), float(rho[3])
    X, Y = to_ellipse_frame(rho, p)
    cx, cy = _project_first_quadrant(a, b, np.abs(X), np.abs(Y))
    cx = np.where(X < 0.0, -cx, cx)
    cy = np.where(Y < 0.0, -cy, cy)
    dist = np.hypot(X - cx, Y - cy)
    inside = (X / a) ** 2 + (Y / b) ** 2 < 1.0
    contact = np.column_stack([cx, cy])
    if single:
        return ProjectionResult(contact[0], float(dist[0]), bool(inside[0]))
    return ProjectionResult(contact, dist, inside)


def oracle_distance(rho, points):
    """Unsigned geometric distance from the projection oracle."""
    return project_point_oracle(rho, points).distance
