"""Ellipse and circle fitting.

``fit_halir`` and ``fit_taubin`` are direct algebraic fits. ``fit_confocal_lm``
minimizes the sum of squared confocal hyperbola distances over the geometric
parameters with Levenberg-Marquardt, starting from the Halir fit.
``fit_circle_lm`` is the three-parameter version of the same loop for
near-circular data.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg

from .conic import Ellipse, algebraic_to_geometric, canonicalize, normalize_conic
from .distance import confocal_residuals
from .errors import (
    DegenerateInput,
    InitializationFailed,
    InsufficientPoints,
    InvalidAxes,
    NotAnEllipse,
    NumericalFailure,
)

__all__ = [
    "LMConfig",
    "FitStatus",
    "FitResult",
    "fit_halir",
    "fit_taubin",
    "fit_confocal_lm",
    "fit_circle_lm",
    "fit_circle_kasa",
]

_EPS = np.finfo(float).eps


@dataclass(frozen=True)
class LMConfig:
    """Levenberg-Marquardt settings.

    ``lambda0`` is the initial damping, multiplied by ``nu`` after a
    rejected step (``nu`` then squares) and divided by ``gamma`` after an
    accepted one (``nu`` then resets to ``nu0``). The loop stops when the
    sum of squares changes by at most ``rel_tol`` relative, or after
    ``max_iters`` iterations.
    """

    lambda0: float = 0.5
    nu0: float = 10.0
    gamma: float = 3.0
    max_iters: int = 50
    rel_tol: float = 1e-12

    def __post_init__(self):
        if not self.lambda0 > 0:
            raise ValueError("lambda0 must be positive")
        if not self.nu0 > 1:
            raise ValueError("nu0 must exceed 1")
        if not self.gamma > 1:
            raise ValueError("gamma must exceed 1")
        if self.max_iters < 1:
            raise ValueError("max_iters must be at least 1")
        if not self.rel_tol >= 0:
            raise ValueError("rel_tol must be non-negative")


class FitStatus(enum.Enum):
    CONVERGED = "converged"
    MAX_ITERS = "max_iters"
    INITIAL_WAS_OPTIMAL = "initial_was_optimal"


@dataclass(frozen=True)
class FitResult:
    ellipse: Ellipse
    iterations: int
    final_sd: float
    status: FitStatus
    initial_sd: float = math.nan
    sd_history: tuple = field(default=(), repr=False)


def _as_points(points, minimum):
    p = np.asarray(points, dtype=float)
    if p.ndim != 2 or p.shape[1] != 2:
        raise ValueError("points must be an (N, 2) array")
    if p.shape[0] < minimum:
        raise InsufficientPoints(f"insufficient points: need at least {minimum}, got {p.shape[0]}")
    if not np.all(np.isfinite(p)):
        raise ValueError("points must be finite")
    return p


def _normalization(p):
    """Centroid and isotropic scale used to condition the algebraic fits."""
    m = p.mean(axis=0)
    sc = math.sqrt(np.mean(np.sum((p - m) ** 2, axis=1)) / 2.0)
    if sc == 0.0:
        raise DegenerateInput("all points coincide")
    return m, sc


def _denormalize_conic(tau, m, sc):
    A, B, C, D, E, F = tau
    Q = np.array([[A, B / 2, D / 2], [B / 2, C, E / 2], [D / 2, E / 2, F]])
    H = np.array([[1 / sc, 0.0, -m[0] / sc], [0.0, 1 / sc, -m[1] / sc], [0.0, 0.0, 1.0]])
    Q = H.T @ Q @ H
    return normalize_conic([Q[0, 0], 2 * Q[0, 1], Q[1, 1], 2 * Q[0, 2], 2 * Q[1, 2], Q[2, 2]])


def fit_halir(points) -> Ellipse:
    """Direct least-squares ellipse fit with the ``4AC - B^2 = 1`` constraint.

    Uses the partitioned scatter matrix so the generalized eigenproblem
    reduces to an ordinary 3x3 one. Data are centered and scaled first;
    the fit is similarity-equivariant, so this only affects conditioning.

    Raises
    ------
    InsufficientPoints
        Fewer than 6 points.
    DegenerateInput
        Collinear or coincident points, or no eigenvector is an ellipse.
    """
    p = _as_points(points, 6)
    m, sc = _normalization(p)
    q = (p - m) / sc
    x, y = q[:, 0], q[:, 1]
    D1 = np.column_stack([x * x, x * y, y * y])
    D2 = np.column_stack([x, y, np.ones_like(x)])
    S1 = D1.T @ D1
    S2 = D1.T @ D2
    S3 = D2.T @ D2
    if np.linalg.cond(S3) > 1e12:
        raise DegenerateInput("points are collinear or coincident")
    T = -np.linalg.solve(S3, S2.T)
    M = S1 + S2 @ T
    # inverse of the constraint block ((0, 0, 2), (0, -1, 0), (2, 0, 0))
    M = np.vstack([M[2] / 2.0, -M[1], M[0] / 2.0])
    _, vecs = np.linalg.eig(M)
    vecs = np.real(vecs)
    cond = 4.0 * vecs[0] * vecs[2] - vecs[1] ** 2
    if not np.any(cond > 0):
        raise DegenerateInput("no ellipse-shaped solution")
    a1 = vecs[:, int(np.argmax(cond))]
    tau = np.concatenate([a1, T @ a1])
    try:
        e = algebraic_to_geometric(tau)
    except (NotAnEllipse, np.linalg.LinAlgError) as exc:
        raise DegenerateInput(f"direct fit did not give a real ellipse: {exc}") from exc
    return canonicalize((m[0] + sc * e.xc, m[1] + sc * e.yc, sc * e.a, sc * e.b, e.theta))


def fit_taubin(points) -> np.ndarray:
    """Taubin conic fit; returns normalized coefficients ``(A, B, C, D, E, F)``.

    The result may be a hyperbola or parabola, check it with
    :func:`~confocal_ellipse.conic.classify_conic` before converting.

    The constant term is eliminated by centering the lifted coordinates,
    which leaves a definite 5x5 pencil between the reduced scatter matrix
    and the summed outer products of the design-vector gradients.
    """
    p = _as_points(points, 6)
    m, sc = _normalization(p)
    q = (p - m) / sc
    x, y = q[:, 0], q[:, 1]
    n = len(x)
    z = np.column_stack([x * x, x * y, y * y, x, y])
    zm = z.mean(axis=0)
    zc = z - zm
    S = zc.T @ zc / n
    zero = np.zeros(n)
    one = np.ones(n)
    gx = np.column_stack([2 * x, y, zero, one, zero])
    gy = np.column_stack([zero, x, 2 * y, zero, one])
    N = (gx.T @ gx + gy.T @ gy) / n
    try:
        w, v = scipy.linalg.eigh(S, N)
    except np.linalg.LinAlgError as exc:
        raise DegenerateInput(f"rank-deficient pencil: {exc}") from exc
    if w[1] <= 1e-12 * max(abs(w[-1]), 1e-300):
        raise DegenerateInput("rank-deficient pencil: points do not determine a unique conic")
    v0 = v[:, 0]
    tau = np.concatenate([v0, [-zm @ v0]])
    return _denormalize_conic(tau, m, sc)


def _levenberg_marquardt(residuals, x0, config, project):
    """Damped Gauss-Newton loop shared by the ellipse and circle fits.

    ``residuals(x, jac)`` returns ``(r, J or None)``; ``project(x)`` maps a
    candidate into the valid parameter set or raises ``InvalidAxes``.
    """
    x = np.asarray(x0, dtype=float)
    r, J = residuals(x, True)
    sd = float(r @ r)
    initial_sd = sd
    history = [sd]
    lam = config.lambda0
    nu = config.nu0
    status = FitStatus.MAX_ITERS
    accepted = False
    eye = np.eye(x.size)
    it = 0
    while it < config.max_iters:
        it += 1
        sd_new = math.inf
        cand = None
        try:
            step = np.linalg.solve(J.T @ J + lam * eye, J.T @ r)
            if np.all(np.isfinite(step)):
                cand = project(x - step)
                sd_new = float(np.sum(residuals(cand, False)[0] ** 2))
        except (np.linalg.LinAlgError, InvalidAxes):
            cand = None

        if cand is not None and abs(sd_new - sd) <= config.rel_tol * max(sd, _EPS):
            if sd_new < sd:
                x, sd = cand, sd_new
                history.append(sd)
                accepted = True
            status = FitStatus.CONVERGED if accepted else FitStatus.INITIAL_WAS_OPTIMAL
            break
        if not sd_new < sd:
            lam *= nu
            nu *= nu
            if not math.isfinite(lam):
                raise NumericalFailure("damping overflowed without finding a usable step")
        else:
            x = cand
            r, J = residuals(x, True)
            sd = sd_new
            history.append(sd)
            accepted = True
            lam /= config.gamma
            nu = config.nu0
    return x, it, sd, status, initial_sd, tuple(history)


def fit_confocal_lm(points, config: LMConfig | None = None, init=None) -> FitResult:
    """Fit an ellipse by minimizing squared confocal hyperbola distances.

    Parameters
    ----------
    points : (N, 2) array
    config : LMConfig, optional
        Defaults to ``lambda0=0.5, nu0=10, gamma=3, max_iters=50``.
    init : Ellipse-like, optional
        Starting ellipse. When omitted the Halir fit is used.

    Raises
    ------
    InitializationFailed
        When no ``init`` is given and the Halir fit fails.
    NumericalFailure
        When the damped normal equations cannot be solved at any damping.
    """
    config = config or LMConfig()
    p = _as_points(points, 6)
    if init is None:
        try:
            init = fit_halir(p)
        except DegenerateInput as exc:
            raise InitializationFailed(f"initial Halir fit failed: {exc}") from exc
    x0 = np.array(canonicalize(init), dtype=float)

    def residuals(x, jac):
        return confocal_residuals(x, p, jacobian=jac)

    def project(x):
        return np.array(canonicalize(x), dtype=float)

    x, it, sd, status, sd0, hist = _levenberg_marquardt(residuals, x0, config, project)
    return FitResult(Ellipse(*map(float, x)), it, sd, status, sd0, hist)


def fit_circle_kasa(points):
    """Algebraic circle fit of ``x^2 + y^2 + D x + E y + F = 0``; returns ``(xc, yc, R)``."""
    p = _as_points(points, 3)
    m, sc = _normalization(p)
    q = (p - m) / sc
    A = np.column_stack([q, np.ones(len(q))])
    rhs = -(q ** 2).sum(axis=1)
    sol, _, rank, _ = np.linalg.lstsq(A, rhs, rcond=None)
    if rank < 3:
        raise DegenerateInput("points are collinear or coincident")
    cx, cy = -sol[0] / 2.0, -sol[1] / 2.0
    r2 = cx * cx + cy * cy - sol[2]
    if not r2 > 0:
        raise DegenerateInput("algebraic circle fit has no real radius")
    return m[0] + sc * cx, m[1] + sc * cy, sc * math.sqrt(r2)


def fit_circle_lm(points, config: LMConfig | None = None) -> FitResult:
    """Geometric circle fit, the ellipse loop with ``a = b`` and ``theta = 0``."""
    config = config or LMConfig()
    p = _as_points(points, 3)
    try:
        x0 = np.array(fit_circle_kasa(p))
    except DegenerateInput as exc:
        raise InitializationFailed(f"initial circle fit failed: {exc}") from exc

    def residuals(x, jac):
        dx = p[:, 0] - x[0]
        dy = p[:, 1] - x[1]
        r = np.hypot(dx, dy)
        res = r - x[2]
        if not jac:
            return res, None
        safe = np.where(r > 0.0, r, 1.0)
        J = np.column_stack([-dx / safe, -dy / safe, -np.ones_like(r)])
        return res, J

    def project(x):
        if not x[2] > 0:
            raise InvalidAxes("radius must be positive")
        return x

    x, it, sd, status, sd0, hist = _levenberg_marquardt(residuals, x0, config, project)
    ell = Ellipse(float(x[0]), float(x[1]), float(x[2]), float(x[2]), 0.0)
    return FitResult(ell, it, sd, status, sd0, hist)
