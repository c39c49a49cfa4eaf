"""Ellipse fitting with the confocal hyperbola distance.

The confocal hyperbola through a point meets an ellipse almost exactly at
the point's orthogonal projection, which gives a closed-form, differentiable
approximation of the geometric distance. This package provides that distance
and its Jacobian, a Levenberg-Marquardt ellipse fit built on it, the Halir
and Taubin algebraic fits, a pixel-accurate edge-point simulator with
benchmark harnesses, and cylinder recovery from planar point-cloud sections.
"""

from .conic import (
    ConicClass,
    Ellipse,
    algebraic_to_geometric,
    canonicalize,
    classify_conic,
    ellipse_points,
    geometric_to_algebraic,
    normalize_conic,
)
from .distance import (
    DistanceVec,
    ProjectionResult,
    algebraic_distance,
    confocal_contact_point,
    confocal_distance,
    confocal_jacobian,
    confocal_residuals,
    oracle_distance,
    project_point_oracle,
    sampson_distance,
)
from .errors import (
    DegenerateInput,
    EllipseError,
    EmptyInput,
    EmptyResult,
    InitializationFailed,
    InsufficientPoints,
    InvalidAxes,
    NotAnEllipse,
    NumericalFailure,
    ParseError,
    UndefinedAtCriticalPoint,
)
from .fitters import (
    FitResult,
    FitStatus,
    LMConfig,
    fit_circle_kasa,
    fit_circle_lm,
    fit_confocal_lm,
    fit_halir,
    fit_taubin,
)
from .simulate import (
    PixelRect,
    SimConfig,
    circumscribed_rect,
    p_error,
    rasterize_ellipse,
    read_points,
    rmse,
    write_points,
)

__version__ = "0.1.0"
