import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from confocal_ellipse import (
    ConicClass,
    InvalidAxes,
    NotAnEllipse,
    algebraic_to_geometric,
    canonicalize,
    classify_conic,
    geometric_to_algebraic,
    normalize_conic,
)
from confocal_ellipse.conic import ellipse_points, from_ellipse_frame, to_ellipse_frame


def unit(v):
    v = np.asarray(v, dtype=float)
    return normalize_conic(v)


ellipses = st.builds(
    lambda xc, yc, a, ratio, th: (xc, yc, a, a * ratio, th),
    st.floats(-100, 100),
    st.floats(-100, 100),
    st.floats(0.5, 200),
    st.floats(0.05, 1.0),
    st.floats(-10, 10),
)


# -- geometric -> algebraic ------------------------------------------------------

@pytest.mark.parametrize("rho, expected", [
    ((0, 0, 1, 1, 0), (1, 0, 1, 0, 0, -1)),
    ((0, 0, 5, 3, 0), (1 / 25, 0, 1 / 9, 0, 0, -1)),
    ((1, 0, 2, 1, 0), (1, 0, 4, -2, 0, -3)),
])
def test_geometric_to_algebraic_examples(rho, expected):
    np.testing.assert_allclose(geometric_to_algebraic(rho), unit(expected), atol=1e-14)


def test_algebraic_is_normalized():
    tau = geometric_to_algebraic((3, -2, 7, 4, 1.1))
    assert np.linalg.norm(tau) == pytest.approx(1.0, abs=1e-15)
    assert tau[0] > 0


@given(ellipses)
def test_points_on_ellipse_satisfy_conic(rho):
    tau = geometric_to_algebraic(rho)
    pts = ellipse_points(rho, np.linspace(0, 2 * np.pi, 13))
    x, y = pts[:, 0], pts[:, 1]
    A, B, C, D, E, F = tau
    vals = A * x * x + B * x * y + C * y * y + D * x + E * y + F
    grad = np.hypot(2 * A * x + B * y + D, B * x + 2 * C * y + E)
    # first-order distance off the curve, relative to the ellipse's extent
    extent = abs(rho[0]) + abs(rho[1]) + rho[2]
    assert np.all(np.abs(vals) / grad <= 1e-11 * extent)


# -- algebraic -> geometric ------------------------------------------------------

@pytest.mark.parametrize("tau, expected", [
    ((1, 0, 1, 0, 0, -4), (0, 0, 2, 2, 0)),
    ((1 / 25, 0, 1 / 9, 0, 0, -1), (0, 0, 5, 3, 0)),
])
def test_algebraic_to_geometric_examples(tau, expected):
    np.testing.assert_allclose(algebraic_to_geometric(tau), expected, atol=1e-12)


def test_algebraic_to_geometric_rejects_hyperbola():
    with pytest.raises(NotAnEllipse):
        algebraic_to_geometric((1, 0, -1, 0, 0, -1))


def test_imaginary_ellipse_is_not_an_ellipse():
    with pytest.raises(NotAnEllipse):
        algebraic_to_geometric((1, 0, 1, 0, 0, 1))


@settings(max_examples=300)
@given(ellipses)
def test_roundtrip_matches_canonical_form(rho):
    est = np.array(algebraic_to_geometric(geometric_to_algebraic(rho)))
    ref = np.array(canonicalize(rho))
    scale = max(abs(ref[0]), abs(ref[1]), ref[2])
    np.testing.assert_allclose(est[:4], ref[:4], rtol=1e-10, atol=1e-10 * scale)
    if ref[3] < ref[2] * (1 - 1e-6):
        dth = abs(est[4] - ref[4]) % math.pi
        assert min(dth, math.pi - dth) <= 1e-8
    else:
        assert est[4] == 0.0 or ref[4] == 0.0 or abs(est[4] - ref[4]) < 1e-6


# -- classification ----------------------------------------------------------------

@pytest.mark.parametrize("tau, cls", [
    ((1, 0, 1, 0, 0, -1), ConicClass.ELLIPSE),
    ((1, 0, -1, 0, 0, -1), ConicClass.HYPERBOLA),
    ((1, 0, 1, 0, 0, 0), ConicClass.DEGENERATE),
    ((0, 0, 1, -1, 0, 0), ConicClass.PARABOLA),
    ((1, 0, -1, 0, 0, 0), ConicClass.DEGENERATE),
])
def test_classify_examples(tau, cls):
    assert classify_conic(tau) is cls


@given(ellipses)
def test_every_geometric_ellipse_classifies_as_ellipse(rho):
    assert classify_conic(geometric_to_algebraic(rho)) is ConicClass.ELLIPSE


@given(
    st.lists(st.floats(-10, 10), min_size=6, max_size=6),
    st.floats(1e-6, 1e6),
    st.booleans(),
)
def test_classification_is_scale_invariant(tau, k, flip):
    tau = np.array(tau)
    if not np.any(tau):
        return
    k = -k if flip else k
    assert classify_conic(k * tau) is classify_conic(tau)


# -- canonical form ------------------------------------------------------------------

@pytest.mark.parametrize("raw, expected", [
    ((0, 0, 3, 5, 0), (0, 0, 5, 3, math.pi / 2)),
    ((0, 0, 5, 3, 3 * math.pi / 2), (0, 0, 5, 3, math.pi / 2)),
    ((0, 0, 5, 3, 0.1), (0, 0, 5, 3, 0.1)),
    ((1, 2, 4, 4, 2.0), (1, 2, 4, 4, 0.0)),
])
def test_canonicalize_examples(raw, expected):
    np.testing.assert_allclose(canonicalize(raw), expected, atol=1e-15)


@pytest.mark.parametrize("raw", [(0, 0, 0, 1, 0), (0, 0, 2, -1, 0), (0, 0, math.inf, 1, 0)])
def test_canonicalize_rejects_bad_axes(raw):
    with pytest.raises(InvalidAxes):
        canonicalize(raw)


@given(ellipses)
def test_canonical_form_invariants(rho):
    e = canonicalize(rho)
    assert e.a >= e.b > 0
    assert 0 <= e.theta < math.pi
    assert canonicalize(e) == e


@given(ellipses)
def test_canonicalize_keeps_point_set(rho):
    e = canonicalize(rho)
    pts = ellipse_points(rho, np.linspace(0, 2 * np.pi, 17))
    X, Y = to_ellipse_frame(e, pts)
    np.testing.assert_allclose((X / e.a) ** 2 + (Y / e.b) ** 2, 1.0, atol=1e-9)


# -- frame changes ---------------------------------------------------------------------

@pytest.mark.parametrize("rho, p, expected", [
    ((0, 0, 5, 3, 0), (2, 1), (2, 1)),
    ((1, 3, 15, 10, math.pi / 2), (1, 4), (1, 0)),
    ((0, 0, 5, 3, math.pi / 4), (math.sqrt(2), 0), (1, -1)),
])
def test_to_ellipse_frame_examples(rho, p, expected):
    np.testing.assert_allclose(to_ellipse_frame(rho, p), expected, atol=1e-15)


@given(ellipses, st.lists(st.floats(-1e3, 1e3), min_size=4, max_size=4))
def test_frame_change_is_an_isometry(rho, c):
    p = np.array(c).reshape(2, 2)
    X, Y = to_ellipse_frame(rho, p)
    d0 = np.linalg.norm(p[0] - p[1])
    d1 = math.hypot(X[0] - X[1], Y[0] - Y[1])
    assert abs(d0 - d1) <= 1e-12 * max(1.0, d0)
    np.testing.assert_allclose(from_ellipse_frame(rho, X, Y), p, atol=1e-12 * 1e3)
