import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from confocal_ellipse import (
    ConicClass,
    DegenerateInput,
    FitStatus,
    InitializationFailed,
    InsufficientPoints,
    LMConfig,
    algebraic_to_geometric,
    canonicalize,
    classify_conic,
    confocal_residuals,
    ellipse_points,
    fit_circle_kasa,
    fit_circle_lm,
    fit_confocal_lm,
    fit_halir,
    fit_taubin,
    geometric_to_algebraic,
    normalize_conic,
    p_error,
)
from confocal_ellipse.benchmark import BASE_CONFIG
from confocal_ellipse.simulate import edge_contacts, noisy_pixels

RHO = (1, 3, 15, 10, math.pi / 6)


def exact_points(rho, n=100, start=0.0, span=2 * math.pi):
    phi = start + span * np.arange(n) / n
    return ellipse_points(rho, phi)


def rel_close(est, ref, tol):
    est, ref = np.array(canonicalize(est)), np.array(canonicalize(ref))
    scale = np.linalg.norm(ref[:4])
    assert np.all(np.abs(est[:4] - ref[:4]) <= tol * scale), (est, ref)
    dth = abs(est[4] - ref[4]) % math.pi
    assert min(dth, math.pi - dth) <= tol * 10


def sd_of(rho, pts):
    return float(np.sum(confocal_residuals(rho, pts, jacobian=False)[0] ** 2))


# -- LMConfig ----------------------------------------------------------------------

def test_lm_defaults():
    c = LMConfig()
    assert (c.lambda0, c.nu0, c.gamma, c.max_iters) == (0.5, 10.0, 3.0, 50)


@pytest.mark.parametrize("kw", [
    dict(lambda0=0), dict(nu0=1.0), dict(gamma=1.0), dict(max_iters=0), dict(rel_tol=-1),
])
def test_lm_config_rejects_invalid(kw):
    with pytest.raises(ValueError):
        LMConfig(**kw)


# -- Halir -------------------------------------------------------------------------

def test_halir_recovers_exact_ellipse():
    rel_close(fit_halir(exact_points(RHO)), RHO, 1e-6)


def test_halir_unit_circle_from_six_points():
    phi = np.arange(6) * math.pi / 3
    np.testing.assert_allclose(fit_halir(np.column_stack([np.cos(phi), np.sin(phi)])),
                               (0, 0, 1, 1, 0), atol=1e-10)


def test_halir_rejects_collinear():
    t = np.arange(10.0)
    with pytest.raises(DegenerateInput):
        fit_halir(np.column_stack([t, t]))


def test_halir_needs_six_points():
    with pytest.raises(InsufficientPoints):
        fit_halir(exact_points(RHO, 5))


def test_halir_returns_an_ellipse_on_hyperbolic_data():
    t = np.linspace(-1, 1, 30)
    pts = np.column_stack([np.cosh(t), np.sinh(t)])
    e = fit_halir(pts)
    assert e.a >= e.b > 0


# -- Taubin ------------------------------------------------------------------------

def test_taubin_recovers_exact_ellipse():
    tau = fit_taubin(exact_points(RHO))
    assert classify_conic(tau) is ConicClass.ELLIPSE
    rel_close(algebraic_to_geometric(tau), RHO, 1e-6)


def test_taubin_unit_circle_from_six_points():
    phi = np.arange(6) * math.pi / 3
    tau = fit_taubin(np.column_stack([np.cos(phi), np.sin(phi)]))
    np.testing.assert_allclose(tau, normalize_conic((1, 0, 1, 0, 0, -1)), atol=1e-10)


def test_taubin_can_return_a_hyperbola():
    t = np.linspace(-1, 1, 30)
    tau = fit_taubin(np.column_stack([np.cosh(t), np.sinh(t)]))
    assert classify_conic(tau) is ConicClass.HYPERBOLA


def test_taubin_on_short_noisy_arcs_needs_a_class_check():
    truth = canonicalize((0, 0, 100, 50, math.pi / 4))
    pixels, contacts = edge_contacts(truth, 0.0, math.pi / 2)
    classes = set()
    for seed in range(40):
        pts = noisy_pixels(pixels, contacts, 3.0, np.random.default_rng(seed))
        classes.add(classify_conic(fit_taubin(pts)))
    assert ConicClass.ELLIPSE in classes
    assert classes <= {ConicClass.ELLIPSE, ConicClass.HYPERBOLA, ConicClass.PARABOLA}


# -- confocal LM -------------------------------------------------------------------

def test_confocal_from_truth_stops_at_once():
    res = fit_confocal_lm(exact_points(RHO), init=RHO)
    assert res.status in (FitStatus.INITIAL_WAS_OPTIMAL, FitStatus.CONVERGED)
    assert res.final_sd <= 1e-18
    assert res.iterations <= 2


def test_confocal_recovers_exact_ellipse_from_halir():
    pts = exact_points(RHO)
    res = fit_confocal_lm(pts)
    rel_close(res.ellipse, RHO, 1e-6)


def test_confocal_from_perturbed_start_converges():
    pts = exact_points(RHO, 60, 0.3, 4.0)
    res = fit_confocal_lm(pts, init=(2, 2, 14, 11, 0.4))
    rel_close(res.ellipse, RHO, 1e-6)
    assert res.status is FitStatus.CONVERGED


def test_confocal_insufficient_points():
    with pytest.raises(InsufficientPoints):
        fit_confocal_lm(exact_points(RHO, 5))


def test_confocal_initialization_failure():
    t = np.arange(10.0)
    with pytest.raises(InitializationFailed):
        fit_confocal_lm(np.column_stack([t, 2 * t]))


def test_confocal_respects_max_iters():
    pts = exact_points(RHO, 60, 0.3, 4.0)
    res = fit_confocal_lm(pts, LMConfig(max_iters=2), init=(2, 2, 14, 11, 0.4))
    assert res.iterations <= 2


def noisy_sample(seed, sigma=2.0, arc=2 * math.pi, b=50.0):
    cfg = BASE_CONFIG
    truth = canonicalize((cfg["xc"], cfg["yc"], cfg["aspect"] * b, b, cfg["theta"]))
    pixels, contacts = edge_contacts(truth, 0.0, arc)
    return truth, noisy_pixels(pixels, contacts, sigma, np.random.default_rng(seed))


@pytest.mark.parametrize("seed", range(8))
def test_sd_history_is_monotone_and_below_initial(seed):
    truth, pts = noisy_sample(seed, sigma=3.0, arc=math.pi)
    res = fit_confocal_lm(pts)
    hist = np.array(res.sd_history)
    assert np.all(np.diff(hist) <= 0)
    assert res.final_sd <= res.initial_sd
    assert res.final_sd <= sd_of(fit_halir(pts), pts) * (1 + 1e-12)
    assert res.final_sd == pytest.approx(sd_of(res.ellipse, pts), rel=1e-12)
    e = res.ellipse
    assert e == canonicalize(e)


def test_full_arc_base_config_error_band():
    # 100 trials; the mean should sit near half a percent
    errs = []
    for seed in range(100):
        truth, pts = noisy_sample(1000 + seed)
        errs.append(p_error(fit_confocal_lm(pts).ellipse, truth))
    assert 0.2 <= np.mean(errs) <= 0.8


def test_base_config_iterations_are_modest():
    iters = [fit_confocal_lm(noisy_sample(seed)[1]).iterations for seed in range(30)]
    assert np.mean(iters) <= 15


# -- equivariance and consistency --------------------------------------------------

rigid = st.tuples(st.floats(0, 2 * math.pi), st.floats(-200, 200), st.floats(-200, 200))


def move(pts, phi, tx, ty):
    c, s = math.cos(phi), math.sin(phi)
    return pts @ np.array([[c, s], [-s, c]]) + (tx, ty)


def moved_ellipse(rho, phi, tx, ty):
    c = move(np.array([rho[:2]]), phi, tx, ty)[0]
    return canonicalize((c[0], c[1], rho[2], rho[3], rho[4] + phi))


def assert_same_ellipse(e1, e2, tol):
    e1, e2 = canonicalize(e1), canonicalize(e2)
    scale = max(1.0, abs(e2.xc), abs(e2.yc), e2.a)
    assert np.allclose(e1[:4], e2[:4], atol=tol * scale), (e1, e2)
    dth = abs(e1.theta - e2.theta) % math.pi
    assert min(dth, math.pi - dth) <= tol * 100


@settings(max_examples=25, deadline=None)
@given(rigid, st.integers(0, 1000))
def test_fitters_are_rigid_motion_equivariant(motion, seed):
    truth, pts = noisy_sample(seed, sigma=1.5, arc=1.5 * math.pi, b=30.0)
    pts = pts + np.random.default_rng(seed).uniform(-0.3, 0.3, pts.shape)
    moved = move(pts, *motion)
    assert_same_ellipse(fit_halir(moved), moved_ellipse(fit_halir(pts), *motion), 1e-8)
    t0, t1 = fit_taubin(pts), fit_taubin(moved)
    if classify_conic(t0) is ConicClass.ELLIPSE:
        assert_same_ellipse(algebraic_to_geometric(t1),
                            moved_ellipse(algebraic_to_geometric(t0), *motion), 1e-8)
    c0 = fit_confocal_lm(pts).ellipse
    c1 = fit_confocal_lm(moved).ellipse
    assert_same_ellipse(c1, moved_ellipse(c0, *motion), 1e-8)


@settings(max_examples=30, deadline=None)
@given(
    st.floats(-100, 100), st.floats(-100, 100), st.floats(1, 100), st.floats(1.01, 4),
    st.floats(0, math.pi), st.floats(0, 2 * math.pi), st.floats(math.pi / 2, 2 * math.pi),
)
def test_all_fitters_agree_on_exact_data(xc, yc, b, k, th, start, span):
    rho = canonicalize((xc, yc, k * b, b, th))
    pts = exact_points(rho, 40, start, span)
    rel_close(fit_halir(pts), rho, 1e-6)
    rel_close(algebraic_to_geometric(fit_taubin(pts)), rho, 1e-6)
    rel_close(fit_confocal_lm(pts).ellipse, rho, 1e-6)


# -- circles -----------------------------------------------------------------------

def circle_points(xc, yc, r, n=30, start=0.0, span=2 * math.pi):
    phi = start + span * np.arange(n) / n
    return np.column_stack([xc + r * np.cos(phi), yc + r * np.sin(phi)])


def test_circle_lm_exact():
    res = fit_circle_lm(circle_points(2, -1, 7, 30, 0.2, 2.0))
    np.testing.assert_allclose(res.ellipse, (2, -1, 7, 7, 0), atol=1e-10)


def test_circle_lm_three_points_interpolate():
    pts = np.array([(0.0, 0.0), (4.0, 0.0), (1.0, 3.0)])
    res = fit_circle_lm(pts)
    assert res.final_sd <= 1e-20
    r = np.hypot(pts[:, 0] - res.ellipse.xc, pts[:, 1] - res.ellipse.yc)
    np.testing.assert_allclose(r, res.ellipse.a, atol=1e-10)


def test_kasa_exact():
    np.testing.assert_allclose(fit_circle_kasa(circle_points(-3, 5, 2.5)), (-3, 5, 2.5),
                               atol=1e-12)


def test_circle_collinear_fails():
    t = np.arange(5.0)
    with pytest.raises(InitializationFailed):
        fit_circle_lm(np.column_stack([t, t]))


@pytest.mark.parametrize("theta", [0.0, math.pi / 4])
def test_circle_fit_helps_for_near_circles(theta):
    truth = canonicalize((0, 0, 50 * 1.004, 50, theta))
    pixels, contacts = edge_contacts(truth)
    ref = np.array(truth[:4])
    circ, ell = [], []
    for seed in range(30):
        pts = noisy_pixels(pixels, contacts, 2.0, np.random.default_rng(seed))
        fits = fit_circle_lm(pts).ellipse, fit_confocal_lm(pts).ellipse
        if theta == 0.0:
            circ.append(p_error(fits[0], truth))
            ell.append(p_error(fits[1], truth))
        else:
            # the circle reports theta = 0, so compare center and axes only
            c, e = (100 * np.linalg.norm(np.array(f[:4]) - ref) / np.linalg.norm(ref) for f in fits)
            circ.append(c)
            ell.append(e)
    assert np.mean(circ) <= np.mean(ell)


def test_geometric_to_algebraic_is_consistent_with_fit():
    tau = fit_taubin(exact_points(RHO))
    np.testing.assert_allclose(tau, geometric_to_algebraic(RHO), atol=1e-8)
