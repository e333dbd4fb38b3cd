import math

import numpy as np
import pytest

from nonlocal_limits.bodies import ConvexBody
from nonlocal_limits.engine import IntegrationPlan
from nonlocal_limits.functionals import (FunctionalSpec, SpecError, derivative_norm_p,
                                         evaluate, local_limit, shared_local_integral,
                                         theorem_constant, uniform_bound_check)
from nonlocal_limits.functions import make_function
from nonlocal_limits.mollifiers import make_mollifier

INTERVAL = ConvexBody.box([1.0])
GAUSS1 = make_function("gaussian", 1)
GAUSS2 = make_function("gaussian", 2)
ROOT_PI_HALF = math.sqrt(math.pi / 2.0)

BODY_SUITE = [ConvexBody.box([1.0]), ConvexBody.ball(1.0, 2),
              ConvexBody.box([1.0, 0.5]), ConvexBody.ellipsoid([2.0, 1.0])]


def mc_plan(samples=200_000, seed=7, **kw):
    return IntegrationPlan.monte_carlo(samples=samples, seed=seed, **kw)


# ---------------------------------------------------------------------------
# constants
# ---------------------------------------------------------------------------

def test_theorem_constants_values():
    # dim 1, m 1, p 2: mollified (1+2)/1 = 3, level-set 3/2
    assert theorem_constant("bbm_centered", 1, 2.0, 1) == pytest.approx(3.0)
    assert theorem_constant("nguyen_centered", 1, 2.0, 1) == pytest.approx(1.5)
    # dim 1, m 2, p 2: mollified 5/16, level-set 5/64; Taylor 5/4 and 5/16
    assert theorem_constant("bbm_centered", 2, 2.0, 1) == pytest.approx(5.0 / 16.0)
    assert theorem_constant("nguyen_centered", 2, 2.0, 1) == pytest.approx(5.0 / 64.0)
    assert theorem_constant("bbm_taylor", 2, 2.0, 1) == pytest.approx(5.0 / 4.0)
    assert theorem_constant("nguyen_taylor", 2, 2.0, 1) == pytest.approx(5.0 / 16.0)


def test_constant_ratio_is_m_times_p():
    for m in (1, 2, 3):
        for p in (1.5, 2.0, 3.0):
            for dim in (1, 2, 3):
                ratio = (theorem_constant("bbm_centered", m, p, dim)
                         / theorem_constant("nguyen_centered", m, p, dim))
                assert ratio == pytest.approx(m * p, rel=1e-14)
                ratio = (theorem_constant("bbm_taylor", m, p, dim)
                         / theorem_constant("nguyen_taylor", m, p, dim))
                assert ratio == pytest.approx(m * p, rel=1e-14)


def test_taylor_and_centered_agree_at_m1():
    for theorem in ("nguyen", "bbm"):
        a = theorem_constant(f"{theorem}_centered", 1, 2.5, 2)
        b = theorem_constant(f"{theorem}_taylor", 1, 2.5, 2)
        assert a == b


# ---------------------------------------------------------------------------
# local limits
# ---------------------------------------------------------------------------

def test_local_limit_gaussian_m1():
    # derivative-energy oracle: int (f')^2 = sqrt(pi/2) for f = exp(-x^2)
    spec = FunctionalSpec("nguyen_centered", GAUSS1, INTERVAL, 1, 2.0, 0.1)
    assert local_limit(spec) == pytest.approx(ROOT_PI_HALF, rel=1e-10)


def test_local_limit_gaussian_m2():
    # oracle: int (f'')^2 = 3 sqrt(pi/2); mollified target (5/16).(2/5).3 sqrt(pi/2)
    moll = make_mollifier("shell", 1, 0.1)
    spec = FunctionalSpec("bbm_centered", GAUSS1, INTERVAL, 2, 2.0, 0.1, moll)
    assert local_limit(spec) == pytest.approx(3.0 * ROOT_PI_HALF / 8.0, rel=1e-10)
    spec = FunctionalSpec("bbm_taylor", GAUSS1, INTERVAL, 2, 2.0, 0.1, moll)
    assert local_limit(spec) == pytest.approx(1.5 * ROOT_PI_HALF, rel=1e-10)


def test_local_limit_ratio_shared_factor():
    # same cached integral feeds both constants, so only float rounding remains
    for m in (1, 2, 3):
        for p in (1.5, 2.0, 3.0):
            for body in BODY_SUITE:
                f = make_function("gaussian", body.dim)
                a = local_limit(FunctionalSpec("bbm_centered", f, body, m, p, 0.1,
                                               make_mollifier("shell", body.dim, 0.1)),
                                outer_nodes=24, body_radial=12, body_angular=16)
                b = local_limit(FunctionalSpec("nguyen_centered", f, body, m, p, 0.1),
                                outer_nodes=24, body_radial=12, body_angular=16)
                assert a / b == pytest.approx(m * p, rel=1e-13)


def test_classical_ball_reduction():
    # the ball limit reduces to (1/p) K_{dim,p} int |grad f|^p
    from nonlocal_limits.engine import sphere_constant
    spec = FunctionalSpec("nguyen_centered", GAUSS1, ConvexBody.ball(1.0, 1), 1, 2.0, 0.1)
    target = 0.5 * sphere_constant(1, 2.0) * ROOT_PI_HALF
    assert local_limit(spec) == pytest.approx(target, rel=1e-3)

    spec2 = FunctionalSpec("nguyen_centered", GAUSS2, ConvexBody.ball(1.0, 2), 1, 2.0, 0.1)
    grad_sq = derivative_norm_p(GAUSS2, 1, 2.0)  # == int |grad f|^2 for m = 1
    target2 = 0.5 * sphere_constant(2, 2.0) * grad_sq
    assert local_limit(spec2) == pytest.approx(target2, rel=1e-3)


def test_classical_ball_reduction_dim3():
    gauss3 = make_function("gaussian", 3)
    from nonlocal_limits.engine import sphere_constant
    # gradient-energy oracle: 16 pi int r^4 e^{-2 r^2} dr = 16 pi (3/32) sqrt(pi/2)
    energy = 16.0 * math.pi * (3.0 / 32.0) * ROOT_PI_HALF
    target = 0.5 * sphere_constant(3, 2.0) * energy
    spec = FunctionalSpec("nguyen_centered", gauss3, ConvexBody.ball(1.0, 3), 1, 2.0, 0.1)
    assert local_limit(spec) == pytest.approx(target, rel=1e-3)


def test_gauge_scaling_covariance():
    # dilation of the body scales the shared integral by lam^(dim + m p)
    for lam in (0.5, 2.0):
        for body, m in ((INTERVAL, 1), (ConvexBody.ellipsoid([2.0, 1.0]), 2)):
            f = make_function("gaussian", body.dim)
            base = shared_local_integral(f, body, m, 2.0).value
            scaled = shared_local_integral(f, body.scaled(lam), m, 2.0).value
            assert scaled / base == pytest.approx(lam ** (body.dim + 2 * m), rel=0.01)


def test_local_limit_monte_carlo_agrees():
    est = shared_local_integral(GAUSS2, ConvexBody.ellipsoid([2.0, 1.0]), 1, 2.0,
                                mc=mc_plan(samples=400_000, seed=3))
    exact = shared_local_integral(GAUSS2, ConvexBody.ellipsoid([2.0, 1.0]), 1, 2.0).value
    assert abs(est.value - exact) <= max(3 * est.stderr, 0.02 * exact)


def test_local_limit_zero_function():
    z = make_function("zero", 1)
    spec = FunctionalSpec("nguyen_centered", z, INTERVAL, 1, 2.0, 0.1)
    assert local_limit(spec) == 0.0


# ---------------------------------------------------------------------------
# evaluators
# ---------------------------------------------------------------------------

def test_level_set_single_point_close_to_limit():
    spec = FunctionalSpec("nguyen_centered", GAUSS1, INTERVAL, 1, 2.0, 0.01)
    est = evaluate(spec, mc_plan())
    assert abs(est.value - ROOT_PI_HALF) / ROOT_PI_HALF <= 0.05


def test_zero_function_maps_to_zero_exactly():
    z = make_function("zero", 1)
    for theorem in ("nguyen_centered", "nguyen_taylor"):
        spec = FunctionalSpec(theorem, z, INTERVAL, 1, 2.0, 0.05)
        est = evaluate(spec, mc_plan(samples=10))
        assert est.value == 0.0 and est.stderr == 0.0
    moll = make_mollifier("shell", 1, 0.05)
    for theorem in ("bbm_centered", "bbm_taylor"):
        spec = FunctionalSpec(theorem, z, INTERVAL, 1, 2.0, 0.05, moll)
        est = evaluate(spec, mc_plan(samples=10))
        assert est.value == 0.0


def test_threshold_above_range_is_exact_zero():
    # |remainder| <= 2^m sup|f| = 2 here, so delta = 2.5 never fires
    spec = FunctionalSpec("nguyen_centered", GAUSS1, INTERVAL, 1, 2.0, 2.5)
    est = evaluate(spec, mc_plan(samples=1000))
    assert est.value == 0.0
    assert "exact_zero" in est.info


def test_taylor_threshold_beyond_remainder_range():
    # sup of the Taylor remainder over the truncated region is finite; far
    # above it the estimate must vanish (indicator never fires in range)
    spec = FunctionalSpec("nguyen_taylor", GAUSS1, INTERVAL, 2, 2.0, 500.0)
    est = evaluate(spec, mc_plan(samples=20_000))
    assert est.value == 0.0


def test_m1_collapse_matched_seeds():
    plan = mc_plan(samples=50_000, seed=21)
    a = evaluate(FunctionalSpec("nguyen_centered", GAUSS1, INTERVAL, 1, 2.0, 0.05), plan)
    b = evaluate(FunctionalSpec("nguyen_taylor", GAUSS1, INTERVAL, 1, 2.0, 0.05), plan)
    assert a.value == pytest.approx(b.value, rel=1e-12)
    moll = make_mollifier("shell", 1, 0.1)
    c = evaluate(FunctionalSpec("bbm_centered", GAUSS1, INTERVAL, 1, 2.0, 0.1, moll), plan)
    d = evaluate(FunctionalSpec("bbm_taylor", GAUSS1, INTERVAL, 1, 2.0, 0.1, moll), plan)
    assert c.value == pytest.approx(d.value, rel=1e-12)


def test_mollified_quadrature_near_limit():
    moll = make_mollifier("shell", 1, 0.02)
    spec = FunctionalSpec("bbm_centered", GAUSS1, INTERVAL, 1, 2.0, 0.02, moll)
    est = evaluate(spec, IntegrationPlan.quadrature(x_nodes=160, t_nodes=48))
    assert est.value == pytest.approx(2.0 * ROOT_PI_HALF, rel=0.02)


def test_m3_mollified_matches_hand_oracle():
    # third-derivative energy of the gaussian: int ((-8x^3+12x) e^{-x^2})^2 dx
    # = (64*15/64 - 192*3/16 + 144/4) sqrt(pi/2) = 15 sqrt(pi/2);
    # constant (1+6)/3^6 and interval moment int y^6 = 2/7 give (10/243) sqrt(pi/2)
    target = (10.0 / 243.0) * ROOT_PI_HALF
    moll = make_mollifier("shell", 1, 0.02)
    spec = FunctionalSpec("bbm_centered", GAUSS1, INTERVAL, 3, 2.0, 0.02, moll)
    assert local_limit(spec) == pytest.approx(target, rel=1e-10)
    est = evaluate(spec, IntegrationPlan.quadrature(x_nodes=200, t_nodes=48))
    assert est.value == pytest.approx(target, rel=0.01)


def test_general_exponents_track_local_limits():
    # exponent plumbing (kernels, importance laws, constants) beyond p = 2
    qplan = IntegrationPlan.quadrature(x_nodes=200, t_nodes=48)
    for m, p in ((1, 1.5), (1, 3.0), (2, 3.0)):
        moll = make_mollifier("shell", 1, 0.02)
        spec = FunctionalSpec("bbm_centered", GAUSS1, INTERVAL, m, p, 0.02, moll)
        value = evaluate(spec, qplan).value
        assert value == pytest.approx(local_limit(spec), rel=0.01)
    for p in (1.5, 3.0):
        spec = FunctionalSpec("nguyen_centered", GAUSS1, INTERVAL, 1, p, 0.004)
        est = evaluate(spec, mc_plan(samples=400_000, seed=5))
        assert abs(est.value - local_limit(spec)) <= max(4 * est.stderr,
                                                         0.02 * local_limit(spec))


def test_level_set_tail_bounds_reported():
    # truncation-tail bounds are surfaced with the estimate and scale as delta^p
    infos = []
    for delta in (0.05, 0.025):
        spec = FunctionalSpec("nguyen_centered", GAUSS1, INTERVAL, 1, 2.0, delta)
        infos.append(evaluate(spec, mc_plan(samples=20_000)).info)
    for key in ("tail_beyond_t_max", "tail_outside_box"):
        assert 0.0 < infos[0][key] < 0.1
        assert infos[1][key] == pytest.approx(infos[0][key] / 4.0, rel=1e-9)


def test_spec_validation_errors():
    with pytest.raises(SpecError, match="p > 1"):
        evaluate(FunctionalSpec("nguyen_centered", GAUSS1, INTERVAL, 1, 0.5, 0.1),
                 mc_plan(samples=10))
    with pytest.raises(SpecError, match="unknown theorem"):
        evaluate(FunctionalSpec("nope", GAUSS1, INTERVAL, 1, 2.0, 0.1), mc_plan(samples=10))
    with pytest.raises(SpecError, match="mollifier"):
        evaluate(FunctionalSpec("bbm_centered", GAUSS1, INTERVAL, 1, 2.0, 0.1), mc_plan(samples=10))
    with pytest.raises(SpecError, match="identity tests"):
        evaluate(FunctionalSpec("nguyen_centered", make_function("quadratic", 1),
                                INTERVAL, 1, 2.0, 0.1), mc_plan(samples=10))
    with pytest.raises(SpecError, match="parameter"):
        evaluate(FunctionalSpec("nguyen_centered", GAUSS1, INTERVAL, 1, 2.0, -0.1),
                 mc_plan(samples=10))
    with pytest.raises(SpecError):
        evaluate(FunctionalSpec("nguyen_centered", GAUSS1, INTERVAL, 4, 2.0, 0.1),
                 mc_plan(samples=10))
    with pytest.raises(SpecError, match="support radius"):
        evaluate(FunctionalSpec("nguyen_centered", GAUSS1, INTERVAL, 1, 2.0, 0.1),
                 mc_plan(samples=10, outer_box_radius=1.0))


# ---------------------------------------------------------------------------
# boundedness diagnostic
# ---------------------------------------------------------------------------

def test_uniform_bound_check():
    spec = FunctionalSpec("nguyen_centered", GAUSS1, INTERVAL, 1, 2.0, 0.1)
    grid = [0.2 * 0.5 ** i for i in range(5)]
    report = uniform_bound_check(spec, grid, mc_plan(samples=50_000))
    assert report.passed
    assert report.max_ratio <= 50.0
    # derivative-norm oracle for the gaussian: sqrt(pi/2)
    assert report.derivative_norm == pytest.approx(ROOT_PI_HALF, rel=1e-10)
    assert report.max_ratio == pytest.approx(1.0, rel=0.25)


def test_uniform_bound_check_zero_function():
    z = make_function("zero", 1)
    spec = FunctionalSpec("nguyen_centered", z, INTERVAL, 1, 2.0, 0.1)
    report = uniform_bound_check(spec, [0.1, 0.05], mc_plan(samples=100))
    assert report.passed and report.max_ratio == 0.0


def test_polytope_and_lp_bodies_evaluate():
    diamond = ConvexBody.polytope([[1, 1], [-1, -1], [1, -1], [-1, 1]], [1, 1, 1, 1])
    lp = ConvexBody.lp_ball(3.0, 1.0, 2)
    plan = mc_plan(samples=100_000, seed=3)
    for body, theorem, moll in ((diamond, "nguyen_centered", None),
                                (lp, "bbm_centered", make_mollifier("shell", 2, 0.1))):
        spec = FunctionalSpec(theorem, GAUSS2, body, 1, 2.0, 0.1, moll)
        est = evaluate(spec, plan)
        target = shared_local_integral(GAUSS2, body, 1, 2.0,
                                       mc=mc_plan(samples=400_000, seed=9)).value
        target *= theorem_constant(theorem, 1, 2.0, 2)
        assert est.value > 0.0
        # finite-parameter value within 25% of the limit: a smoke bound only
        assert abs(est.value - target) / target < 0.25


def test_uniform_bound_check_empty_grid():
    spec = FunctionalSpec("nguyen_centered", GAUSS1, INTERVAL, 1, 2.0, 0.1)
    with pytest.raises(ValueError):
        uniform_bound_check(spec, [], mc_plan(samples=100))
    with pytest.raises(SpecError):
        moll = make_mollifier("shell", 1, 0.1)
        uniform_bound_check(FunctionalSpec("bbm_centered", GAUSS1, INTERVAL, 1, 2.0,
                                           0.1, moll), [0.1], mc_plan(samples=100))
