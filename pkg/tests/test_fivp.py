from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fracslp.errors import DivergenceError
from fracslp.fivp import (
    GridFunction,
    IVPSpec,
    Mesh,
    march,
    sensitivity_shoot,
    slp_shoot,
    solve,
    solve_richardson,
    weights_a,
    weights_b,
)
from fracslp.mlf import MLParams, ml_eval
from fracslp.potentials import Potential

ALPHAS = (1.1, 1.5, 1.9)


# -- quadrature weights -------------------------------------------------------


def test_weights_small_cases():
    assert weights_b(1.5, 0) == pytest.approx([1.0])
    assert weights_b(1.5, 2) == pytest.approx([3**1.5 - 2**1.5, 2**1.5 - 1, 1.0])
    assert weights_a(1.5, 0) == pytest.approx([1.5, 1.0])
    a = weights_a(1.5, 3)
    assert a[2] == pytest.approx(3**2.5 + 1 - 2 * 2**2.5)
    assert a[-1] == 1.0
    with pytest.raises(ValueError):
        weights_b(1.5, -1)


@pytest.mark.parametrize("alpha", ALPHAS)
def test_predictor_weights_telescope(alpha):
    for k in range(201):
        b = weights_b(alpha, k)
        assert np.all(b > 0)
        assert abs(b.sum() - (k + 1) ** alpha) <= 1e-10 * (k + 1) ** alpha


@pytest.mark.parametrize("alpha", ALPHAS)
def test_corrector_weights_exact_on_constants(alpha):
    for k in range(201):
        a = weights_a(alpha, k)
        target = (alpha + 1) * (k + 1) ** alpha
        assert abs(a.sum() - target) <= 1e-10 * target


@pytest.mark.parametrize("alpha", ALPHAS)
def test_corrector_weights_exact_on_linears(alpha):
    # the product trapezoid integrates t exactly as well
    for k in (0, 1, 7, 50, 200):
        a = weights_a(alpha, k)
        target = (k + 1) ** (alpha + 1)
        assert abs(a @ np.arange(k + 2) - target) <= 1e-10 * target


# -- the scheme -------------------------------------------------------------------


def test_mesh_validation():
    assert Mesh.from_step(1e-3).K == 1000
    assert Mesh(4).nodes == pytest.approx([0, 0.25, 0.5, 0.75, 1])
    with pytest.raises(ValueError):
        Mesh(1)
    with pytest.raises(ValueError):
        Mesh.from_step(0.3)


def test_zero_rhs_is_linear_function():
    spec = IVPSpec(1.5, 0.0, 1.0, lambda x, u: 0 * u)
    g = solve(spec, Mesh(50))
    assert np.array_equal(g.values, g.x.astype(complex))
    r = solve_richardson(spec, Mesh(50))
    assert np.allclose(r.values, g.x, atol=1e-15)


def manufactured(alpha):
    c = 2.0 / math.gamma(3 - alpha)
    return IVPSpec(alpha, 0.0, 0.0, lambda x, u: c * x ** (2 - alpha) + 0 * u)


@pytest.mark.parametrize("alpha", ALPHAS)
def test_manufactured_solution_order(alpha):
    errs = []
    for K in (50, 100, 200, 400, 800):
        g = solve(manufactured(alpha), Mesh(K))
        errs.append(np.max(np.abs(g.values - g.x**2)))
    assert all(e1 < e0 for e0, e1 in zip(errs, errs[1:]))
    orders = [math.log2(e0 / e1) for e0, e1 in zip(errs, errs[1:])]
    assert min(orders) >= 1.0


def test_manufactured_endpoint_close():
    g = solve(manufactured(1.5), Mesh(1000))
    assert abs(g.endpoint - 1.0) < 1e-3


@pytest.mark.parametrize("K", [100, 200])
def test_richardson_improves_manufactured(K):
    spec = manufactured(1.5)
    plain = abs(solve(spec, Mesh(K)).endpoint - 1)
    extrap = abs(solve_richardson(spec, Mesh(K)).endpoint - 1)
    assert extrap < plain


def test_eigen_kernel_against_mittag_leffler():
    spec = IVPSpec(1.5, 0.0, 1.0, lambda x, u: -10.0 * u)
    exact = ml_eval(MLParams(1.5, 2.0), -10.0)
    plain = solve(spec, Mesh(1000)).endpoint
    extrap = solve_richardson(spec, Mesh(1000)).endpoint
    assert abs(plain - exact) <= 1e-4
    assert abs(extrap - exact) < abs(plain - exact)


def test_shooting_profile_matches_closed_form():
    alpha, lam = 1.6, 5.0 + 3.0j
    g = slp_shoot(Potential.zero(), lam, alpha, Mesh(400))
    x = g.x
    exact = np.array([xi * ml_eval(MLParams(alpha, 2.0), -lam * xi**alpha) for xi in x])
    assert np.max(np.abs(g.values - exact)) < 1e-8


def test_shooting_trivial_cases():
    m = Mesh(200)
    assert slp_shoot(Potential.zero(), 0.0, 1.5, m).endpoint == pytest.approx(1.0, abs=1e-14)
    c = Potential.constant(2.5)
    assert slp_shoot(c, 2.5, 1.5, m).endpoint == pytest.approx(1.0, abs=1e-14)


def test_shooting_residual_small_at_eigenvalue():
    assert abs(slp_shoot(Potential.zero(), 13.4205, 1.6, Mesh(1000)).endpoint) <= 1e-3


@settings(max_examples=25, deadline=None)
@given(st.floats(1.05, 1.95), st.floats(-30, 60), st.floats(-30, 30))
def test_conjugation(alpha, re, im):
    q = Potential.sine([1.0, -0.5])
    m = Mesh(40)
    a = slp_shoot(q, complex(re, im), alpha, m).values
    b = slp_shoot(q, complex(re, -im), alpha, m).values
    assert np.allclose(b, a.conj(), rtol=1e-12, atol=1e-14)


@settings(max_examples=25, deadline=None)
@given(st.floats(1.05, 1.95), st.floats(-5, 5), st.floats(-5, 5))
def test_linearity_in_forcing(alpha, s1, s2):
    m = Mesh(64)

    def spec(g):
        return IVPSpec(alpha, 0.0, 0.0, lambda x, u: (1 + x) * u + g(x))

    g1 = lambda x: s1 * np.sin(3 * x)  # noqa: E731
    g2 = lambda x: s2 * x**2  # noqa: E731
    both = solve(spec(lambda x: g1(x) + g2(x)), m).values
    parts = solve(spec(g1), m).values + solve(spec(g2), m).values - solve(spec(lambda x: 0.0), m).values
    assert np.max(np.abs(both - parts)) <= 1e-10 * max(1.0, np.max(np.abs(both)))


def test_divergence_reports_node():
    with pytest.raises(DivergenceError) as info:
        march(1.5, 20, 0.0, 1.0, lambda k, u: u * 1e300 if k >= 5 else u)
    assert info.value.node > 0


def test_corrector_sweeps_converge_to_implicit_solution():
    spec = IVPSpec(1.5, 0.0, 1.0, lambda x, u: -30.0 * u)
    m = Mesh(40)
    one = solve(spec, m, corrector_sweeps=1).values
    many = solve(spec, m, corrector_sweeps=30).values
    more = solve(spec, m, corrector_sweeps=31).values
    assert np.max(np.abs(many - more)) < 1e-12
    assert np.max(np.abs(one - many)) < 1e-2


def test_grid_function_guards():
    with pytest.raises(ValueError):
        GridFunction(Mesh(4), np.zeros(4))
    with pytest.raises(ValueError):
        GridFunction(Mesh(2), [0, np.nan, 1])
    g = GridFunction(Mesh(2), [0, 1, 2])
    with pytest.raises(ValueError):
        g.values[0] = 5
    with pytest.raises(ValueError):
        IVPSpec(2.0, 0, 1, lambda x, u: u)


# -- sensitivity equation -----------------------------------------------------------


def test_sensitivity_zero_direction():
    v = sensitivity_shoot(Potential.zero(), 10.0, lambda x: 0 * x, 1.5, Mesh(100))
    assert np.all(v.values == 0)


def test_sensitivity_linear_in_direction():
    m = Mesh(100)
    q = Potential.sine([0.3])
    w = lambda x: np.sin(2 * np.pi * x)  # noqa: E731
    v1 = sensitivity_shoot(q, 12 + 4j, w, 1.5, m).values
    v2 = sensitivity_shoot(q, 12 + 4j, lambda x: 2 * w(x), 1.5, m).values
    assert np.array_equal(v2, 2 * v1)


def test_sensitivity_matches_finite_difference():
    m = Mesh(200)
    alpha, lam, eps = 1.5, 20 + 5j, 1e-6
    base = Potential.sine([0.5, 0.2])
    w = lambda x: np.sin(np.pi * x)  # noqa: E731
    v = sensitivity_shoot(base, lam, w, alpha, m).endpoint
    plus = slp_shoot(Potential.sine([0.5 + eps, 0.2]), lam, alpha, m).endpoint
    minus = slp_shoot(Potential.sine([0.5 - eps, 0.2]), lam, alpha, m).endpoint
    assert abs(v - (plus - minus) / (2 * eps)) < 1e-6 * abs(v)


def test_sensitivity_with_given_forcing_agrees_with_coupled_run():
    # the coupled march forces with predicted u inside each step, the other
    # route with final nodal u, so they agree to discretisation accuracy
    m = Mesh(100)
    q = Potential.zero()
    w = lambda x: np.sin(np.pi * x)  # noqa: E731
    u = slp_shoot(q, 9.0, 1.5, m, extrapolate=False)
    given_u = sensitivity_shoot(q, 9.0, w, 1.5, m, u=u).endpoint
    coupled = sensitivity_shoot(q, 9.0, w, 1.5, m, extrapolate=False).endpoint
    assert abs(given_u - coupled) < 1e-5 * abs(coupled)
