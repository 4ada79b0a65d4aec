import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import friedrichs_lab as fl
from friedrichs_lab.errors import DegenerateBaseError
from friedrichs_lab.functionals import _matA_stiffness


def test_exponents_validation():
    with pytest.raises(ValueError):
        fl.Exponents(1.5, 1.2)
    with pytest.raises(ValueError):
        fl.Exponents(2.0, 3.0)
    e = fl.Exponents(3.0, 2.0)
    assert e.p_over_q == pytest.approx(1.5)
    assert e.pq_ratio == pytest.approx(0.5)
    assert e.p2q_ratio == pytest.approx(-0.5)


def test_spath_quadrature_normalization():
    for n in (8, 16, 32):
        sq = fl.SPathQuadrature.gauss(n)
        assert np.all(sq.weights > 0)
        assert sq.weights.sum() == pytest.approx(0.5, rel=1e-14)
        assert np.all((sq.nodes > 0) & (sq.nodes < 1))


def test_norm_grad_p_hat_function():
    # hat with peak 1 at the midpoint of (0,1), two cells
    g = fl.interval_grid(0.0, 1.0, 2)
    u = fl.GridFunction(g, [0.0, 1.0, 0.0])
    for p in (2.0, 3.0, 4.5):
        assert fl.norm_grad_p(u, p) == pytest.approx(2.0**p)


def test_norm_homogeneity_and_zero():
    g = fl.interval_grid(0.0, 1.0, 32)
    u = fl.sample_test_function(g, 5, "smooth-mode")
    assert fl.norm_grad_p(fl.GridFunction.zero(g), 3.0) == 0.0
    assert fl.norm_grad_p(u * -2.0, 3.0) == pytest.approx(
        2.0**3 * fl.norm_grad_p(u, 3.0), rel=1e-13)
    assert fl.norm_q(u * -2.0, 2.5) == pytest.approx(
        2.0**2.5 * fl.norm_q(u, 2.5), rel=1e-13)


def test_norm_q_oracle_parabola():
    # integral of (x(1-x))^2 over (0,1) is 1/30 exactly
    g = fl.interval_grid(0.0, 1.0, 512)
    u = fl.GridFunction.from_callable(g, lambda x: x * (1.0 - x))
    assert fl.norm_q(u, 2.0) == pytest.approx(1.0 / 30.0, rel=1e-5)


def test_rayleigh_scale_invariance_and_oracle():
    g = fl.interval_grid(0.0, 1.0, 256)
    exps = fl.Exponents(2.0, 2.0)
    u = fl.GridFunction.from_callable(g, lambda x: np.sin(np.pi * x))
    r = fl.rayleigh(u, exps)
    assert r == pytest.approx(np.pi**2, rel=1e-3)
    assert fl.rayleigh(u * 2.0, exps) == pytest.approx(r, rel=1e-13)
    with pytest.raises(ZeroDivisionError):
        fl.rayleigh(fl.GridFunction.zero(g), exps)


def test_deficit_J_on_ground_ray(pairs):
    pair = pairs(1, 3, 2, 128)
    exps = pair.exps
    scale = pair.lambda1 / exps.p
    assert abs(fl.deficit_J(pair.phi1, pair, exps)) <= 1e-8 * scale
    for c in (-2.0, 0.5):
        assert abs(fl.deficit_J(pair.phi1 * c, pair, exps)) \
            <= 1e-8 * abs(c) ** exps.p * scale
    # mismatched grid rejected
    other = fl.interval_grid(0.0, 1.0, 64)
    with pytest.raises(ValueError):
        fl.deficit_J(fl.GridFunction.zero(other), pair, exps)


def test_deficit_nonnegative_on_samples(pairs):
    pair = pairs(1, 3, 2, 128)
    exps = pair.exps
    for i in range(100):
        u = fl.sample_test_function(pair.grid, 300 + i,
                                    ("random-nodal", "smooth-mode", "bump")[i % 3])
        scale = max(1.0, fl.norm_grad_p(u, exps.p))
        assert fl.deficit_J(u, pair, exps) >= -1e-10 * scale


def test_dJ_vanishes_at_ground_state(pairs):
    pair = pairs(1, 3, 2, 128)
    exps = pair.exps
    for i in range(20):
        v = fl.sample_test_function(pair.grid, 40 + i, "smooth-mode")
        nv = fl.norm_grad_p(v, exps.p) ** (1.0 / exps.p)
        assert abs(fl.dJ(pair.phi1, v, pair, exps)) <= 1e-7 * nv


def test_dJ_linear_in_v_and_degenerate_base(pairs):
    pair = pairs(1, 3, 2, 128)
    exps = pair.exps
    g = pair.grid
    u = fl.sample_test_function(g, 3, "smooth-mode")
    v = fl.sample_test_function(g, 4, "bump")
    w = fl.sample_test_function(g, 5, "random-nodal")
    lhs = fl.dJ(u, v + 2.0 * w, pair, exps)
    rhs = fl.dJ(u, v, pair, exps) + 2.0 * fl.dJ(u, w, pair, exps)
    assert lhs == pytest.approx(rhs, rel=1e-11, abs=1e-12)
    assert fl.dJ(u, fl.GridFunction.zero(g), pair, exps) == 0.0
    with pytest.raises(DegenerateBaseError):
        fl.dJ(fl.GridFunction.zero(g), v, pair, exps)


def test_dJ_matches_central_difference(pairs):
    pair = pairs(1, 3, 2, 128)
    exps = pair.exps
    eps = 1e-5
    for i in range(10):
        u = fl.sample_test_function(pair.grid, 70 + i, "smooth-mode")
        v = fl.sample_test_function(pair.grid, 170 + i, "bump")
        fd = (fl.deficit_J(u + eps * v, pair, exps)
              - fl.deficit_J(u - eps * v, pair, exps)) / (2.0 * eps)
        an = fl.dJ(u, v, pair, exps)
        assert an == pytest.approx(fd, rel=1e-5)


@settings(max_examples=200, deadline=None)
@given(
    a=st.lists(st.floats(-10, 10), min_size=2, max_size=2),
    b=st.lists(st.floats(-10, 10), min_size=2, max_size=2),
    p=st.sampled_from([2.0, 2.5, 3.0, 4.0]),
)
def test_matA_quad_bounds(a, b, p):
    a = np.array(a)
    b = np.array(b)
    val = fl.matA_quad(a, b, p)
    base = np.linalg.norm(a) ** (p - 2.0) * np.dot(b, b)
    assert val >= base - 1e-9 * max(1.0, base)
    assert val <= (p - 1.0) * base + 1e-9 * max(1.0, base)


def test_matA_identities():
    rng = np.random.Generator(np.random.Philox(key=1))
    for p in (2.5, 3.0, 4.0):
        a = rng.standard_normal(2)
        b = rng.standard_normal(2)
        # A(a) a = (p-1)|a|^{p-2} a
        np.testing.assert_allclose(
            fl.matA_apply(a, a, p),
            (p - 1.0) * np.linalg.norm(a) ** (p - 2.0) * a, rtol=1e-12)
        assert np.all(fl.matA_apply(np.zeros(2), b, p) == 0.0)
        # quadratic form consistent with the action
        assert fl.matA_quad(a, b, p) == pytest.approx(
            float(fl.matA_apply(a, b, p) @ b), rel=1e-12)


def test_norm_phi1_properties(pairs):
    pair = pairs(1, 3, 2, 128)
    g = pair.grid
    p = pair.exps.p
    assert fl.norm_phi1(fl.GridFunction.zero(g), pair, p) == 0.0
    u = fl.sample_test_function(g, 11, "smooth-mode")
    v = fl.sample_test_function(g, 12, "bump")
    assert fl.norm_phi1(u + v, pair, p) <= (
        fl.norm_phi1(u, pair, p) + fl.norm_phi1(v, pair, p) + 1e-12)
    # sandwich against the linearization stiffness
    gv = g.element_gradients(u.values)
    quad = _matA_stiffness(pair, gv, p)
    n2 = fl.norm_phi1(u, pair, p) ** 2
    assert n2 - 1e-10 <= quad <= (p - 1.0) * n2 + 1e-10


def test_norm_phi1_reduces_to_h1_at_p2(pairs):
    pair = pairs(1, 2, 2, 128)
    u = fl.sample_test_function(pair.grid, 13, "smooth-mode")
    assert fl.norm_phi1(u, pair, 2.0) == pytest.approx(
        np.sqrt(fl.norm_grad_p(u, 2.0)), rel=1e-13)


def test_Q0_properties(pairs):
    pair = pairs(1, 3, 2, 128)
    exps = pair.exps
    stiff = _matA_stiffness(
        pair, pair.grid.element_gradients(pair.phi1.values), exps.p)
    assert abs(fl.Q0(pair.phi1, pair, exps)) <= 1e-8 * stiff
    v = fl.sample_test_function(pair.grid, 21, "smooth-mode")
    assert fl.Q0(v * 2.0, pair, exps) == pytest.approx(
        4.0 * fl.Q0(v, pair, exps), rel=1e-12)
    for i in range(100):
        v = fl.sample_test_function(pair.grid, 400 + i,
                                    ("random-nodal", "smooth-mode")[i % 2])
        scale = fl.norm_phi1(v, pair, exps.p) ** 2 + 1.0
        assert fl.Q0(v, pair, exps) >= -1e-9 * scale


def test_Q0_equals_P_families_at_zero(pairs, squad16):
    pair = pairs(1, 3, 2, 128)
    exps = pair.exps
    for i in range(10):
        v = fl.sample_test_function(pair.grid, 500 + i, "smooth-mode")
        q0 = fl.Q0(v, pair, exps)
        alt = (fl.P1_family(0.0, v, pair, exps, squad16)
               - pair.lambda1 * fl.P0_family(0.0, v, pair, exps, squad16))
        assert q0 == pytest.approx(alt, rel=1e-12, abs=1e-12)


def test_P1_at_zero_is_half_stiffness(pairs, squad16):
    pair = pairs(1, 3, 2, 128)
    exps = pair.exps
    v = fl.sample_test_function(pair.grid, 31, "smooth-mode")
    gv = pair.grid.element_gradients(v.values)
    assert fl.P1_family(0.0, v, pair, exps, squad16) == pytest.approx(
        0.5 * _matA_stiffness(pair, gv, exps.p), rel=1e-10)


def test_P0_positive(pairs, squad16):
    pair = pairs(1, 3, 2, 128)
    v = fl.sample_test_function(pair.grid, 32, "bump")
    assert fl.P0_family(1.0, v, pair, pair.exps, squad16) > 0.0


def test_R_p_collinear_and_positive(pairs):
    pair = pairs(1, 3, 3, 128)
    g = pair.grid
    p = pair.exps.p
    assert np.all(fl.R_p(pair.phi1, pair.phi1, 0.5, p) == 0.0)
    assert np.allclose(fl.R_p(pair.phi1 * 2.0, pair.phi1, 1.0, p), 0.0,
                       atol=1e-20)
    v = fl.sample_test_function(g, 33, "smooth-mode")
    vals = fl.R_p(fl.GridFunction(g, np.abs(v.values)), pair.phi1, 0.3, p)
    assert np.all(vals >= 0.0)
    assert fl.integrate(g, vals) > 0.0
    with pytest.raises(ValueError):
        fl.R_p(v, pair.phi1, 1.5, p)


def test_M_l_homogeneity_and_zero(pairs):
    pair = pairs(1, 3, 2, 128)
    exps = pair.exps
    l1 = fl.phi_power(exps.q - 1.0)
    assert fl.M_l(pair.phi1, l1, pair, exps) == pytest.approx(0.0, abs=1e-12)
    u = fl.sample_test_function(pair.grid, 34, "smooth-mode")
    assert fl.M_l(u * 2.0, l1, pair, exps) == pytest.approx(
        2.0**exps.p * fl.M_l(u, l1, pair, exps), rel=1e-12)


def test_energy_E_basics(pairs):
    pair = pairs(1, 3, 2, 128)
    exps = pair.exps
    g = pair.grid
    f = fl.project_forcing(fl.sample_test_function(g, 101, "smooth-mode"),
                           pair)
    assert fl.energy_E(fl.GridFunction.zero(g), pair, exps, f) == 0.0
    assert abs(fl.energy_E(pair.phi1, pair, exps, f)) <= 1e-10
