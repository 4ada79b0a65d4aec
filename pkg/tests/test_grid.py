import json

import numpy as np
import pytest

import friedrichs_lab as fl
from friedrichs_lab.errors import DegenerateDomainError, InvalidResolutionError


def test_interval_nodes_and_mask():
    g = fl.interval_grid(0.0, 1.0, 4)
    assert g.n_nodes == 5
    np.testing.assert_allclose(g.nodes[:, 0], [0.0, 0.25, 0.5, 0.75, 1.0])
    assert g.boundary_mask[0] and g.boundary_mask[4]
    assert not g.boundary_mask[1:4].any()


def test_rectangle_counts():
    g = fl.rectangle_grid(0.0, 1.0, 0.0, 1.0, 2, 2)
    assert g.n_nodes == 9
    assert g.n_elements == 8
    assert int(g.boundary_mask.sum()) == 8
    assert np.all(g.el_measure > 0)
    assert g.measure == pytest.approx(1.0)


def test_invalid_resolution_and_degenerate_domain():
    with pytest.raises(InvalidResolutionError):
        fl.interval_grid(0.0, 1.0, 1)
    with pytest.raises(DegenerateDomainError):
        fl.interval_grid(1.0, 1.0, 4)
    with pytest.raises(DegenerateDomainError):
        fl.rectangle_grid(0.0, 0.0, 0.0, 1.0, 4, 4)


def test_gradient_is_finite_difference_1d():
    g = fl.interval_grid(0.0, 1.0, 8)
    u = fl.GridFunction.from_callable(g, lambda x: x * (1.0 - x))
    field = fl.gradient(u)
    h = 1.0 / 8
    expected = (u.values[1:] - u.values[:-1]) / h
    np.testing.assert_allclose(field.gradients[:, 0], expected)


def test_gradient_linearity_and_zero():
    g = fl.rectangle_grid(0.0, 1.0, 0.0, 1.0, 3, 3)
    u = fl.sample_test_function(g, 1)
    v = fl.sample_test_function(g, 2)
    lhs = fl.gradient(u + v).gradients
    rhs = fl.gradient(u).gradients + fl.gradient(v).gradients
    np.testing.assert_allclose(lhs, rhs, atol=1e-14)
    assert np.all(fl.gradient(fl.GridFunction.zero(g)).gradients == 0.0)


def test_integrate_constants():
    g1 = fl.interval_grid(0.0, 1.0, 7)
    assert fl.integrate(g1, np.ones(g1.n_elements)) == pytest.approx(1.0)
    g2 = fl.rectangle_grid(0.0, 2.0, 0.0, 1.5, 3, 4)
    c = 2.5
    assert fl.integrate(g2, np.full(g2.n_elements, c)) == pytest.approx(3.0 * c)
    with pytest.raises(ValueError):
        fl.integrate(g1, np.ones(3))


def test_refinement_consistency_sine_energy():
    # exact integral of |d/dx sin(pi x)|^2 over (0,1) is pi^2/2
    exact = np.pi**2 / 2.0
    errs = []
    for n in (32, 64, 128):
        g = fl.interval_grid(0.0, 1.0, n)
        u = fl.GridFunction.from_callable(g, lambda x: np.sin(np.pi * x))
        errs.append(abs(fl.norm_grad_p(u, 2.0) - exact))
    order = np.log2(errs[0] / errs[1]), np.log2(errs[1] / errs[2])
    assert min(order) >= 1.9


@pytest.mark.parametrize("style", ["random-nodal", "smooth-mode", "bump"])
def test_sample_determinism_and_boundary(style):
    g = fl.rectangle_grid(0.0, 1.0, 0.0, 1.0, 5, 5)
    a = fl.sample_test_function(g, 42, style)
    b = fl.sample_test_function(g, 42, style)
    np.testing.assert_array_equal(a.values, b.values)
    assert np.all(a.values[g.boundary_mask] == 0.0)
    assert not a.is_zero()
    c = fl.sample_test_function(g, 43, style)
    assert np.any(a.values[g.free] != c.values[g.free])


def test_sample_unknown_style():
    g = fl.interval_grid(0.0, 1.0, 4)
    with pytest.raises(ValueError):
        fl.sample_test_function(g, 0, "nope")


def test_gridfunction_forces_boundary_and_length():
    g = fl.interval_grid(0.0, 1.0, 4)
    u = fl.GridFunction(g, np.ones(5))
    assert u.values[0] == 0.0 and u.values[4] == 0.0
    with pytest.raises(ValueError):
        fl.GridFunction(g, np.ones(6))


def test_json_roundtrip_bit_exact(tmp_path):
    g = fl.rectangle_grid(0.0, 1.0, 0.0, 2.0, 4, 3)
    u = fl.sample_test_function(g, 9, "random-nodal")
    path = tmp_path / "u.json"
    fl.save_gridfunction(u, path)
    v = fl.load_gridfunction(path)
    np.testing.assert_array_equal(u.values, v.values)
    assert v.grid.describe() == g.describe()
    # serialized form itself is stable
    d = json.loads(path.read_text())
    assert d["dim"] == 2 and d["n_cells"] == [4, 3]


def test_quadrature_weights_sum_to_measure():
    for g in (fl.interval_grid(0.0, 1.0, 5),
              fl.rectangle_grid(0.0, 1.0, 0.0, 1.0, 3, 2)):
        np.testing.assert_allclose(g.qp_weights.sum(axis=1), g.el_measure)
        assert fl.grid.fsum(g.lumped_weights) == pytest.approx(g.measure)
