import numpy as np
import pytest

from hardrods import quadrature as quad
from hardrods.errors import QuadratureFailure


def test_smooth_integrals():
    assert quad.integrate(np.sin, 0.0, np.pi) == pytest.approx(2.0, abs=1e-12)
    assert quad.integrate(np.exp, -1.0, 2.0) == pytest.approx(np.e ** 2 - np.exp(-1), abs=1e-10)
    assert quad.integrate(np.exp, 2.0, 2.0) == 0.0


def test_breakpoints_resolve_kinks():
    got = quad.integrate(np.abs, -1.0, 3.0, breakpoints=[0.0])
    assert got == pytest.approx(5.0, abs=1e-14)
    step = quad.integrate(lambda x: (x > 0.3).astype(float), 0.0, 1.0, breakpoints=[0.3])
    assert step == pytest.approx(0.7, abs=1e-14)


def test_budget_exhaustion_raises():
    with pytest.raises(QuadratureFailure):
        quad.integrate(lambda x: np.sin(1.0 / np.maximum(np.abs(x), 1e-300)), 0.0, 1.0, tol=1e-14, budget=2000)


def test_gauss_legendre_exact_on_polynomials():
    x, w = quad.gauss_legendre(6)
    for k in range(12):
        want = (1 - (-1) ** (k + 1)) / (k + 1)
        assert np.dot(w, x ** k) == pytest.approx(want, abs=1e-13)


def test_composite_rule_with_breaks():
    x, w = quad.composite_gl(0.0, 2.0, breakpoints=[1.0], n=8)
    assert np.all((x > 0) & (x < 2))
    assert np.dot(w, np.abs(x - 1.0)) == pytest.approx(1.0, abs=1e-14)


def test_monotone_solver():
    target = np.array([0.5, 2.0, 10.0])
    root = quad.solve_increasing(lambda x: x + np.sinh(x), lambda x: 1 + np.cosh(x), target)
    np.testing.assert_allclose(root + np.sinh(root), target, atol=1e-11)
