import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from relboltz import verification
from relboltz.cross_section import (ScatteringKernel, angular_mass, angular_mass_quadrature,
                                    carleman_weight, sigma, symmetrize)
from relboltz.kinematics import DegenerateCollisionError
from relboltz.quadrature import AngularGrid, gauss_legendre, hemisphere_rule


def test_sigma_examples():
    k = ScatteringKernel()
    assert sigma(k, 1.7, 1.0) == 0.0
    assert sigma(k, 2.0, 0.0) == pytest.approx(2.0, rel=1e-15)
    assert sigma(k, 2.0, -0.5) == 0.0
    with pytest.raises(ValueError):
        sigma(k, 2.0, 1.5)


def test_kernel_validation():
    with pytest.raises(ValueError):
        ScatteringKernel(0.0, 1.0)
    with pytest.raises(ValueError):
        ScatteringKernel(1.0, -2.0)


def test_symmetrize():
    one = symmetrize(lambda g, c: np.ones_like(c))
    np.testing.assert_array_equal(one(1.0, np.array([0.3, -0.3, 0.0])), [2.0, 0.0, 2.0])
    k = ScatteringKernel(1.0, 1.5)
    full = symmetrize(lambda g, c: 1.5 * np.sqrt(1 - c * c))
    c = np.linspace(-1, 1, 11)
    np.testing.assert_allclose(full(1.0, c), 2 * k.angular(c), atol=1e-15)
    supported = symmetrize(lambda g, c: k.angular(c))
    np.testing.assert_allclose(supported(1.0, c[c > 0]), k.angular(c[c > 0]), atol=1e-15)


def test_angular_mass_values():
    assert angular_mass(ScatteringKernel()) == pytest.approx(4.934802200544679, rel=1e-15)
    assert angular_mass(ScatteringKernel(1.0, 2.0)) == pytest.approx(math.pi**2, rel=1e-15)
    k = ScatteringKernel(1.0, 1.0)
    assert abs(angular_mass_quadrature(k, 64) / angular_mass(k) - 1) <= 1e-10


def test_polar_rule_orders():
    orders = verification.hemisphere_order_check()
    assert min(orders.values()) >= 4


def test_hemisphere_rule_weights():
    ct, st_, pw, phi = hemisphere_rule(6, 8)
    assert float(np.sum(pw)) * 2 * math.pi == pytest.approx(2 * math.pi, rel=1e-14)
    assert np.all((ct > 0) & (ct < 1))
    np.testing.assert_allclose(ct**2 + st_**2, 1.0, atol=1e-15)
    ang = AngularGrid(6, 8)
    assert ang.weights().sum() == pytest.approx(2 * math.pi, rel=1e-14)
    d = ang.directions([0, 0, 1.0], [1.0, 0, 0], [0, 1.0, 0])
    np.testing.assert_allclose(np.linalg.norm(d, axis=-1), 1.0, atol=1e-15)


def test_gauss_legendre_interval():
    x, w = gauss_legendre(5, 1.0, 3.0)
    assert np.sum(w) == pytest.approx(2.0, rel=1e-15)
    assert np.sum(w * x**9) == pytest.approx((3**10 - 1) / 10, rel=1e-13)


def test_angular_grid_validation():
    with pytest.raises(ValueError):
        AngularGrid(1, 8)
    with pytest.raises(ValueError):
        AngularGrid(4, 2)
    assert AngularGrid(4, 8).refined() == AngularGrid(8, 16)


def test_carleman_weight_examples():
    k = ScatteringKernel()
    g = 3.0
    assert carleman_weight(k, g, g / math.sqrt(2), g / math.sqrt(2)) == pytest.approx(math.sqrt(2))
    assert carleman_weight(k, 5.0, 4.0, 3.0) == 0.0
    with pytest.raises(DegenerateCollisionError):
        carleman_weight(k, 0.0, 0.0, 0.0)
    with pytest.raises(ValueError):
        carleman_weight(k, 5.0, 1.0, 1.0)


@settings(max_examples=300, deadline=None)
@given(st.floats(0.01, 50.0), st.floats(0.0, math.pi / 2), st.floats(0.1, 3), st.floats(0.1, 3))
def test_carleman_weight_matches_sigma(g, theta, cphi, cang):
    k = ScatteringKernel(cphi, cang)
    gb, gt = g * math.sin(theta / 2), g * math.cos(theta / 2)
    # sigma from sin(theta) directly; through cos(theta) it loses digits near theta = 0
    ref = cphi * g * cang * math.sin(theta)
    if theta > 0.1:
        assert sigma(k, g, (gt * gt - gb * gb) / (g * g)) == pytest.approx(ref, rel=1e-12)
    assert carleman_weight(k, g, gb, gt) * gb == pytest.approx(ref, rel=1e-12, abs=1e-300)
