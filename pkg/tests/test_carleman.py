import math

import numpy as np
import pytest
from hypothesis import assume, given, settings
from hypothesis import strategies as st
from scipy import integrate, optimize

from relboltz import _backend, _pykernels
from relboltz import carleman as cm
from relboltz import kinematics as kin
from relboltz.cross_section import ScatteringKernel
from relboltz.quadrature import AngularGrid

comp = st.floats(-3.0, 3.0, allow_nan=False)
vec = st.tuples(comp, comp, comp).map(np.array)

TINY = cm.QuadratureSpec(2.0, 4, AngularGrid(4, 8), 6, 8, near_subdivision=(2,))
SEP = cm.SeparableTest(cm.Profile("gauss", (0.2, 0, 0), (0.6, 0.6, 0.6)),
                       cm.Profile("gauss", (0, 0.1, 0), (0.2, 0.2, 0.2)),
                       cm.Profile("box", (0, 0, 0.3), (0.7, 0.7, 0.7)), 2.0)


def test_hypersurface_cos_equal_energies():
    v, w = np.array([1.0, 0, 0]), np.array([0.0, 1, 0])
    assert cm.hypersurface_cos(1.0, v, w) == pytest.approx(-1 / math.sqrt(2), rel=1e-14)
    assert cm.hypersurface_cos(3.0, v, w) == pytest.approx(-1 / (3 * math.sqrt(2)), rel=1e-14)
    assert cm.hypersurface_cos(1 / math.sqrt(2) - 1e-9, v, w) is cm.INADMISSIBLE
    assert cm.hypersurface_cos(0.0, v, w) is cm.INADMISSIBLE
    far = cm.hypersurface_cos(1e8, v, w)
    assert -1e-8 < far < 0
    assert cm.admissible_radius(v, w) == pytest.approx(1 / math.sqrt(2), rel=1e-12)
    with pytest.raises(kin.DegenerateCollisionError):
        cm.hypersurface_cos(1.0, v, v)


@settings(max_examples=200, deadline=None)
@given(vec, vec, st.floats(0.0, 5.0), st.floats(0.0, 2 * math.pi))
def test_hypersurface_points_are_collisions(v, w, extra, psi):
    assume(np.linalg.norm(v - w) > 1e-2)
    assume(float(kin.g_bar(v, w)) > 1e-2)
    r = cm.admissible_radius(v, w) + extra + 1e-9
    pt = cm.hypersurface_point(r, psi, v, w)
    assert pt is not cm.INADMISSIBLE
    vs = pt.v_star
    assert np.linalg.norm(vs) == pytest.approx(r, rel=1e-12)
    scale = 1.0 + r + np.abs(v).max()
    assert abs(cm.delta_residual(v, w, vs)) < 1e-9 * scale
    # (v, v_*) -> (v', v + v_* - v') conserves energy exactly on the hypersurface
    ws = v + vs - w
    lhs = float(kin.energy(v) + kin.energy(vs))
    assert float(kin.energy(w) + kin.energy(ws)) == pytest.approx(lhs, rel=1e-10)


@settings(max_examples=100, deadline=None)
@given(vec, vec)
def test_admissible_radius_is_window_start(v, w):
    assume(np.linalg.norm(v - w) > 1e-2)
    lo = cm.admissible_radius(v, w)
    assert cm.hypersurface_cos(lo * (1 + 1e-7) + 1e-12, v, w) is not cm.INADMISSIBLE
    if lo > 1e-6:
        assert cm.hypersurface_cos(lo * (1 - 1e-6), v, w) is cm.INADMISSIBLE


def test_hypersurface_integral_zero():
    v, w = np.array([0.3, 1.0, 0]), np.array([-0.5, 0.2, 0.4])
    assert cm.hypersurface_integral(lambda x: np.zeros(len(x)), v, w, 8, 8, 5.0) == 0.0


def test_indicator_equal_energies_closed_form():
    v, w = np.array([1.0, 0, 0]), np.array([0.0, 1, 0])
    R = 4.0
    got = cm.hypersurface_integral(lambda x: np.ones(len(x)), v, w, 24, 8, R)
    r0 = 1 / math.sqrt(2)
    assert got == pytest.approx(2 * math.pi * (R * R - r0 * r0) / 2, rel=1e-12)


@pytest.mark.parametrize("v, w", [([0.5, -1.0, 0.3], [1.5, 0.4, -0.2]),
                                  ([2.0, 0.0, 0.0], [0.0, 0.1, 0.0]),
                                  ([-0.3, 0.2, 1.0], [0.1, 0.1, 0.1])])
def test_radial_functions_one_dimensional_oracle(v, w):
    v, w = np.array(v), np.array(w)
    d = v - w
    dn = np.linalg.norm(d)
    gb = float(kin.g_bar(v, w))
    am = float(kin.energy(v) - kin.energy(w))

    def ok(r):
        E = math.sqrt(1 + r * r)
        return abs((2 * E * am - gb * gb) / (2 * r * dn)) - 1.0

    # window start by root finding on |cos| = 1, independent of the library
    rs = np.linspace(1e-6, 10, 20001)
    first = rs[np.argmax([ok(r) <= 0 for r in rs])]
    lo = optimize.brentq(ok, first - 10 / 20000, first) if first > 1e-6 else 0.0
    R = 6.0
    for F, f1 in [(lambda x: np.ones(len(x)), lambda r: 1.0),
                  (lambda x: kin.energy(x) ** -3.0, lambda r: (1 + r * r) ** -1.5)]:
        ref = 2 * math.pi * gb / dn * integrate.quad(lambda r: r * f1(r), lo, R,
                                                     epsabs=0, epsrel=1e-13)[0]
        got = cm.hypersurface_integral(F, v, w, 32, 8, R)
        assert got == pytest.approx(ref, rel=1e-9)


@settings(max_examples=60, deadline=None)
@given(vec, vec)
def test_weighted_integral_bounded(v, w):
    assume(float(kin.g_bar(v, w)) > 1e-3)
    # g_bar <= |v - v'| and int_0^inf r (1 + r^2)^(-3/2) dr = 1 give 2 pi
    got = cm.hypersurface_integral(lambda x: kin.energy(x) ** -3.0, v, w, 32, 8, 200.0)
    assert 0 < got <= 2 * math.pi


def test_profile_validation_and_values():
    with pytest.raises(ValueError):
        cm.Profile("cone", (0, 0, 0), (1, 1, 1))
    with pytest.raises(ValueError):
        cm.Profile("box", (0, 0, 0), (1, 0, 1))
    box = cm.Profile("box", (0.5, 0, 0), (0.5, 0.5, 0.5))
    vals = box.values(np.array([[0.9, 0, 0], [1.1, 0, 0], [0.5, 0.4, -0.4]]), 2.0)
    np.testing.assert_array_equal(vals, [1, 0, 1])
    bump = cm.Profile("bump", (0, 0, 0), (1, 1, 1))
    assert bump.values(np.zeros((1, 3)), 2.0)[0] == pytest.approx(1.0)
    assert bump.values(np.array([[1.0, 0, 0]]), 2.0)[0] == 0.0
    gauss = cm.Profile("gauss", (0, 0, 0), (2, 2, 2))
    assert gauss.values(np.array([[0.5, 0, 0]]), 2.0)[0] == pytest.approx(math.exp(-1))
    assert gauss.values(np.array([[2.5, 0, 0]]), 2.0)[0] == 0.0
    lo, hi = gauss.radius_bounds()
    assert lo == 0.0 and hi == pytest.approx(3.0)


def test_weak_forms_vanish_for_zero_test():
    zero = lambda v, vs, vp: np.zeros(np.shape(vp)[:-1])
    spec = cm.QuadratureSpec(1.5, 3, AngularGrid(3, 4), 4, 4, near_subdivision=(2,))
    assert cm.weak_form_direct(zero, spec=spec) == 0.0
    assert cm.weak_form_carleman(zero, spec=spec) == 0.0


def test_weak_forms_vanish_off_cutoff_support():
    def behind(v, vs, vp):
        gb = kin.relative_momentum(v, vp)
        gt = kin.relative_momentum(vp, vs)
        return (gt < gb).astype(float)

    spec = cm.QuadratureSpec(1.5, 3, AngularGrid(3, 4), 4, 4, near_subdivision=(2,))
    assert cm.weak_form_direct(behind, spec=spec) == 0.0
    assert cm.weak_form_carleman(behind, spec=spec) == 0.0


def test_weak_direct_enumeration():
    k = ScatteringKernel(1.2, 0.9)
    spec = cm.QuadratureSpec(2.0, 4, AngularGrid(3, 4))
    A = cm.SeparableTest(cm.Profile("box", (-0.5, 0.5, 0.5), (0.3, 0.3, 0.3)),
                         cm.Profile("box", (0.5, -0.5, 0.5), (0.3, 0.3, 0.3)),
                         cm.Profile("gauss", (0, 0, 0), (0.8, 0.8, 0.8)), 2.0)
    v, vs = np.array([-0.5, 0.5, 0.5]), np.array([0.5, -0.5, 0.5])
    g = float(kin.relative_momentum(v, vs))
    n, e1, e2 = kin.collision_frame(v, vs)
    om = spec.angular.directions(n, e1, e2).reshape(-1, 3)
    vp, _ = kin.post_collision_momenta(np.broadcast_to(v, om.shape), np.broadcast_to(vs, om.shape), om)
    sig = k.phi(g) * k.angular(om @ n)
    s = float(kin.s_invariant(v, vs))
    weight = g * math.sqrt(s) / float(kin.energy(v) * kin.energy(vs))
    inner = np.sum(spec.angular.weights().reshape(-1) * sig * A.c.values(vp, 2.0))
    ref = weight * inner * spec.grid.cell_volume**2
    for backend in ["numpy"] + (["cython"] if _backend.compiled is not None else []):
        assert cm.weak_form_direct(A, k, spec, backend=backend) == pytest.approx(ref, rel=1e-12)


def test_carleman_paths_agree():
    ref = cm.weak_form_carleman(SEP, spec=TINY, backend="numpy")
    assert ref > 0
    generic = cm.weak_form_carleman(lambda v, vs, vp: SEP(v, vs, vp), spec=TINY)
    assert generic == pytest.approx(ref, rel=1e-12)
    direct = cm.weak_form_direct(SEP, spec=TINY, backend="numpy")
    generic = cm.weak_form_direct(lambda v, vs, vp: SEP(v, vs, vp), spec=TINY)
    assert generic == pytest.approx(direct, rel=1e-12)


@pytest.mark.skipif(_backend.compiled is None, reason="compiled kernels not built")
def test_carleman_backends_agree():
    spec = cm.QuadratureSpec(2.0, 4, AngularGrid(4, 8), 6, 8, near_subdivision=(2, 2))
    for A in cm.default_battery(2.0)[:3]:
        c = cm.weak_form_carleman(A, spec=spec, backend="cython")
        p = cm.weak_form_carleman(A, spec=spec, backend="numpy")
        assert c == pytest.approx(p, rel=1e-12)
        c = cm.weak_form_direct(A, spec=spec, backend="cython")
        p = cm.weak_form_direct(A, spec=spec, backend="numpy")
        assert c == pytest.approx(p, rel=1e-12)


def test_hypersurface_pair_backends_agree():
    spec = cm.QuadratureSpec()
    xi, xw = spec.radial_rule
    pxi, pxw = spec.arc_rule
    b = cm.Profile("gauss", (0.3, -0.2, 0.4), (1.1, 0.8, 1.3))
    lo, hi = b.radius_bounds()
    rng = np.random.default_rng(9)
    for _ in range(5):
        v, w = rng.uniform(-2, 2, 3), rng.uniform(-2, 2, 3)
        args = (b.code, b.params, 4.0, lo, hi, spec.radial_cutoff, xi, xw, pxi, pxw, 1.0, 1.0)
        ref = _pykernels.hypersurface_pair(v.copy(), w.copy(), *args)
        bfun = lambda x: b.values(x, 4.0)
        gen = _pykernels.hypersurface_generic(v, w, bfun, lo, hi, spec.radial_cutoff,
                                              xi, xw, pxi, pxw, 1.0, 1.0)
        assert gen == pytest.approx(ref, rel=1e-13)
        if _backend.compiled is not None:
            got = _backend.compiled.hypersurface_pair(v.copy(), w.copy(), *args)
            assert got == pytest.approx(ref, rel=1e-11)


def test_quadrature_spec_validation():
    with pytest.raises(ValueError):
        cm.QuadratureSpec(n_r=1)
    with pytest.raises(ValueError):
        cm.QuadratureSpec(near_subdivision=(3, 2))
    assert cm.QuadratureSpec(4.0).radial_cutoff == pytest.approx(math.sqrt(3) * 4 + 4)


def test_equivalence_report_statistics():
    rep = cm.EquivalenceReport((4.0, 8.2, 3.9), (1.0, 2.0, 1.0))
    np.testing.assert_allclose(rep.ratios, [4.0, 4.1, 3.9])
    assert rep.kappa == pytest.approx(4.0)
    assert rep.cv == pytest.approx(np.std([4.0, 4.1, 3.9]) / 4.0)
    assert rep.max_rel_dev == pytest.approx(0.025)
