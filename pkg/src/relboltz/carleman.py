"""Carleman representation of the gain term.

Given v and v', the admissible v_* lie on a two-dimensional hypersurface. In
spherical coordinates about d = (v - v')/|v - v'| the constraint fixes the
polar cosine as a function of r = |v_*|, leaving (r, psi) free with measure
r * g_bar / |v - v'| dr dpsi. The weak-form functions integrate a test
function A(v, v_*, v') once through the omega form and once through this
hypersurface form; their ratio is a single constant.
"""
import math
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from . import _backend, _pykernels
from .collision_operator import angular_arrays
from .cross_section import ScatteringKernel
from .field import DensityField
from .kinematics import DegenerateCollisionError, as_momentum, energy, orthonormal_completion
from .quadrature import AngularGrid, gauss_legendre

INADMISSIBLE = None
RESIDUAL_TOL = 1e-9


@dataclass(frozen=True)
class HypersurfacePoint:
    r: float
    cos_phi_star: float
    psi: float
    v_star: np.ndarray = field(repr=False)


def _geometry(v, v_prime):
    v, w = as_momentum(v), as_momentum(v_prime)
    e, we = float(energy(v)), float(energy(w))
    d = v - w
    dn = math.sqrt(d @ d)
    if dn == 0.0:
        raise DegenerateCollisionError("v and v' coincide")
    am = d @ (v + w) / (e + we)
    gb2 = max(dn * dn - am * am, 0.0)
    return v, w, e, we, d, dn, am, gb2


def hypersurface_cos(r, v, v_prime):
    """cos(phi*) of the hypersurface at radius r, or INADMISSIBLE.

    INADMISSIBLE when |cos| > 1 or when v0 + v0_* - v'0 < 1.
    """
    _, _, _, _, _, dn, am, gb2 = _geometry(v, v_prime)
    if r <= 0.0:
        return INADMISSIBLE
    E = math.sqrt(1.0 + r * r)
    c = (2.0 * E * am - gb2) / (2.0 * r * dn)
    if abs(c) > 1.0 or E + am < 1.0:
        return INADMISSIBLE
    return c


def hypersurface_point(r, psi, v, v_prime):
    """Reconstruct v_* at (r, psi) in the frame with third axis along v - v'."""
    c = hypersurface_cos(r, v, v_prime)
    if c is INADMISSIBLE:
        return INADMISSIBLE
    v, w = as_momentum(v), as_momentum(v_prime)
    dhat = (v - w) / np.linalg.norm(v - w)
    e1, e2 = orthonormal_completion(dhat)
    s = math.sqrt(max(1.0 - c * c, 0.0))
    vs = r * (c * dhat + s * (math.cos(psi) * e1 + math.sin(psi) * e2))
    return HypersurfacePoint(float(r), float(c), float(psi) % (2.0 * math.pi), vs)


def delta_residual(v, v_prime, v_star):
    """g_bar/2 + (-v0_* (v0 - v'0) + v_* . (v - v'))/g_bar; zero on the hypersurface."""
    _, _, _, _, d, _, am, gb2 = _geometry(v, v_prime)
    vs = np.asarray(v_star, dtype=float)
    gb = math.sqrt(gb2)
    return gb / 2.0 + (-energy(vs) * am + vs @ d) / gb


def admissible_radius(v, v_prime):
    """Smallest |v_*| on the hypersurface."""
    v, w, e, we, *_ = _geometry(v, v_prime)
    return _pykernels.admissible_radius(v, e, w, we)


def hypersurface_integral(F, v, v_prime, n_r, n_psi, r_max, breakpoints=()):
    """Integral of F over the hypersurface with its natural measure, |v_*| <= r_max.

    ``F`` maps an (M, 3) array of v_* to M values. The radial window starts
    at the admissible radius; Gauss-Legendre under a smoothstep substitution
    absorbs the square-root behaviour at its ends. Extra ``breakpoints``
    split the window where F is known to be non-smooth in r.
    """
    v, w, e, we, d, dn, am, gb2 = _geometry(v, v_prime)
    if gb2 <= 0.0:
        raise DegenerateCollisionError("g_bar vanishes")
    gb = math.sqrt(gb2)
    lo = _pykernels.admissible_radius(v, e, w, we)
    if r_max <= lo:
        return 0.0
    cuts = sorted({lo, float(r_max), *(b for b in breakpoints if lo < b < r_max)})
    dhat = d / dn
    e1, e2 = orthonormal_completion(dhat)
    psi = 2.0 * np.pi * np.arange(n_psi) / n_psi
    ring = np.cos(psi)[:, None] * e1 + np.sin(psi)[:, None] * e2
    t, tw = gauss_legendre(n_r, 0.0, 1.0)
    total = 0.0
    for a0, a1 in zip(cuts[:-1], cuts[1:]):
        length = a1 - a0
        r = a0 + length * t * t * (3.0 - 2.0 * t)
        dr = length * 6.0 * t * (1.0 - t) * tw
        E = np.sqrt(1.0 + r * r)
        c = np.clip((2.0 * E * am - gb2) / (2.0 * r * dn), -1.0, 1.0)
        s = np.sqrt(1.0 - c * c)
        vs = r[:, None, None] * (c[:, None, None] * dhat + s[:, None, None] * ring[None])
        vals = np.asarray(F(vs.reshape(-1, 3)), dtype=float).reshape(n_r, n_psi)
        total += float(np.sum(dr * r * vals.sum(axis=1))) * (2.0 * np.pi / n_psi)
    return total * gb / dn


@dataclass(frozen=True)
class Profile:
    """Compactly supported factor of a separable test function.

    kind 'gauss': exp(-|S(x - c)|^2), cut to zero where the exponent exceeds 36;
    'bump': exp(1 - 1/(1 - |S(x - c)|^2)) inside the unit S-ellipsoid;
    'box': indicator of |x_i - c_i| <= scale_i. ``scale`` holds the inverse
    widths S for gauss and bump and the half-widths for box.
    """

    kind: str
    center: tuple
    scale: tuple

    _CODES = {"gauss": _pykernels.PROFILE_GAUSS, "box": _pykernels.PROFILE_BOX,
              "bump": _pykernels.PROFILE_BUMP}

    def __post_init__(self):
        if self.kind not in self._CODES:
            raise ValueError(f"unknown profile kind {self.kind!r}")
        if len(self.center) != 3 or len(self.scale) != 3:
            raise ValueError("center and scale need three components")
        if min(self.scale) <= 0:
            raise ValueError("scale components must be positive")
        object.__setattr__(self, "center", tuple(float(x) for x in self.center))
        object.__setattr__(self, "scale", tuple(float(x) for x in self.scale))

    @property
    def code(self):
        return self._CODES[self.kind]

    @property
    def params(self):
        return np.array(self.center + self.scale)

    def values(self, pts, half_width):
        return _pykernels.profile_values(self.code, self.params, half_width, pts)

    def support_radius(self):
        """Radius of a ball about the center containing the support."""
        s = np.array(self.scale)
        if self.kind == "box":
            return float(np.linalg.norm(s))
        reach = math.sqrt(_pykernels.GAUSS_CUT) if self.kind == "gauss" else 1.0
        return reach / float(s.min())

    def radius_bounds(self):
        """(lo, hi) with lo <= |x| <= hi on the support."""
        c = float(np.linalg.norm(self.center))
        rad = self.support_radius()
        return max(c - rad, 0.0), c + rad


@dataclass(frozen=True)
class SeparableTest:
    """A(v, v_*, v') = a(v) b(v_*) c(v'), each factor zero outside [-V, V]^3."""

    a: Profile
    b: Profile
    c: Profile
    half_width: float

    def __call__(self, v, v_star, v_prime):
        V = self.half_width
        return self.a.values(v, V) * self.b.values(v_star, V) * self.c.values(v_prime, V)


@dataclass(frozen=True, eq=False)
class QuadratureSpec:
    """Momentum grid, omega rule and hypersurface node counts for the weak forms."""

    half_width: float = 4.0
    n_per_axis: int = 12
    angular: AngularGrid = AngularGrid(8, 16)
    n_r: int = 32
    n_psi: int = 16
    r_max: float = None
    near_subdivision: tuple = (4, 2, 2, 2)

    def __post_init__(self):
        if self.n_r < 2 or self.n_psi < 4:
            raise ValueError("need n_r >= 2 and n_psi >= 4")
        sub = tuple(int(m) for m in self.near_subdivision)
        if any(m < 1 for m in sub) or (sub and sub[0] % 2):
            raise ValueError("near_subdivision needs positive counts, even for the diagonal cell")
        object.__setattr__(self, "near_subdivision", sub)

    @property
    def radial_cutoff(self):
        if self.r_max is not None:
            return float(self.r_max)
        return math.sqrt(3.0) * self.half_width + 4.0

    @cached_property
    def grid(self):
        return DensityField.zeros(self.half_width, self.n_per_axis)

    @cached_property
    def radial_rule(self):
        return gauss_legendre(self.n_r, 0.0, 1.0)

    @cached_property
    def arc_rule(self):
        return gauss_legendre(self.n_psi, 0.0, 1.0)


def _spec_arrays(spec):
    g = spec.grid
    return g.nodes, g.energies, g.cell_volume


def weak_form_direct(A, kernel=None, spec=None, threads=1, backend=None):
    """Omega-form quadrature of the weak functional of A.

    Sums a(v) b(v_*) g sqrt(s)/(v0 v0_*) sigma(g, theta) A over grid nodes v,
    v_* and the hemisphere rule for omega.
    """
    kernel = kernel or ScatteringKernel()
    spec = spec or QuadratureSpec()
    nodes, node_e, vol = _spec_arrays(spec)
    V = spec.half_width
    arrays = angular_arrays(kernel, spec.angular)
    if isinstance(A, SeparableTest):
        k = _backend.get(backend)
        a = np.ascontiguousarray(A.a.values(nodes, V))
        b = np.ascontiguousarray(A.b.values(nodes, V))
        per_v = k.weak_direct(a, b, A.c.code, A.c.params, V, nodes, node_e, *arrays, threads)
    else:
        per_v = _weak_direct_generic(A, nodes, node_e, arrays)
    return kernel.c_phi * vol * vol * math.fsum(per_v)


def _weak_direct_generic(A, nodes, node_e, arrays):
    ct, st, wt, cph, sph = arrays
    out = np.zeros(len(nodes))
    for m, v in enumerate(nodes):
        keep, g, vo, p, an, a1, a2 = _pykernels._pairs(v, node_e[m], nodes, node_e)
        x = _pykernels._post_points(p, an, a1, a2, ct, st, cph, sph)
        vs = nodes[keep]
        vals = A(np.broadcast_to(v, x.shape), np.broadcast_to(vs[:, None, None, :], x.shape), x)
        out[m] = np.sum(g * 2.0 * vo * np.einsum("bik,i->b", vals, wt))
    return out


def weak_form_carleman(A, kernel=None, spec=None, threads=1, backend=None):
    """Hypersurface-form quadrature of the weak functional of A.

    Sums over grid cells v and v' of a(v)/v0 c(v')/v'0 times the hypersurface
    integral of (s / (2 v0_*)) carleman_weight b(v_*). As a function of v'
    that integral is bounded but has a direction-dependent limit at v' = v,
    so cells near the diagonal are averaged over a midpoint subgrid
    (``spec.near_subdivision`` per ring of index distance) instead of being
    sampled at, or dropped with, their center.
    """
    kernel = kernel or ScatteringKernel()
    spec = spec or QuadratureSpec()
    nodes, node_e, vol = _spec_arrays(spec)
    V = spec.half_width
    xi, xw = spec.radial_rule
    pxi, pxw = spec.arc_rule
    subdiv = np.array(spec.near_subdivision, dtype=np.intc)
    if isinstance(A, SeparableTest):
        k = _backend.get(backend)
        a = np.ascontiguousarray(A.a.values(nodes, V))
        lo_b, hi_b = A.b.radius_bounds()
        per_v = k.weak_carleman(a, A.c.code, A.c.params, A.b.code, A.b.params, V, lo_b, hi_b,
                                spec.radial_cutoff, nodes, node_e, spec.n_per_axis, subdiv,
                                xi, xw, pxi, pxw, kernel.c_phi, kernel.c_ang, threads)
        return vol * vol * math.fsum(per_v)
    N = spec.n_per_axis
    idx = np.stack(np.unravel_index(np.arange(len(nodes)), (N, N, N)), axis=1)
    h = spec.grid.h

    def pair(v, w):
        bfun = lambda vs: A(np.broadcast_to(v, vs.shape), vs, np.broadcast_to(w, vs.shape))
        return _pykernels.hypersurface_generic(v, w, bfun, 0.0, math.inf, spec.radial_cutoff,
                                               xi, xw, pxi, pxw, kernel.c_phi, kernel.c_ang)

    terms = []
    for m, v in enumerate(nodes):
        dist = np.max(np.abs(idx - idx[m]), axis=1)
        for n, w in enumerate(nodes):
            if dist[n] < len(subdiv):
                ms = subdiv[dist[n]]
                s = h * ((np.arange(ms) + 0.5) / ms - 0.5)
                sub = w + np.stack(np.meshgrid(s, s, s, indexing="ij"), -1).reshape(-1, 3)
                cell = [pair(v, p) / math.sqrt(1.0 + p @ p) for p in sub]
                terms.append(math.fsum(cell) / (ms**3 * node_e[m]))
            elif n != m:
                terms.append(pair(v, w) / (node_e[m] * node_e[n]))
    return vol * vol * math.fsum(terms)


def default_battery(half_width=4.0):
    """Structurally different separable test functions on [-V, V]^3.

    The v factor is sampled on the same nodes by both forms, so it carries
    the rough shapes (cell indicators, anisotropic bumps) and is kept compact
    to bound the cost. The v_* and v' factors are sampled on the grid by one
    form and continuously by the other, so they are Gaussians that the
    midpoint rule resolves.
    """
    V = half_width
    G, B, U = "gauss", "box", "bump"
    specs = [
        ((G, (0.3, 0.0, 0.0), (3.0, 3.0, 3.0)), (G, (-0.5, 0.3, 0.0), (1.0, 1.0, 1.0)),
         (G, (0.0, 0.4, 0.2), (0.9, 0.9, 0.9))),
        ((B, (0.0, 0.0, 0.0), (0.7, 0.7, 0.7)), (G, (0.3, -0.2, 0.4), (1.1, 0.8, 1.3)),
         (G, (0.0, 0.0, 0.0), (0.8, 0.8, 0.8))),
        ((U, (0.0, 0.0, 0.3), (0.9, 0.6, 1.2)), (G, (0.2, -0.3, 0.0), (0.8, 1.2, 1.0)),
         (G, (-0.2, 0.1, 0.0), (0.7, 1.2, 0.9))),
        ((G, (1.2, 0.0, 0.0), (3.0, 2.0, 2.5)), (G, (-0.8, 0.8, 0.0), (1.2, 1.2, 1.2)),
         (G, (0.4, 0.4, 0.4), (0.8, 0.8, 0.8))),
        ((B, (0.7, -0.7, 0.0), (1.0, 0.35, 0.7)), (G, (-0.4, 0.0, 0.5), (0.7, 1.0, 1.3)),
         (G, (0.2, 0.0, 0.2), (1.0, 0.8, 0.8))),
        ((U, (-0.6, 0.2, -0.4), (0.8, 1.4, 0.8)), (G, (0.6, -0.2, 0.3), (0.9, 1.4, 1.0)),
         (G, (0.0, -0.5, 0.0), (1.2, 0.9, 0.7))),
    ]
    return [SeparableTest(Profile(*a), Profile(*b), Profile(*c), V) for a, b, c in specs]


@dataclass(frozen=True)
class EquivalenceReport:
    direct: tuple
    carleman: tuple

    @property
    def ratios(self):
        return np.array(self.direct) / np.array(self.carleman)

    @property
    def kappa(self):
        return float(np.mean(self.ratios))

    @property
    def cv(self):
        r = self.ratios
        return float(np.std(r) / np.mean(r))

    @property
    def max_rel_dev(self):
        """Largest |direct/kappa - carleman| / carleman over the battery."""
        return float(np.max(np.abs(self.ratios / self.kappa - 1.0)))


def equivalence_battery(tests=None, kernel=None, spec=None, threads=1, backend=None):
    spec = spec or QuadratureSpec()
    tests = tests if tests is not None else default_battery(spec.half_width)
    direct = tuple(weak_form_direct(A, kernel, spec, threads, backend) for A in tests)
    carl = tuple(weak_form_carleman(A, kernel, spec, threads, backend) for A in tests)
    return EquivalenceReport(direct, carl)
