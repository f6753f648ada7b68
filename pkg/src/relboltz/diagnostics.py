"""Moments, weighted norms, entropy and the exponent formulas of the L^p theory.

Grid reductions are midpoint sums with the same cell volume as the collision
quadrature, so conservation checks compare like with like.
"""
import math
from dataclasses import dataclass, field

import numpy as np

SPLIT = 6.0


def _check_field(f):
    vals = f.values
    if np.any(vals < 0):
        raise ValueError("distribution has negative nodes")
    return vals.reshape(-1)


def moments(f):
    """(mass, px, py, pz, energy): grid sums of f times 1, v, v0."""
    vals = f.flat
    w = vals * f.cell_volume
    p = w @ f.nodes
    return float(np.sum(w)), float(p[0]), float(p[1]), float(p[2]), float(w @ f.energies)


def lp_norm(f, p, k=0.0):
    """(sum_nodes (v0)^k |f|^p h^3)^(1/p)."""
    if not p >= 1.0:
        raise ValueError(f"p must be >= 1, got {p}")
    vals = np.abs(f.flat)
    weight = f.energies**k if k else 1.0
    total = float(np.sum(weight * vals**p)) * f.cell_volume
    return total ** (1.0 / p)


def entropy(f):
    """H(f) = sum f ln f h^3 with 0 ln 0 = 0."""
    vals = _check_field(f)
    pos = vals > 0
    return float(np.sum(vals[pos] * np.log(vals[pos]))) * f.cell_volume


def boundary_mass_fraction(f, layers=1):
    """Share of the mass sitting in the outermost ``layers`` cells of the box."""
    vals = f.values
    total = float(np.sum(vals))
    if total == 0.0:
        return 0.0
    inner = vals[layers:-layers, layers:-layers, layers:-layers] if layers else vals
    return 1.0 - float(np.sum(inner)) / total


def loss_ratio_extremes(f, loss, radius=None):
    """min and max of Lf(v)/v0 over nodes with |v| <= radius (all nodes by default)."""
    ratio = np.asarray(loss, dtype=float).reshape(-1) / f.energies
    if radius is not None:
        ratio = ratio[np.linalg.norm(f.nodes, axis=1) <= radius]
    if ratio.size == 0:
        raise ValueError("no nodes inside the requested radius")
    return float(ratio.min()), float(ratio.max())


def _check_exponent(name, x):
    if not (np.isfinite(x) and x > 1.0):
        raise ValueError(f"{name} must be > 1, got {x}")


def exponent_n(q):
    """n(q): 5q/(3+2q) on (1, 6], q(q-3)/(2q-3) on (6, inf)."""
    _check_exponent("q", q)
    return n_branches(q)[0] if q <= SPLIT else n_branches(q)[1]


def _ratio(a, b):
    # branch formulas are reported outside their range too; poles read as nan
    return a / b if b != 0.0 else math.nan


def n_branches(q):
    return _ratio(5.0 * q, 3.0 + 2.0 * q), _ratio(q * (q - 3.0), 2.0 * q - 3.0)


def exponent_theta(p):
    """theta(p): 2/5 on (1, 6], p/((p-1)(p-3)) on (6, inf)."""
    _check_exponent("p", p)
    return theta_branches(p)[0] if p <= SPLIT else theta_branches(p)[1]


def theta_branches(p):
    return 2.0 / 5.0, _ratio(p, (p - 1.0) * (p - 3.0))


def m_branches(p, eta):
    """Both branch formulas for m(p, eta), evaluated regardless of range."""
    first = (3.0 + 2.0 * p) * (2.0 * p - 1.0) / (5.0 * p) * eta + (3.0 + 2.0 * p) / (10.0 * p)
    second = (_ratio((2.0 * p - 3.0) * (2.0 * p - 1.0), p * (p - 3.0)) * eta
              + _ratio(2.0 * p - 3.0, 2.0 * p * (p - 3.0)))
    return first, second


def weight_m(p, eta):
    """Number of weights m(p, eta); the first formula on (1, 6], the second above.

    Both formulas reduce to 5.5 eta + 0.25 at p = 6, so the choice at the
    split point does not change the value; see :func:`m_branches`.
    """
    _check_exponent("p", p)
    if not (np.isfinite(eta) and eta > 2.0):
        raise ValueError(f"eta must be > 2, got {eta}")
    first, second = m_branches(p, eta)
    return first if p <= SPLIT else second


def interpolation_residual(p):
    """1/n(p) - (theta + (1 - theta)/p); zero for both regimes."""
    th = exponent_theta(p)
    return 1.0 / exponent_n(p) - (th + (1.0 - th) / p)


@dataclass(frozen=True)
class DiagnosticsRecord:
    t: float
    dt: float
    mass: float
    px: float
    py: float
    pz: float
    energy: float
    entropy: float
    min_f: float
    max_f: float
    L_ratio_min: float
    L_ratio_max: float
    lp_norms: dict = field(default_factory=dict)

    SCALARS = ("t", "dt", "mass", "px", "py", "pz", "energy", "entropy", "min_f", "max_f",
               "L_ratio_min", "L_ratio_max")

    def __post_init__(self):
        if self.mass < 0:
            raise ValueError("mass must be nonnegative")
        if self.energy < self.mass * (1.0 - 1e-12):
            raise ValueError("energy must not be below mass")

    @classmethod
    def from_field(cls, f, t, dt, loss, norms=()):
        mass, px, py, pz, en = moments(f)
        lmin, lmax = loss_ratio_extremes(f, loss)
        vals = f.values
        return cls(float(t), float(dt), mass, px, py, pz, en, entropy(f),
                   float(vals.min()), float(vals.max()), lmin, lmax,
                   {(float(p), float(k)): lp_norm(f, p, k) for p, k in norms})

    @staticmethod
    def header(norms=()):
        return list(DiagnosticsRecord.SCALARS) + [norm_column(p, k) for p, k in norms]

    def row(self, norms=()):
        vals = [getattr(self, name) for name in self.SCALARS]
        vals += [self.lp_norms[(float(p), float(k))] for p, k in norms]
        return [repr(float(x)) for x in vals]


def norm_column(p, k):
    return f"lp_{_fmt(p)}_{_fmt(k)}"


def _fmt(x):
    x = float(x)
    return str(int(x)) if x == math.floor(x) else repr(x)
