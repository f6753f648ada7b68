"""Gain, loss and full collision operator by direct quadrature.

v_* runs over the grid nodes (midpoint rule), omega over the hemisphere
rule of an :class:`AngularGrid` laid around the center-of-momentum direction
of v, so the cutoff support cos(theta) >= 0 is covered exactly. Off-grid
values f(v'), h(v'_*) come from trilinear interpolation with zero extension.
"""
import numpy as np

from . import _backend
from .cross_section import ScatteringKernel
from .field import DensityField
from .quadrature import AngularGrid


class DomainError(ValueError):
    """Evaluation point lies outside the grid box."""


def angular_arrays(kernel, ang):
    """Arrays consumed by the kernels; ``wt`` folds sigma_0 and all angular weights."""
    ct, st = ang.mu, ang.sin_theta
    wt = ang.polar_weights * kernel.c_ang * st * (2.0 * np.pi / ang.n_az)
    return (np.ascontiguousarray(ct), np.ascontiguousarray(st), np.ascontiguousarray(wt),
            np.cos(ang.azimuths), np.sin(ang.azimuths))


def angular_sum(kernel, ang):
    """Quadrature value of the hemisphere integral of sigma_0."""
    return float(np.sum(angular_arrays(kernel, ang)[2])) * ang.n_az


def _points(f, v):
    pts = np.ascontiguousarray(np.atleast_2d(np.asarray(v, dtype=float)))
    if pts.shape[-1] != 3:
        raise ValueError("points need a trailing axis of length 3")
    if not np.all(np.isfinite(pts)):
        raise ValueError("points must be finite")
    if np.any(np.abs(pts) > f.half_width):
        raise DomainError(f"point outside [-{f.half_width}, {f.half_width}]^3")
    return pts


def _shape_like(v, out):
    return out[0] if np.ndim(v) == 1 else out


def loss_L(f, kernel, ang, v, threads=1, backend=None):
    """(Lf)(v): v_* midpoint sum times the quadrature of sigma_0 over the hemisphere.

    The omega integrand depends on omega only through sigma_0, so the double
    sum factors exactly into the two sums.
    """
    pts = _points(f, v)
    k = _backend.get(backend)
    raw = k.loss_points(np.ascontiguousarray(f.flat), pts, f.nodes, f.energies, threads)
    return _shape_like(v, kernel.c_phi * angular_sum(kernel, ang) * f.cell_volume * raw)


def loss_field(f, kernel, ang, threads=1, backend=None):
    """Lf at every grid node, shape (N, N, N)."""
    k = _backend.get(backend)
    raw = k.loss_points(np.ascontiguousarray(f.flat), f.nodes, f.nodes, f.energies, threads)
    n = f.n_per_axis
    return (kernel.c_phi * angular_sum(kernel, ang) * f.cell_volume * raw).reshape(n, n, n)


def gain_direct(f, h, kernel, ang, v, threads=1, backend=None):
    """Q+(f, h)(v) at one point or an (M, 3) array of points."""
    if not f.same_grid(h):
        raise ValueError("f and h must share a grid")
    pts = _points(f, v)
    k = _backend.get(backend)
    raw = k.gain_points(f.padded(), h.padded(), f.half_width, pts, f.nodes, f.energies,
                        *angular_arrays(kernel, ang), threads)
    return _shape_like(v, kernel.c_phi * f.cell_volume * raw)


def gain_field(f, h, kernel, ang, threads=1, backend=None):
    """Q+(f, h) at every grid node, shape (N, N, N).

    Single-threaded runs visit each unordered node pair once; with more
    threads every node is summed independently. Both orders are fixed, so a
    given thread setting is bit-reproducible.
    """
    if not f.same_grid(h):
        raise ValueError("f and h must share a grid")
    k = _backend.get(backend)
    fp = f.padded()
    hp = fp if h is f else h.padded()
    arrays = angular_arrays(kernel, ang)
    if threads > 1:
        raw = k.gain_points(fp, hp, f.half_width, f.nodes, f.nodes, f.energies, *arrays, threads)
    else:
        raw = k.gain_field_pairs(fp, hp, f.half_width, f.nodes, f.energies, *arrays)
    n = f.n_per_axis
    return (kernel.c_phi * f.cell_volume * raw).reshape(n, n, n)


def collision_terms(f, kernel, ang, threads=1, backend=None):
    """(Q+(f, f), Lf) at every node."""
    return (gain_field(f, f, kernel, ang, threads, backend),
            loss_field(f, kernel, ang, threads, backend))


def collision_Q(f, kernel, ang, threads=1, backend=None):
    """Q(f, f) = Q+ - f Lf at every node, shape (N, N, N)."""
    gain, loss = collision_terms(f, kernel, ang, threads, backend)
    return gain - f.values * loss


def collision_Q_at(f, kernel, ang, v, threads=1, backend=None):
    """Q(f, f) at arbitrary points: returns (Q+, Lf, Q)."""
    gain = np.atleast_1d(gain_direct(f, f, kernel, ang, v, threads, backend))
    loss = np.atleast_1d(loss_L(f, kernel, ang, v, threads, backend))
    fv = f.interpolate(_points(f, v))
    q = gain - fv * loss
    if np.ndim(v) == 1:
        return gain[0], loss[0], q[0]
    return gain, loss, q


__all__ = [
    "AngularGrid", "DensityField", "DomainError", "ScatteringKernel", "angular_arrays",
    "angular_sum", "collision_Q", "collision_Q_at", "collision_terms", "gain_direct",
    "gain_field", "loss_L", "loss_field",
]
