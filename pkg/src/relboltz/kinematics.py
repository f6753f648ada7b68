"""Relativistic two-body collision kinematics in natural units (c = m = 1).

All functions broadcast over leading axes: a momentum is any array whose
last axis has length 3.
"""
from dataclasses import dataclass

import numpy as np

# below this |v + v_*| the boost direction is undefined and gamma -> 1
FRAME_EPS = 1e-9
UNIT_TOL = 1e-12
FRAME_AXES = (np.array([1.0, np.sqrt(2.0), np.sqrt(3.0)]) / np.sqrt(6.0),
              np.array([np.sqrt(5.0), -1.0, np.sqrt(7.0)]) / np.sqrt(13.0))
FRAME_SWITCH = 0.25


class DegenerateCollisionError(ValueError):
    """Raised when a quantity needs g(v, v_*) > 0 but the pair coincides."""


def as_momentum(v):
    """Validate and return ``v`` as a float array with a trailing axis of 3."""
    arr = np.asarray(v, dtype=float)
    if arr.ndim == 0 or arr.shape[-1] != 3:
        raise ValueError(f"momentum needs a trailing axis of length 3, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ValueError("momentum components must be finite")
    return arr


def _dot(a, b):
    return np.einsum("...i,...i->...", a, b)


def _sqrt_clamped(x):
    return np.sqrt(np.maximum(x, 0.0))


def energy(v):
    """On-shell energy v0 = sqrt(1 + |v|^2)."""
    v = as_momentum(v)
    return np.sqrt(1.0 + _dot(v, v))


def _g_squared(v, w, e=None, ew=None):
    e = energy(v) if e is None else e
    ew = energy(w) if ew is None else ew
    d = v - w
    # v0 - w0 = (|v|^2 - |w|^2) / (v0 + w0) avoids cancellation between energies
    de = _dot(d, v + w) / (e + ew)
    return np.maximum(_dot(d, d) - de * de, 0.0)


def relative_momentum(v, v_star):
    """Lorentz-invariant relative momentum g = sqrt(-(v0 - v0_*)^2 + |v - v_*|^2)."""
    v, v_star = as_momentum(v), as_momentum(v_star)
    return np.sqrt(_g_squared(v, v_star))


def s_invariant(v, v_star):
    """Squared center-of-momentum energy (v0 + v0_*)^2 - |v + v_*|^2."""
    v, v_star = as_momentum(v), as_momentum(v_star)
    e_tot = energy(v) + energy(v_star)
    p = v + v_star
    return e_tot * e_tot - _dot(p, p)


def moller_velocity(v, v_star):
    """Moller velocity from the velocity-difference formula.

    Equals g sqrt(s) / (2 v0 v0_*); it always lies in [0, 2).
    """
    v, v_star = as_momentum(v), as_momentum(v_star)
    a = v / energy(v)[..., None]
    b = v_star / energy(v_star)[..., None]
    d = a - b
    c = np.cross(a, b)
    return _sqrt_clamped(_dot(d, d) - _dot(c, c))


def g_bar(v, v_prime):
    """Relative momentum g(v, v') between pre- and post-collisional momenta."""
    return relative_momentum(v, v_prime)


def g_tilde(v_prime, v_star):
    """Relative momentum g(v', v_*)."""
    return relative_momentum(v_prime, v_star)


@dataclass(frozen=True)
class CollisionPair:
    """A pre-collisional pair with its invariants cached."""

    v: np.ndarray
    v_star: np.ndarray
    g: np.ndarray
    s: np.ndarray
    gamma: np.ndarray

    @classmethod
    def from_momenta(cls, v, v_star):
        v, v_star = as_momentum(v), as_momentum(v_star)
        g = relative_momentum(v, v_star)
        s = g * g + 4.0
        gamma = (energy(v) + energy(v_star)) / np.sqrt(s)
        return cls(v, v_star, g, s, gamma)


@dataclass(frozen=True)
class PostCollision:
    v_prime: np.ndarray
    v_star_prime: np.ndarray
    cos_theta: np.ndarray
    g_bar: np.ndarray
    g_tilde: np.ndarray


def _boost_term(p, omega, gamma):
    # (gamma - 1) p (p.w) / |p|^2, with the exact limit 0 as p -> 0
    p2 = _dot(p, p)
    safe = np.where(p2 < FRAME_EPS**2, 1.0, p2)
    coef = np.where(p2 < FRAME_EPS**2, 0.0, (gamma - 1.0) * _dot(p, omega) / safe)
    return coef[..., None] * p


def post_collision_momenta(v, v_star, omega):
    """Post-collisional momenta (v', v'_*) for scattering direction ``omega``."""
    v, v_star, omega = as_momentum(v), as_momentum(v_star), as_momentum(omega)
    if np.any(np.abs(np.linalg.norm(omega, axis=-1) - 1.0) > UNIT_TOL):
        raise ValueError("omega must be a unit vector")
    pair = CollisionPair.from_momenta(v, v_star)
    p = v + v_star
    shift = 0.5 * pair.g[..., None] * (omega + _boost_term(p, omega, pair.gamma))
    return 0.5 * p + shift, 0.5 * p - shift


def post_collision_energies(v, v_star, omega):
    """Closed-form energies of (v', v'_*), independent of ``energy(v')``."""
    v, v_star, omega = as_momentum(v), as_momentum(v_star), as_momentum(omega)
    g = relative_momentum(v, v_star)
    s = g * g + 4.0
    half = 0.5 * (energy(v) + energy(v_star))
    delta = g / (2.0 * np.sqrt(s)) * _dot(v + v_star, omega)
    return half + delta, half - delta


def scattering_cos(v, v_star, v_prime, v_star_prime):
    """Cosine of the scattering angle, clamped to [-1, 1]."""
    v, v_star = as_momentum(v), as_momentum(v_star)
    v_prime, v_star_prime = as_momentum(v_prime), as_momentum(v_star_prime)
    g2 = _g_squared(v, v_star)
    if np.any(g2 == 0.0):
        raise DegenerateCollisionError("scattering angle undefined for g = 0")
    num = (-(energy(v) - energy(v_star)) * (energy(v_prime) - energy(v_star_prime))
           + _dot(v - v_star, v_prime - v_star_prime))
    return np.clip(num / g2, -1.0, 1.0)


def post_collision(v, v_star, omega):
    """Full post-collision record: momenta, scattering angle and the relative momenta."""
    vp, vsp = post_collision_momenta(v, v_star, omega)
    return PostCollision(
        v_prime=vp,
        v_star_prime=vsp,
        cos_theta=scattering_cos(v, v_star, vp, vsp),
        g_bar=g_bar(v, vp),
        g_tilde=g_tilde(vp, as_momentum(v_star)),
    )


def orthonormal_completion(n):
    """Right-handed frame (e1, e2) orthogonal to unit vectors ``n``.

    e1 is the normalized cross product of a fixed generic axis with ``n``;
    within 30 degrees of that axis a second axis is used. The rule is odd in
    ``n`` for e1 and even for e2, so the frame of -n is (-e1, e2), and it is
    continuous away from the switching cone, so round-off in ``n`` only rotates
    the frame by round-off. The compiled kernels use the same rule.
    """
    n = np.asarray(n, dtype=float)
    a, b = FRAME_AXES
    t = np.cross(a, n)
    near = np.einsum("...i,...i->...", t, t) < FRAME_SWITCH
    t = np.where(near[..., None], np.cross(b, n), t)
    e1 = t / np.linalg.norm(t, axis=-1, keepdims=True)
    return e1, np.cross(n, e1)


def collision_frame(v, v_star):
    """Center-of-momentum frame of a pair, expressed in the lab.

    Returns ``(n, e1, e2)`` where ``n`` is the center-of-momentum direction of
    ``v``. For a scattering direction ``omega`` the scattering angle satisfies
    ``cos(theta) = n . omega``, so a hemisphere grid around ``n`` covers the
    cutoff support exactly.
    """
    v, v_star = as_momentum(v), as_momentum(v_star)
    e, es = energy(v), energy(v_star)
    pair = CollisionPair.from_momenta(v, v_star)
    if np.any(pair.g == 0.0):
        raise DegenerateCollisionError("collision frame undefined for g = 0")
    p = v + v_star
    pn = np.linalg.norm(p, axis=-1)
    boosted = pn > FRAME_EPS
    safe = np.where(boosted, pn, 1.0)
    ehat = p / safe[..., None]
    coef = (pair.gamma - 1.0) * _dot(v, ehat) - pair.gamma * (pn / (e + es)) * e
    q = v + np.where(boosted, coef, 0.0)[..., None] * ehat
    n = q / np.linalg.norm(q, axis=-1, keepdims=True)
    e1, e2 = orthonormal_completion(n)
    return n, e1, e2
