"""Hard-ball cross-section with Grad's angular cutoff."""
from dataclasses import dataclass

import numpy as np

from .kinematics import DegenerateCollisionError
from .quadrature import hemisphere_rule

COS_TOL = 1e-12
PYTHAGORAS_TOL = 1e-8


@dataclass(frozen=True)
class ScatteringKernel:
    """sigma(g, theta) = c_phi * g * c_ang * sin(theta), supported on cos(theta) >= 0."""

    c_phi: float = 1.0
    c_ang: float = 1.0

    def __post_init__(self):
        for name in ("c_phi", "c_ang"):
            val = getattr(self, name)
            if not (np.isfinite(val) and val > 0):
                raise ValueError(f"kernel.{name} must be positive and finite, got {val}")

    def phi(self, g):
        return self.c_phi * np.asarray(g, dtype=float)

    def angular(self, cos_theta):
        """sigma_0 on the support; zero on the opposite hemisphere."""
        c = np.asarray(cos_theta, dtype=float)
        return np.where(c >= 0.0, self.c_ang * np.sqrt(np.maximum(1.0 - c * c, 0.0)), 0.0)


def sigma(kernel, g, cos_theta):
    c = np.asarray(cos_theta, dtype=float)
    if np.any(np.abs(c) > 1.0 + COS_TOL):
        raise ValueError("|cos_theta| must not exceed 1")
    return kernel.phi(g) * kernel.angular(np.clip(c, -1.0, 1.0))


def symmetrize(raw):
    """Fold a full-sphere cross-section onto the cos(theta) >= 0 hemisphere.

    ``raw`` takes ``(g, cos_theta)``; the antipodal angle pi - theta is
    evaluated as ``raw(g, -cos_theta)``.
    """
    def folded(g, cos_theta):
        c = np.asarray(cos_theta, dtype=float)
        return np.where(c >= 0.0, raw(g, c) + raw(g, -c), 0.0)

    return folded


def angular_mass(kernel):
    """Integral of sigma_0 over the support hemisphere, C pi^2 / 2."""
    return kernel.c_ang * np.pi**2 / 2.0


def angular_mass_quadrature(kernel, n_theta, n_az=4):
    """The same integral by the hemisphere product rule."""
    _, st, pw, _ = hemisphere_rule(n_theta, n_az)
    return float(np.sum(pw * kernel.c_ang * st)) * 2.0 * np.pi


def carleman_weight(kernel, g, g_bar, g_tilde):
    """sigma(g, theta) / g_bar with the 1/g_bar cancelled analytically.

    Uses sin(theta/2) = g_bar/g and cos(theta/2) = g_tilde/g, so
    sigma / g_bar = 2 C_phi C g_tilde / g on the support g_tilde >= g_bar.
    """
    g = np.asarray(g, dtype=float)
    gb = np.asarray(g_bar, dtype=float)
    gt = np.asarray(g_tilde, dtype=float)
    if np.any(g <= 0.0):
        raise DegenerateCollisionError("carleman weight needs g > 0")
    resid = np.abs(g * g - gb * gb - gt * gt)
    if np.any(resid > PYTHAGORAS_TOL * g * g):
        raise ValueError("(g, g_bar, g_tilde) violate g^2 = g_bar^2 + g_tilde^2")
    return np.where(gt >= gb, 2.0 * kernel.c_phi * kernel.c_ang * gt / g, 0.0)
