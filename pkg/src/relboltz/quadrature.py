"""Quadrature rules shared by the collision integrals."""
from dataclasses import dataclass
from functools import cached_property

import numpy as np


def gauss_legendre(n, a=0.0, b=1.0):
    """Gauss-Legendre nodes and weights on [a, b]."""
    x, w = np.polynomial.legendre.leggauss(n)
    half = 0.5 * (b - a)
    return a + half * (x + 1.0), half * w


def hemisphere_rule(n_theta, n_az):
    """Product rule on the hemisphere cos(theta) >= 0 around a polar axis.

    Gauss-Legendre in the polar angle theta on [0, pi/2] (weights carry the
    sin(theta) Jacobian) times the uniform rule in azimuth. Returns
    ``(cos_theta, sin_theta, polar_weights, azimuths)``; the full weight of
    node (i, k) is ``polar_weights[i] * 2 pi / n_az``.
    """
    theta, w = gauss_legendre(n_theta, 0.0, 0.5 * np.pi)
    phi = 2.0 * np.pi * np.arange(n_az) / n_az
    return np.cos(theta), np.sin(theta), w * np.sin(theta), phi


@dataclass(frozen=True)
class AngularGrid:
    """Discretization of d(omega) on the cutoff hemisphere.

    ``n_mu`` polar nodes (Gauss-Legendre in theta, reported as mu = cos theta)
    and ``n_az`` uniform azimuthal nodes.
    """

    n_mu: int = 8
    n_az: int = 16

    def __post_init__(self):
        if self.n_mu < 2:
            raise ValueError(f"n_mu must be >= 2, got {self.n_mu}")
        if self.n_az < 4:
            raise ValueError(f"n_az must be >= 4, got {self.n_az}")
        if self.n_az > 1024:
            raise ValueError(f"n_az must be <= 1024, got {self.n_az}")

    @cached_property
    def _rule(self):
        return hemisphere_rule(self.n_mu, self.n_az)

    @property
    def mu(self):
        return self._rule[0]

    @property
    def sin_theta(self):
        return self._rule[1]

    @property
    def polar_weights(self):
        return self._rule[2]

    @property
    def azimuths(self):
        return self._rule[3]

    @property
    def size(self):
        return self.n_mu * self.n_az

    def refined(self, factor=2):
        return AngularGrid(self.n_mu * factor, self.n_az * factor)

    def directions(self, n, e1, e2):
        """Lab-frame unit vectors of every node for one frame, shape (n_mu, n_az, 3)."""
        cp, sp = np.cos(self.azimuths), np.sin(self.azimuths)
        ring = cp[:, None] * np.asarray(e1) + sp[:, None] * np.asarray(e2)
        return self.mu[:, None, None] * np.asarray(n) + self.sin_theta[:, None, None] * ring[None]

    def weights(self):
        """Full node weights, shape (n_mu, n_az); they sum to 2 pi."""
        return np.repeat(self.polar_weights[:, None] * (2.0 * np.pi / self.n_az), self.n_az, axis=1)
