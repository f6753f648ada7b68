"""Invariant ensembles shared by the ``verify`` subcommands and the test suite."""
import math
from dataclasses import dataclass, field

import numpy as np

from . import kinematics as kin
from .cross_section import (ScatteringKernel, angular_mass, angular_mass_quadrature,
                            carleman_weight, sigma)
from .quadrature import hemisphere_rule


@dataclass
class CheckReport:
    """Named measured values with their tolerances; ``passed`` if all are within."""

    measured: dict = field(default_factory=dict)
    limits: dict = field(default_factory=dict)

    def add(self, name, value, limit):
        self.measured[name] = float(value)
        self.limits[name] = float(limit)

    @property
    def failures(self):
        return [k for k, v in self.measured.items() if not v <= self.limits[k]]

    @property
    def passed(self):
        return not self.failures

    def lines(self):
        for k, v in self.measured.items():
            flag = "ok" if v <= self.limits[k] else "FAIL"
            yield f"{k:<30s} {v:.3e}  (limit {self.limits[k]:.1e})  {flag}"


def random_pairs(samples, seed, low=-5.0, high=5.0):
    """Seeded (v, v_*, omega) ensemble; omega is uniform on the sphere."""
    rng = np.random.default_rng(seed)
    v = rng.uniform(low, high, (samples, 3))
    vs = rng.uniform(low, high, (samples, 3))
    om = rng.normal(size=(samples, 3))
    om /= np.linalg.norm(om, axis=1, keepdims=True)
    return v, vs, om


def kinematics_ensemble(samples=100_000, seed=7):
    """Conservation, invariance, Pythagorean and coercivity residuals."""
    v, vs, om = random_pairs(samples, seed)
    e, es = kin.energy(v), kin.energy(vs)
    g = kin.relative_momentum(v, vs)
    s = kin.s_invariant(v, vs)
    post = kin.post_collision(v, vs, om)
    vp, vsp = post.v_prime, post.v_star_prime
    ep, esp = kin.energy(vp), kin.energy(vsp)
    dist = np.linalg.norm(v - vs, axis=1)
    gb, gt = post.g_bar, post.g_tilde
    rep = CheckReport()
    rep.add("momentum conservation", np.max(np.abs(vp + vsp - v - vs)), 1e-10)
    rep.add("energy conservation", np.max(np.abs(ep + esp - e - es)), 1e-10)
    rep.add("g invariance (rel)", np.max(np.abs(kin.relative_momentum(vp, vsp) - g) / g), 1e-10)
    rep.add("pythagoras (rel)", np.max(np.abs(g * g - gb * gb - gt * gt) / (g * g)), 1e-9)
    half = np.sqrt(np.maximum(0.5 * (1.0 - post.cos_theta), 0.0))
    rep.add("sin(theta/2) = g_bar/g", np.max(np.abs(half - gb / g)), 1e-9)
    rep.add("cos from g_bar, g_tilde", np.max(np.abs(post.cos_theta - (gt**2 - gb**2) / g**2)),
            1e-10)
    e_closed, es_closed = kin.post_collision_energies(v, vs, om)
    rep.add("on-shell energies", np.max(np.abs(ep - e_closed) + np.abs(esp - es_closed)), 1e-10)
    lower = dist / np.sqrt(e * es) - g
    upper = g - dist
    rep.add("coercive lower bound", max(np.max(lower), 0.0), 1e-12)
    rep.add("coercive upper bound", max(np.max(upper), 0.0), 1e-12)
    rep.add("g^2 < g sqrt(s) violations", float(np.sum(~(g * g < g * np.sqrt(s)) & (g > 0))), 0)
    rep.add("g sqrt(s) <= 4 v0 v0_* excess", max(np.max(g * np.sqrt(s) - 4 * e * es), 0.0), 0.0)
    rep.add("s - g^2 - 4", np.max(np.abs(s - g * g - 4.0)), 1e-12)
    vo = kin.moller_velocity(v, vs)
    rep.add("moller identity (rel)", np.max(np.abs(2.0 * vo * e * es - g * np.sqrt(s))
                                            / (g * np.sqrt(s))), 1e-10)
    rep.add("moller below 2 violations", float(np.sum(vo >= 2.0)), 0)
    return rep


ROUNDOFF_FLOOR = 16 * np.finfo(float).eps


def _orders(err, ns):
    # an error already at the round-off floor means the rule is exact there
    out = {}
    for n in ns:
        e1, e2 = err(n), err(2 * n)
        if e1 <= ROUNDOFF_FLOOR and e2 <= ROUNDOFF_FLOOR:
            out[n] = math.inf
        else:
            out[n] = math.log2(e1 / max(e2, ROUNDOFF_FLOOR))
    return out


def angular_mass_check(kernel=None, n_nodes=64, orders_from=(2, 4, 8)):
    """Relative error at ``n_nodes`` and observed orders log2(err(n)/err(2n)).

    In theta the integrand sin^2 is 1/2 plus a part odd about pi/4, so the
    symmetric Gauss rule is exact for every n and the order reads infinite.
    """
    kernel = kernel or ScatteringKernel()
    exact = angular_mass(kernel)

    def err(n):
        return abs(angular_mass_quadrature(kernel, n) - exact) / exact

    return err(n_nodes), _orders(err, orders_from)


def hemisphere_order_check(orders_from=(2, 3, 4)):
    """Orders of the polar rule on sin(theta) exp(cos(theta)), whose integral is e - 1."""
    exact = math.e - 1.0

    def err(n):
        _, st, pw, _ = hemisphere_rule(n, 4)
        mu = np.sqrt(1.0 - st * st)
        return abs(float(np.sum(pw * np.exp(mu))) - exact) / exact

    return _orders(err, orders_from)


def carleman_weight_check(samples=10_000, seed=11, kernel=None):
    """max |carleman_weight * g_bar - sigma| / sigma over admissible triples."""
    kernel = kernel or ScatteringKernel(1.3, 0.7)
    v, vs, om = random_pairs(3 * samples, seed)
    post = kin.post_collision(v, vs, om)
    g = kin.relative_momentum(v, vs)
    keep = (post.g_tilde > post.g_bar) & (post.g_bar > 0)
    g, gb, gt = g[keep][:samples], post.g_bar[keep][:samples], post.g_tilde[keep][:samples]
    if len(g) < samples:
        raise RuntimeError("not enough admissible samples")
    cos = (gt**2 - gb**2) / g**2
    ref = sigma(kernel, g, cos)
    got = carleman_weight(kernel, g, gb, gt) * gb
    return float(np.max(np.abs(got - ref) / ref)), len(g)
