"""Deterministic solver and verification toolkit for the spatially homogeneous
relativistic Boltzmann equation with a hard-ball kernel and angular cutoff."""
from ._backend import NAME as BACKEND
from .carleman import (Profile, QuadratureSpec, SeparableTest, equivalence_battery,
                       hypersurface_cos, hypersurface_integral, weak_form_carleman,
                       weak_form_direct)
from .collision_operator import (DomainError, collision_Q, collision_Q_at, gain_direct,
                                 gain_field, loss_field, loss_L)
from .config import ScenarioConfig, build_initial, parse_config
from .cross_section import ScatteringKernel, angular_mass, carleman_weight, sigma
from .diagnostics import (DiagnosticsRecord, entropy, exponent_n, exponent_theta, lp_norm,
                          moments, weight_m)
from .field import DensityField
from .kinematics import (CollisionPair, DegenerateCollisionError, PostCollision, energy,
                         moller_velocity, post_collision, relative_momentum, s_invariant,
                         scattering_cos)
from .quadrature import AngularGrid
from .solver import SolverState, run, step

__version__ = "0.1.0"
