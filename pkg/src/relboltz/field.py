"""Cell-centered momentum-grid samples of a distribution function."""
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np


@dataclass(frozen=True, eq=False)
class DensityField:
    """Samples of f on the cell centers of [-V, V]^3.

    Node i along each axis sits at ``-V + (i + 1/2) h`` with ``h = 2V/N``.
    """

    half_width: float
    n_per_axis: int
    values: np.ndarray = field(repr=False)

    def __post_init__(self):
        if not (np.isfinite(self.half_width) and self.half_width > 0):
            raise ValueError(f"grid.half_width must be positive, got {self.half_width}")
        if int(self.n_per_axis) != self.n_per_axis or self.n_per_axis < 1:
            raise ValueError(f"grid.n must be a positive integer, got {self.n_per_axis}")
        n = int(self.n_per_axis)
        vals = np.ascontiguousarray(np.asarray(self.values, dtype=float).reshape(n, n, n))
        if not np.all(np.isfinite(vals)):
            raise ValueError("field values must be finite")
        if np.any(vals < 0):
            raise ValueError("field values must be nonnegative")
        vals.setflags(write=False)
        object.__setattr__(self, "n_per_axis", n)
        object.__setattr__(self, "values", vals)

    @classmethod
    def from_function(cls, fn, half_width, n_per_axis):
        """Sample ``fn(nodes)`` (nodes of shape (M, 3)) on a new grid."""
        probe = cls.zeros(half_width, n_per_axis)
        return probe.with_values(np.asarray(fn(probe.nodes), dtype=float))

    @classmethod
    def zeros(cls, half_width, n_per_axis):
        n = int(n_per_axis)
        return cls(half_width, n, np.zeros((n, n, n)))

    def with_values(self, values):
        return DensityField(self.half_width, self.n_per_axis, values)

    @property
    def h(self):
        return 2.0 * self.half_width / self.n_per_axis

    @property
    def cell_volume(self):
        return self.h**3

    @cached_property
    def axis(self):
        return -self.half_width + (np.arange(self.n_per_axis) + 0.5) * self.h

    @cached_property
    def nodes(self):
        x = self.axis
        grid = np.stack(np.meshgrid(x, x, x, indexing="ij"), axis=-1)
        out = np.ascontiguousarray(grid.reshape(-1, 3))
        out.setflags(write=False)
        return out

    @cached_property
    def energies(self):
        out = np.sqrt(1.0 + np.einsum("ij,ij->i", self.nodes, self.nodes))
        out.setflags(write=False)
        return out

    @property
    def flat(self):
        return self.values.reshape(-1)

    def same_grid(self, other):
        return self.half_width == other.half_width and self.n_per_axis == other.n_per_axis

    def contains(self, v):
        v = np.asarray(v, dtype=float)
        return bool(np.all(np.abs(v) <= self.half_width))

    def padded(self):
        """Values with one layer of zero ghost cells on every face."""
        n = self.n_per_axis
        out = np.zeros((n + 2, n + 2, n + 2))
        out[1:-1, 1:-1, 1:-1] = self.values
        return out

    def interpolate(self, points):
        """Trilinear interpolation with zero extension outside [-V, V]^3."""
        return interpolate_padded(self.padded(), self.half_width, points)


def interpolate_padded(fp, half_width, points):
    points = np.asarray(points, dtype=float)
    flat = points.reshape(-1, 3)
    n = fp.shape[0] - 2
    inv_h = n / (2.0 * half_width)
    inside = np.all(np.abs(flat) <= half_width, axis=1)
    u = (np.where(inside[:, None], flat, 0.0) + half_width) * inv_h + 0.5
    idx = np.floor(u).astype(np.int64)
    t = u - idx
    i, j, k = idx[:, 0], idx[:, 1], idx[:, 2]
    tx, ty, tz = t[:, 0], t[:, 1], t[:, 2]
    c00 = fp[i, j, k] * (1 - tx) + fp[i + 1, j, k] * tx
    c10 = fp[i, j + 1, k] * (1 - tx) + fp[i + 1, j + 1, k] * tx
    c01 = fp[i, j, k + 1] * (1 - tx) + fp[i + 1, j, k + 1] * tx
    c11 = fp[i, j + 1, k + 1] * (1 - tx) + fp[i + 1, j + 1, k + 1] * tx
    val = (c00 * (1 - ty) + c10 * ty) * (1 - tz) + (c01 * (1 - ty) + c11 * ty) * tz
    return np.where(inside, val, 0.0).reshape(points.shape[:-1])
