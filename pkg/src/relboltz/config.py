"""Scenario files: ``key = value`` lines with ``#`` comments."""
from dataclasses import dataclass, field, fields, replace

import numpy as np

from .carleman import QuadratureSpec
from .cross_section import ScatteringKernel
from .field import DensityField
from .kinematics import energy
from .quadrature import AngularGrid

INIT_KINDS = ("juttner", "two_bump", "box")


class ConfigError(ValueError):
    """Parse or range error; the message names the line or key."""


def _floats(text, count=None):
    vals = tuple(float(x) for x in text.replace(",", " ").split())
    if count is not None and len(vals) != count:
        raise ValueError(f"expected {count} numbers, got {len(vals)}")
    return vals


def _norm_pairs(text):
    pairs = []
    for item in text.replace(";", ",").split(","):
        item = item.strip()
        if not item:
            continue
        p, sep, k = item.partition(":")
        pairs.append((float(p), float(k) if sep else 0.0))
    return tuple(pairs)


def _string(text):
    return text.strip().strip('"').strip("'")


@dataclass(frozen=True)
class ScenarioConfig:
    grid_half_width: float = 6.0
    grid_n: int = 16
    angular_n_mu: int = 8
    angular_n_az: int = 16
    kernel_c_phi: float = 1.0
    kernel_c_ang: float = 1.0
    init_kind: str = "juttner"
    init_beta: float = 1.0
    init_shift: tuple = (1.5, 0.0, 0.0)
    init_box_half_width: float = 1.0
    time_t_end: float = 1.0
    time_safety: float = 0.5
    time_dt_max: float = 0.1
    output_path: str = "diagnostics.csv"
    norms: tuple = field(default=((1.5, 0.0), (2.0, 0.0), (3.0, 0.0)))
    carleman_n_r: int = 32
    carleman_n_psi: int = 16
    carleman_cv_tol: float = 0.01
    carleman_dev_tol: float = 0.02

    def validate(self):
        checks = [
            ("grid.half_width", self.grid_half_width > 0),
            ("grid.n", self.grid_n >= 2),
            ("angular.n_mu", self.angular_n_mu >= 2),
            ("angular.n_az", 4 <= self.angular_n_az <= 1024),
            ("kernel.c_phi", self.kernel_c_phi > 0),
            ("kernel.c_ang", self.kernel_c_ang > 0),
            ("init.kind", self.init_kind in INIT_KINDS),
            ("init.beta", self.init_beta > 0),
            ("init.box_half_width", self.init_box_half_width > 0),
            ("time.t_end", self.time_t_end >= 0),
            ("time.safety", 0 < self.time_safety <= 1),
            ("time.dt_max", self.time_dt_max > 0),
            ("output.path", bool(self.output_path)),
            ("norms", all(p >= 1 for p, _ in self.norms)),
            ("carleman.n_r", self.carleman_n_r >= 2),
            ("carleman.n_psi", self.carleman_n_psi >= 4),
            ("carleman.cv_tol", self.carleman_cv_tol > 0),
            ("carleman.dev_tol", self.carleman_dev_tol > 0),
        ]
        for key, ok in checks:
            if not ok:
                raise ConfigError(f"{key}: value {getattr(self, _attr(key))!r} out of range")
        return self

    def kernel(self):
        return ScatteringKernel(self.kernel_c_phi, self.kernel_c_ang)

    def angular(self):
        return AngularGrid(self.angular_n_mu, self.angular_n_az)

    def quadrature_spec(self):
        return QuadratureSpec(self.grid_half_width, self.grid_n, self.angular(),
                              self.carleman_n_r, self.carleman_n_psi)


def _attr(key):
    return key.replace(".", "_")


_PARSERS = {
    "grid.half_width": float, "grid.n": int,
    "angular.n_mu": int, "angular.n_az": int,
    "kernel.c_phi": float, "kernel.c_ang": float,
    "init.kind": _string, "init.beta": float,
    "init.shift": lambda t: _floats(t, 3), "init.box_half_width": float,
    "time.t_end": float, "time.safety": float, "time.dt_max": float,
    "output.path": _string, "norms": _norm_pairs,
    "carleman.n_r": int, "carleman.n_psi": int,
    "carleman.cv_tol": float, "carleman.dev_tol": float,
}
assert {_attr(k) for k in _PARSERS} == {f.name for f in fields(ScenarioConfig)}


def parse_config(text):
    """Parse scenario text; omitted keys keep their defaults."""
    values = {}
    seen = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, val = line.partition("=")
        key, val = key.strip(), val.strip()
        if not sep or not key:
            raise ConfigError(f"line {lineno}: expected 'key = value', got {raw.strip()!r}")
        if key not in _PARSERS:
            raise ConfigError(f"line {lineno}: unknown key {key!r}")
        if key in seen:
            raise ConfigError(f"line {lineno}: duplicate key {key!r} (first on line {seen[key]})")
        try:
            values[_attr(key)] = _PARSERS[key](val)
        except ValueError as exc:
            raise ConfigError(f"line {lineno}: bad value for {key}: {exc}") from None
        seen[key] = lineno
    return replace(ScenarioConfig(), **values).validate()


def load_config(path):
    with open(path, encoding="utf-8") as fh:
        return parse_config(fh.read())


def build_initial(cfg):
    """Initial field f0 sampled at the grid nodes."""
    beta = cfg.init_beta

    def sample(x):
        if cfg.init_kind == "juttner":
            return np.exp(-beta * energy(x))
        if cfg.init_kind == "two_bump":
            shift = np.asarray(cfg.init_shift)
            return np.exp(-beta * energy(x - shift)) + np.exp(-beta * energy(x + shift))
        return np.all(np.abs(x) <= cfg.init_box_half_width, axis=-1).astype(float)

    return DensityField.from_function(sample, cfg.grid_half_width, cfg.grid_n)
