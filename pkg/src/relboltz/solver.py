"""Explicit time stepping of df/dt = Q(f, f) on the momentum grid."""
import logging
from dataclasses import dataclass

import numpy as np

from .collision_operator import collision_terms, loss_field
from .diagnostics import DiagnosticsRecord

log = logging.getLogger(__name__)

MIN_DT = 1e-12


class StagnationError(RuntimeError):
    """The admissible time step fell below MIN_DT."""


class SolverDivergence(FloatingPointError):
    """Non-finite values appeared; ``dump`` holds the context."""

    def __init__(self, message, dump):
        super().__init__(message)
        self.dump = dump


@dataclass(frozen=True)
class SolverState:
    """Immutable snapshot; ``dt_last`` is 0 for the initial state."""

    t: float
    f: object
    step_index: int = 0
    dt_last: float = 0.0


def time_step(loss, safety=0.5, dt_max=0.1, remaining=np.inf):
    """min(safety / max Lf, dt_max, remaining)."""
    lmax = float(np.max(loss))
    dt = safety / lmax if lmax > 0 else np.inf
    return min(dt, dt_max, remaining)


def advance(state, gain, loss, dt):
    """Forward Euler f (1 - dt Lf) + dt Q+.

    With dt Lf <= 1 both terms are nonnegative, so f stays nonnegative
    without clipping f itself; the damping factor is floored at 0 against
    round-off when safety = 1.
    """
    f = state.f
    damp = np.maximum(1.0 - dt * loss, 0.0)
    new = f.values * damp + dt * gain
    if not np.all(np.isfinite(new)):
        bad = np.argwhere(~np.isfinite(new))
        raise SolverDivergence(f"non-finite f at step {state.step_index + 1}",
                               {"t": state.t, "dt": dt, "step": state.step_index + 1,
                                "nodes": bad[:10].tolist(), "max_gain": _finite_max(gain),
                                "max_loss": _finite_max(loss)})
    return SolverState(state.t + dt, f.with_values(new), state.step_index + 1, dt)


def _finite_max(x):
    x = np.asarray(x)[np.isfinite(x)]
    return float(x.max()) if x.size else float("nan")


def _check_safety(safety):
    if not 0.0 < safety <= 1.0:
        raise ValueError(f"time.safety must lie in (0, 1], got {safety}")


def step(state, kernel, ang, safety=0.5, dt_max=0.1, t_end=np.inf, threads=1, backend=None):
    """One positivity-preserving Euler step."""
    _check_safety(safety)
    gain, loss = collision_terms(state.f, kernel, ang, threads, backend)
    dt = time_step(loss, safety, dt_max, t_end - state.t)
    if dt < MIN_DT:
        raise StagnationError(f"time step {dt:.3e} below {MIN_DT}")
    return advance(state, gain, loss, dt)


def run(initial, kernel, ang, t_end, observer=None, norms=(), safety=0.5, dt_max=0.1,
        threads=1, backend=None, stop=None):
    """Integrate to t_end and return one DiagnosticsRecord per state.

    ``observer(record, state)`` is called for every record. ``stop(record)``
    may return True to end the run early (the records so far are returned).
    """
    if not t_end >= 0:
        raise ValueError(f"time.t_end must be >= 0, got {t_end}")
    _check_safety(safety)
    state = SolverState(0.0, initial)
    records = []
    while True:
        done = t_end - state.t <= MIN_DT
        if done:
            loss = loss_field(state.f, kernel, ang, threads, backend)
        else:
            gain, loss = collision_terms(state.f, kernel, ang, threads, backend)
        rec = DiagnosticsRecord.from_field(state.f, state.t, state.dt_last, loss, norms)
        records.append(rec)
        if observer is not None:
            observer(rec, state)
        if done or (stop is not None and stop(rec)):
            return records
        dt = time_step(loss, safety, dt_max, t_end - state.t)
        if dt < MIN_DT:
            raise StagnationError(f"time step {dt:.3e} below {MIN_DT}")
        state = advance(state, gain, loss, dt)
        log.debug("step %d t=%.6g dt=%.3g", state.step_index, state.t, dt)
