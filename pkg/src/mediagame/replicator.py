"""Replicator dynamics for the two-population creator/user game.

State layout inside the kernels is a length-5 vector (x1, x2, x3, x4, y).
Two right-hand sides are available:

``standard``  x_i' = x_i (pi_i - mean_user),  y' = y (pi_C - mean_creator)
``literal``   x_i' = x_i (1 - x_i) (pi_i - mean_user),
              y' = y (1 - y) (pi_C - mean_creator),  x4' = -(x1' + x2' + x3')

The standard form is the default: its corner eigenvalues reproduce the
published stability conditions and its basin census matches the reported
38.6 % / 0.54 figures. The literal form makes every corner non-hyperbolic.
"""

from __future__ import annotations

import enum
import itertools
import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from typing import Optional, Sequence

import numpy as np
from numba import njit

from .params import GameParams, validate_params
from .payoff import PopulationState, cooperation_ratio

log = logging.getLogger(__name__)

FORMS = ("standard", "literal")
_TINY = 1e-300

TRAJECTORY_HEADER = ("t", "x_alld", "x_bmedia", "x_gmedia", "x_allc", "y", "eta")


class IntegrationError(RuntimeError):
    def __init__(self, step, message="non-finite state"):
        super().__init__(f"{message} at step {step}")
        self.step = step


@dataclass(frozen=True)
class IntegratorConfig:
    step_size: float = 0.01
    horizon: float = 10000.0
    record_stride: int = 100
    simplex_tolerance: float = 1e-9
    convergence_epsilon: float = 1e-6
    form: str = "standard"
    # projection off is only meant for convergence-order checks
    project: bool = True

    def __post_init__(self):
        if not (self.step_size > 0 and self.step_size <= 0.1):
            raise ValueError(f"step_size must be in (0, 0.1], got {self.step_size}")
        if not self.horizon >= 100 * self.step_size * (1 - 1e-12):
            raise ValueError("horizon must be at least 100 * step_size")
        if int(self.record_stride) < 1:
            raise ValueError("record_stride must be a positive integer")
        if self.form not in FORMS:
            raise ValueError(f"form must be one of {FORMS}, got {self.form!r}")

    @property
    def n_steps(self):
        return int(round(self.horizon / self.step_size))

    def to_dict(self):
        return asdict(self)


# ---------------------------------------------------------------------------
# compiled kernels


@njit(cache=True)
def _rhs(x1, x2, x3, x4, y, P, literal):
    b_u, c_u, b_c, c_c, c_i, q = P[0], P[1], P[2], P[3], P[4], P[5]
    p2 = 0.5 * b_u * y - 0.5 * c_u * (1.0 - y)
    p3 = (q * b_u - c_i) * y - ((1.0 - q) * c_u + c_i) * (1.0 - y)
    p4 = b_u * y - c_u * (1.0 - y)
    pbar = x2 * p2 + x3 * p3 + x4 * p4
    pc = -c_c * x1 + (0.5 * b_c - c_c) * x2 + (q * b_c - c_c) * x3 + (b_c - c_c) * x4
    pd = 0.5 * b_c * x2 + (1.0 - q) * b_c * x3 + b_c * x4
    pcbar = y * pc + (1.0 - y) * pd
    if literal:
        d1 = x1 * (1.0 - x1) * (-pbar)
        d2 = x2 * (1.0 - x2) * (p2 - pbar)
        d3 = x3 * (1.0 - x3) * (p3 - pbar)
        d4 = -(d1 + d2 + d3)
        dy = y * (1.0 - y) * (pc - pcbar)
    else:
        d1 = x1 * (-pbar)
        d2 = x2 * (p2 - pbar)
        d3 = x3 * (p3 - pbar)
        d4 = x4 * (p4 - pbar)
        dy = y * (pc - pcbar)
    return d1, d2, d3, d4, dy


@njit(cache=True)
def _eta(x2, x3, x4, y, q):
    return (y + 0.5 * x2 + (q * y + (1.0 - q) * (1.0 - y)) * x3 + x4) / 2.0


@njit(cache=True)
def _clip01(v):
    if v < _TINY:
        return 0.0
    if v > 1.0:
        return 1.0
    return v


@njit(cache=True)
def _run(s0, P, h, n_steps, stride, literal, project, record):
    """Fixed-step RK4 with optional clip-and-renormalise projection.

    Returns (records, final, eta_avg, max_drift, fail_step). ``records`` has
    rows (step, x1, x2, x3, x4, y) every ``stride`` steps plus the last step.
    The eta average is the trapezoidal mean over steps n_steps//2 .. n_steps.
    """
    q = P[5]
    if record:
        n_rec = n_steps // stride + 1
        if n_steps % stride != 0:
            n_rec += 1
    else:
        n_rec = 0
    rec = np.empty((n_rec, 6))
    x1, x2, x3, x4, y = s0[0], s0[1], s0[2], s0[3], s0[4]
    k_avg = n_steps // 2
    eta_sum = 0.0
    max_drift = 0.0
    fail = -1
    ri = 0
    if record:
        rec[0, 0] = 0.0
        rec[0, 1] = x1
        rec[0, 2] = x2
        rec[0, 3] = x3
        rec[0, 4] = x4
        rec[0, 5] = y
        ri = 1
    eta_prev = _eta(x2, x3, x4, y, q)
    k = 0
    while k < n_steps:
        a1, a2, a3, a4, ay = _rhs(x1, x2, x3, x4, y, P, literal)
        hh = 0.5 * h
        b1, b2, b3, b4, by = _rhs(x1 + hh * a1, x2 + hh * a2, x3 + hh * a3, x4 + hh * a4, y + hh * ay, P, literal)
        c1, c2, c3, c4, cy = _rhs(x1 + hh * b1, x2 + hh * b2, x3 + hh * b3, x4 + hh * b4, y + hh * by, P, literal)
        e1, e2, e3, e4, ey = _rhs(x1 + h * c1, x2 + h * c2, x3 + h * c3, x4 + h * c4, y + h * cy, P, literal)
        w = h / 6.0
        n1 = x1 + w * (a1 + 2.0 * b1 + 2.0 * c1 + e1)
        n2 = x2 + w * (a2 + 2.0 * b2 + 2.0 * c2 + e2)
        n3 = x3 + w * (a3 + 2.0 * b3 + 2.0 * c3 + e3)
        n4 = x4 + w * (a4 + 2.0 * b4 + 2.0 * c4 + e4)
        ny = y + w * (ay + 2.0 * by + 2.0 * cy + ey)
        if not (np.isfinite(n1) and np.isfinite(n2) and np.isfinite(n3) and np.isfinite(n4) and np.isfinite(ny)):
            fail = k + 1
            break
        drift = abs(n1 + n2 + n3 + n4 - 1.0)
        if drift > max_drift:
            max_drift = drift
        if project:
            n1 = _clip01(n1)
            n2 = _clip01(n2)
            n3 = _clip01(n3)
            n4 = _clip01(n4)
            tot = n1 + n2 + n3 + n4
            if tot <= 0.0:
                fail = k + 1
                break
            n1 /= tot
            n2 /= tot
            n3 /= tot
            n4 /= tot
            ny = _clip01(ny)
        k += 1
        eta_new = _eta(n2, n3, n4, ny, q)
        if k > k_avg:
            eta_sum += 0.5 * (eta_prev + eta_new)
        fixed = n1 == x1 and n2 == x2 and n3 == x3 and n4 == x4 and ny == y
        x1, x2, x3, x4, y = n1, n2, n3, n4, ny
        eta_prev = eta_new
        if record and (k % stride == 0 or k == n_steps):
            rec[ri, 0] = k
            rec[ri, 1] = x1
            rec[ri, 2] = x2
            rec[ri, 3] = x3
            rec[ri, 4] = x4
            rec[ri, 5] = y
            ri += 1
        if fixed and k < n_steps:
            # the map has reached a floating-point fixed point; the rest of
            # the trajectory is this state repeated
            remaining = n_steps - k
            if k >= k_avg:
                eta_sum += eta_new * remaining
            else:
                eta_sum += eta_new * (n_steps - k_avg)
            if record:
                kk = (k // stride + 1) * stride
                while kk <= n_steps:
                    rec[ri, 0] = kk
                    rec[ri, 1] = x1
                    rec[ri, 2] = x2
                    rec[ri, 3] = x3
                    rec[ri, 4] = x4
                    rec[ri, 5] = y
                    ri += 1
                    kk += stride
                if n_steps % stride != 0:
                    rec[ri, 0] = n_steps
                    rec[ri, 1] = x1
                    rec[ri, 2] = x2
                    rec[ri, 3] = x3
                    rec[ri, 4] = x4
                    rec[ri, 5] = y
                    ri += 1
            k = n_steps
    final = np.array([x1, x2, x3, x4, y])
    n_avg = n_steps - k_avg
    eta_avg = eta_sum / n_avg if n_avg > 0 else eta_prev
    return rec[:ri], final, eta_avg, max_drift, fail


@njit(cache=True)
def _run_batch(states, P, h, n_steps, literal, project):
    n = states.shape[0]
    finals = np.empty((n, 5))
    etas = np.empty(n)
    fails = np.empty(n, dtype=np.int64)
    derivs = np.empty(n)
    for i in range(n):
        _, fin, eta_avg, _, fail = _run(states[i], P, h, n_steps, 1, literal, project, False)
        finals[i] = fin
        etas[i] = eta_avg
        fails[i] = fail
        d = _rhs(fin[0], fin[1], fin[2], fin[3], fin[4], P, literal)
        m = 0.0
        for v in (d[0], d[1], d[2], d[4]):
            if abs(v) > m:
                m = abs(v)
        derivs[i] = m
    return finals, etas, fails, derivs


# ---------------------------------------------------------------------------
# public surface


def full_derivatives(state, p: GameParams, form="standard"):
    """Right-hand side for all five components (x1, x2, x3, x4, y).

    ``state`` may be a PopulationState or any length-5 array; no range checks.
    """
    s = state.as_array() if isinstance(state, PopulationState) else np.asarray(state, float)
    return np.array(_rhs(s[0], s[1], s[2], s[3], s[4], p.as_array(), form == "literal"))


def derivatives(s: PopulationState, p: GameParams, form="standard") -> np.ndarray:
    """(dx1, dx2, dx3, dy); x4 is implied by the simplex."""
    d = full_derivatives(s, p, form)
    return d[[0, 1, 2, 4]]


@dataclass
class Trajectory:
    times: np.ndarray
    states: np.ndarray  # (n, 5): x1, x2, x3, x4, y
    eta_series: np.ndarray
    eta_time_average: Optional[float] = None
    max_drift: float = 0.0
    params: Optional[GameParams] = None
    form: str = "standard"

    def __len__(self):
        return len(self.times)

    def state(self, i) -> PopulationState:
        row = self.states[i]
        return PopulationState(tuple(row[:4]), row[4])

    @property
    def terminal_state(self) -> PopulationState:
        return self.state(-1)

    def rows(self):
        for t, s, e in zip(self.times, self.states, self.eta_series):
            yield (float(t), *map(float, s), float(e))


class OutcomeKind(str, enum.Enum):
    CONVERGED_DEFECTION = "ConvergedDefection"
    CONVERGED_OTHER = "ConvergedOther"
    OSCILLATING = "Oscillating"


@dataclass(frozen=True)
class TrajectoryOutcome:
    kind: OutcomeKind
    time_averaged_eta: float
    terminal_state: PopulationState
    defection_distance: float
    derivative_norm: float


def _as_array(s0):
    if isinstance(s0, PopulationState):
        return s0.as_array()
    return np.asarray(s0, dtype=float)


def integrate(s0: PopulationState, p: GameParams, cfg: IntegratorConfig = IntegratorConfig()) -> Trajectory:
    """Integrate from ``s0`` with fixed-step RK4 over ``cfg.horizon``."""
    validate_params(p)
    P = p.as_array()
    rec, _, eta_avg, drift, fail = _run(
        _as_array(s0), P, cfg.step_size, cfg.n_steps, int(cfg.record_stride),
        cfg.form == "literal", cfg.project, True,
    )
    if fail >= 0:
        raise IntegrationError(int(fail))
    states = np.ascontiguousarray(rec[:, 1:])
    times = rec[:, 0] * cfg.step_size
    eta = cooperation_ratio(states[:, 1], states[:, 2], states[:, 3], states[:, 4], p.q)
    return Trajectory(times, states, eta, float(eta_avg), float(drift), p, cfg.form)


def defection_distance(state) -> float:
    """Max-norm distance to the all-AllD / all-unsafe corner."""
    s = _as_array(state)
    return float(max(1.0 - s[0], s[1], s[2], s[3], s[4]))


def _trapezoid_tail_mean(times, values):
    t_end = times[-1]
    t_half = times[0] + 0.5 * (t_end - times[0])
    mask = times >= t_half
    t, v = times[mask], values[mask]
    if len(t) < 2:
        return float(values[-1])
    return float(np.trapezoid(v, t) / (t[-1] - t[0]))


def classify_outcome(t: Trajectory, cfg: IntegratorConfig = IntegratorConfig(), p: GameParams | None = None) -> TrajectoryOutcome:
    if len(t) < 2:
        raise ValueError("trajectory needs at least 2 recorded points")
    p = p or t.params
    if p is None:
        raise ValueError("game parameters are required to evaluate derivatives")
    final = t.states[-1]
    dist = defection_distance(final)
    dnorm = float(np.max(np.abs(full_derivatives(final, p, cfg.form)[[0, 1, 2, 4]])))
    if t.eta_time_average is not None:
        eta = t.eta_time_average
    else:
        eta = _trapezoid_tail_mean(np.asarray(t.times), np.asarray(t.eta_series))
    eta = min(1.0, max(0.0, eta))
    eps = cfg.convergence_epsilon
    if dist < eps:
        kind = OutcomeKind.CONVERGED_DEFECTION
    elif dnorm < eps:
        kind = OutcomeKind.CONVERGED_OTHER
    else:
        kind = OutcomeKind.OSCILLATING
    return TrajectoryOutcome(kind, eta, PopulationState(tuple(final[:4]), final[4]), dist, dnorm)


# ---------------------------------------------------------------------------
# batch evaluation


def compositions(total, parts=4):
    """All non-negative integer tuples of length ``parts`` summing to ``total``,
    in lexicographic order."""
    if parts == 1:
        yield (total,)
        return
    for k in range(total + 1):
        for rest in compositions(total - k, parts - 1):
            yield (k, *rest)


def grid_divisions(grid_step):
    n = round(1.0 / grid_step)
    if n < 1 or abs(n * grid_step - 1.0) > 1e-9:
        raise ValueError(f"grid_step must divide 1 exactly, got {grid_step}")
    return n


def census_states(grid_step):
    """Starting states (x1..x4, y) on the grid; user composition major,
    y minor."""
    n = grid_divisions(grid_step)
    comps = np.array(list(compositions(n, 4)), dtype=float) / n
    ys = np.arange(n + 1) / n
    xs = np.repeat(comps, len(ys), axis=0)
    yy = np.tile(ys, len(comps))
    return np.column_stack([xs, yy])


def _batch_worker(args):
    states, P, h, n_steps, literal, project = args
    return _run_batch(states, P, h, n_steps, literal, project)


def run_batch(states, p: GameParams, cfg: IntegratorConfig, jobs=1, chunk_size=2048):
    """Integrate many starting states; results are ordered like ``states``
    and do not depend on ``jobs``."""
    states = np.ascontiguousarray(states, dtype=float)
    P = p.as_array()
    args = [
        (states[i:i + chunk_size], P, cfg.step_size, cfg.n_steps, cfg.form == "literal", cfg.project)
        for i in range(0, len(states), chunk_size)
    ]
    if jobs <= 1 or len(args) <= 1:
        parts = [_batch_worker(a) for a in args]
    else:
        with ProcessPoolExecutor(max_workers=jobs) as ex:
            parts = list(ex.map(_batch_worker, args))
    if not parts:
        return np.empty((0, 5)), np.empty(0), np.empty(0, dtype=np.int64), np.empty(0)
    finals, etas, fails, derivs = (np.concatenate(x) for x in zip(*parts))
    return finals, etas, fails, derivs


def _classify_batch(finals, derivs, fails, eps):
    dist = np.maximum.reduce([1.0 - finals[:, 0], finals[:, 1], finals[:, 2], finals[:, 3], finals[:, 4]])
    kind = np.full(len(finals), OutcomeKind.OSCILLATING.value, dtype=object)
    kind[derivs < eps] = OutcomeKind.CONVERGED_OTHER.value
    kind[dist < eps] = OutcomeKind.CONVERGED_DEFECTION.value
    kind[fails >= 0] = "Failed"
    return kind


@dataclass
class BasinCensus:
    total_states: int
    defection_fraction: float
    mean_eta: float
    grid_step: float
    failed: int = 0
    states: np.ndarray = field(default=None, repr=False)
    outcomes: np.ndarray = field(default=None, repr=False)
    etas: np.ndarray = field(default=None, repr=False)

    def summary(self):
        counts = {}
        if self.outcomes is not None:
            kinds, n = np.unique(self.outcomes, return_counts=True)
            counts = {str(k): int(c) for k, c in zip(kinds, n)}
        return {
            "total_states": self.total_states,
            "grid_step": self.grid_step,
            "defection_fraction": self.defection_fraction,
            "mean_eta": self.mean_eta,
            "failed": self.failed,
            **{f"n_{k}": v for k, v in counts.items()},
        }


def basin_census(p: GameParams, grid_step=0.02, cfg: IntegratorConfig = IntegratorConfig(), jobs=1) -> BasinCensus:
    """Integrate every grid starting state and report the fraction that ends
    at the defection corner plus the mean time-averaged eta."""
    validate_params(p)
    states = census_states(grid_step)
    log.info("basin census: %d starting states", len(states))
    finals, etas, fails, derivs = run_batch(states, p, cfg, jobs=jobs)
    kinds = _classify_batch(finals, derivs, fails, cfg.convergence_epsilon)
    ok = fails < 0
    n_ok = int(ok.sum())
    if n_ok == 0:
        raise IntegrationError(-1, "every starting state failed")
    etas = np.clip(etas, 0.0, 1.0)
    frac = float(np.sum(kinds[ok] == OutcomeKind.CONVERGED_DEFECTION.value) / n_ok)
    return BasinCensus(
        total_states=len(states),
        defection_fraction=frac,
        mean_eta=float(np.mean(etas[ok])),
        grid_step=grid_step,
        failed=len(states) - n_ok,
        states=states,
        outcomes=kinds,
        etas=np.where(ok, etas, np.nan),
    )


def time_averaged_eta_grid(
    p_grid: Sequence[GameParams],
    s0: PopulationState | None = None,
    cfg: IntegratorConfig = IntegratorConfig(),
    jobs=1,
) -> list:
    """Time-averaged eta for each parameter set from a common start.

    Failed cells come back as NaN.
    """
    s = _as_array(s0 if s0 is not None else PopulationState.uniform(0.5))
    for p in p_grid:
        validate_params(p)
    args = [(s[None, :].copy(), p.as_array(), cfg.step_size, cfg.n_steps, cfg.form == "literal", cfg.project) for p in p_grid]
    if jobs <= 1 or len(args) <= 1:
        parts = [_batch_worker(a) for a in args]
    else:
        with ProcessPoolExecutor(max_workers=jobs) as ex:
            parts = list(ex.map(_batch_worker, args, chunksize=max(1, len(args) // (4 * jobs))))
    out = []
    for _, etas, fails, _ in parts:
        out.append(float("nan") if fails[0] >= 0 else float(min(1.0, max(0.0, etas[0]))))
    return out
