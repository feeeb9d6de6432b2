"""Two-parameter grid sweeps over either engine."""

from __future__ import annotations

import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Optional, Union

import numpy as np

from .abm import AbmConfig, run_abm
from .params import PARAM_NAMES, GameParams, validate_params
from .payoff import PopulationState
from .replicator import IntegratorConfig, time_averaged_eta_grid

log = logging.getLogger(__name__)

SWEEP_HEADER = ("x_param", "x_value", "y_param", "y_value", "eta_mean", "eta_std", "n_replicates", "valid")
ENGINES = ("replicator", "abm")


class GridMismatchError(ValueError):
    pass


@dataclass(frozen=True)
class Axis:
    name: str
    lo: float
    hi: float
    steps: int

    def __post_init__(self):
        if self.name not in PARAM_NAMES:
            raise ValueError(f"axis parameter must be one of {PARAM_NAMES}, got {self.name!r}")
        if int(self.steps) < 2:
            raise ValueError("an axis needs at least 2 steps")

    @classmethod
    def parse(cls, text):
        """``name:lo:hi:steps``, e.g. ``c_i:0:0.5:21``."""
        parts = text.split(":")
        if len(parts) != 4:
            raise ValueError(f"axis must look like name:lo:hi:steps, got {text!r}")
        name, lo, hi, steps = parts
        return cls(name.strip(), float(lo), float(hi), int(steps))

    @property
    def values(self):
        return np.linspace(self.lo, self.hi, int(self.steps))

    def __str__(self):
        return f"{self.name}:{self.lo:g}:{self.hi:g}:{self.steps}"


@dataclass(frozen=True)
class SweepSpec:
    axis_x: Axis
    axis_y: Axis
    base: GameParams = GameParams()
    engine: str = "replicator"
    engine_config: Union[IntegratorConfig, AbmConfig, None] = None

    def __post_init__(self):
        if self.axis_x.name == self.axis_y.name:
            raise ValueError("axis_x and axis_y must vary different parameters")
        if self.engine not in ENGINES:
            raise ValueError(f"engine must be one of {ENGINES}")
        if self.engine_config is None:
            cfg = IntegratorConfig() if self.engine == "replicator" else AbmConfig(replicates=20)
            object.__setattr__(self, "engine_config", cfg)
        want = IntegratorConfig if self.engine == "replicator" else AbmConfig
        if not isinstance(self.engine_config, want):
            raise TypeError(f"{self.engine} engine needs a {want.__name__}")

    def cells(self):
        """(index, x_value, y_value, params) in x-major order; cells whose
        parameters fail validation carry the error instead of params."""
        out = []
        for i, xv in enumerate(self.axis_x.values):
            for j, yv in enumerate(self.axis_y.values):
                k = i * self.axis_y.steps + j
                try:
                    p = validate_params(replace(self.base, **{self.axis_x.name: float(xv), self.axis_y.name: float(yv)}))
                except ValueError as exc:
                    p = exc
                out.append((k, float(xv), float(yv), p))
        return out

    def describe(self):
        d = {
            "engine": self.engine,
            "axis_x": str(self.axis_x),
            "axis_y": str(self.axis_y),
            **{f"base.{k}": v for k, v in self.base.to_dict().items()},
            **{f"{self.engine}.{k}": v for k, v in self.engine_config.to_dict().items()},
        }
        return d


@dataclass
class SweepResult:
    spec: SweepSpec
    eta_mean: np.ndarray  # (nx, ny)
    eta_std: np.ndarray
    n_replicates: np.ndarray
    valid: np.ndarray
    errors: dict = field(default_factory=dict)

    @property
    def x_values(self):
        return self.spec.axis_x.values

    @property
    def y_values(self):
        return self.spec.axis_y.values

    def rows(self):
        sx, sy = self.spec.axis_x, self.spec.axis_y
        for i, xv in enumerate(self.x_values):
            for j, yv in enumerate(self.y_values):
                yield (sx.name, float(xv), sy.name, float(yv), float(self.eta_mean[i, j]),
                       float(self.eta_std[i, j]), int(self.n_replicates[i, j]), bool(self.valid[i, j]))


def replicate_seed(base_seed, cell_index, replicate):
    """Seed of one ABM replicate; a pure function of its coordinates."""
    ss = np.random.SeedSequence([int(base_seed), int(cell_index), int(replicate)])
    return int(ss.generate_state(1, np.uint64)[0])


def _abm_task(args):
    k, r, p, cfg, seed = args
    try:
        ts = run_abm(p, cfg, seed=seed)
        return k, r, ts.post_burn_in_mean(cfg.burn_in_fraction), None
    except Exception as exc:  # recorded per cell, the grid carries on
        return k, r, float("nan"), repr(exc)


def _replicator_task(args):
    k, p, s0, cfg = args
    try:
        eta = time_averaged_eta_grid([p], s0, cfg)[0]
        return k, eta, None if np.isfinite(eta) else "integration failed"
    except Exception as exc:
        return k, float("nan"), repr(exc)


def run_sweep(spec: SweepSpec, jobs=1, s0: Optional[PopulationState] = None, cell_indices=None) -> SweepResult:
    """Evaluate eta on every grid cell. Results are stored by cell index, so
    neither ``jobs`` nor evaluation order affects them."""
    nx, ny = spec.axis_x.steps, spec.axis_y.steps
    mean = np.full((nx, ny), np.nan)
    std = np.full((nx, ny), np.nan)
    nrep = np.zeros((nx, ny), dtype=int)
    valid = np.zeros((nx, ny), dtype=bool)
    errors = {}
    cells = spec.cells()
    if cell_indices is not None:
        wanted = set(cell_indices)
        cells = [c for c in cells if c[0] in wanted]
    good = []
    for k, _, _, p in cells:
        if isinstance(p, Exception):
            errors[k] = repr(p)
        else:
            good.append((k, p))

    def pool_map(fn, tasks):
        if jobs <= 1 or len(tasks) <= 1:
            return [fn(t) for t in tasks]
        with ProcessPoolExecutor(max_workers=jobs) as ex:
            return list(ex.map(fn, tasks, chunksize=max(1, len(tasks) // (8 * jobs))))

    cfg = spec.engine_config
    if spec.engine == "replicator":
        s0 = s0 if s0 is not None else PopulationState.uniform(0.5)
        for k, eta, err in pool_map(_replicator_task, [(k, p, s0, cfg) for k, p in good]):
            i, j = divmod(k, ny)
            mean[i, j] = eta
            std[i, j] = 0.0
            nrep[i, j] = 1
            valid[i, j] = err is None
            if err:
                errors[k] = err
    else:
        seed = int(cfg.seed)
        tasks = [(k, r, p, cfg, replicate_seed(seed, k, r)) for k, p in good for r in range(cfg.replicates)]
        per_cell = {k: np.full(cfg.replicates, np.nan) for k, _ in good}
        for k, r, eta, err in pool_map(_abm_task, tasks):
            per_cell[k][r] = eta
            if err:
                errors[k] = err
        for k, vals in per_cell.items():
            i, j = divmod(k, ny)
            ok = np.isfinite(vals)
            nrep[i, j] = int(ok.sum())
            valid[i, j] = bool(ok.all())
            if ok.any():
                mean[i, j] = float(vals[ok].mean())
                std[i, j] = float(vals[ok].std())
    return SweepResult(spec, mean, std, nrep, valid, errors)


@dataclass
class EngineComparison:
    diff: np.ndarray
    max_diff: float
    mean_diff: float


def _same_grid(a: SweepResult, b: SweepResult):
    ax, bx = a.spec.axis_x, b.spec.axis_x
    ay, by = a.spec.axis_y, b.spec.axis_y
    return (
        ax.name == bx.name and ay.name == by.name
        and a.eta_mean.shape == b.eta_mean.shape
        and np.allclose(ax.values, bx.values, rtol=0, atol=1e-12)
        and np.allclose(ay.values, by.values, rtol=0, atol=1e-12)
        and a.spec.base == b.spec.base
    )


def compare_engines(a: SweepResult, b: SweepResult) -> EngineComparison:
    """Cellwise |eta_a - eta_b| over cells valid in both sweeps."""
    if not _same_grid(a, b):
        raise GridMismatchError("sweeps are not on the same parameter grid")
    diff = np.abs(a.eta_mean - b.eta_mean)
    ok = a.valid & b.valid
    diff = np.where(ok, diff, np.nan)
    if not ok.any():
        raise GridMismatchError("no cell is valid in both sweeps")
    return EngineComparison(diff, float(np.nanmax(diff)), float(np.nanmean(diff)))


def collapse_boundary(values, etas, threshold=0.05):
    """Parameter value past which eta stays at or below ``threshold`` for the
    rest of a monotone scan: the midpoint between the last cell above and
    the first cell at or below. None if the scan never collapses."""
    values = np.asarray(values)
    etas = np.asarray(etas)
    above = np.nonzero(etas > threshold)[0]
    if len(above) == 0:
        return float(values[0])
    last = above[-1]
    if last == len(values) - 1:
        return None
    return float(0.5 * (values[last] + values[last + 1]))
