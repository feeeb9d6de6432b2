"""Finite-population agent-based simulation with mutation and Fermi imitation.

Random numbers come from numpy's PCG64 generator, driven from inside the
compiled kernels. Replicate ``r`` of a run with base seed ``s`` is seeded
with ``s + r``, so any replicate can be reproduced on its own.
"""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from typing import Optional

import numpy as np
from numba import njit

from .params import CreatorStrategy, GameParams, UserStrategy, validate_params
from .payoff import cooperation_ratio, payoff_tables

TIMESERIES_HEADER = ("generation", "n_alld", "n_bmedia", "n_gmedia", "n_allc", "n_unsafe", "n_safe", "eta")

_FERMI_CUTOFF = 700.0


@dataclass(frozen=True)
class AbmConfig:
    n_users: int = 100
    n_creators: int = 50
    beta_u: float = 1.0
    beta_c: float = 1.0
    mu_u: Optional[float] = None  # defaults to 1 / n_users
    mu_c: Optional[float] = None  # defaults to 1 / n_creators
    generations: int = 500
    burn_in_fraction: float = 0.1
    seed: int = 0
    replicates: int = 100
    # False: each step updates one agent drawn from the union of both
    # populations instead of one user followed by one creator
    paired_updates: bool = True

    def __post_init__(self):
        if self.mu_u is None:
            object.__setattr__(self, "mu_u", 1.0 / self.n_users if self.n_users > 0 else 0.0)
        if self.mu_c is None:
            object.__setattr__(self, "mu_c", 1.0 / self.n_creators if self.n_creators > 0 else 0.0)
        if int(self.n_users) < 1 or int(self.n_creators) < 1:
            raise ValueError("population sizes must be positive")
        if int(self.generations) < 1 or int(self.replicates) < 1:
            raise ValueError("generations and replicates must be positive")
        for name in ("beta_u", "beta_c"):
            v = getattr(self, name)
            if not (math.isfinite(v) and v >= 0):
                raise ValueError(f"{name} must be a finite number >= 0, got {v}")
        for name in ("mu_u", "mu_c"):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise ValueError(f"{name} must lie in [0, 1], got {v}")
        if not 0.0 <= self.burn_in_fraction < 1.0:
            raise ValueError("burn_in_fraction must lie in [0, 1)")
        if not 0 <= int(self.seed) < 2**64:
            raise ValueError("seed must be an unsigned 64-bit integer")

    def to_dict(self):
        return asdict(self)


@dataclass
class AgentPopulations:
    users: np.ndarray
    creators: np.ndarray

    def __post_init__(self):
        self.users = np.asarray(self.users, dtype=np.int64).copy()
        self.creators = np.asarray(self.creators, dtype=np.int64).copy()
        if len(self.users) == 0 or len(self.creators) == 0:
            raise ValueError("populations must be non-empty")
        if self.users.min() < 0 or self.users.max() > 3:
            raise ValueError("user strategies must be in 0..3")
        if self.creators.min() < 0 or self.creators.max() > 1:
            raise ValueError("creator strategies must be 0 or 1")

    @classmethod
    def homogeneous(cls, user: UserStrategy, creator: CreatorStrategy, n_users=100, n_creators=50):
        return cls(np.full(n_users, int(user)), np.full(n_creators, int(creator)))

    @classmethod
    def random(cls, n_users, n_creators, rng):
        return cls(rng.integers(0, 4, n_users), rng.integers(0, 2, n_creators))

    def user_counts(self):
        return np.bincount(self.users, minlength=4)

    def creator_counts(self):
        return np.bincount(self.creators, minlength=2)

    def copy(self):
        return AgentPopulations(self.users, self.creators)


@dataclass
class AbmTimeSeries:
    generations: np.ndarray
    user_counts: np.ndarray  # (G + 1, 4)
    creator_counts: np.ndarray  # (G + 1, 2)
    eta: np.ndarray
    seed: int = 0

    def rows(self):
        for g, u, c, e in zip(self.generations, self.user_counts, self.creator_counts, self.eta):
            yield (int(g), *map(int, u), *map(int, c), float(e))

    def post_burn_in_mean(self, burn_in_fraction):
        G = int(self.generations[-1])
        mask = self.generations > G * burn_in_fraction
        return float(self.eta[mask].mean())


# ---------------------------------------------------------------------------
# compiled kernels


@njit(cache=True)
def _fermi(pi_i, pi_j, beta):
    z = beta * (pi_j - pi_i)
    if z > _FERMI_CUTOFF:
        return 1.0
    if z < -_FERMI_CUTOFF:
        return 0.0
    return 1.0 / (1.0 + math.exp(-z))


@njit(cache=True)
def _draw_index(rng, n):
    k = int(rng.random() * n)
    return k if k < n else n - 1


@njit(cache=True)
def _user_avg_payoff(s, creators, U, rng):
    m = creators.shape[0]
    total = 0.0
    for _ in range(m):
        total += U[creators[_draw_index(rng, m)], s]
    return total / m


@njit(cache=True)
def _creator_avg_payoff(s, users, C, rng):
    m = users.shape[0]
    total = 0.0
    for _ in range(m):
        total += C[s, users[_draw_index(rng, m)]]
    return total / m


@njit(cache=True)
def _update_user(users, creators, U, mu, beta, rng):
    n = users.shape[0]
    i = _draw_index(rng, n)
    if rng.random() < mu:
        k = _draw_index(rng, 3)
        users[i] = k if k < users[i] else k + 1
        return
    if n < 2:
        return
    j = _draw_index(rng, n - 1)
    if j >= i:
        j += 1
    pi_i = _user_avg_payoff(users[i], creators, U, rng)
    pi_j = _user_avg_payoff(users[j], creators, U, rng)
    if rng.random() < _fermi(pi_i, pi_j, beta):
        users[i] = users[j]


@njit(cache=True)
def _update_creator(creators, users, C, mu, beta, rng):
    n = creators.shape[0]
    i = _draw_index(rng, n)
    if rng.random() < mu:
        creators[i] = 1 - creators[i]
        return
    if n < 2:
        return
    j = _draw_index(rng, n - 1)
    if j >= i:
        j += 1
    pi_i = _creator_avg_payoff(creators[i], users, C, rng)
    pi_j = _creator_avg_payoff(creators[j], users, C, rng)
    if rng.random() < _fermi(pi_i, pi_j, beta):
        creators[i] = creators[j]


@njit(cache=True)
def _step(users, creators, U, C, mu_u, mu_c, beta_u, beta_c, paired, rng):
    if paired:
        _update_user(users, creators, U, mu_u, beta_u, rng)
        _update_creator(creators, users, C, mu_c, beta_c, rng)
    else:
        n_u = users.shape[0]
        if rng.random() * (n_u + creators.shape[0]) < n_u:
            _update_user(users, creators, U, mu_u, beta_u, rng)
        else:
            _update_creator(creators, users, C, mu_c, beta_c, rng)


@njit(cache=True)
def _simulate(users, creators, U, C, G, mu_u, mu_c, beta_u, beta_c, paired, rng):
    n_u = users.shape[0]
    n_c = creators.shape[0]
    counts = np.zeros((G + 1, 6), dtype=np.int64)
    for k in range(n_u):
        counts[0, users[k]] += 1
    for k in range(n_c):
        counts[0, 4 + creators[k]] += 1
    steps = n_u + n_c
    for g in range(1, G + 1):
        for _ in range(steps):
            _step(users, creators, U, C, mu_u, mu_c, beta_u, beta_c, paired, rng)
        for k in range(n_u):
            counts[g, users[k]] += 1
        for k in range(n_c):
            counts[g, 4 + creators[k]] += 1
    return counts


# ---------------------------------------------------------------------------
# public surface


def fermi_probability(pi_i, pi_j, beta) -> float:
    """Probability that an agent with payoff ``pi_i`` imitates one with
    ``pi_j``; saturates to 0/1 once |beta * dpi| exceeds 700."""
    return _fermi(float(pi_i), float(pi_j), float(beta))


def make_rng(seed):
    return np.random.Generator(np.random.PCG64(int(seed)))


def accumulate_payoff(agent_strategy, opposing_population, p: GameParams, rng) -> float:
    """Average payoff over M games against opponents drawn with replacement
    from the other population, M being that population's size.

    The agent's side is inferred from the strategy type.
    """
    U, C = payoff_tables(p)
    opp = np.asarray(opposing_population, dtype=np.int64)
    if len(opp) == 0:
        raise ValueError("opposing population is empty")
    if isinstance(agent_strategy, UserStrategy):
        return float(_user_avg_payoff(int(agent_strategy), opp, U, rng))
    if isinstance(agent_strategy, CreatorStrategy):
        return float(_creator_avg_payoff(int(agent_strategy), opp, C, rng))
    raise TypeError("agent_strategy must be a UserStrategy or CreatorStrategy")


def evolutionary_step(pop: AgentPopulations, p: GameParams, cfg: AbmConfig, rng) -> AgentPopulations:
    """One evolutionary step; the input populations are left untouched."""
    U, C = payoff_tables(p)
    out = pop.copy()
    _step(out.users, out.creators, U, C, cfg.mu_u, cfg.mu_c, cfg.beta_u, cfg.beta_c, cfg.paired_updates, rng)
    return out


def run_abm(p: GameParams, cfg: AbmConfig, initial="uniform-random", seed=None) -> AbmTimeSeries:
    """Run ``cfg.generations`` generations of N_U + N_C steps each.

    ``initial`` is an AgentPopulations or "uniform-random". Row 0 of the
    returned series is the initial state.
    """
    validate_params(p)
    seed = cfg.seed if seed is None else int(seed)
    rng = make_rng(seed)
    if isinstance(initial, str):
        if initial != "uniform-random":
            raise ValueError(f"unknown initial state {initial!r}")
        pop = AgentPopulations.random(cfg.n_users, cfg.n_creators, rng)
    else:
        pop = initial.copy()
        if len(pop.users) != cfg.n_users or len(pop.creators) != cfg.n_creators:
            raise ValueError("initial populations do not match the configured sizes")
    U, C = payoff_tables(p)
    counts = _simulate(
        pop.users, pop.creators, U, C, int(cfg.generations),
        float(cfg.mu_u), float(cfg.mu_c), float(cfg.beta_u), float(cfg.beta_c),
        bool(cfg.paired_updates), rng,
    )
    uc = counts[:, :4]
    cc = counts[:, 4:]
    x = uc / cfg.n_users
    y = cc[:, 1] / cfg.n_creators
    eta = cooperation_ratio(x[:, 1], x[:, 2], x[:, 3], y, p.q)
    return AbmTimeSeries(np.arange(cfg.generations + 1), uc, cc, eta, seed)


def _replicate_worker(args):
    p, cfg, initial, seed = args
    return run_abm(p, cfg, initial, seed=seed)


def run_replicates(p: GameParams, cfg: AbmConfig, initial="uniform-random", jobs=1, seeds=None) -> list:
    """All ``cfg.replicates`` runs, replicate r seeded with ``cfg.seed + r``
    unless ``seeds`` is given."""
    if seeds is None:
        seeds = [int(cfg.seed) + r for r in range(cfg.replicates)]
    args = [(p, cfg, initial, s) for s in seeds]
    if jobs <= 1 or len(args) <= 1:
        return [_replicate_worker(a) for a in args]
    with ProcessPoolExecutor(max_workers=jobs) as ex:
        return list(ex.map(_replicate_worker, args))


def replicate_etas(p: GameParams, cfg: AbmConfig, initial="uniform-random", jobs=1, seeds=None) -> np.ndarray:
    """Post-burn-in mean eta of each replicate."""
    runs = run_replicates(p, cfg, initial, jobs, seeds)
    return np.array([r.post_burn_in_mean(cfg.burn_in_fraction) for r in runs])


def average_cooperation_abm(p: GameParams, cfg: AbmConfig, initial="uniform-random", jobs=1) -> float:
    return float(replicate_etas(p, cfg, initial, jobs).mean())
