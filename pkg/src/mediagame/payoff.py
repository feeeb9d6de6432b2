"""Payoff matrix, expected payoffs and the average cooperation ratio."""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass

import numpy as np

from .params import CreatorStrategy, GameParams, UserStrategy

SIMPLEX_TOL = 1e-9


@dataclass(frozen=True)
class PayoffPair:
    user_payoff: float
    creator_payoff: float


def payoff_tables(p: GameParams):
    """Return (user, creator) payoff arrays indexed ``[creator, user]``.

    Media coin flips are already averaged out in every cell.
    """
    q, b_u, c_u, b_c, c_c, c_i = p.q, p.b_u, p.c_u, p.b_c, p.c_c, p.c_i
    user = np.array(
        [
            # Unsafe: AllD, BMedia, GMedia, AllC
            [0.0, -0.5 * c_u, -(1 - q) * c_u - c_i, -c_u],
            # Safe
            [0.0, 0.5 * b_u, q * b_u - c_i, b_u],
        ]
    )
    creator = np.array(
        [
            [0.0, 0.5 * b_c, (1 - q) * b_c, b_c],
            [-c_c, 0.5 * b_c - c_c, q * b_c - c_c, b_c - c_c],
        ]
    )
    return user, creator


def payoff_pair(creator: CreatorStrategy, user: UserStrategy, p: GameParams) -> PayoffPair:
    user_tab, creator_tab = payoff_tables(p)
    c, u = int(creator), int(user)
    return PayoffPair(float(user_tab[c, u]), float(creator_tab[c, u]))


@dataclass(frozen=True)
class PopulationState:
    """User strategy frequencies x = (AllD, BMedia, GMedia, AllC) and the
    fraction y of safe creators."""

    x: tuple
    y: float

    def __post_init__(self):
        x = tuple(float(v) for v in self.x)
        if len(x) != 4:
            raise ValueError(f"x must have 4 components, got {len(x)}")
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "y", float(self.y))
        if not all(np.isfinite(x)) or not np.isfinite(self.y):
            raise ValueError(f"non-finite state: x={x}, y={self.y}")
        if any(v < -SIMPLEX_TOL or v > 1 + SIMPLEX_TOL for v in x):
            raise ValueError(f"x components must lie in [0, 1]: {x}")
        if abs(sum(x) - 1.0) > SIMPLEX_TOL:
            raise ValueError(f"x must sum to 1 (got {sum(x)!r})")
        if not -SIMPLEX_TOL <= self.y <= 1 + SIMPLEX_TOL:
            raise ValueError(f"y must lie in [0, 1], got {self.y}")

    @classmethod
    def from_reduced(cls, x1, x2, x3, y):
        return cls((x1, x2, x3, 1.0 - x1 - x2 - x3), y)

    @classmethod
    def uniform(cls, y=0.5):
        return cls((0.25, 0.25, 0.25, 0.25), y)

    @classmethod
    def corner(cls, user: UserStrategy, creator: CreatorStrategy):
        x = [0.0] * 4
        x[int(user)] = 1.0
        return cls(tuple(x), float(int(creator)))

    def as_array(self):
        """Length-5 array (x1, x2, x3, x4, y)."""
        return np.array([*self.x, self.y])


def expected_user_payoffs(s: PopulationState, p: GameParams) -> np.ndarray:
    """(pi_AllD, pi_BMedia, pi_GMedia, pi_AllC) against a creator mix with
    safe fraction y."""
    y = s.y
    return np.array(
        [
            0.0,
            0.5 * p.b_u * y - 0.5 * p.c_u * (1 - y),
            (p.q * p.b_u - p.c_i) * y - ((1 - p.q) * p.c_u + p.c_i) * (1 - y),
            p.b_u * y - p.c_u * (1 - y),
        ]
    )


def expected_creator_payoffs(s: PopulationState, p: GameParams) -> np.ndarray:
    """(pi_D, pi_C) against the user mixture x."""
    x1, x2, x3, x4 = s.x
    b_c, c_c, q = p.b_c, p.c_c, p.q
    pi_c = -c_c * x1 + (0.5 * b_c - c_c) * x2 + (q * b_c - c_c) * x3 + (b_c - c_c) * x4
    pi_d = 0.5 * b_c * x2 + (1 - q) * b_c * x3 + b_c * x4
    return np.array([pi_d, pi_c])


def cooperation_ratio(x2, x3, x4, y, q):
    """Average cooperation ratio; works elementwise on arrays."""
    return (y + 0.5 * x2 + (q * y + (1 - q) * (1 - y)) * x3 + x4) / 2


def avg_cooperation(s: PopulationState, p: GameParams) -> float:
    _, x2, x3, x4 = s.x
    eta = cooperation_ratio(x2, x3, x4, s.y, p.q)
    return float(min(1.0, max(0.0, eta)))


def empirical_cooperation(users, creators, p: GameParams) -> float:
    """Cooperation ratio of finite populations, using expected (not sampled)
    cooperation of media followers."""
    if len(users) == 0 or len(creators) == 0:
        raise ValueError("both populations must be non-empty")
    uc = Counter(int(u) for u in users)
    n_u = len(users)
    y = sum(int(c) for c in creators) / len(creators)
    x = [uc.get(k, 0) / n_u for k in range(4)]
    return float(cooperation_ratio(x[1], x[2], x[3], y, p.q))
