"""Local stability of the eight homogeneous (corner) equilibria."""

from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .params import CreatorStrategy, GameParams, UserStrategy, validate_params
from .payoff import PopulationState
from .replicator import full_derivatives

HYPERBOLIC_TOL = 1e-9
FD_STEP = 1e-6


class Stability(str, enum.Enum):
    STABLE = "Stable"
    UNSTABLE = "Unstable"
    NON_HYPERBOLIC = "NonHyperbolic"


def _reduced_rhs(z, p, form):
    x1, x2, x3, y = z
    d = full_derivatives(np.array([x1, x2, x3, 1.0 - x1 - x2 - x3, y]), p, form)
    return d[[0, 1, 2, 4]]


def jacobian(s: PopulationState, p: GameParams, form="standard", step=FD_STEP) -> np.ndarray:
    """Central-difference Jacobian in the reduced coordinates (x1, x2, x3, y),
    with x4 = 1 - x1 - x2 - x3 substituted."""
    z0 = np.array([s.x[0], s.x[1], s.x[2], s.y])
    J = np.empty((4, 4))
    for j in range(4):
        dz = np.zeros(4)
        dz[j] = step
        J[:, j] = (_reduced_rhs(z0 + dz, p, form) - _reduced_rhs(z0 - dz, p, form)) / (2 * step)
    return J


def _user_payoffs_and_slopes(y, p):
    pi = np.array([
        0.0,
        0.5 * p.b_u * y - 0.5 * p.c_u * (1 - y),
        (p.q * p.b_u - p.c_i) * y - ((1 - p.q) * p.c_u + p.c_i) * (1 - y),
        p.b_u * y - p.c_u * (1 - y),
    ])
    dpi = np.array([
        0.0,
        0.5 * (p.b_u + p.c_u),
        p.q * p.b_u + (1 - p.q) * p.c_u,
        p.b_u + p.c_u,
    ])
    return pi, dpi


def jacobian_closed_form(s: PopulationState, p: GameParams, form="standard") -> np.ndarray:
    """Analytic Jacobian in (x1, x2, x3, y); valid at any state."""
    x1, x2, x3 = s.x[:3]
    x4 = 1.0 - x1 - x2 - x3
    x = np.array([x1, x2, x3, x4])
    y = s.y
    pi, dpi = _user_payoffs_and_slopes(y, p)
    pbar = x @ pi
    dpbar_dy = x @ dpi
    # d(mean user payoff)/dx_j with x4 eliminated
    dpbar_dx = pi[:3] - pi[3]
    # pi_C - pi_D on the simplex
    gap = -p.c_c + (2 * p.q - 1) * p.b_c * x3
    dgap_dx = np.array([0.0, 0.0, (2 * p.q - 1) * p.b_c])

    J = np.zeros((4, 4))
    for i in range(3):
        if form == "literal":
            g = x[i] * (1 - x[i])
            dg = 1 - 2 * x[i]
        else:
            g, dg = x[i], 1.0
        J[i, :3] = -g * dpbar_dx
        J[i, i] += dg * (pi[i] - pbar)
        J[i, 3] = g * (dpi[i] - dpbar_dy)
    if form == "literal":
        # y' = y (1 - y)^2 gap
        J[3, :3] = y * (1 - y) ** 2 * dgap_dx
        J[3, 3] = (1 - y) * (1 - 3 * y) * gap
    else:
        # y' = y (1 - y) gap
        J[3, :3] = y * (1 - y) * dgap_dx
        J[3, 3] = (1 - 2 * y) * gap
    return J


def eigenvalues(J) -> np.ndarray:
    """Eigenvalues sorted by (real, imag) for stable reporting."""
    ev = np.linalg.eigvals(np.asarray(J, dtype=float))
    return ev[np.lexsort((ev.imag, ev.real))]


def classify_eigenvalues(ev, tol=HYPERBOLIC_TOL) -> Stability:
    re = np.real(ev)
    if np.any(re > tol):
        return Stability.UNSTABLE
    if np.all(re < -tol):
        return Stability.STABLE
    return Stability.NON_HYPERBOLIC


def alld_d_condition(p: GameParams) -> bool:
    """Published sufficient condition for the defection corner to be stable."""
    return p.c_c > 0 and p.c_u > 0 and p.c_i + p.c_u * (1 - p.q) > 0


def allc_c_condition(p: GameParams) -> bool:
    """Published condition for the full-cooperation corner to be stable."""
    return p.c_c < 0 and p.b_u > 0 and p.c_i + p.b_u * (1 - p.q) > 0


_CONDITIONS = {
    (UserStrategy.ALLD, CreatorStrategy.UNSAFE): alld_d_condition,
    (UserStrategy.ALLC, CreatorStrategy.SAFE): allc_c_condition,
}


@dataclass(frozen=True)
class EquilibriumReport:
    user: UserStrategy
    creator: CreatorStrategy
    state: PopulationState
    eigenvalues: np.ndarray
    classification: Stability
    closed_form_check: Optional[bool] = None
    condition_holds: Optional[bool] = None

    def row(self):
        ev = list(self.eigenvalues)
        return {
            "user_strategy": self.user.label,
            "creator_strategy": self.creator.label,
            **{f"eig_re_{k + 1}": float(np.real(e)) for k, e in enumerate(ev)},
            **{f"eig_im_{k + 1}": float(np.imag(e)) for k, e in enumerate(ev)},
            "classification": self.classification.value,
            "closed_form_check": "" if self.closed_form_check is None else str(self.closed_form_check).lower(),
        }


def classify_corner(user: UserStrategy, creator: CreatorStrategy, p: GameParams, form="standard") -> EquilibriumReport:
    """Eigenvalue classification of one corner.

    For the two corners with published conditions, ``closed_form_check``
    records whether the condition agrees with the eigenvalue verdict. A
    non-hyperbolic corner cannot be decided by eigenvalues, so the check is
    left as None there.
    """
    validate_params(p)
    user, creator = UserStrategy(user), CreatorStrategy(creator)
    s = PopulationState.corner(user, creator)
    ev = eigenvalues(jacobian_closed_form(s, p, form))
    cls = classify_eigenvalues(ev)
    cond = _CONDITIONS.get((user, creator))
    holds = check = None
    if cond is not None:
        holds = cond(p)
        if cls is not Stability.NON_HYPERBOLIC:
            check = holds == (cls is Stability.STABLE)
    return EquilibriumReport(user, creator, s, ev, cls, check, holds)


def corner_census(p: GameParams, form="standard") -> list:
    return [classify_corner(u, c, p, form) for u in UserStrategy for c in CreatorStrategy]


REPORT_HEADER = (
    "user_strategy", "creator_strategy",
    "eig_re_1", "eig_re_2", "eig_re_3", "eig_re_4",
    "eig_im_1", "eig_im_2", "eig_im_3", "eig_im_4",
    "classification", "closed_form_check",
)


def format_table(reports) -> str:
    lines = [f"{'user':<7} {'creator':<7} {'Re(eigenvalues)':<40} {'classification':<14} check"]
    for r in reports:
        re = " ".join(f"{float(np.real(e)):+.4f}" for e in r.eigenvalues)
        chk = "-" if r.closed_form_check is None else str(r.closed_form_check).lower()
        lines.append(f"{r.user.label:<7} {r.creator.label:<7} {re:<40} {r.classification.value:<14} {chk}")
    return "\n".join(lines)
