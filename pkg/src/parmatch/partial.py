"""Partial optimal transport by dummy-point augmentation.

Only a fraction ``s`` of the mass has to be matched.  One dummy row and one
dummy column are appended to the cost matrix; each absorbs ``1 - s`` of mass
at zero cost, and the dummy-to-dummy cell gets a cost large enough that the
optimum never uses it.  The augmented problem is balanced and solved exactly
by the flow solver; the real block of its plan is the partial plan.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .cost import CostMatrix
from .errors import MassOutOfRange
from .solver import SolveResult, TransportPlan, _finish, transport_flow

MAX_DENOMINATOR = 10**6
DEFAULT_TAU = 1e-6


def check_mass(s) -> float:
    s = float(s)
    if not (0.0 <= s <= 1.0) or math.isnan(s):
        raise MassOutOfRange(f"mass fraction must satisfy 0 <= s <= 1, got {s}")
    return s


@dataclass(frozen=True)
class AugmentedProblem:
    cost_aug: np.ndarray
    dummy_cost: float
    dummy_penalty: float
    source_masses: np.ndarray
    target_masses: np.ndarray
    # integer version of the masses after scaling by ``scale``
    source_units: np.ndarray
    target_units: np.ndarray
    scale: int
    s_used: Fraction


def augment(c: CostMatrix, s: float) -> AugmentedProblem:
    """Build the (Nx+1) x (Ny+1) balanced problem for mass fraction ``s``.

    ``s`` is snapped to the nearest rational with denominator <= 10**6 so the
    masses can be made integral.
    """
    s = check_mass(s)
    cost = c.data
    nx, ny = cost.shape
    frac = Fraction(s).limit_denominator(MAX_DENOMINATOR)
    p, q = frac.numerator, frac.denominator
    scale = math.lcm(nx, ny, q)
    leftover = (q - p) * (scale // q)

    xi = 0.0
    penalty = 2.0 * float(cost.max()) + 1.0
    aug = np.empty((nx + 1, ny + 1))
    aug[:nx, :ny] = cost
    aug[:nx, ny] = xi
    aug[nx, :ny] = xi
    aug[nx, ny] = penalty

    src_units = np.append(np.full(nx, scale // nx, dtype=np.int64), leftover)
    tgt_units = np.append(np.full(ny, scale // ny, dtype=np.int64), leftover)
    return AugmentedProblem(
        cost_aug=aug,
        dummy_cost=xi,
        dummy_penalty=penalty,
        source_masses=src_units / scale,
        target_masses=tgt_units / scale,
        source_units=src_units,
        target_units=tgt_units,
        scale=scale,
        s_used=frac,
    )


def solve_partial(c: CostMatrix, s: float) -> SolveResult:
    """Exact minimizer of <C, T> over plans with row sums <= 1/Nx,
    column sums <= 1/Ny and total mass exactly ``s``."""
    t0 = time.perf_counter()
    prob = augment(c, s)
    nx, ny = c.shape
    flow, u, v, iters = transport_flow(prob.cost_aug, prob.source_units, prob.target_units)
    full = _finish(prob.cost_aug, flow, prob.scale, u, v, prob.source_masses,
                   prob.target_masses, float(prob.source_masses.sum()))
    s_used = float(prob.s_used)
    plan = full[:nx, :ny]
    objective = float((c.data * plan).sum())
    stats = {
        "iterations": iters,
        "wall_time": time.perf_counter() - t0,
        "mass_scale": prob.scale,
        "s_requested": float(s),
        "s_used": s_used,
        "s_snapped": s_used != float(s),
        "dummy_dummy_mass": float(full[nx, ny]),
    }
    return SolveResult(TransportPlan(plan, s_used, objective), objective, u, v, stats)


@dataclass(frozen=True)
class MatchSets:
    kept_source: tuple
    kept_target: tuple
    source_mass: np.ndarray
    target_mass: np.ndarray
    tau: float = DEFAULT_TAU

    def to_dict(self) -> dict:
        return {
            "kept_source": list(self.kept_source),
            "kept_target": list(self.kept_target),
            "source_mass": self.source_mass,
            "target_mass": self.target_mass,
            "tau": self.tau,
        }


def extract_matches(plan: TransportPlan, tau: float = DEFAULT_TAU) -> MatchSets:
    """Units whose outgoing / incoming mass is at least ``tau``."""
    if not tau > 0:
        raise ValueError("tau must be positive")
    r = plan.row_sums
    c = plan.col_sums
    return MatchSets(
        kept_source=tuple(int(i) for i in np.flatnonzero(r >= tau)),
        kept_target=tuple(int(j) for j in np.flatnonzero(c >= tau)),
        source_mass=r,
        target_mass=c,
        tau=tau,
    )
