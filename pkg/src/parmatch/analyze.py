"""Alignment scores, unit rankings and diagnostics built on partial matching."""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np

from .cost import COSINE, build_cost, cosine_cost
from .errors import DegenerateUnitError, DimensionMismatch, EmptyMatchError
from .matrixio import TuningMatrix, center_and_normalize
from .partial import DEFAULT_TAU, check_mass, extract_matches, solve_partial
from .select import check_grid
from .solver import TransportPlan, solve_balanced

BRUTE_FORCE_WARN_N = 64


@dataclass(frozen=True)
class MatchReport:
    kept_source: tuple
    kept_target: tuple
    unit_mass_source: np.ndarray
    unit_mass_target: np.ndarray
    s_used: float
    objective: float
    corr_score_total: float
    corr_score_mean: Optional[float]
    plan: TransportPlan = field(repr=False)

    def to_dict(self) -> dict:
        return {
            "kept_source": list(self.kept_source),
            "kept_target": list(self.kept_target),
            "unit_mass_source": self.unit_mass_source,
            "unit_mass_target": self.unit_mass_target,
            "s_used": self.s_used,
            "objective": self.objective,
            "corr_score_total": self.corr_score_total,
            "corr_score_mean": self.corr_score_mean,
        }


@dataclass(frozen=True)
class RankOrder:
    """Units ordered from least to most matched."""

    order: tuple
    method: str
    scores_along_deletion: tuple = ()
    order_target: Optional[tuple] = None
    warnings: tuple = ()

    def __post_init__(self):
        if sorted(self.order) != list(range(len(self.order))):
            raise ValueError("order is not a permutation")

    def to_dict(self) -> dict:
        out = {
            "method": self.method,
            "order": list(self.order),
            "scores_along_deletion": list(self.scores_along_deletion),
            "warnings": list(self.warnings),
        }
        if self.order_target is not None:
            out["order_target"] = list(self.order_target)
        return out


def report_from_plan(plan: TransportPlan, objective: float, corr: np.ndarray,
                     tau: float = DEFAULT_TAU) -> MatchReport:
    matches = extract_matches(plan, tau)
    total = float((plan.entries * corr).sum())
    s = plan.total_mass
    return MatchReport(
        kept_source=matches.kept_source,
        kept_target=matches.kept_target,
        unit_mass_source=matches.source_mass,
        unit_mass_target=matches.target_mass,
        s_used=s,
        objective=objective,
        corr_score_total=total,
        corr_score_mean=total / s if s > 0 else None,
        plan=plan,
    )


def corr_score(x: TuningMatrix, y: TuningMatrix, s: float = 1.0,
               tau: float = DEFAULT_TAU) -> MatchReport:
    """Total matched correlation under the optimal partial plan.

    Minimizing sum T_ij (1 - x_i.y_j) with sum T = s fixed is the same as
    maximizing sum T_ij x_i.y_j, so the cosine-cost plan is reused.
    """
    check_mass(s)
    c = cosine_cost(x, y)
    res = solve_partial(c, s)
    return report_from_plan(res.plan, res.objective, 1.0 - c.data, tau)


def balanced_corr_score(x: TuningMatrix, y: TuningMatrix) -> float:
    """Mean matched correlation of the balanced soft-matching plan."""
    c = cosine_cost(x, y)
    res = solve_balanced(c)
    return float((res.plan.entries * (1.0 - c.data)).sum())


def selection_score(x: TuningMatrix, y: TuningMatrix, source_idx, target_idx) -> float:
    """Alignment of a chosen sub-population pair: balanced mean correlation."""
    return balanced_corr_score(x.columns(sorted(source_idx)), y.columns(sorted(target_idx)))


def _objective_score(x: TuningMatrix, y: TuningMatrix, kind: str) -> float:
    return solve_balanced(build_cost(x, y, kind)).objective


def brute_force_rank(x: TuningMatrix, y: TuningMatrix, kind: str = "cosine",
                     force: bool = False) -> RankOrder:
    """Greedy deletion: repeatedly drop the unit whose removal (from both
    populations at once) lowers the balanced soft-matching objective most.

    Requires a shared unit indexing (Nx == Ny).  ``scores_along_deletion[t]``
    describes the units remaining before the t-th deletion: mean matched
    correlation for cosine cost, the transport objective otherwise.
    """
    if x.unit_count != y.unit_count:
        raise DimensionMismatch("brute-force ranking needs Nx == Ny")
    n = x.unit_count
    if n < 2:
        raise ValueError("brute-force ranking needs at least two units")
    notes = []
    if n > BRUTE_FORCE_WARN_N:
        msg = f"brute-force ranking on N={n} units costs O(N^4 log N)"
        if not force:
            warnings.warn(msg, RuntimeWarning, stacklevel=2)
        notes.append(msg)

    remaining = list(range(n))
    current = _objective_score(x, y, kind)
    order, trajectory = [], []
    while remaining:
        trajectory.append(current)
        if len(remaining) == 1:
            order.append(remaining.pop())
            break
        best_i, best_score = None, np.inf
        for i in remaining:  # ascending, so ties keep the smallest index
            keep = [r for r in remaining if r != i]
            score = _objective_score(x.columns(keep), y.columns(keep), kind)
            if score < best_score:
                best_i, best_score = i, score
        order.append(best_i)
        remaining.remove(best_i)
        current = best_score
    if kind in ("cosine", COSINE):
        trajectory = [1.0 - t for t in trajectory]
    return RankOrder(tuple(order), "brute_force", tuple(trajectory), warnings=tuple(notes))


def _columnwise_pearson(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    a = a - a.mean(axis=0)
    b = b - b.mean(axis=0)
    na = np.linalg.norm(a, axis=0)
    nb = np.linalg.norm(b, axis=0)
    bad = np.flatnonzero((na <= 1e-12) | (nb <= 1e-12))
    if bad.size:
        raise DegenerateUnitError(bad.tolist())
    return (a * b).sum(axis=0) / (na * nb)


def correlation_rank(x: TuningMatrix, y: TuningMatrix, k: int,
                     plan: Optional[TransportPlan] = None):
    """Top-k units by correlation with their plan-projected counterparts.

    Forward: ``X T`` puts source responses in target-unit coordinates and
    column j is compared with y_j.  Reverse: ``Y T^T`` is compared with x_i.
    Returns ``(kept_source, kept_target, source_corr, target_corr)``.
    """
    if not 0 <= k <= min(x.unit_count, y.unit_count):
        raise ValueError(f"k must lie in [0, min(Nx, Ny)], got {k}")
    if plan is None:
        plan = solve_balanced(cosine_cost(x, y)).plan
    t = plan.entries
    target_corr = _columnwise_pearson(x.data @ t, y.data)
    source_corr = _columnwise_pearson(x.data, y.data @ t.T)
    # stable sort on the negated value: ties resolve to the lower index
    kept_target = np.argsort(-target_corr, kind="stable")[:k]
    kept_source = np.argsort(-source_corr, kind="stable")[:k]
    return (tuple(sorted(int(i) for i in kept_source)),
            tuple(sorted(int(j) for j in kept_target)),
            source_corr, target_corr)


def partial_rank(x: TuningMatrix, y: TuningMatrix, grid: Sequence[float],
                 kind: str = "cosine", tau: float = DEFAULT_TAU) -> list:
    """``[(s, MatchSets), ...]``: kept units of the partial plan at each s."""
    g = check_grid(grid, min_len=1)
    c = build_cost(x, y, kind)
    return [(float(s), extract_matches(solve_partial(c, s).plan, tau)) for s in g]


def partial_order(x: TuningMatrix, y: TuningMatrix, grid: Sequence[float],
                  kind: str = "cosine") -> RankOrder:
    """Least-to-most matched orders derived from a partial-mass sweep.

    A unit's rank is the smallest s at which it is kept (later = less
    matched); ties break on its mass at that s, then on index.
    """
    family = partial_rank(x, y, grid, kind)

    def order_for(n, side):
        entry = np.full(n, np.inf)
        mass = np.zeros(n)
        for s, m in family:
            kept = m.kept_source if side == 0 else m.kept_target
            w = m.source_mass if side == 0 else m.target_mass
            for i in kept:
                if entry[i] == np.inf:
                    entry[i] = s
                    mass[i] = w[i]
        keys = sorted(range(n), key=lambda i: (-entry[i], mass[i], i))
        return tuple(keys)

    return RankOrder(order_for(x.unit_count, 0), "partial_mass_sweep",
                     order_target=order_for(y.unit_count, 1))


def top_partial_selection(x: TuningMatrix, y: TuningMatrix, k: int, kind: str = "cosine"):
    """The k most-matched units on each side from one partial solve.

    Solves at ``s = k / max(Nx, Ny)`` and keeps the k heaviest units per side.
    """
    s = k / max(x.unit_count, y.unit_count)
    res = solve_partial(build_cost(x, y, kind), s)
    r, c = res.plan.row_sums, res.plan.col_sums
    src = np.argsort(-r, kind="stable")[:k]
    tgt = np.argsort(-c, kind="stable")[:k]
    return tuple(sorted(int(i) for i in src)), tuple(sorted(int(j) for j in tgt))


def haar_orthogonal(dim: int, rng: np.random.Generator) -> np.ndarray:
    """Uniformly (Haar) distributed orthogonal matrix."""
    z = rng.standard_normal((dim, dim))
    q, r = np.linalg.qr(z)
    # sign-correct so the distribution does not depend on QR's convention
    return q * np.where(np.diag(r) < 0, -1.0, 1.0)


def rotation_test(x: TuningMatrix, y: TuningMatrix, s: float, trials: int, seed: int,
                  rotation_sampler: Optional[Callable] = None):
    """Alignment of ``x`` vs ``y`` before and after random stimulus-space rotations.

    Each rotated population ``Q x`` is re-centered and re-normalized.
    ``rotation_sampler(dim, rng)`` overrides the Haar sampler (test hook).
    Returns ``(base_score, rotated_scores)`` using mean matched correlation.
    """
    if trials < 1:
        raise ValueError("trials must be >= 1")
    sampler = rotation_sampler or haar_orthogonal
    rng = np.random.default_rng(seed)
    base = corr_score(x, y, s).corr_score_mean
    rotated = []
    for _ in range(trials):
        q = sampler(x.stimulus_count, rng)
        xr = center_and_normalize(TuningMatrix(q @ x.data, x.unit_labels))
        rotated.append(corr_score(xr, y, s).corr_score_mean)
    return base, np.array(rotated)


def match_precision(kept_source, kept_target, labels_source, labels_target,
                    region_pair) -> float:
    """Fraction of kept units (both sides pooled) carrying their side's region label."""
    kept_source = list(kept_source)
    kept_target = list(kept_target)
    total = len(kept_source) + len(kept_target)
    if total == 0:
        raise EmptyMatchError("no kept units on either side")
    want_src, want_tgt = region_pair
    hits = sum(labels_source[i] == want_src for i in kept_source)
    hits += sum(labels_target[j] == want_tgt for j in kept_target)
    return hits / total
