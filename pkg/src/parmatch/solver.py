"""Exact balanced optimal transport (the soft-matching distance).

The transport problem is solved as an integral min-cost flow: uniform
marginals are scaled to integers, then successive shortest augmenting paths
with node potentials (Dijkstra on reduced costs) route the flow.  Costs stay
in floating point; only the masses are integral, so the returned plan is an
exact vertex of the transportation polytope.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field

import numpy as np

from .cost import CostMatrix, build_cost
from .errors import NumericalError
from .matrixio import TuningMatrix

FEAS_TOL = 1e-9


@dataclass(frozen=True)
class TransportPlan:
    """Nonnegative coupling with per-row cap 1/Nx and per-column cap 1/Ny."""

    entries: np.ndarray
    total_mass: float
    objective: float

    def __post_init__(self):
        t = np.array(self.entries, dtype=np.float64, copy=True)
        t.setflags(write=False)
        object.__setattr__(self, "entries", t)
        nx, ny = t.shape
        if np.any(t < 0):
            raise ValueError("transport plan has negative entries")
        if np.any(t.sum(axis=1) > 1.0 / nx + FEAS_TOL):
            raise ValueError("row sum exceeds 1/Nx")
        if np.any(t.sum(axis=0) > 1.0 / ny + FEAS_TOL):
            raise ValueError("column sum exceeds 1/Ny")
        if abs(t.sum() - self.total_mass) > FEAS_TOL:
            raise ValueError(f"plan mass {t.sum()} differs from declared {self.total_mass}")

    @property
    def shape(self):
        return self.entries.shape

    @property
    def source_marginal_cap(self) -> float:
        return 1.0 / self.entries.shape[0]

    @property
    def target_marginal_cap(self) -> float:
        return 1.0 / self.entries.shape[1]

    @property
    def row_sums(self) -> np.ndarray:
        return self.entries.sum(axis=1)

    @property
    def col_sums(self) -> np.ndarray:
        return self.entries.sum(axis=0)


@dataclass(frozen=True)
class SolveResult:
    plan: TransportPlan
    objective: float
    # dual potentials certifying optimality: u_i + v_j <= C_ij, with equality
    # wherever the plan is positive
    u: np.ndarray
    v: np.ndarray
    stats: dict = field(default_factory=dict)

    @property
    def distance(self) -> float:
        """Square root of the objective (a distance for squared-Euclidean cost)."""
        return math.sqrt(max(self.objective, 0.0))


def transport_flow(cost: np.ndarray, supply: np.ndarray, demand: np.ndarray):
    """Min-cost integral transportation by successive shortest paths.

    ``supply`` and ``demand`` are nonnegative integer vectors with equal sums.
    Returns ``(flow, u, v, iterations)`` where ``flow`` is an integer matrix
    and ``u, v`` are dual potentials with ``cost - u[:,None] - v >= 0``
    (up to rounding) and equality on arcs carrying flow.
    """
    cost = np.asarray(cost, dtype=np.float64)
    n, m = cost.shape
    excess = np.array(supply, dtype=np.int64)
    deficit = np.array(demand, dtype=np.int64)
    if excess.sum() != deficit.sum():
        raise ValueError("supply and demand totals differ")

    flow = np.zeros((n, m), dtype=np.int64)
    u = np.zeros(n)
    v = cost.min(axis=0)
    inf = np.inf
    iterations = 0

    while True:
        sources = np.flatnonzero(excess > 0)
        if sources.size == 0:
            break
        iterations += 1

        # Dijkstra, multi-source from every row with remaining supply.
        # Forward arcs i->j have reduced cost C_ij - u_i - v_j >= 0; backward
        # arcs j->i exist where flow_ij > 0 and have reduced cost 0.
        dist_row = np.full(n, inf)
        pred_row = np.full(n, -1, dtype=np.intp)
        row_seen = np.zeros(n, dtype=bool)
        dist_row[sources] = 0.0
        row_seen[sources] = True

        block = cost[sources] - u[sources, None] - v
        arg = block.argmin(axis=0)
        dist_col = block[arg, np.arange(m)]
        np.maximum(dist_col, 0.0, out=dist_col)
        pred_col = sources[arg]
        open_dist = dist_col.copy()  # +inf once a column is settled
        col_done = np.zeros(m, dtype=bool)

        while True:
            j = int(open_dist.argmin())
            d = open_dist[j]
            if d == inf:
                raise NumericalError("no augmenting path: residual graph disconnected")
            col_done[j] = True
            open_dist[j] = inf
            if deficit[j] > 0:
                sink, reach = j, d
                break
            rows = np.flatnonzero(flow[:, j] > 0)
            rows = rows[~row_seen[rows]]
            if rows.size == 0:
                continue
            row_seen[rows] = True
            dist_row[rows] = d
            pred_row[rows] = j
            cand = d + np.maximum(cost[rows] - u[rows, None] - v, 0.0)
            if rows.size > 1:
                arg = cand.argmin(axis=0)
                best = cand[arg, np.arange(m)]
                from_row = rows[arg]
            else:
                best = cand[0]
                from_row = np.full(m, rows[0])
            better = (best < dist_col) & ~col_done
            dist_col[better] = best[better]
            open_dist[better] = best[better]
            pred_col[better] = from_row[better]

        # walk the path back from the sink to find the bottleneck
        path_fwd = []
        path_bwd = []
        j = sink
        while True:
            i = pred_col[j]
            path_fwd.append((i, j))
            jb = pred_row[i]
            if jb < 0:
                source = i
                break
            path_bwd.append((i, jb))
            j = jb
        delta = min(excess[source], deficit[sink])
        for i, jb in path_bwd:
            delta = min(delta, flow[i, jb])
        for i, j in path_fwd:
            flow[i, j] += delta
        for i, jb in path_bwd:
            flow[i, jb] -= delta
        excess[source] -= delta
        deficit[sink] -= delta

        # potential update keeps reduced costs nonnegative and makes the
        # new path tight
        u -= np.minimum(dist_row, reach)
        v += np.minimum(dist_col, reach)

    return flow, u, v, iterations


def check_certificate(cost: np.ndarray, plan: np.ndarray, u: np.ndarray,
                      v: np.ndarray) -> tuple:
    """Largest dual violation and largest complementary-slackness gap."""
    reduced = cost - u[:, None] - v
    violation = max(0.0, -float(reduced.min()))
    support = plan > 1e-12
    gap = float(np.abs(reduced[support]).max()) if support.any() else 0.0
    return violation, gap


def _finish(cost: np.ndarray, flow: np.ndarray, scale: int, u, v, expected_rows,
            expected_cols, total):
    plan = flow / scale
    rows = plan.sum(axis=1)
    cols = plan.sum(axis=0)
    if (np.abs(rows - expected_rows).max() > FEAS_TOL
            or np.abs(cols - expected_cols).max() > FEAS_TOL
            or abs(plan.sum() - total) > FEAS_TOL):
        raise NumericalError("flow solution violates marginal constraints")
    tol = 1e-9 * max(1.0, float(cost.max()))
    violation, gap = check_certificate(cost, plan, u, v)
    if violation > tol or gap > tol:
        raise NumericalError(
            f"optimality certificate failed (dual violation {violation:.3g}, gap {gap:.3g})"
        )
    return plan


def solve_balanced(c: CostMatrix) -> SolveResult:
    """Exact minimizer of <C, T> over the transportation polytope T(Nx, Ny)."""
    t0 = time.perf_counter()
    cost = c.data if isinstance(c, CostMatrix) else np.asarray(c, dtype=np.float64)
    nx, ny = cost.shape
    scale = math.lcm(nx, ny)
    supply = np.full(nx, scale // nx, dtype=np.int64)
    demand = np.full(ny, scale // ny, dtype=np.int64)
    flow, u, v, iters = transport_flow(cost, supply, demand)
    plan = _finish(cost, flow, scale, u, v, 1.0 / nx, 1.0 / ny, 1.0)
    objective = float((cost * plan).sum())
    stats = {"iterations": iters, "wall_time": time.perf_counter() - t0, "mass_scale": scale}
    return SolveResult(TransportPlan(plan, 1.0, objective), objective, u, v, stats)


def soft_matching_distance(x: TuningMatrix, y: TuningMatrix,
                           kind: str = "squared_euclidean") -> float:
    """``sqrt(min_T <C, T>)`` over the transportation polytope."""
    return solve_balanced(build_cost(x, y, kind)).distance
