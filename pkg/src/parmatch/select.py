"""Choosing the matched-mass fraction with the L-curve elbow."""

from __future__ import annotations

import csv
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from .cost import CostMatrix
from .errors import GridError
from .matrixio import format_float
from .partial import solve_partial

# relative flatness threshold on max |second difference|
FLAT_RATIO = 1e-3
UNIFORM_TOL = 1e-9
TIE_RTOL = 1e-12


def default_grid() -> list:
    """Twenty uniform points 0.05, 0.10, ..., 1.00."""
    return [round(0.05 * i, 10) for i in range(1, 21)]


def parse_grid(text: str) -> list:
    """``"start:stop:steps"`` with both endpoints included."""
    try:
        start, stop, steps = text.split(":")
        start, stop, steps = float(start), float(stop), int(steps)
    except ValueError:
        raise GridError(f"grid must look like start:stop:steps, got {text!r}") from None
    if steps < 1:
        raise GridError("grid needs at least one step")
    if steps == 1:
        return [start]
    return [round(v, 12) for v in np.linspace(start, stop, steps)]


def check_grid(grid: Sequence[float], min_len: int = 3) -> np.ndarray:
    g = np.asarray(grid, dtype=np.float64)
    if g.ndim != 1 or g.size < min_len:
        raise GridError(f"grid needs at least {min_len} values, got {g.size}")
    if np.any(np.diff(g) <= 0):
        raise GridError("grid must be strictly ascending")
    if g[0] < 0 or g[-1] > 1:
        raise GridError("grid values must lie in [0, 1]")
    return g


def second_difference(zeta) -> np.ndarray:
    """Centered second difference ``z[i+1] - 2 z[i] + z[i-1]`` at interior points."""
    z = np.asarray(zeta, dtype=np.float64)
    return (z[2:] - 2.0 * z[1:-1]) + z[:-2]


@dataclass(frozen=True)
class LCurve:
    grid: np.ndarray
    zeta: np.ndarray
    rho: np.ndarray
    curvature: np.ndarray
    solves: int = 0

    @classmethod
    def from_values(cls, grid, zeta, solves: int = 0) -> "LCurve":
        g = check_grid(grid)
        z = np.asarray(zeta, dtype=np.float64)
        if z.shape != g.shape:
            raise GridError("grid and zeta lengths differ")
        return cls(g, z, 1.0 - g, second_difference(z), solves)

    def to_csv(self, path) -> None:
        with open(Path(path), "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["s", "zeta", "rho", "curvature"])
            for i, (s, z, r) in enumerate(zip(self.grid, self.zeta, self.rho)):
                curv = ""
                if 0 < i < len(self.grid) - 1:
                    curv = format_float(self.curvature[i - 1])
                w.writerow([format_float(s), format_float(z), format_float(r), curv])

    def to_dict(self) -> dict:
        return {
            "grid": self.grid,
            "zeta": self.zeta,
            "rho": self.rho,
            "curvature": self.curvature,
        }


@dataclass(frozen=True)
class ElbowResult:
    s0: float
    i_star: int  # 0-based index into the grid; always interior
    curvature_at_elbow: float
    diagnostics: dict = field(default_factory=dict)

    @property
    def ok(self) -> bool:
        return self.diagnostics.get("ok", True)

    def to_dict(self) -> dict:
        return {
            "s0": self.s0,
            "i_star": self.i_star,
            "curvature_at_elbow": self.curvature_at_elbow,
            "diagnostics": self.diagnostics,
        }


def sweep(c: CostMatrix, grid: Sequence[float], threads: Optional[int] = None) -> LCurve:
    """Solve the partial problem at every grid point and build the L-curve.

    Solves are independent; with ``threads > 1`` they run concurrently but
    the result is identical to the serial sweep.
    """
    g = check_grid(grid)
    if threads is None or threads <= 1:
        zeta = [solve_partial(c, s).objective for s in g]
    else:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            zeta = list(pool.map(lambda s: solve_partial(c, s).objective, g))
    return LCurve.from_values(g, zeta, solves=len(g))


def find_elbow(lc: LCurve) -> ElbowResult:
    """Grid point of maximal absolute second difference of zeta.

    Ties go to the largest s.  The grid must be uniform because the raw
    second difference is not rescaled by the spacing.
    """
    steps = np.diff(lc.grid)
    if np.abs(steps - steps[0]).max() > UNIFORM_TOL:
        raise GridError("elbow finding needs a uniform grid")
    mag = np.abs(lc.curvature)
    peak = mag.max()
    # piecewise-linear zeta often gives exactly equal curvatures; treat
    # values within rounding of the peak as ties so the rule above applies
    tie_tol = TIE_RTOL * float(np.abs(lc.zeta).max())
    k = int(np.flatnonzero(mag >= peak - tie_tol)[-1])
    i_star = k + 1
    flat = bool(peak < FLAT_RATIO * (lc.zeta[-1] - lc.zeta[0] + 1e-12))
    tail = k == 0 or k == len(mag) - 1
    curv = float(lc.curvature[k])
    diagnostics = {
        "ok": not (flat or tail),
        "tail_elbow_warning": bool(tail),
        "flat_curve_warning": flat,
        # the selection uses |curvature|; the sign tells whether this was a
        # convex (positive) or concave bend
        "curvature_sign": int(np.sign(curv)),
        "max_abs_curvature": float(peak),
    }
    return ElbowResult(float(lc.grid[i_star]), i_star, curv, diagnostics)


def lcurve_area(zeta, rho) -> float:
    """Trapezoidal area under zeta as a function of rho (orientation-free)."""
    z = np.asarray(zeta, dtype=np.float64)
    r = np.asarray(rho, dtype=np.float64)
    return float(abs(np.sum(0.5 * (z[1:] + z[:-1]) * np.diff(r))))


def auc_score(lc: LCurve) -> float:
    """Area under the (zeta, rho) curve; lower means better alignment overall."""
    return lcurve_area(lc.zeta, lc.rho)
