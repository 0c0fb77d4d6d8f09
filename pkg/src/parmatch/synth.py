"""Synthetic neural populations from sparse mixtures of orthogonal factors,
and the simulation experiments run on them.

Random numbers come from numpy's PCG64 (``np.random.default_rng(seed)``),
so every pair and report is reproducible from its config.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass, replace
from typing import Optional, Sequence

import numpy as np

from .analyze import (
    balanced_corr_score,
    brute_force_rank,
    corr_score,
    correlation_rank,
    rotation_test,
    selection_score,
    top_partial_selection,
)
from .cost import COSINE, SQEUCLIDEAN, build_cost, cosine_cost
from .errors import ConfigError
from .matrixio import TuningMatrix, center_and_normalize
from .partial import extract_matches, solve_partial
from .select import auc_score, default_grid, find_elbow, sweep
from .solver import solve_balanced


@dataclass(frozen=True)
class SynthConfig:
    m: int = 200  # stimuli
    k: int = 10  # latent factors
    n: int = 20  # signal units per population
    noise1: int = 10  # noise units appended to population 1
    noise2: int = 10  # noise units appended to population 2
    p: float = 0.2  # probability that a unit loads on a factor
    seed: int = 0
    # reuse population 1's mixing weights for population 2 (identical signal)
    shared_weights: bool = False

    def __post_init__(self):
        if min(self.m, self.k, self.n) < 1:
            raise ConfigError("m, k and n must be >= 1")
        if self.k > self.m:
            raise ConfigError(f"k={self.k} factors cannot be orthonormal in m={self.m} dims")
        if self.noise1 < 0 or self.noise2 < 0:
            raise ConfigError("noise counts must be >= 0")
        if not 0 < self.p <= 1:
            raise ConfigError(f"sparsity p must lie in (0, 1], got {self.p}")

    @classmethod
    def from_dict(cls, d: dict) -> "SynthConfig":
        known = {f for f in cls.__dataclass_fields__}
        unknown = set(d) - known
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        try:
            return cls(**d)
        except TypeError as e:
            raise ConfigError(str(e)) from None

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass(frozen=True)
class SynthPair:
    z1: TuningMatrix
    z2: TuningMatrix
    signal_indices_1: tuple
    signal_indices_2: tuple
    noise_indices_1: tuple
    noise_indices_2: tuple
    mask: np.ndarray
    factors: np.ndarray


def gram_schmidt(a: np.ndarray) -> np.ndarray:
    """Modified Gram-Schmidt orthonormalization of the columns of ``a``."""
    q = np.array(a, dtype=np.float64, copy=True)
    for j in range(q.shape[1]):
        for i in range(j):
            q[:, j] -= (q[:, i] @ q[:, j]) * q[:, i]
        q[:, j] /= np.linalg.norm(q[:, j])
    return q


def sparse_mask(rng: np.random.Generator, k: int, n: int, p: float) -> np.ndarray:
    """Bernoulli(p) k x n mask with no all-zero column (such columns are redrawn)."""
    s = rng.random((k, n)) < p
    empty = ~s.any(axis=0)
    while empty.any():
        s[:, empty] = rng.random((k, int(empty.sum()))) < p
        empty = ~s.any(axis=0)
    return s.astype(np.float64)


def generate_pair(cfg: SynthConfig) -> SynthPair:
    rng = np.random.default_rng(cfg.seed)
    f = gram_schmidt(rng.standard_normal((cfg.m, cfg.k)))
    s = sparse_mask(rng, cfg.k, cfg.n, cfg.p)
    w1 = rng.standard_normal((cfg.k, cfg.n))
    w2 = rng.standard_normal((cfg.k, cfg.n))
    if cfg.shared_weights:
        w2 = w1
    z1 = np.hstack([f @ (s * w1), rng.standard_normal((cfg.m, cfg.noise1))])
    z2 = np.hstack([f @ (s * w2), rng.standard_normal((cfg.m, cfg.noise2))])
    sig = tuple(range(cfg.n))
    return SynthPair(
        TuningMatrix(z1),
        TuningMatrix(z2),
        sig,
        sig,
        tuple(range(cfg.n, cfg.n + cfg.noise1)),
        tuple(range(cfg.n, cfg.n + cfg.noise2)),
        s,
        f,
    )


def _precision_recall(kept, signal):
    kept, signal = set(kept), set(signal)
    hit = len(kept & signal)
    precision = hit / len(kept) if kept else float("nan")
    recall = hit / len(signal) if signal else float("nan")
    return precision, recall


def experiment_cost(z1: TuningMatrix, z2: TuningMatrix, kind: str):
    """Squared-Euclidean cost on the raw responses, or cosine cost on the
    centered / unit-norm responses."""
    if kind in ("cosine", COSINE):
        return cosine_cost(center_and_normalize(z1), center_and_normalize(z2))
    if kind in ("sqeuclidean", SQEUCLIDEAN):
        return build_cost(z1, z2, SQEUCLIDEAN)
    raise ConfigError(f"unknown cost kind {kind!r}")


def run_spurious_experiment(cfg: SynthConfig, grid: Optional[Sequence[float]] = None,
                            threads: Optional[int] = None,
                            kind: str = SQEUCLIDEAN) -> dict:
    """Balanced vs partial matching when both populations carry noise units.

    The elbow of the L-curve picks s0; kept units at s0 are scored against
    the planted signal indices (pooled over both populations).
    """
    grid = default_grid() if grid is None else list(grid)
    pair = generate_pair(cfg)
    c = experiment_cost(pair.z1, pair.z2, kind)
    balanced = solve_balanced(c)
    lc = sweep(c, grid, threads)
    elbow = find_elbow(lc)
    at_elbow = solve_partial(c, elbow.s0)
    kept = extract_matches(at_elbow.plan)

    precision, recall = _precision_recall(
        [("x", i) for i in kept.kept_source] + [("y", j) for j in kept.kept_target],
        [("x", i) for i in pair.signal_indices_1] + [("y", j) for j in pair.signal_indices_2],
    )
    return {
        "config": cfg.to_dict(),
        "cost": c.kind,
        "balanced_objective": balanced.objective,
        "partial_objective_at_elbow": at_elbow.objective,
        "planted_signal_fraction": cfg.n / max(cfg.n + cfg.noise1, cfg.n + cfg.noise2),
        "lcurve": lc.to_dict(),
        "elbow": elbow.to_dict(),
        "auc": auc_score(lc),
        "kept_source": list(kept.kept_source),
        "kept_target": list(kept.kept_target),
        "signal_precision": precision,
        "signal_recall": recall,
    }


def model_selection_populations(cfg: SynthConfig, overlap_b: int):
    """Reference X plus two candidates.

    Model A shares every signal unit of X (same mask columns, fresh weights).
    Model B shares only ``overlap_b`` of them; its other signal units mix
    factors that X never uses.  Both candidates carry ``cfg.noise2`` noise
    units, X carries ``cfg.noise1``.
    """
    if not 0 <= overlap_b <= cfg.n:
        raise ConfigError(f"overlap_b must lie in [0, n], got {overlap_b}")
    if 2 * cfg.k > cfg.m:
        raise ConfigError("model selection needs 2k <= m (shared + fresh factors)")
    rng = np.random.default_rng(cfg.seed)
    basis = gram_schmidt(rng.standard_normal((cfg.m, 2 * cfg.k)))
    shared, fresh = basis[:, : cfg.k], basis[:, cfg.k:]
    s = sparse_mask(rng, cfg.k, cfg.n, cfg.p)
    s_fresh = sparse_mask(rng, cfg.k, cfg.n - overlap_b, cfg.p)

    def weights(cols):
        return rng.standard_normal((cfg.k, cols))

    x = np.hstack([shared @ (s * weights(cfg.n)), rng.standard_normal((cfg.m, cfg.noise1))])
    ya = np.hstack([shared @ (s * weights(cfg.n)), rng.standard_normal((cfg.m, cfg.noise2))])
    yb = np.hstack([
        shared @ (s[:, :overlap_b] * weights(overlap_b)),
        fresh @ (s_fresh * weights(cfg.n - overlap_b)),
        rng.standard_normal((cfg.m, cfg.noise2)),
    ])
    return TuningMatrix(x), TuningMatrix(ya), TuningMatrix(yb)


def _partial_at_elbow(raw_x, raw_y, grid, threads, kind):
    lc = sweep(experiment_cost(raw_x, raw_y, kind), grid, threads)
    elbow = find_elbow(lc)
    rep = corr_score(center_and_normalize(raw_x), center_and_normalize(raw_y), elbow.s0)
    return rep, elbow, lc


def run_model_selection_experiment(cfg: SynthConfig, overlap_b: int,
                                   grid: Optional[Sequence[float]] = None,
                                   threads: Optional[int] = None,
                                   kind: str = SQEUCLIDEAN) -> dict:
    """Does matching identify the candidate sharing more signal with X?

    The partial score of a candidate is the total matched correlation at the
    elbow of its own L-curve (built with ``kind`` cost); the balanced score
    is the mean matched correlation of the full soft matching.
    """
    grid = default_grid() if grid is None else list(grid)
    raw_x, raw_a, raw_b = model_selection_populations(cfg, overlap_b)
    rep_a, elbow_a, lc_a = _partial_at_elbow(raw_x, raw_a, grid, threads, kind)
    rep_b, elbow_b, lc_b = _partial_at_elbow(raw_x, raw_b, grid, threads, kind)
    x, ya, yb = (center_and_normalize(m) for m in (raw_x, raw_a, raw_b))
    bal_a = balanced_corr_score(x, ya)
    bal_b = balanced_corr_score(x, yb)
    return {
        "config": cfg.to_dict(),
        "overlap_b": overlap_b,
        "cost": kind,
        "partial_score_a": rep_a.corr_score_total,
        "partial_score_b": rep_b.corr_score_total,
        "elbow_a": elbow_a.s0,
        "elbow_b": elbow_b.s0,
        "balanced_score_a": bal_a,
        "balanced_score_b": bal_b,
        "partial_prefers_a": rep_a.corr_score_total > rep_b.corr_score_total,
        "balanced_prefers_a": bal_a > bal_b,
        "zeta_a": lc_a.zeta,
        "zeta_b": lc_b.zeta,
    }


def run_rotation_experiment(cfg: SynthConfig, s: float = 1.0, trials: int = 50,
                            rotation_sampler=None) -> dict:
    """Alignment of a matched synthetic pair before and after Haar rotations."""
    pair = generate_pair(cfg)
    x, y = center_and_normalize(pair.z1), center_and_normalize(pair.z2)
    base, rotated = rotation_test(x, y, s, trials, cfg.seed, rotation_sampler)
    return {
        "config": cfg.to_dict(),
        "s": s,
        "trials": trials,
        "base_score": base,
        "rotated_scores": rotated,
        "mean_rotated_score": float(rotated.mean()),
        "rotation_decreases": bool(rotated.mean() < base),
    }


def run_ranking_experiment(cfg: SynthConfig, fraction: float = 0.25) -> dict:
    """Top-fraction selections from brute-force, correlation and partial ranking.

    Needs equal population sizes (brute force deletes shared indices).  Each
    selection is scored by the balanced mean correlation of the chosen units.
    """
    if cfg.noise1 != cfg.noise2:
        raise ConfigError("ranking comparison needs equal population sizes")
    pair = generate_pair(cfg)
    x, y = center_and_normalize(pair.z1), center_and_normalize(pair.z2)
    n = x.unit_count
    k = max(1, int(round(fraction * n)))

    brute = brute_force_rank(x, y)
    brute_sel = sorted(brute.order[-k:])
    corr_src, corr_tgt, _, _ = correlation_rank(x, y, k)
    part_src, part_tgt = top_partial_selection(x, y, k)
    return {
        "config": cfg.to_dict(),
        "k": k,
        "brute_force": {"source": brute_sel, "target": brute_sel,
                        "score": selection_score(x, y, brute_sel, brute_sel)},
        "correlation": {"source": list(corr_src), "target": list(corr_tgt),
                        "score": selection_score(x, y, corr_src, corr_tgt)},
        "partial": {"source": list(part_src), "target": list(part_tgt),
                    "score": selection_score(x, y, part_src, part_tgt)},
    }


def seeded(cfg: SynthConfig, seed: int) -> SynthConfig:
    return replace(cfg, seed=seed)
