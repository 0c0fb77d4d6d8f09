"""Command-line interface.

Exit codes: 0 success, 1 usage error, 2 input/format error, 3 solver error.
stdout carries ``key=value`` summary lines only; diagnostics go to stderr.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import json
import os
import sys
import time
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import numpy as np

from . import __version__
from .analyze import brute_force_rank, correlation_rank, partial_order, partial_rank, report_from_plan
from .cost import COSINE, build_cost
from .errors import ConfigError, GridError, NumericalError, ParmatchError
from .matrixio import (
    CENTERED_UNIT_NORM,
    TuningMatrix,
    center_and_normalize,
    dumps_json,
    format_float,
    load_matrix,
    save_plan,
)
from .partial import extract_matches, solve_partial
from .select import auc_score, find_elbow, parse_grid, sweep
from .solver import solve_balanced
from .synth import (
    SynthConfig,
    run_model_selection_experiment,
    run_ranking_experiment,
    run_rotation_experiment,
    run_spurious_experiment,
    seeded,
)

SCHEMA_VERSION = 1
DEFAULT_GRID = "0.05:1.0:20"


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        sys.exit(1)


def _mass(text):
    try:
        s = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a number: {text!r}") from None
    if not 0.0 <= s <= 1.0:
        raise argparse.ArgumentTypeError(f"mass fraction must satisfy 0 <= s <= 1, got {s}")
    return s


def _grid(text):
    try:
        grid = parse_grid(text)
    except GridError as e:
        raise argparse.ArgumentTypeError(str(e)) from None
    if len(grid) < 3:
        raise argparse.ArgumentTypeError("grid needs at least 3 steps for an interior elbow")
    if grid[0] < 0 or grid[-1] > 1:
        raise argparse.ArgumentTypeError("grid values must lie in [0, 1]")
    return grid


def _threads(args) -> int:
    env = os.environ.get("PARMATCH_THREADS")
    if env:
        try:
            return max(1, int(env))
        except ValueError:
            pass
    if args.threads is not None:
        return max(1, args.threads)
    return os.cpu_count() or 1


def _digest(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


def _write_manifest(out: Path, args, inputs, started, extra=None):
    manifest = {
        "schema_version": SCHEMA_VERSION,
        "command": args.command,
        "arguments": {k: v for k, v in sorted(vars(args).items()) if k != "func"},
        "seed": getattr(args, "seed", None),
        "tool_version": __version__,
        "input_digests": {str(p): _digest(p) for p in inputs},
        "wall_time": time.perf_counter() - started,
    }
    manifest.update(extra or {})
    (out / "manifest.json").write_text(dumps_json(manifest))


def _emit(**values):
    for k, v in values.items():
        if isinstance(v, float):
            v = format_float(v)
        print(f"{k}={v}")


def _looks_normalized(m: TuningMatrix) -> bool:
    d = m.data
    return (np.abs(d.mean(axis=0)).max() <= 1e-10
            and np.abs(np.linalg.norm(d, axis=0) - 1.0).max() <= 1e-10)


def _load_pair(args):
    x = load_matrix(args.x_path, args.format)
    y = load_matrix(args.y_path, args.format)
    if args.normalize:
        return center_and_normalize(x), center_and_normalize(y)
    if args.cost == "cosine":
        out = []
        for name, m in (("x", x), ("y", y)):
            if not _looks_normalized(m):
                raise ConfigError(
                    f"{name}: cosine cost needs centered unit-norm columns; "
                    "pass --normalize to apply it"
                )
            out.append(TuningMatrix(m.data, m.unit_labels, CENTERED_UNIT_NORM))
        return tuple(out)
    return x, y


def cmd_match(args) -> int:
    started = time.perf_counter()
    out = Path(args.out)
    x, y = _load_pair(args)
    c = build_cost(x, y, args.cost)
    res = solve_balanced(c) if args.balanced else solve_partial(c, args.s)
    out.mkdir(parents=True, exist_ok=True)
    save_plan(res.plan, out / "plan.csv")

    report = {
        "schema_version": SCHEMA_VERSION,
        "cost": c.kind,
        "balanced": bool(args.balanced),
        "objective": res.objective,
        "distance": res.distance,
    }
    summary = {"objective": res.objective, "distance": res.distance}
    if c.kind == COSINE:
        rep = report_from_plan(res.plan, res.objective, 1.0 - c.data, args.tau)
        report.update(rep.to_dict())
        summary["corr_score_total"] = rep.corr_score_total
        if rep.corr_score_mean is not None:
            summary["corr_score_mean"] = rep.corr_score_mean
    else:
        m = extract_matches(res.plan, args.tau)
        report.update({
            "kept_source": list(m.kept_source),
            "kept_target": list(m.kept_target),
            "unit_mass_source": m.source_mass,
            "unit_mass_target": m.target_mass,
            "s_used": res.plan.total_mass,
        })
    (out / "report.json").write_text(dumps_json(report))
    _write_manifest(out, args, [args.x_path, args.y_path], started, {"solves": 1})
    _emit(**summary)
    return 0


def cmd_lcurve(args) -> int:
    started = time.perf_counter()
    out = Path(args.out)
    x, y = _load_pair(args)
    c = build_cost(x, y, args.cost)
    lc = sweep(c, args.grid, _threads(args))
    elbow = find_elbow(lc)
    out.mkdir(parents=True, exist_ok=True)
    lc.to_csv(out / "lcurve.csv")
    payload = {
        "schema_version": SCHEMA_VERSION,
        "cost": c.kind,
        "elbow": elbow.to_dict(),
        "auc": auc_score(lc),
        "lcurve": lc.to_dict(),
    }
    (out / "elbow.json").write_text(dumps_json(payload))
    _write_manifest(out, args, [args.x_path, args.y_path], started, {"solves": lc.solves})
    diag = elbow.diagnostics
    if diag["tail_elbow_warning"]:
        print("warning: elbow at a tail of the grid; inspect the L-curve", file=sys.stderr)
    if diag["flat_curve_warning"]:
        print("warning: L-curve curvature is uniformly small; elbow is unreliable",
              file=sys.stderr)
    _emit(s0=elbow.s0, auc=auc_score(lc))
    return 0


def cmd_rank(args) -> int:
    started = time.perf_counter()
    out = Path(args.out)
    x, y = _load_pair(args)
    kind = args.cost
    payload = {"schema_version": SCHEMA_VERSION, "method": args.method, "cost": kind}
    if args.method == "brute":
        if x.unit_count != y.unit_count:
            raise UsageError("--method brute needs populations with equal unit counts")
        if x.unit_count > 64 and not args.force:
            raise UsageError(
                f"--method brute on N={x.unit_count} units costs O(N^4 log N); "
                "pass --force to run it anyway"
            )
        rank = brute_force_rank(x, y, kind, force=True)
        payload.update(rank.to_dict())
    elif args.method == "corr":
        if args.k is None:
            raise UsageError("--method corr requires --k")
        if kind != "cosine":
            raise UsageError("--method corr works on cosine (normalized) data only")
        ks, kt, sc, tc = correlation_rank(x, y, args.k)
        payload.update({"k": args.k, "kept_source": list(ks), "kept_target": list(kt),
                        "source_corr": sc, "target_corr": tc})
    else:
        family = partial_rank(x, y, args.grid, kind)
        payload["per_s"] = [{"s": s, **m.to_dict()} for s, m in family]
        order = partial_order(x, y, args.grid, kind)
        payload["order"] = list(order.order)
        payload["order_target"] = list(order.order_target)
    out.mkdir(parents=True, exist_ok=True)
    (out / "rank.json").write_text(dumps_json(payload))
    _write_manifest(out, args, [args.x_path, args.y_path], started)
    _emit(method=args.method)
    return 0


# ---------------------------------------------------------------------------
# experiments

_EXPERIMENT_KEYS = {
    "spurious": {"grid", "cost"},
    "model-select": {"grid", "cost", "overlap_b"},
    "rotation": {"s", "trials"},
    "ranking": {"fraction"},
}


def _read_config(name, path):
    raw = {}
    if path is not None:
        try:
            raw = json.loads(Path(path).read_text())
        except json.JSONDecodeError as e:
            raise ConfigError(f"malformed config JSON: {e}") from None
        if not isinstance(raw, dict):
            raise ConfigError("config must be a JSON object")
    synth_keys = set(SynthConfig.__dataclass_fields__)
    extra = {k: raw[k] for k in raw if k not in synth_keys}
    unknown = set(extra) - _EXPERIMENT_KEYS[name]
    if unknown:
        raise ConfigError(f"unknown config keys for {name}: {sorted(unknown)}")
    cfg = SynthConfig.from_dict({k: raw[k] for k in raw if k in synth_keys})
    if isinstance(extra.get("grid"), str):
        try:
            extra["grid"] = parse_grid(extra["grid"])
        except GridError as e:
            raise ConfigError(str(e)) from None
    return cfg, extra


def _mean(values):
    vals = [v for v in values if v is not None]
    return float(np.mean(vals)) if vals else None


def _run_one(name, cfg, extra, identity_rotation):
    if name == "spurious":
        return run_spurious_experiment(cfg, extra.get("grid"),
                                       kind=extra.get("cost", "squared_euclidean"))
    if name == "model-select":
        return run_model_selection_experiment(cfg, int(extra.get("overlap_b", cfg.n // 2)),
                                              extra.get("grid"),
                                              kind=extra.get("cost", "squared_euclidean"))
    if name == "rotation":
        sampler = (lambda dim, rng: np.eye(dim)) if identity_rotation else None
        return run_rotation_experiment(cfg, float(extra.get("s", 1.0)),
                                       int(extra.get("trials", 50)), sampler)
    return run_ranking_experiment(cfg, float(extra.get("fraction", 0.25)))


def _summarize(name, reports):
    if name == "spurious":
        return {
            "mean_signal_precision": _mean(r["signal_precision"] for r in reports),
            "mean_signal_recall": _mean(r["signal_recall"] for r in reports),
            "min_signal_precision": min(r["signal_precision"] for r in reports),
            "min_signal_recall": min(r["signal_recall"] for r in reports),
            "elbow_positions": [r["elbow"]["s0"] for r in reports],
            "mean_balanced_objective": _mean(r["balanced_objective"] for r in reports),
            "mean_partial_objective_at_elbow": _mean(
                r["partial_objective_at_elbow"] for r in reports),
            "balanced_exceeds_partial_rate": _mean(
                float(r["balanced_objective"] > r["partial_objective_at_elbow"])
                for r in reports),
        }
    if name == "model-select":
        return {
            "partial_win_rate": _mean(float(r["partial_prefers_a"]) for r in reports),
            "balanced_win_rate": _mean(float(r["balanced_prefers_a"]) for r in reports),
            "mean_partial_score_a": _mean(r["partial_score_a"] for r in reports),
            "mean_partial_score_b": _mean(r["partial_score_b"] for r in reports),
            "mean_balanced_score_a": _mean(r["balanced_score_a"] for r in reports),
            "mean_balanced_score_b": _mean(r["balanced_score_b"] for r in reports),
            "elbow_positions_a": [r["elbow_a"] for r in reports],
            "elbow_positions_b": [r["elbow_b"] for r in reports],
        }
    if name == "rotation":
        return {
            "decrease_rate": _mean(float(r["rotation_decreases"]) for r in reports),
            "mean_base_score": _mean(r["base_score"] for r in reports),
            "mean_rotated_score": _mean(r["mean_rotated_score"] for r in reports),
        }
    return {
        "mean_brute_force_score": _mean(r["brute_force"]["score"] for r in reports),
        "mean_correlation_score": _mean(r["correlation"]["score"] for r in reports),
        "mean_partial_score": _mean(r["partial"]["score"] for r in reports),
    }


def _write_curves(name, seeds, reports, path):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        f = format_float
        if name == "spurious":
            grid = reports[0]["lcurve"]["grid"]
            w.writerow(["s"] + [f"zeta_seed{s}" for s in seeds])
            for i, s in enumerate(grid):
                w.writerow([f(s)] + [f(r["lcurve"]["zeta"][i]) for r in reports])
        elif name == "model-select":
            w.writerow(["seed", "partial_a", "partial_b", "balanced_a", "balanced_b"])
            for s, r in zip(seeds, reports):
                w.writerow([s, f(r["partial_score_a"]), f(r["partial_score_b"]),
                            f(r["balanced_score_a"]), f(r["balanced_score_b"])])
        elif name == "rotation":
            w.writerow(["seed", "base_score", "mean_rotated_score"])
            for s, r in zip(seeds, reports):
                w.writerow([s, f(r["base_score"]), f(r["mean_rotated_score"])])
        else:
            w.writerow(["seed", "brute_force", "correlation", "partial"])
            for s, r in zip(seeds, reports):
                w.writerow([s, f(r["brute_force"]["score"]), f(r["correlation"]["score"]),
                            f(r["partial"]["score"])])


def cmd_experiment(args) -> int:
    started = time.perf_counter()
    out = Path(args.out)
    if args.seeds < 1:
        raise UsageError("--seeds must be >= 1")
    cfg, extra = _read_config(args.name, args.config)
    seeds = [cfg.seed + i for i in range(args.seeds)]
    configs = [seeded(cfg, s) for s in seeds]
    threads = _threads(args)

    def job(c):
        return _run_one(args.name, c, extra, args.identity_rotation)

    if threads > 1 and len(configs) > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            reports = list(pool.map(job, configs))
    else:
        reports = [job(c) for c in configs]

    summary = _summarize(args.name, reports)
    payload = {
        "schema_version": SCHEMA_VERSION,
        "experiment": args.name,
        "config": cfg.to_dict(),
        "parameters": extra,
        "seeds": seeds,
        "summary": summary,
        "per_seed": reports,
    }
    out.mkdir(parents=True, exist_ok=True)
    (out / "experiment.json").write_text(dumps_json(payload))
    _write_curves(args.name, seeds, reports, out / "curves.csv")
    inputs = [args.config] if args.config else []
    _write_manifest(out, args, inputs, started, {"seed": cfg.seed, "seeds": seeds})
    _emit(**{k: v for k, v in summary.items() if isinstance(v, float)})
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="parmatch", description="Partial soft-matching between neural populations.")
    p.add_argument("--version", action="version", version=__version__)
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def common(sp, with_inputs=True):
        if with_inputs:
            sp.add_argument("x_path")
            sp.add_argument("y_path")
            sp.add_argument("--format", choices=["csv", "rawbin"], default="csv")
            sp.add_argument("--cost", choices=["cosine", "sqeuclidean"], default="cosine")
            sp.add_argument("--normalize", action="store_true",
                            help="center and unit-normalize unit columns before matching")
        sp.add_argument("--out", required=True, help="output directory")
        sp.add_argument("--threads", type=int, default=None)

    m = sub.add_parser("match", help="balanced or partial soft matching")
    common(m)
    g = m.add_mutually_exclusive_group(required=True)
    g.add_argument("--s", type=_mass, help="matched mass fraction in [0, 1]")
    g.add_argument("--balanced", action="store_true")
    m.add_argument("--tau", type=float, default=1e-6)
    m.set_defaults(func=cmd_match)

    lc = sub.add_parser("lcurve", help="L-curve sweep and elbow selection")
    common(lc)
    lc.add_argument("--grid", type=_grid, default=_grid(DEFAULT_GRID),
                    help="start:stop:steps, endpoints included")
    lc.set_defaults(func=cmd_lcurve)

    r = sub.add_parser("rank", help="rank units by how well they match")
    common(r)
    r.add_argument("--method", choices=["brute", "corr", "partial"], required=True)
    r.add_argument("--grid", type=_grid, default=_grid(DEFAULT_GRID))
    r.add_argument("--k", type=int, default=None)
    r.add_argument("--force", action="store_true", help="allow brute force on N > 64")
    r.set_defaults(func=cmd_rank)

    e = sub.add_parser("experiment", help="synthetic experiments over many seeds")
    e.add_argument("name", choices=["spurious", "model-select", "rotation", "ranking"])
    e.add_argument("--config", default=None, help="JSON file of config overrides")
    e.add_argument("--seeds", type=int, default=1)
    e.add_argument("--identity-rotation", action="store_true", help=argparse.SUPPRESS)
    common(e, with_inputs=False)
    e.set_defaults(func=cmd_experiment)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except UsageError as e:
        print(f"parmatch: usage error: {e}", file=sys.stderr)
        return 1
    except NumericalError as e:
        print(f"parmatch: solver error: {e}", file=sys.stderr)
        return 3
    except (OSError, ParmatchError, ValueError) as e:
        print(f"parmatch: input error: {e}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
