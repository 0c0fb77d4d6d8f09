"""Which candidate population shares more signal with a reference?

Model A shares every signal unit; model B shares ``--overlap`` of them.
"""

import argparse
from pathlib import Path

import numpy as np

from parmatch.matrixio import dumps_json
from parmatch.synth import SynthConfig, run_model_selection_experiment


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--seeds", type=int, default=50)
    ap.add_argument("--overlap", type=int, default=10)
    ap.add_argument("--noise", type=int, default=10, help="noise units on each candidate")
    ap.add_argument("--cost", choices=["squared_euclidean", "cosine"],
                    default="squared_euclidean")
    ap.add_argument("--out", type=Path, default=None)
    args = ap.parse_args()

    reports = [
        run_model_selection_experiment(SynthConfig(noise1=0, noise2=args.noise, seed=s),
                                       args.overlap, kind=args.cost)
        for s in range(args.seeds)
    ]
    for s, r in enumerate(reports):
        print(f"seed {s:2d}  partial A={r['partial_score_a']:.3f} B={r['partial_score_b']:.3f}"
              f"  balanced A={r['balanced_score_a']:.3f} B={r['balanced_score_b']:.3f}")
    print("partial win rate ", np.mean([r["partial_prefers_a"] for r in reports]))
    print("balanced win rate", np.mean([r["balanced_prefers_a"] for r in reports]))
    if args.out:
        args.out.parent.mkdir(parents=True, exist_ok=True)
        args.out.write_text(dumps_json(reports))


if __name__ == "__main__":
    main()
