"""Joint photon/atom outcome table for the Rb-87 scheme, both initial ground states.

    python scripts/outcome_table.py --n 10000 --seed 0 --out results/table
"""

import argparse
from pathlib import Path

from sprintsim.config import RunConfig


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--n", type=int, default=10_000)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--workers", type=int, default=1)
    ap.add_argument("--out", type=Path, help="prefix for .json/.csv files per initial ground")
    args = ap.parse_args()

    from sprintsim.ensemble import run_ensemble

    cfg = RunConfig()
    cfg.ensemble.update(n=args.n, seed=args.seed, workers=args.workers)
    for g in ("G1", "G2"):
        table = run_ensemble(cfg.ensemble_config(initial_ground=g))
        print(f"# initial {g}: fidelity {table.fidelity:.4f}, P(toggle|R) {table.toggle_given_R:.4f}, "
              f"residual {table.residual_norm:.1e}")
        print(table.to_csv())
        if args.out:
            args.out.parent.mkdir(parents=True, exist_ok=True)
            Path(f"{args.out}_{g}.json").write_text(table.to_json())
            Path(f"{args.out}_{g}.csv").write_text(table.to_csv())


if __name__ == "__main__":
    main()
