"""Outcome-table sensitivity to the hyperfine detuning assignment and the coupling bounds.

    python scripts/sensitivity_scan.py --n 1024
"""

import argparse
import itertools

from sprintsim.ensemble import CouplingDistribution, EnsembleConfig, run_ensemble
from sprintsim.levels import preset
from sprintsim.params import SystemParams
from sprintsim.pulses import gaussian_schedule

ASSIGNMENTS = {
    "F'=0 resonant": dict(delta_a=0.0, delta_a_prime=-72.0),
    "F'=1 resonant": dict(delta_a=-72.0, delta_a_prime=0.0),
}
BOUNDS = [(7.0, 28.0), (4.0, 28.0), (10.0, 28.0), (7.0, 34.0)]


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--n", type=int, default=1024)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--workers", type=int, default=1)
    ap.add_argument("--fwhm", type=float, default=53.0)
    args = ap.parse_args()

    sched = gaussian_schedule(args.fwhm)
    print("assignment,g_min,g_max,G1_fidelity,G1_toggle_given_R,G1_L,G1_R,G2_R,G2_fidelity")
    for (name, det), (lo, hi) in itertools.product(ASSIGNMENTS.items(), BOUNDS):
        row = []
        for g in ("G1", "G2"):
            cfg = EnsembleConfig(params=SystemParams(**det), scheme=preset("rb87", g), schedule=sched,
                                 n=args.n, seed=args.seed, workers=args.workers,
                                 distribution=CouplingDistribution(16.0, 6.0, lo, hi))
            t = run_ensemble(cfg)
            tot = t.photon_totals
            row += [t.fidelity, t.toggle_given_R, tot["L"], tot["R"]] if g == "G1" else [tot["R"], t.fidelity]
        print(f"{name},{lo:g},{hi:g}," + ",".join(f"{x:.4f}" for x in row))


if __name__ == "__main__":
    main()
