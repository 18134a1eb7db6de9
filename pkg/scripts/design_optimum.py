"""Closed-form versus numerical cavity design for the detuned four-level scheme.

Prints the exact and approximate optimal (kappa_ex, delta_C) for a range of
hyperfine splittings together with the transmission at each design point.

    python scripts/design_optimum.py
"""

import argparse
import math

from sprintsim.analytic import four_level_TR, optimal_detuned_approx, optimal_detuned_exact
from sprintsim.params import SystemParams


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--g", type=float, default=16.0)
    ap.add_argument("--ki", type=float, default=6.0)
    ap.add_argument("--gamma", type=float, default=3.0)
    ap.add_argument("--eta", type=float, default=math.sqrt(1.25), help="|g'|/|g|")
    ap.add_argument("--splittings", type=float, nargs="+", default=[-36.0, -72.0, -144.0, -360.0, -720.0])
    args = ap.parse_args()

    print("delta_a_prime,exact_kappa_ex,exact_delta_C,exact_T,approx_kappa_ex,approx_delta_C,approx_T,approx_R")
    for d in args.splittings:
        p = SystemParams(g_mag=args.g, kappa_i=args.ki, gamma=args.gamma, gamma_prime=args.gamma,
                         g_prime_ratio=args.eta, delta_a_prime=d, delta_a=0.0, h=0.0, r_sigma=0.0, r_pi=0.0)
        e, a = optimal_detuned_exact(p), optimal_detuned_approx(p)
        Te = four_level_TR(p.replace(kappa_ex=e.kappa_ex), -1, delta_C=e.delta_C)[0]
        Ta, Ra = four_level_TR(p.replace(kappa_ex=a.kappa_ex), -1, delta_C=a.delta_C)
        print(f"{d:g},{e.kappa_ex:.4f},{e.delta_C:.4f},{Te:.2e},{a.kappa_ex:.4f},{a.delta_C:.4f},{Ta:.2e},{Ra:.4f}")


if __name__ == "__main__":
    main()
