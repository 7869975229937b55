"""Rounds to agreement on a ring whose edges alternate between two perfect matchings.

Compares the switching schedule against each half held fixed, for several
ring sizes and participating fractions. Prints a CSV table to stdout.

    python scripts/switching_sweep.py [--sizes 4 6 8 10] [--seed 0]
"""

import argparse
import csv
import sys

import numpy as np

from bridge_consensus.graph import GraphSchedule, Topology
from bridge_consensus.sim import Scenario, run_scenario


def ring_halves(n):
    even = [(k, k % n + 1) for k in range(1, n + 1, 2)]
    odd = [(k, k % n + 1) for k in range(2, n + 1, 2)]
    return Topology.from_edges(n, even, True), Topology.from_edges(n, odd, True)


def main():
    parser = argparse.ArgumentParser()
    parser.add_argument("--sizes", type=int, nargs="+", default=[4, 6, 8, 10])
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--max-rounds", type=int, default=20_000)
    args = parser.parse_args()
    rng = np.random.default_rng(args.seed)

    out = csv.writer(sys.stdout, lineterminator="\n")
    out.writerow(["n", "participants", "schedule", "converged", "rounds", "max_error"])
    for n in args.sizes:
        if n % 2:
            raise SystemExit("ring sizes must be even so the ring splits into two matchings")
        a, b = ring_halves(n)
        for frac in (0.25, 0.5, 1.0):
            part = np.zeros(n, dtype=bool)
            part[rng.choice(n, size=max(1, int(frac * n)), replace=False)] = True
            values = tuple((float(rng.normal(scale=5)),) if p else None for p in part)
            for label, sched in [("switching", GraphSchedule(((a, 1), (b, 1)), periodic=True)),
                                 ("half_a", GraphSchedule.static(a))]:
                s = Scenario(sched, values, tuple(part), 1e-10, args.max_rounds)
                r, _ = run_scenario(s)
                out.writerow([n, int(part.sum()), label, r.converged, r.rounds, f"{r.max_error:.3e}"])


if __name__ == "__main__":
    main()
