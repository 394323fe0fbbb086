"""Kink-kink correlator from the BdG solver, plotted against n_bar * r (text output).

    python demos/correlator.py
"""
import numpy as np

from kzising import ChainSpec, Schedule
from kzising.bdg import evolve_bdg, kink_stats_bdg


def main():
    sch = Schedule.linear(1.0, 1.4)
    ch = ChainSpec.uniform(128, -1.4)
    grid = np.array([0.05, 0.2, 0.4, 0.6, 0.8, 1.0, 1.5])
    print("n_bar*r " + " ".join(f"{x:7.2f}" for x in grid))
    for ta in (2.0, 4.0, 8.0):
        n, c = kink_stats_bdg(evolve_bdg(ch, sch, ta), ch)
        r = np.arange(1, 65)
        print(f"t_a={ta:4.1f} " + " ".join(f"{v:7.3f}" for v in np.interp(grid, n * r, c[1:65])))


if __name__ == "__main__":
    main()
