"""Kink density vs anneal time from the momentum-mode solver, against the KZ prediction.

    python demos/kz_scaling.py
"""
import numpy as np

from kzising import Schedule, kz_b
from kzising.modes import mode_spectrum
from kzising.theory import cumulant_ratio_targets, fit_power_law, predict_density


def main():
    sch = Schedule.linear()
    J, L = -1.0, 512
    b = kz_b(sch, J).b
    t = np.geomspace(2.0, 150.0, 8)
    print(f"b = {b:.6f} /ns (pi/4 = {np.pi / 4:.6f})")
    print(f"{'t_a':>8} {'n_bar':>10} {'theory':>10} {'L k2/k1':>9} {'L^2 k3/k1':>10}")
    dens = []
    for ta in t:
        res = mode_spectrum(sch, J, ta, L)
        k1, k2, k3 = res.cumulants
        dens.append(res.density)
        print(f"{ta:8.2f} {res.density:10.5f} {predict_density(b, ta):10.5f} {L * k2 / k1:9.4f} {L**2 * k3 / k1:10.4f}")
    r2, r3 = cumulant_ratio_targets()
    print(f"fitted exponent {fit_power_law(t, dens).slope:.4f}; ratio targets {r2:.4f}, {r3:.4f}")


if __name__ == "__main__":
    main()
