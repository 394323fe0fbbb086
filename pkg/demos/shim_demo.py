"""Calibration refinement against a synthetic miscalibrated device.

    python demos/shim_demo.py
"""
import numpy as np

from kzising.shim import FreezeOutSampler, ShimConfig, run_shim


def main():
    L, J = 64, -1.0
    dev = FreezeOutSampler(L, J, sigma=0.05, flux_gain=500.0, seed=0)
    cfg = ShimConfig()
    rep = run_shim(dev, cfg, 0, L=L, J=J)
    print(f"{'iter':>5} {'std f':>8} {'med |m|':>8}")
    done = 0
    for it in (0, 10, 50, 100, 300):
        rep = run_shim(dev, cfg, it - done, state=rep.state)
        done = it
        st = rep.state
        ex = dev.exact_stats(st.flux, st.couplings, st.site_offsets())
        print(f"{it:5d} {np.std(ex.f):8.4f} {np.median(np.abs(ex.m)):8.4f}")


if __name__ == "__main__":
    main()
