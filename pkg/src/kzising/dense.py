"""Brute-force Schrodinger integration in the full 2^L spin space.

Used as an independent check of the fermionic and tensor-network solvers;
unlike them it handles longitudinal fields and any coupling pattern.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.integrate import solve_ivp

from .chain import ChainSpec
from .schedule import Schedule

TWO_PI = 2.0 * np.pi
MAX_L = 12


@dataclass(frozen=True)
class DenseResult:
    psi: np.ndarray
    n_bar: float
    ckk: np.ndarray  # indexed by r = 0..L-1
    pgs: float
    zz: np.ndarray


class DenseChain:
    """Diagonal and transverse parts of the chain Hamiltonian in the z basis."""

    def __init__(self, chain: ChainSpec):
        L = chain.L
        if L > MAX_L:
            raise ValueError(f"dense oracle refuses L={L} > {MAX_L}")
        self.chain = chain
        self.L = L
        idx = np.arange(2**L)
        bits = (idx[:, None] >> np.arange(L)[None, :]) & 1
        self.z = 1.0 - 2.0 * bits  # (2^L, L), z of site i
        self.zz = self.z * np.roll(self.z, -1, axis=1)  # bond i couples i, i+1
        self.ising = self.zz @ chain.couplings + self.z @ chain.fields
        self.flip = idx[:, None] ^ (1 << np.arange(L))[None, :]

    def apply_x(self, psi):
        return psi[self.flip].sum(axis=1)

    def hamiltonian(self, schedule: Schedule, s: float) -> np.ndarray:
        g, jc = schedule.eval(s)
        n = 2**self.L
        H = np.zeros((n, n))
        rows = np.repeat(np.arange(n), self.L)
        np.add.at(H, (rows, self.flip.ravel()), -float(g))
        H[np.diag_indices(n)] += float(jc) * self.ising
        return H

    def kinks(self) -> np.ndarray:
        return 0.5 * (1.0 + self.chain.sign * self.zz)


def ground_space(H: np.ndarray, rel_tol: float = 1e-9):
    w, v = np.linalg.eigh(H)
    scale = max(1.0, float(np.max(np.abs(w))))
    return v[:, w <= w[0] + rel_tol * scale]


def evolve_dense(chain: ChainSpec, schedule: Schedule, t_a: float, rtol: float = 1e-11, atol: float = 1e-12):
    dc = DenseChain(chain)
    psi0 = ground_space(dc.hamiltonian(schedule, schedule.s_start))
    if psi0.shape[1] != 1:
        raise ValueError("initial ground state is degenerate")
    psi0 = psi0[:, 0].astype(complex)
    c = -1j * TWO_PI * t_a

    def rhs(s, psi):
        g, jc = schedule.eval(s)
        return c * (-float(g) * dc.apply_x(psi) + float(jc) * dc.ising * psi)

    sol = solve_ivp(rhs, (schedule.s_start, schedule.s_end), psi0, method="DOP853",
                    rtol=rtol, atol=atol)
    if not sol.success:
        raise RuntimeError(f"dense integration failed: {sol.message}")
    psi = sol.y[:, -1]
    return dc, psi / np.linalg.norm(psi)


def observables(dc: DenseChain, psi: np.ndarray, schedule: Schedule) -> DenseResult:
    prob = np.abs(psi) ** 2
    K = dc.kinks()
    L = dc.L
    n_bar = float(prob @ K.mean(axis=1))
    kk = np.array([prob @ np.mean(K * np.roll(K, -r, axis=1), axis=1) for r in range(L)])
    ckk = (kk - n_bar**2) / n_bar**2 if n_bar > 0 else np.full(L, np.nan)
    gs = ground_space(dc.hamiltonian(schedule, schedule.s_end))
    pgs = float(np.sum(np.abs(gs.conj().T @ psi) ** 2))
    return DenseResult(psi, n_bar, ckk, pgs, prob @ dc.zz)


def dense_oracle(chain: ChainSpec, schedule: Schedule, t_a: float, **kw) -> DenseResult:
    """Kink density, ``C_r`` (indexed by r) and ground-space probability at the end of the anneal."""
    dc, psi = evolve_dense(chain, schedule, t_a, **kw)
    return observables(dc, psi, schedule)
