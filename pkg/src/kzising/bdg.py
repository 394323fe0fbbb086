"""Real-space Bogoliubov-de Gennes evolution of the fermionized chain.

The Heisenberg-picture fermions are written ``a_i = sum_m u_im b_m + v*_im b_m^dag``
where ``b_m`` annihilate the ground state at the start of the anneal. The
coefficient matrices obey

    i du/dt = 2 pi ( A u + B v),    i dv/dt = 2 pi (-B u - A v)

with ``A``, ``B`` real ``L x L`` matrices in GHz and ``t = t_a s`` in ns.
Spin correlators follow from ``P = u + v`` and ``Q = v - u`` by Wick's theorem.
"""
from __future__ import annotations

from dataclasses import dataclass

import numba
import numpy as np

from .chain import ChainSpec
from .schedule import Schedule

TWO_PI = 2.0 * np.pi
UNITARITY_ABORT = 1e-5
MAX_STEPS = 2**21


class UnitarityError(RuntimeError):
    pass


class CorrelatorUndefinedError(ValueError):
    pass


@dataclass(frozen=True)
class BdGState:
    u: np.ndarray
    v: np.ndarray
    s: float
    n_steps: int = 0
    unitarity_error: float = 0.0

    @property
    def L(self) -> int:
        return self.u.shape[0]

    def unitarity(self) -> float:
        return unitarity_defect(self.u, self.v)


def unitarity_defect(u, v) -> float:
    m = u.conj().T @ u + v.conj().T @ v
    m[np.diag_indices_from(m)] -= 1.0
    return float(np.max(np.abs(m)))


def _bond_terms(chain: ChainSpec, schedule: Schedule, s, gamma_scale=None):
    """Diagonal ``-2 Gamma_i`` and forward bonds with the anti-periodic sign on the last one."""
    g, jc = schedule.eval(s)
    L = chain.L
    gam = float(g) * (np.ones(L) if gamma_scale is None else np.asarray(gamma_scale, float))
    f = float(jc) * np.array(chain.couplings, dtype=float)
    f[-1] = -f[-1]
    return -2.0 * gam, f


def build_AB(chain: ChainSpec, schedule: Schedule, s: float, gamma_scale=None):
    """Dense ``A`` and ``B`` at schedule point ``s``.

    ``A_ij = -2 Gamma_i d_ij + J_i d_{j,i+1} + J_{i-1} d_{j,i-1}`` and
    ``B_ij = J_i d_{j,i+1} - J_{i-1} d_{j,i-1}`` with ``J_i = Jcal(s) J_i^chain``;
    the wrap-around bond enters with the opposite sign.
    """
    if np.any(chain.fields):
        raise ValueError("longitudinal fields are not representable in the BdG solver")
    d, f = _bond_terms(chain, schedule, s, gamma_scale)
    L = chain.L
    A = np.diag(d)
    B = np.zeros((L, L))
    for i in range(L):
        j = (i + 1) % L
        A[i, j] += f[i]
        A[j, i] += f[i]
        B[i, j] += f[i]
        B[j, i] -= f[i]
    return A, B


def bdg_matrix(chain: ChainSpec, schedule: Schedule, s: float, gamma_scale=None) -> np.ndarray:
    A, B = build_AB(chain, schedule, s, gamma_scale)
    return np.block([[A, B], [-B, -A]])


def init_uv(chain: ChainSpec, schedule: Schedule, gamma_scale=None, gap_tol: float = 1e-10) -> BdGState:
    """Ground-state coefficients at the start of the schedule.

    The ``b_m`` are the positive-energy eigenvectors ``(u_m, v_m)`` of the BdG
    matrix. With no coupling at ``s = 0`` this is ``u = 0, v = I`` (every
    site's fermion occupied, i.e. all spins along +x).
    """
    s0 = schedule.s_start
    L = chain.L
    _, jc = schedule.eval(s0)
    if float(jc) == 0.0:
        g, _ = schedule.eval(s0)
        if float(g) <= 0:
            raise ValueError("no transverse field at s=0: ground state is degenerate")
        return BdGState(np.zeros((L, L), complex), np.eye(L, dtype=complex), s0)
    w, vec = np.linalg.eigh(bdg_matrix(chain, schedule, s0, gamma_scale))
    if np.min(np.abs(w)) < gap_tol:
        raise ValueError("zero mode at s=0: the schedule must start in the paramagnetic phase")
    pos = vec[:, w > 0]
    if pos.shape[1] != L:
        raise ValueError("BdG spectrum is not particle-hole symmetric")
    return BdGState(pos[:L].astype(complex), pos[L:].astype(complex), s0)


def schedule_energy(chain: ChainSpec, schedule: Schedule) -> float:
    """Largest ``Gamma(s) + Jcal(s) max|J_i|`` over the schedule (GHz)."""
    s = np.linspace(schedule.s_start, schedule.s_end, 257)
    g, jc = schedule.eval(s)
    return float(np.max(g + jc * np.max(np.abs(chain.couplings))))


def default_steps(t_a: float, energy: float = 1.0) -> int:
    """``2000 max(1, t_a/10 ns)`` steps, raised for long anneals.

    The RK4 phase error accumulates as ``~(E t_a)^5 / n^4``, so
    ``n ~ 1000 (E t_a)^1.25`` keeps n_bar accurate to ~1e-10 (and the
    unitarity drift far below 1e-7) independently of the anneal length.
    """
    return int(max(2000 * max(1.0, t_a / 10.0), np.ceil(1000.0 * (energy * t_a) ** 1.25)))


@numba.njit(cache=True)
def _deriv(x, y, gd, jc2, f0, fb0, c, dx, dy):
    L, M = x.shape
    for i in range(L):
        im = i - 1 if i > 0 else L - 1
        ip = i + 1 if i < L - 1 else 0
        a = c * gd[i]
        b = c * jc2 * fb0[i]
        e = c * jc2 * f0[i]
        for m in range(M):
            dx[i, m] = a * y[i, m] + b * y[im, m]
            dy[i, m] = a * x[i, m] + e * x[ip, m]


@numba.njit(cache=True)
def _rk4_kernel(x, y, g_all, j_all, diag0, f0, fb0, c, n0, n1):
    """Classical RK4 steps ``n0 .. n1-1`` in place; schedule sampled on a half-step grid."""
    L, M = x.shape
    kx = np.empty_like(x)
    ky = np.empty_like(x)
    tx = np.empty_like(x)
    ty = np.empty_like(x)
    ax = np.empty_like(x)
    ay = np.empty_like(x)
    for n in range(n0, n1):
        m = 2 * n
        _deriv(x, y, g_all[m] * diag0, 2.0 * j_all[m], f0, fb0, c, kx, ky)
        for i in range(L):
            for q in range(M):
                ax[i, q] = kx[i, q]
                ay[i, q] = ky[i, q]
                tx[i, q] = x[i, q] + 0.5 * kx[i, q]
                ty[i, q] = y[i, q] + 0.5 * ky[i, q]
        gd = g_all[m + 1] * diag0
        _deriv(tx, ty, gd, 2.0 * j_all[m + 1], f0, fb0, c, kx, ky)
        for i in range(L):
            for q in range(M):
                ax[i, q] += 2.0 * kx[i, q]
                ay[i, q] += 2.0 * ky[i, q]
                tx[i, q] = x[i, q] + 0.5 * kx[i, q]
                ty[i, q] = y[i, q] + 0.5 * ky[i, q]
        _deriv(tx, ty, gd, 2.0 * j_all[m + 1], f0, fb0, c, kx, ky)
        for i in range(L):
            for q in range(M):
                ax[i, q] += 2.0 * kx[i, q]
                ay[i, q] += 2.0 * ky[i, q]
                tx[i, q] = x[i, q] + kx[i, q]
                ty[i, q] = y[i, q] + ky[i, q]
        _deriv(tx, ty, g_all[m + 2] * diag0, 2.0 * j_all[m + 2], f0, fb0, c, kx, ky)
        for i in range(L):
            for q in range(M):
                x[i, q] += (ax[i, q] + kx[i, q]) / 6.0
                y[i, q] += (ay[i, q] + ky[i, q]) / 6.0


def _rk4(chain, schedule, t_a, state: BdGState, n_steps: int, gamma_scale=None, n_checks: int = 16):
    # Evolve x = u + v and y = u - v; in these variables the BdG generator
    # only couples x to y through one forward and one backward bond shift.
    s0, s1 = state.s, schedule.s_end
    ds = (s1 - s0) / n_steps
    c = -1j * TWO_PI * t_a * ds
    L = chain.L
    grid = s0 + ds * np.arange(2 * n_steps + 1) / 2.0
    g_all, j_all = (np.ascontiguousarray(a, dtype=float) for a in schedule.eval(grid))
    gs = np.ones(L) if gamma_scale is None else np.asarray(gamma_scale, float)
    f0 = np.array(chain.couplings, dtype=float)
    f0[-1] = -f0[-1]
    fb0 = np.roll(f0, 1)
    diag0 = -2.0 * gs
    x = np.ascontiguousarray(state.u + state.v)
    y = np.ascontiguousarray(state.u - state.v)
    chunk = max(1, -(-n_steps // n_checks))
    worst = 0.0
    for n0 in range(0, n_steps, chunk):
        n1 = min(n_steps, n0 + chunk)
        _rk4_kernel(x, y, g_all, j_all, diag0, f0, fb0, c, n0, n1)
        err = unitarity_defect(x / np.sqrt(2.0), y / np.sqrt(2.0))
        worst = max(worst, err)
        if not err <= UNITARITY_ABORT:
            raise UnitarityError(
                f"unitarity defect {err:.2e} at s={s0 + n1 * ds:.6f} with {n_steps} steps "
                f"(ds={ds:.3e}, t_a={t_a}); increase n_steps"
            )
    return BdGState(0.5 * (x + y), 0.5 * (x - y), s1, n_steps, worst)


def evolve_bdg(chain: ChainSpec, schedule: Schedule, t_a: float, n_steps: int | None = None,
               tol: float | None = None, gamma_scale=None) -> BdGState:
    """Integrate the BdG equations over the whole schedule.

    ``n_steps`` defaults to :func:`default_steps`. If ``tol`` is given
    the step count is doubled until the kink density changes by less than
    ``tol`` between successive runs.
    """
    if t_a <= 0:
        raise ValueError("anneal time must be positive")
    if np.any(chain.fields):
        raise ValueError("longitudinal fields are not representable in the BdG solver")
    start = init_uv(chain, schedule, gamma_scale)
    n = default_steps(t_a, schedule_energy(chain, schedule)) if n_steps is None else int(n_steps)
    state = _rk4(chain, schedule, t_a, start, n, gamma_scale)
    if tol is None:
        return state
    dens = kink_density(state, chain)
    while True:
        n *= 2
        if n > MAX_STEPS:
            raise UnitarityError(f"kink density not converged to {tol} within {MAX_STEPS} steps")
        new = _rk4(chain, schedule, t_a, start, n, gamma_scale)
        new_dens = kink_density(new, chain)
        if abs(new_dens - dens) < tol:
            return new
        state, dens = new, new_dens


def _eta(L: int) -> np.ndarray:
    eta = np.ones(L)
    eta[-1] = -1.0
    return eta


def two_point(state: BdGState) -> np.ndarray:
    """``<sz_i sz_{i+1}>`` for every bond ``i`` (periodic)."""
    P = state.u + state.v
    Q = state.v - state.u
    L = state.L
    i = np.arange(L)
    j = (i + 1) % L
    # [Q P^dag]_{i, i+1} row by row
    qp = np.einsum("ik,ik->i", Q, P[j].conj())
    return _eta(L) * qp.real


def four_point(state: BdGState, r) -> np.ndarray:
    """``<sz_i sz_{i+1} sz_{i+r} sz_{i+r+1}>`` for every ``i``; one row per requested ``r``."""
    P = state.u + state.v
    Q = state.v - state.u
    QP = Q @ P.conj().T
    QQ = Q @ Q.conj().T
    PP = P @ P.conj().T
    PQ = P @ Q.conj().T
    L = state.L
    eta = _eta(L)
    i = np.arange(L)
    i1 = (i + 1) % L
    rs = np.atleast_1d(r)
    out = np.empty((rs.size, L))
    for n, rr in enumerate(rs):
        rr = int(rr) % L
        if rr == 0:
            out[n] = 1.0
            continue
        j = (i + rr) % L
        j1 = (j + 1) % L
        val = (QP[i, i1] * QP[j, j1] + QQ[i, j] * PP[i1, j1] - QP[i, j1] * PQ[i1, j])
        out[n] = eta * eta[j] * val.real
    return out


def correlators_bdg(state: BdGState, r=None):
    """Two-point array over bonds and four-point array over ``(r, i)``.

    ``r`` defaults to every separation ``0..L-1``.
    """
    L = state.L
    rs = np.arange(L) if r is None else np.atleast_1d(r)
    return two_point(state), four_point(state, rs)


def kink_density(state: BdGState, chain: ChainSpec) -> float:
    return float(np.mean(0.5 * (1.0 + chain.sign * two_point(state))))


def kink_stats_bdg(state: BdGState, chain: ChainSpec, r=None):
    """Kink density and normalized kink-kink correlator ``C_r`` indexed by ``r``."""
    L = state.L
    rs = np.arange(L) if r is None else np.atleast_1d(r)
    zz, zzzz = correlators_bdg(state, rs)
    sg = chain.sign
    n_bar = float(np.mean(0.5 * (1.0 + sg * zz)))
    if n_bar <= 0:
        raise CorrelatorUndefinedError("kink density is zero; correlator undefined")
    kk = np.empty(rs.size)
    for n, rr in enumerate(rs):
        shifted = np.roll(zz, -int(rr))
        kk[n] = np.mean(0.25 * (1.0 + sg * zz + sg * shifted + zzzz[n]))
        if int(rr) % L == 0:
            kk[n] = n_bar
    return n_bar, (kk - n_bar**2) / n_bar**2
