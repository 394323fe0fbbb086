"""TEBD for the periodic chain folded onto an open chain.

Ring sites ``0, 1, ..., L-1`` are placed on the line as
``0, L-1, 1, L-2, 2, ...`` read pairwise, i.e. ring site ``j < L/2`` sits at
linear position ``2j`` and ring site ``j >= L/2`` at ``2(L-1-j)+1``. Every
ring bond then joins linear sites at distance one (the two edge bonds) or
two (all others), and one Trotter slice is the symmetric sweep

    U(0,1) U(0,2) U(1,3) ... U(L-3,L-1) U(L-2,L-1)^2 U(L-3,L-1) ... U(0,2) U(0,1)

of half-step gates ``exp(-i 2 pi h_ij dt / 2)``. Positions are 0-based.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.linalg as sla

from .chain import ChainSpec
from .schedule import Schedule

TWO_PI = 2.0 * np.pi
_X = np.array([[0.0, 1.0], [1.0, 0.0]])
_Z = np.array([1.0, -1.0])
_I2 = np.eye(2)


@dataclass(frozen=True)
class TebdConfig:
    D: int = 32
    dt: float = 0.01  # ns
    svd_threshold: float = 1e-12
    backend: str = "gram"  # "gram" (eigh of the reduced density matrix) or "svd"

    def __post_init__(self):
        if self.backend not in ("gram", "svd"):
            raise ValueError("backend must be 'gram' or 'svd'")
        if self.D < 2:
            raise ValueError("bond dimension must be at least 2")
        if self.dt <= 0:
            raise ValueError("dt must be positive")


@dataclass
class MpsState:
    tensors: list  # each (Dl, 2, Dr), linear order
    D: int
    discarded: float = 0.0
    center: int = 0
    max_bond: int = 1

    @property
    def L(self) -> int:
        return len(self.tensors)

    @property
    def bond_dims(self) -> list[int]:
        return [t.shape[2] for t in self.tensors[:-1]]

    @classmethod
    def product_plus(cls, L: int, D: int) -> "MpsState":
        t = np.full((1, 2, 1), 1.0 / np.sqrt(2.0), dtype=complex)
        return cls([t.copy() for _ in range(L)], D)

    def to_dense(self, ring_order: bool = True) -> np.ndarray:
        """Full state vector; with ``ring_order`` bit ``j`` of the index is ring site ``j`` (0 = up)."""
        psi = self.tensors[0]
        for t in self.tensors[1:]:
            psi = np.tensordot(psi, t, axes=(psi.ndim - 1, 0))
        psi = psi.reshape([2] * self.L)
        if ring_order:
            pos = ring_to_linear(self.L)
            # axis for ring site j must end up at position L-1-j (bit j, little endian)
            psi = np.transpose(psi, [pos[j] for j in range(self.L - 1, -1, -1)])
        return psi.reshape(-1)


def ring_to_linear(L: int) -> np.ndarray:
    """Linear position of each ring site."""
    if L < 4 or L % 2:
        raise ValueError("L must be even and >= 4")
    j = np.arange(L)
    return np.where(j < L // 2, 2 * j, 2 * (L - 1 - j) + 1)


def map_periodic_to_linear(L: int):
    """Gate list of one symmetric slice as ``(p, q, ring_bond, weight)``.

    ``weight`` is the fraction of ``dt`` the gate covers (1/2, or 1 for the
    squared centre gate). Returns ``(bonds, sweep)`` where ``bonds`` is the
    sorted set of linear bonds.
    """
    pos = ring_to_linear(L)
    bond_of = {}
    for i in range(L):
        a, b = sorted((int(pos[i]), int(pos[(i + 1) % L])))
        bond_of[(a, b)] = i
    right = [(0, 1)] + [(p, p + 2) for p in range(L - 2)]
    centre = (L - 2, L - 1)
    sweep = [(p, q, bond_of[(p, q)], 0.5) for p, q in right]
    sweep.append((centre[0], centre[1], bond_of[centre], 1.0))
    sweep += [(p, q, bond_of[(p, q)], 0.5) for p, q in reversed(right)]
    return sorted(bond_of), sweep


def _bond_hamiltonians(chain: ChainSpec, g: float, jc: float) -> np.ndarray:
    """``h_ij`` for every ring bond as (L, 4, 4); the lower ring site is the first tensor factor."""
    L = chain.L
    XI, IX = np.kron(_X, _I2), np.kron(_I2, _X)
    ZZ = np.diag(np.kron(_Z, _Z))
    ZI, IZ = np.diag(np.kron(_Z, np.ones(2))), np.diag(np.kron(np.ones(2), _Z))
    h = chain.fields
    out = np.empty((L, 4, 4))
    for i in range(L):
        j = (i + 1) % L
        out[i] = (-0.5 * g * (XI + IX) + jc * chain.couplings[i] * ZZ
                  + 0.5 * jc * (h[i] * ZI + h[j] * IZ))
    return out


def _gates(chain: ChainSpec, g: float, jc: float, tau: float) -> np.ndarray:
    """``exp(-i 2 pi h tau)`` for every ring bond."""
    w, v = np.linalg.eigh(_bond_hamiltonians(chain, g, jc))
    ph = np.exp(-1j * TWO_PI * tau * w)
    return np.einsum("bij,bj,bkj->bik", v, ph, v.conj())


def _svd(m):
    try:
        return sla.svd(m, full_matrices=False, lapack_driver="gesdd", check_finite=False)
    except np.linalg.LinAlgError:
        return sla.svd(m, full_matrices=False, lapack_driver="gesvd", check_finite=False)


GRAM_FLOOR = 1e-14  # relative eigenvalue floor; the Gram matrix squares the condition number


def _keep(mps: MpsState, w2: np.ndarray, threshold: float, floor: float) -> int:
    """Number of Schmidt weights (descending ``w2``) to keep; adds the rest to the discarded weight."""
    cut = max(threshold**2, floor) * w2[0]
    keep = max(1, min(int(np.count_nonzero(w2 > cut)), mps.D))
    tot = float(np.sum(np.clip(w2, 0.0, None)))
    mps.discarded += float(np.sum(np.clip(w2[keep:], 0.0, None))) / tot
    mps.max_bond = max(mps.max_bond, keep)
    return keep


def _split_left(mps: MpsState, m: np.ndarray, config) -> tuple[np.ndarray, np.ndarray]:
    """Truncated ``m ~ iso @ rest`` with ``iso`` column-orthonormal and ``rest`` normalized."""
    if config.backend == "svd":
        u, s, vh = _svd(m)
        keep = _keep(mps, s**2, config.svd_threshold, 0.0)
        rest = s[:keep, None] * vh[:keep]
        iso = u[:, :keep]
    else:
        w, v = np.linalg.eigh(m @ m.conj().T)
        w, v = w[::-1], v[:, ::-1]
        keep = _keep(mps, w, config.svd_threshold, GRAM_FLOOR)
        iso = v[:, :keep]
        rest = iso.conj().T @ m
    return iso, rest / np.linalg.norm(rest)


def _split_right(mps: MpsState, m: np.ndarray, config) -> tuple[np.ndarray, np.ndarray]:
    """Truncated ``m ~ rest @ iso`` with ``iso`` row-orthonormal and ``rest`` normalized."""
    iso, rest = _split_left(mps, m.T, config)
    return rest.T, iso.T


def _ring_gate_to_linear(U, p_is_lower_ring: bool):
    """Reorder a 4x4 gate from (lower ring site, upper ring site) to (p, q) factor order."""
    U = U.reshape(2, 2, 2, 2)
    if not p_is_lower_ring:
        U = U.transpose(1, 0, 3, 2)
    return U


def apply_gate(mps: MpsState, p: int, q: int, U4, rightward: bool, config: TebdConfig) -> None:
    """Apply a two-site gate on linear sites ``p < q`` (``q - p`` in {1, 2}) and re-split.

    The orthogonality centre must lie in ``[p, q]``; afterwards it sits at
    ``q - 1`` for distance-two gates and at ``q`` (rightward) or ``p`` for
    neighbouring gates.
    """
    T = mps.tensors
    if q == p + 1:
        a, b = T[p], T[q]
        Dl, Dr = a.shape[0], b.shape[2]
        th = np.tensordot(a, b, axes=(2, 0))  # (Dl, s1, s2, Dr)
        th = np.tensordot(U4, th, axes=([2, 3], [1, 2])).transpose(2, 0, 1, 3)
        m = th.reshape(Dl * 2, 2 * Dr)
        if rightward:
            iso, rest = _split_left(mps, m, config)
            T[p] = iso.reshape(Dl, 2, -1)
            T[q] = rest.reshape(-1, 2, Dr)
            mps.center = q
        else:
            rest, iso = _split_right(mps, m, config)
            T[p] = rest.reshape(Dl, 2, -1)
            T[q] = iso.reshape(-1, 2, Dr)
            mps.center = p
        return
    a, b, c = T[p], T[p + 1], T[q]
    Dl, Dr = a.shape[0], c.shape[2]
    th = np.tensordot(np.tensordot(a, b, axes=(2, 0)), c, axes=(3, 0))  # (Dl, s1, s2, s3, Dr)
    th = np.tensordot(U4, th, axes=([2, 3], [1, 3])).transpose(2, 0, 3, 1, 4)
    if rightward:
        iso, rest = _split_left(mps, th.reshape(Dl * 2, 4 * Dr), config)
        T[p] = iso.reshape(Dl, 2, -1)
        k = iso.shape[1]
        rest, iso = _split_right(mps, rest.reshape(k * 2, 2 * Dr), config)
        T[p + 1] = rest.reshape(k, 2, -1)
        T[q] = iso.reshape(-1, 2, Dr)
    else:
        rest, iso = _split_right(mps, th.reshape(Dl * 4, 2 * Dr), config)
        T[q] = iso.reshape(-1, 2, Dr)
        k = iso.shape[0]
        iso, rest = _split_left(mps, rest.reshape(Dl * 2, 2 * k), config)
        T[p] = iso.reshape(Dl, 2, -1)
        T[p + 1] = rest.reshape(-1, 2, k)
    mps.center = p + 1


class _Plan:
    def __init__(self, L: int):
        self.L = L
        self.pos = ring_to_linear(L)
        _, self.sweep = map_periodic_to_linear(L)
        self.lower_first = {}
        for p, q, bond, _ in self.sweep:
            self.lower_first[bond] = int(self.pos[bond]) == p


def trotter_slice(mps: MpsState, chain: ChainSpec, schedule: Schedule, s: float, dt: float,
                  config: TebdConfig, plan: _Plan | None = None) -> MpsState:
    """One symmetric second-order step of length ``dt`` (ns) at schedule point ``s``."""
    plan = plan or _Plan(chain.L)
    g, jc = schedule.eval(s)
    half = _gates(chain, float(g), float(jc), 0.5 * dt)
    full = None
    sweep = plan.sweep
    n_half = len(sweep) // 2
    for n, (p, q, bond, w) in enumerate(sweep):
        if w == 1.0:
            if full is None:
                full = _gates(chain, float(g), float(jc), dt)
            U = full[bond]
        else:
            U = half[bond]
        U4 = _ring_gate_to_linear(U, plan.lower_first[bond])
        apply_gate(mps, p, q, U4, rightward=n <= n_half, config=config)
    return mps


def bond_entropies(mps: MpsState) -> np.ndarray:
    """Von Neumann entropy (natural log) across every cut of the linear chain."""
    T = [t.copy() for t in mps.tensors]
    L = len(T)
    # right-canonicalize, then sweep left to right reading Schmidt values
    for p in range(L - 1, 0, -1):
        Dl = T[p].shape[0]
        q, r = np.linalg.qr(T[p].reshape(Dl, -1).T)
        T[p] = q.T.reshape(-1, 2, T[p].shape[2])
        T[p - 1] = np.tensordot(T[p - 1], r.T, axes=(2, 0))
    out = np.empty(L - 1)
    for p in range(L - 1):
        Dl, _, Dr = T[p].shape
        u, s, vh = _svd(T[p].reshape(Dl * 2, Dr))
        lam = s**2 / np.sum(s**2)
        lam = lam[lam > 1e-300]
        out[p] = float(-np.sum(lam * np.log(lam)))
        T[p] = u.reshape(Dl, 2, -1)
        T[p + 1] = np.tensordot(s[:, None] * vh, T[p + 1], axes=(1, 0))
    return out


def _right_canonical(mps: MpsState) -> list:
    T = [t.copy() for t in mps.tensors]
    for p in range(len(T) - 1, 0, -1):
        Dl = T[p].shape[0]
        q, r = np.linalg.qr(T[p].reshape(Dl, -1).T)
        T[p] = q.T.reshape(-1, 2, T[p].shape[2])
        T[p - 1] = np.tensordot(T[p - 1], r.T, axes=(2, 0))
    T[0] = T[0] / np.linalg.norm(T[0])
    return T


def _step(E, A, z: bool):
    """Push a left environment through site tensor ``A``, optionally inserting sigma_z."""
    Dl, _, Dr = A.shape
    Tm = (E @ A.reshape(Dl, 2 * Dr)).reshape(Dl, 2, Dr)
    if z:
        Tm = Tm * _Z[None, :, None]
    return A.reshape(Dl * 2, Dr).conj().T @ Tm.reshape(Dl * 2, Dr)


def zz_correlators(mps: MpsState):
    """Exact ``<z_i z_{i+1}>`` per ring bond and ``<z_i z_{i+1} z_j z_{j+1}>`` for all bond pairs."""
    L = mps.L
    T = _right_canonical(mps)
    pos = ring_to_linear(L)
    sites = [tuple(sorted((int(pos[i]), int(pos[(i + 1) % L])))) for i in range(L)]
    starts: dict[int, list[int]] = {}
    for i, (a, _) in enumerate(sites):
        starts.setdefault(a, []).append(i)
    left = [np.ones((1, 1), complex)]
    for p in range(L - 1):
        left.append(_step(left[-1], T[p], False))
    zz = np.empty(L)
    four = np.empty((L, L))
    for i, (a, b) in enumerate(sites):
        E = left[a]
        for p in range(a, b + 1):
            E = _step(E, T[p], p in (a, b))
        zz[i] = np.trace(E).real
        four[i, i] = 1.0
    order = sorted(range(L), key=lambda i: (sites[i][0], i))
    rank = {i: n for n, i in enumerate(order)}
    for i in order:
        a, b = sites[i]
        zi = {a, b}
        M = left[a]
        for p in range(a, L):
            for j in starts.get(p, ()):
                if rank[j] <= rank[i]:
                    continue
                zj = set(sites[j])
                E = M
                for qq in range(p, max(b, sites[j][1]) + 1):
                    E = _step(E, T[qq], (qq in zi) != (qq in zj))
                four[i, j] = four[j, i] = np.trace(E).real
            M = _step(M, T[p], p in zi)
    return zz, four


def kink_stats_tebd(mps: MpsState, chain: ChainSpec):
    """Kink density and ``C_r`` (indexed by ``r = 0..L-1``) from exact MPS expectation values."""
    zz, four = zz_correlators(mps)
    sg = chain.sign
    L = chain.L
    K = 0.5 * (1.0 + sg * zz)
    n_bar = float(K.mean())
    KK = 0.25 * (1.0 + sg * zz[:, None] + sg * zz[None, :] + four)
    i = np.arange(L)
    kk = np.array([KK[i, (i + r) % L].mean() for r in range(L)])
    kk[0] = n_bar
    return n_bar, (kk - n_bar**2) / n_bar**2, zz


@dataclass
class TebdResult:
    mps: MpsState
    n_bar: float
    ckk: np.ndarray
    zz: np.ndarray
    n_slices: int
    dt: float
    entropies: np.ndarray = field(default=None, repr=False)

    @property
    def discarded(self) -> float:
        return self.mps.discarded


def run_tebd(chain: ChainSpec, schedule: Schedule, t_a: float, config: TebdConfig = TebdConfig(),
             observables: bool = True) -> TebdResult:
    """Evolve from all spins along +x over the full schedule.

    The number of slices is ``ceil(t_a (s_end - s_start) / dt)``; the step is
    shrunk so the slices tile the anneal exactly. Each slice evaluates the
    schedule at its midpoint.
    """
    if t_a <= 0:
        raise ValueError("anneal time must be positive")
    L = chain.L
    s0, s1 = schedule.s_start, schedule.s_end
    duration = t_a * (s1 - s0)
    n = max(1, int(np.ceil(duration / config.dt - 1e-9)))
    dt = duration / n
    plan = _Plan(L)
    mps = MpsState.product_plus(L, config.D)
    for l in range(n):
        s = s0 + (l + 0.5) * (s1 - s0) / n
        trotter_slice(mps, chain, schedule, s, dt, config, plan)
    ent = bond_entropies(mps)
    if observables:
        n_bar, ckk, zz = kink_stats_tebd(mps, chain)
    else:
        n_bar, ckk, zz = float("nan"), None, None
    return TebdResult(mps, n_bar, ckk, zz, n, dt, ent)
