"""Exact dynamics of the uniform periodic chain, one two-level problem per momentum.

Each positive momentum ``k`` of the anti-periodic sector carries a pair of
fermions ``(k, -k)`` whose amplitudes obey a two-level Schrodinger equation
with Hamiltonian (GHz)

    H_k(s) = 2 [Jcal(s)|J| cos k - Gamma(s)] tau_z + 2 Jcal(s)|J| sin k tau_x.

All modes are integrated at once with a fourth-order Magnus scheme that
uses the closed-form SU(2) exponential, so the evolution is unitary to
round-off.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .schedule import Schedule

TWO_PI = 2.0 * np.pi
_GAUSS = (0.5 - np.sqrt(3.0) / 6.0, 0.5 + np.sqrt(3.0) / 6.0)
_COMM = 2.0 * np.sqrt(3.0) / 3.0 * np.pi**2

DEFAULT_STEPS = 4000
MAX_STEPS = 2**20


class ConvergenceError(RuntimeError):
    pass


@dataclass(frozen=True)
class ModeSpectrumResult:
    k: np.ndarray
    p: np.ndarray
    L: int
    n_steps: int = 0
    norm_error: float = 0.0

    @property
    def density(self) -> float:
        return float(2.0 / self.L * np.sum(self.p))

    @property
    def cumulants(self) -> tuple[float, float, float]:
        p, L = self.p, self.L
        k1 = 2.0 / L * np.sum(p)
        k2 = 4.0 / L**2 * np.sum(p * (1 - p))
        k3 = 8.0 / L**3 * np.sum(p * (1 - p) * (1 - 2 * p))
        return float(k1), float(k2), float(k3)

    @property
    def pgs(self) -> float:
        return float(np.prod(1.0 - self.p))


def modes(L: int) -> np.ndarray:
    """Positive anti-periodic momenta ``(2m-1) pi / L`` for ``m = 1..L/2``."""
    if L < 2 or L % 2:
        raise ValueError(f"L must be even and >= 2, got {L}")
    m = np.arange(1, L // 2 + 1)
    return (2 * m - 1) * np.pi / L


def _field(schedule: Schedule, J: float, s, k):
    """Pauli-vector components (h_x, h_z) of H_k(s) in GHz."""
    g, jc = schedule.eval(s)
    e = jc * abs(J)
    return 2.0 * e * np.sin(k), 2.0 * (e * np.cos(k) - g)


def _half_angles(hx, hz):
    theta = np.arctan2(hx, hz)
    return np.cos(0.5 * theta), np.sin(0.5 * theta)


def initial_amplitudes(schedule: Schedule, J: float, k):
    """Ground state of H_k at the start of the schedule, as (up, down) amplitudes."""
    k = np.asarray(k, dtype=float)
    hx, hz = _field(schedule, J, schedule.s_start, k)
    c, s = _half_angles(hx, hz)
    return s.astype(complex), (-c).astype(complex)


def excitation_probability(schedule: Schedule, J: float, k, a, b, s=None):
    """Population of the upper instantaneous level at schedule point ``s``."""
    s = schedule.s_end if s is None else s
    hx, hz = _field(schedule, J, s, np.asarray(k, dtype=float))
    c, sn = _half_angles(hx, hz)
    return np.abs(c * a + sn * b) ** 2


CHUNK_ELEMS = 1 << 19  # (step, mode) pairs held in memory at once


def _step_unitaries(schedule: Schedule, J: float, t_a: float, k, s0: float, ds: float, n0: int, n1: int):
    """Magnus propagators of steps ``n0..n1-1`` as an array of shape (steps, modes, 2, 2)."""
    n = np.arange(n0, n1, dtype=float)
    dt = t_a * ds
    x1, z1 = _field(schedule, J, (s0 + (n + _GAUSS[0]) * ds)[:, None], k[None, :])
    x2, z2 = _field(schedule, J, (s0 + (n + _GAUSS[1]) * ds)[:, None], k[None, :])
    ax = np.pi * dt * (x1 + x2)
    az = np.pi * dt * (z1 + z2)
    ay = _COMM * dt * dt * (z2 * x1 - x2 * z1)
    norm = np.sqrt(ax * ax + ay * ay + az * az)
    c = np.cos(norm)
    sinc = np.sinc(norm / np.pi)
    # exp(-i a.sigma) = cos|a| - i sin|a| (a/|a|).sigma
    U = np.empty(norm.shape + (2, 2), dtype=complex)
    U[..., 0, 0] = c - 1j * sinc * az
    U[..., 0, 1] = -1j * sinc * ax - sinc * ay
    U[..., 1, 0] = -1j * sinc * ax + sinc * ay
    U[..., 1, 1] = c + 1j * sinc * az
    return U


def _ordered_product(U: np.ndarray) -> np.ndarray:
    """``U[m-1] @ ... @ U[1] @ U[0]`` by pairwise reduction along the first axis."""
    while U.shape[0] > 1:
        last = U[-1:] if U.shape[0] % 2 else None
        even = U[: U.shape[0] - (last is not None)]
        U = even[1::2] @ even[0::2]
        if last is not None:
            U = np.concatenate([U, last])
    return U[0]


def _propagate(schedule: Schedule, J: float, t_a: float, k, n_steps: int):
    s0, s1 = schedule.s_start, schedule.s_end
    a, b = initial_amplitudes(schedule, J, k)
    psi = np.stack([a, b], axis=-1)[..., None]
    ds = (s1 - s0) / n_steps
    chunk = max(1, CHUNK_ELEMS // max(1, k.size))
    worst = 0.0
    for n0 in range(0, n_steps, chunk):
        n1 = min(n_steps, n0 + chunk)
        psi = _ordered_product(_step_unitaries(schedule, J, t_a, k, s0, ds, n0, n1)) @ psi
        worst = max(worst, float(np.max(np.abs(np.sum(np.abs(psi) ** 2, axis=(-2, -1)) - 1.0))))
    return psi[:, 0, 0], psi[:, 1, 0], worst


def evolve_modes(schedule: Schedule, J: float, t_a: float, k, n_steps: int | None = None,
                 tol: float = 1e-9) -> ModeSpectrumResult:
    """Excitation probabilities ``p_k`` after an anneal of duration ``t_a`` (ns).

    With ``n_steps=None`` the step count starts at ``DEFAULT_STEPS`` and is
    doubled until the largest change of any ``p_k`` drops below ``tol``.
    """
    if t_a <= 0:
        raise ValueError("anneal time must be positive")
    k = np.atleast_1d(np.asarray(k, dtype=float))
    L = 0
    if n_steps is not None:
        a, b, worst = _propagate(schedule, J, t_a, k, n_steps)
        p = excitation_probability(schedule, J, k, a, b)
        return ModeSpectrumResult(k, p, L, n_steps, worst)
    n = DEFAULT_STEPS
    delta = np.inf
    a, b, worst = _propagate(schedule, J, t_a, k, n)
    p_old = excitation_probability(schedule, J, k, a, b)
    while True:
        n *= 2
        if n > MAX_STEPS:
            raise ConvergenceError(
                f"p_k not converged to {tol} with {n // 2} steps (t_a={t_a}, last change {delta:.3e})"
            )
        a, b, w = _propagate(schedule, J, t_a, k, n)
        worst = max(worst, w)
        p = excitation_probability(schedule, J, k, a, b)
        delta = float(np.max(np.abs(p - p_old)))
        if delta < tol:
            return ModeSpectrumResult(k, p, L, n, worst)
        p_old = p


def evolve_mode(schedule: Schedule, J: float, t_a: float, k: float, n_steps: int | None = None) -> float:
    return float(evolve_modes(schedule, J, t_a, [k], n_steps=n_steps).p[0])


def mode_spectrum(schedule: Schedule, J: float, t_a: float, L: int, n_steps: int | None = None) -> ModeSpectrumResult:
    res = evolve_modes(schedule, J, t_a, modes(L), n_steps=n_steps)
    return ModeSpectrumResult(res.k, res.p, L, res.n_steps, res.norm_error)


def kink_density_modes(schedule: Schedule, J: float, t_a: float, L: int, n_steps: int | None = None) -> float:
    return mode_spectrum(schedule, J, t_a, L, n_steps).density


def cumulants_modes(schedule: Schedule, J: float, t_a: float, L: int, n_steps: int | None = None):
    """First three cumulants of the kink density ``n = N/L``.

    Kinks are created in independent ``(k, -k)`` pairs, so ``N`` is twice a
    sum of independent Bernoulli(p_k) variables.
    """
    return mode_spectrum(schedule, J, t_a, L, n_steps).cumulants


def pgs_modes(schedule: Schedule, J: float, t_a: float, L: int, n_steps: int | None = None) -> float:
    return mode_spectrum(schedule, J, t_a, L, n_steps).pgs


def sudden_quench(schedule: Schedule, J: float, k) -> np.ndarray:
    """``p_k`` for ``t_a -> 0``: the initial ground state projected on the final levels."""
    a, b = initial_amplitudes(schedule, J, k)
    return excitation_probability(schedule, J, k, a, b)
