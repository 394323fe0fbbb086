"""Classical annealing baselines: simulated annealing and spin-vector Monte Carlo.

Both samplers consume pre-generated Philox random numbers in blocks whose
size depends only on the request, so a request (including its seed) maps to
exactly one ``SampleSet``.
"""
from __future__ import annotations

from dataclasses import dataclass, field, replace

import numba
import numpy as np

from .chain import ChainSpec
from .samples import SampleSet
from .schedule import Schedule

BLOCK_BUDGET = 1 << 20  # random numbers per block (per array)


@dataclass(frozen=True)
class SamplerRequest:
    """What to sample.

    ``beta`` is a ``(start, end)`` pair for a geometric schedule or a single
    value for a constant one. ``flux`` shifts the longitudinal fields as
    ``h_i - flux_gain * flux_i``; ``offsets`` shift each site's schedule
    position (clamped to the schedule range). ``couplings`` optionally
    replaces the chain's bonds.
    """

    chain: ChainSpec
    n_samples: int = 100
    sweeps: int = 1000
    beta: float | tuple = (0.1, 100.0)
    seed: int = 0
    batch_size: int = 100
    flux: np.ndarray | None = None
    offsets: np.ndarray | None = None
    flux_gain: float = 1.0

    def __post_init__(self):
        if self.n_samples < 1:
            raise ValueError("n_samples must be >= 1")
        if self.sweeps < 1:
            raise ValueError("sweeps must be >= 1")
        if self.batch_size < 1:
            raise ValueError("batch_size must be >= 1")

    def fields(self) -> np.ndarray:
        h = np.array(self.chain.fields, dtype=float)
        if self.flux is not None:
            h = h - self.flux_gain * np.asarray(self.flux, dtype=float)
        return h

    def progress(self) -> np.ndarray:
        """Per-(sweep, site) annealing progress in [0, 1] (sweep midpoints plus offsets)."""
        x = (np.arange(self.sweeps) + 0.5) / self.sweeps
        off = np.zeros(self.chain.L) if self.offsets is None else np.asarray(self.offsets, float)
        return np.clip(x[:, None] + off[None, :], 0.0, 1.0)

    def with_seed(self, seed: int) -> "SamplerRequest":
        return replace(self, seed=seed)


def beta_schedule(beta, progress: np.ndarray) -> np.ndarray:
    if np.ndim(beta) == 0:
        return np.full_like(progress, float(beta))
    b0, b1 = (float(x) for x in beta)
    if b0 <= 0 or b1 <= 0:
        raise ValueError("inverse temperatures must be positive")
    return b0 * (b1 / b0) ** progress


def _generator(seed: int) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(int(seed))))


def _blocks(req: SamplerRequest):
    per = req.sweeps * req.chain.L
    size = max(1, BLOCK_BUDGET // per)
    done = 0
    while done < req.n_samples:
        n = min(size, req.n_samples - done)
        yield done, n
        done += n


def _split(arr: np.ndarray, batch: int) -> list:
    return [arr[i:i + batch] for i in range(0, arr.shape[0], batch)]


@numba.njit(cache=True)
def _sa_kernel(out, J, h, betas, init, order, u):
    n, L = out.shape
    sweeps = betas.shape[0]
    for a in range(n):
        z = init[a].copy()
        for k in range(sweeps):
            for t in range(L):
                i = order[a, k, t]
                im = i - 1 if i > 0 else L - 1
                ip = i + 1 if i < L - 1 else 0
                dE = -2.0 * z[i] * (J[im] * z[im] + J[i] * z[ip] + h[i])
                if dE <= 0.0 or u[a, k, t] < np.exp(-betas[k, i] * dE):
                    z[i] = -z[i]
        out[a] = z


def run_sa(req: SamplerRequest) -> SampleSet:
    """Single-spin Metropolis annealing with a fresh random site order every sweep.

    Energy ``sum_i J_i z_i z_{i+1} + sum_i h_i z_i``; random initial spins.
    """
    L = req.chain.L
    J = np.array(req.chain.couplings, dtype=float)
    h = req.fields()
    betas = beta_schedule(req.beta, req.progress())
    rng = _generator(req.seed)
    out = np.empty((req.n_samples, L), dtype=np.int8)
    for start, n in _blocks(req):
        init = (2 * rng.integers(0, 2, size=(n, L)) - 1).astype(np.int8)
        order = np.argsort(rng.random((n, req.sweeps, L)), axis=2)
        u = rng.random((n, req.sweeps, L))
        _sa_kernel(out[start:start + n], J, h, betas, init, order, u)
    meta = {"sampler": "sa", "seed": req.seed, "sweeps": req.sweeps, "beta": _jsonable(req.beta),
            "n_samples": req.n_samples, "J_nominal": req.chain.J_nominal}
    return SampleSet(_split(out, req.batch_size), meta)


@numba.njit(cache=True)
def _svmc_kernel(out, J, h, gam, jc, win, betas, order, u_prop, u_acc, theta0):
    n, L = out.shape
    sweeps = gam.shape[0]
    th = np.empty(L)
    for a in range(n):
        for i in range(L):
            th[i] = theta0[i]
        for k in range(sweeps):
            for t in range(L):
                i = order[a, k, t]
                w = win[k, i]
                if w <= 0.0:
                    continue
                im = i - 1 if i > 0 else L - 1
                ip = i + 1 if i < L - 1 else 0
                new = th[i] + w * (2.0 * u_prop[a, k, t] - 1.0)
                if new < 0.0:
                    new = -new
                elif new > np.pi:
                    new = 2.0 * np.pi - new
                dsin = np.sin(new) - np.sin(th[i])
                dcos = np.cos(new) - np.cos(th[i])
                jl = 0.5 * (jc[k, im] + jc[k, i])
                jr = 0.5 * (jc[k, i] + jc[k, ip])
                dE = (-gam[k, i] * dsin
                      + dcos * (jl * J[im] * np.cos(th[im]) + jr * J[i] * np.cos(th[ip]) + jc[k, i] * h[i]))
                if dE <= 0.0 or u_acc[a, k, t] < np.exp(-betas[k, i] * dE):
                    th[i] = new
        for i in range(L):
            out[a, i] = 1 if np.cos(th[i]) >= 0.0 else -1


def svmc_energy_scale(schedule: Schedule, J: float) -> float:
    """Energy at the crossing ``Gamma(s_c) = Jcal(s_c)|J|``; SVMC energies are divided by it."""
    from .schedule import critical_point

    g, _ = schedule.eval(critical_point(schedule, J))
    return float(g)


def svmc_arrays(req: SamplerRequest, schedule: Schedule):
    """Normalized ``Gamma``, ``Jcal`` and proposal half-width per (sweep, site)."""
    J = req.chain.J_nominal
    scale = svmc_energy_scale(schedule, J)
    s0, s1 = schedule.s_start, schedule.s_end
    s = s0 + req.progress() * (s1 - s0)
    g, jc = schedule.eval(s)
    g = np.asarray(g, float) / scale
    jc = np.asarray(jc, float) / scale
    with np.errstate(divide="ignore", invalid="ignore"):
        ratio = np.where(jc > 0, g / (jc * abs(J)), np.inf)
    win = np.pi * np.minimum(1.0, ratio)
    return g, jc, win


def run_svmc_tf(req: SamplerRequest, schedule: Schedule, beta: float | None = None) -> SampleSet:
    """Spin-vector Monte Carlo with transverse-field-limited angle proposals.

    Rotors start along +x (``theta = pi/2``). Proposals are uniform in
    ``[theta - w, theta + w]`` and reflected at ``0`` and ``pi``, which keeps
    the proposal symmetric. Readout is ``sign(cos theta)``. ``beta``
    overrides ``req.beta`` (default 32 when the request carries a range).
    """
    L = req.chain.L
    if beta is None:
        beta = req.beta if np.ndim(req.beta) == 0 else 32.0
    J = np.array(req.chain.couplings, dtype=float)
    h = req.fields()
    g, jc, win = svmc_arrays(req, schedule)
    betas = beta_schedule(beta, req.progress())
    rng = _generator(req.seed)
    out = np.empty((req.n_samples, L), dtype=np.int8)
    theta0 = np.full(L, 0.5 * np.pi)
    for start, n in _blocks(req):
        order = np.argsort(rng.random((n, req.sweeps, L)), axis=2)
        up = rng.random((n, req.sweeps, L))
        ua = rng.random((n, req.sweeps, L))
        _svmc_kernel(out[start:start + n], J, h, g, jc, win, betas, order, up, ua, theta0)
    meta = {"sampler": "svmc-tf", "seed": req.seed, "sweeps": req.sweeps, "beta": float(beta),
            "n_samples": req.n_samples, "J_nominal": req.chain.J_nominal, "schedule": schedule.to_config()}
    return SampleSet(_split(out, req.batch_size), meta)


@numba.njit(cache=True)
def _svmc_fixed_kernel(th, J, h, gam, jc, w, beta, order, u_prop, u_acc, record, thin):
    L = th.shape[0]
    n_sweeps = order.shape[0]
    n_rec = 0
    for k in range(n_sweeps):
        for t in range(L):
            i = order[k, t]
            im = i - 1 if i > 0 else L - 1
            ip = i + 1 if i < L - 1 else 0
            new = th[i] + w * (2.0 * u_prop[k, t] - 1.0)
            if new < 0.0:
                new = -new
            elif new > np.pi:
                new = 2.0 * np.pi - new
            dE = (-gam * (np.sin(new) - np.sin(th[i]))
                  + jc * (np.cos(new) - np.cos(th[i])) * (J[im] * np.cos(th[im]) + J[i] * np.cos(th[ip]) + h[i]))
            if dE <= 0.0 or u_acc[k, t] < np.exp(-beta * dE):
                th[i] = new
        if (k + 1) % thin == 0:
            for i in range(L):
                record[n_rec, i] = th[i]
            n_rec += 1


def svmc_equilibrium_angles(chain: ChainSpec, gamma: float, jcal: float, beta: float, n_sweeps: int,
                            seed: int = 0, thin: int = 1, burn: int = 1000) -> np.ndarray:
    """Rotor angles from a fixed-parameter SVMC chain (for detailed-balance checks).

    ``gamma`` and ``jcal`` are already normalized energies.
    """
    L = chain.L
    J = np.array(chain.couplings, float)
    h = np.array(chain.fields, float)
    w = np.pi * min(1.0, gamma / (jcal * abs(chain.J_nominal))) if jcal > 0 else np.pi
    rng = _generator(seed)
    th = np.full(L, 0.5 * np.pi)
    chunk = max(thin, (BLOCK_BUDGET // L) // thin * thin)
    total = burn + n_sweeps
    rows = []
    done = 0
    while done < total:
        m = min(chunk, total - done)
        order = np.argsort(rng.random((m, L)), axis=1)
        up = rng.random((m, L))
        ua = rng.random((m, L))
        rec = np.empty((m // thin + 1, L))
        _svmc_fixed_kernel(th, J, h, gamma, jcal, w, beta, order, up, ua, rec, thin)
        rows.append(rec[: m // thin])
        done += m
    allrec = np.concatenate(rows)
    return allrec[burn // thin:]


def _jsonable(x):
    return [float(v) for v in x] if np.ndim(x) else float(x)
