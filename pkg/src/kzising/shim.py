"""Iterative calibration refinement: flux biases, coupler tuning and anneal offsets.

Any callable ``sampler(flux, couplings, site_offsets, n_samples, seed)``
returning a :class:`SampleSet` (or a ``(n, L)`` array of ±1) can be shimmed.
Adapters for the Monte Carlo samplers and a synthetic "freeze-out" device
with hidden miscalibration are provided.
"""
from __future__ import annotations

import csv
from dataclasses import dataclass, field, replace

import numpy as np

from .chain import ChainSpec
from .samplers import SamplerRequest, run_sa, run_svmc_tf
from .samples import SampleSet
from .schedule import Schedule


def assign_lines(L: int, n_lines: int = 4) -> np.ndarray:
    """Annealing line of every site such that ring neighbours never share a line.

    Cyclic ``i mod n_lines`` when it tiles the ring; otherwise even sites use
    lines ``0, 2, ...`` and odd sites ``1, 3, ...`` in turn.
    """
    if L < 2 or L % 2:
        raise ValueError("L must be even")
    if n_lines < 2 or n_lines % 2:
        raise ValueError("n_lines must be even and >= 2")
    i = np.arange(L)
    if L % n_lines == 0:
        return i % n_lines
    half = n_lines // 2
    return 2 * ((i // 2) % half) + (i % 2)


@dataclass(frozen=True)
class ShimConfig:
    alpha_flux: float = 5e-6
    alpha_J: float = 0.2
    alpha_offset: float = 0.02
    delta_J: float = 0.02
    delta_offset: float = 0.002
    n_lines: int = 4
    batch_size: int = 100
    offset_clamp: float = 0.05
    coupling_clamp: float = 0.5  # max |J_ij - J| allowed

    def __post_init__(self):
        for name in ("alpha_flux", "alpha_J", "alpha_offset", "delta_J", "delta_offset"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be non-negative")
        if self.delta_J > 1 or self.delta_offset > 1:
            raise ValueError("damping constants must be <= 1")

    @classmethod
    def from_config(cls, cfg: dict) -> "ShimConfig":
        known = {f for f in cls.__dataclass_fields__}
        bad = set(cfg) - known
        if bad:
            raise ValueError(f"unknown shim keys {sorted(bad)}")
        return cls(**cfg)


@dataclass(frozen=True)
class IterationStats:
    m: np.ndarray
    f: np.ndarray
    F: np.ndarray
    n_bar: float


@dataclass
class ShimState:
    J_nominal: float
    flux: np.ndarray
    couplings: np.ndarray
    offsets: np.ndarray  # per line
    lines: np.ndarray
    history: list = field(default_factory=list)

    @classmethod
    def initial(cls, L: int, J: float, n_lines: int = 4) -> "ShimState":
        return cls(J, np.zeros(L), np.full(L, float(J)), np.zeros(n_lines), assign_lines(L, n_lines))

    @property
    def L(self) -> int:
        return self.flux.size

    def site_offsets(self) -> np.ndarray:
        return self.offsets[self.lines]

    def copy(self) -> "ShimState":
        return ShimState(self.J_nominal, self.flux.copy(), self.couplings.copy(), self.offsets.copy(),
                         self.lines.copy(), list(self.history))


def chain_statistics(spins: np.ndarray, J_sign: int, lines: np.ndarray, n_lines: int) -> IterationStats:
    """Magnetizations, bond frustrations, per-line frustrations and the mean frustration."""
    z = np.asarray(spins, dtype=float)
    m = z.mean(axis=0)
    c = np.mean(z * np.roll(z, -1, axis=1), axis=0)
    f = (np.sign(J_sign) * c + 1.0) / 2.0
    return IterationStats(m, f, line_frustration(f, lines, n_lines), float(f.mean()))


def line_frustration(f: np.ndarray, lines: np.ndarray, n_lines: int) -> np.ndarray:
    """Mean frustration of the bonds with at least one end on each line."""
    L = f.size
    a, b = lines, np.roll(lines, -1)  # lines of the two ends of bond i
    F = np.full(n_lines, np.nan)
    for ell in range(n_lines):
        sel = (a == ell) | (b == ell)
        if np.any(sel):
            F[ell] = f[sel].mean()
    return F


def _spins(result) -> np.ndarray:
    return result.all() if isinstance(result, SampleSet) else np.asarray(result)


def iteration_seed(seed: int, iteration: int) -> int:
    return int(np.random.SeedSequence(int(seed), spawn_key=(int(iteration),)).generate_state(1)[0])


def shim_iteration(sampler, state: ShimState, config: ShimConfig, seed: int = 0) -> ShimState:
    """Draw one batch, apply the three update rules, then damping."""
    sign = 1 if state.J_nominal > 0 else -1
    spins = _spins(sampler(state.flux, state.couplings, state.site_offsets(), config.batch_size, seed))
    st = chain_statistics(spins, sign, state.lines, state.offsets.size)
    new = state.copy()
    new.flux = state.flux - config.alpha_flux * st.m
    # |J_ij| grows when the bond is frustrated more than average; J_ij itself for J > 0
    J = state.couplings + sign * config.alpha_J * (st.f - st.n_bar)
    J = (1.0 - config.delta_J) * J + config.delta_J * state.J_nominal
    lo = state.J_nominal - config.coupling_clamp
    hi = state.J_nominal + config.coupling_clamp
    new.couplings = np.clip(J, lo, hi)
    F = np.where(np.isnan(st.F), st.n_bar, st.F)
    O = state.offsets + config.alpha_offset * (F - st.n_bar)
    O = (1.0 - config.delta_offset) * O
    new.offsets = np.clip(O, -config.offset_clamp, config.offset_clamp)
    new.history.append(st)
    return new


STAGED = ((100, (0, 0, 0)), (300, (1, 0, 0)), (400, (1, 1, 0)), (400, (1, 1, 1)))


def staged_configs(config: ShimConfig):
    """The illustrative staged protocol: nothing, +flux, +couplers, +offsets (100/300/400/400)."""
    for n, (a, b, c) in STAGED:
        yield n, replace(
            config,
            alpha_flux=config.alpha_flux * a,
            alpha_J=config.alpha_J * b, delta_J=config.delta_J * b,
            alpha_offset=config.alpha_offset * c, delta_offset=config.delta_offset * c,
        )


@dataclass
class ShimReport:
    state: ShimState
    std_m_before: float
    std_m_after: float
    std_f_before: float
    std_f_after: float

    def rows(self):
        for t, st in enumerate(self.state.history):
            yield [t, float(np.std(st.m)), float(np.std(st.f)), st.n_bar, *[float(x) for x in st.F]]

    def write_csv(self, path) -> None:
        n_lines = self.state.offsets.size
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["iteration", "std_m", "std_f", "n_bar"] + [f"F_{l}" for l in range(n_lines)])
            for row in self.rows():
                w.writerow([row[0]] + [f"{x:.17g}" for x in row[1:]])


def run_shim(sampler, config: ShimConfig, n_iterations: int, L: int | None = None, J: float | None = None,
             state: ShimState | None = None, seed: int = 0, staged: bool = False) -> ShimReport:
    """Iterate :func:`shim_iteration` and report the spread of ``m_i`` and ``f_ij``.

    With ``staged=True`` the canned 100/300/400/400 protocol is run instead of
    ``n_iterations`` all-on iterations.
    """
    if state is None:
        if L is None or J is None:
            raise ValueError("need either an initial state or L and J")
        state = ShimState.initial(L, J, config.n_lines)
    plan = list(staged_configs(config)) if staged else [(n_iterations, config)]
    t = len(state.history)
    for n, cfg in plan:
        for _ in range(n):
            state = shim_iteration(sampler, state, cfg, iteration_seed(seed, t))
            t += 1
    hist = state.history
    if not hist:
        return ShimReport(state, np.nan, np.nan, np.nan, np.nan)
    return ShimReport(state, float(np.std(hist[0].m)), float(np.std(hist[-1].m)),
                      float(np.std(hist[0].f)), float(np.std(hist[-1].f)))


# ---------------------------------------------------------------------------
# sampler adapters


@dataclass
class MonteCarloShimSampler:
    """Wraps ``run_sa`` / ``run_svmc_tf``; the shim's couplings replace the chain's bonds."""

    request: SamplerRequest
    method: str = "sa"
    schedule: Schedule | None = None

    def __call__(self, flux, couplings, site_offsets, n_samples, seed):
        chain = self.request.chain.with_params(couplings=couplings)
        req = replace(self.request, chain=chain, flux=flux, offsets=site_offsets, n_samples=n_samples,
                      seed=seed, batch_size=n_samples)
        if self.method == "sa":
            return run_sa(req)
        return run_svmc_tf(req, self.schedule)


class FreezeOutSampler:
    """Synthetic device: exact Gibbs samples of a periodic Ising ring frozen at ``beta_f``.

    A nominal bond freezes with kink probability ``n0``. Hidden Gaussian
    miscalibration (``sigma``) is added to every coupler and as a bias field on
    every site, and each annealing line carries a hidden schedule delay.
    The effective bond strength is

        b_ij = c0 + gain_J (|J_ij + dJ_ij| - |J|) + gain_O (o_i + o_j)

    with ``o_i = O_i - delay_line(i)``, and the frozen distribution is
    ``exp(-beta_f [sum sign(J) b_ij z_i z_j + sum (dh_i - flux_gain Phi_i) z_i])``.
    """

    def __init__(self, L: int, J: float, sigma: float = 0.05, n0: float = 0.1, beta_f: float = 10.0,
                 gain_J: float = 1.0, gain_O: float = 0.5, delay_scale: float = 0.01,
                 flux_gain: float = 1.0, n_lines: int = 4, seed: int = 0):
        self.L, self.J, self.sign = L, float(J), (1 if J > 0 else -1)
        self.beta_f = beta_f
        self.c0 = np.log((1.0 - n0) / n0) / (2.0 * beta_f)
        self.gain_J, self.gain_O, self.flux_gain = gain_J, gain_O, flux_gain
        rng = np.random.Generator(np.random.Philox(np.random.SeedSequence(int(seed), spawn_key=(0xD15,))))
        self.dJ = rng.normal(0.0, sigma, L)
        self.dh = rng.normal(0.0, sigma, L)
        self.lines = assign_lines(L, n_lines)
        self.delays = rng.normal(0.0, delay_scale, n_lines)

    def _params(self, flux, couplings, site_offsets):
        o = np.asarray(site_offsets, float) - self.delays[self.lines]
        b = (self.c0 + self.gain_J * (np.abs(np.asarray(couplings, float) + self.dJ) - abs(self.J))
             + self.gain_O * (o + np.roll(o, -1)))
        h = self.dh - self.flux_gain * np.asarray(flux, float)
        return self.sign * b, h

    def _transfer(self, K, h):
        """``T_i[a, b] = exp(-beta_f (K_i z_a z_b + h_i z_a))`` with z = (+1, -1)."""
        z = np.array([1.0, -1.0])
        return np.exp(-self.beta_f * (K[:, None, None] * z[None, :, None] * z[None, None, :]
                                      + h[:, None, None] * z[None, :, None]))

    def exact_stats(self, flux, couplings, site_offsets) -> IterationStats:
        """Exact ``m_i``, ``f_ij`` of the frozen distribution via transfer matrices."""
        K, h = self._params(flux, couplings, site_offsets)
        T = self._transfer(K, h)
        L = self.L
        Zd = np.diag([1.0, -1.0])
        pre = [np.eye(2)]
        for i in range(L):
            M = pre[-1] @ T[i]
            pre.append(M / np.abs(M).max())
        suf = [np.eye(2)] * (L + 1)
        for i in range(L - 1, -1, -1):
            M = T[i] @ suf[i + 1]
            suf[i] = M / np.abs(M).max()
        m = np.empty(L)
        c = np.empty(L)
        for i in range(L):
            base = pre[i] @ T[i] @ suf[i + 1]
            Zn = np.trace(base)
            m[i] = np.trace(pre[i] @ Zd @ T[i] @ suf[i + 1]) / Zn
            j = (i + 1) % L
            if j > i:
                num = pre[i] @ Zd @ T[i] @ Zd @ suf[i + 1]
            else:  # wrap bond: z_{L-1} z_0
                num = Zd @ pre[i] @ Zd @ T[i] @ suf[i + 1]
            c[i] = np.trace(num) / Zn
        f = (self.sign * c + 1.0) / 2.0
        return IterationStats(m, f, line_frustration(f, self.lines, self.delays.size), float(f.mean()))

    def sample(self, flux, couplings, site_offsets, n_samples: int, seed: int) -> np.ndarray:
        K, h = self._params(flux, couplings, site_offsets)
        T = self._transfer(K, h)
        L = self.L
        # R[i] = T_i T_{i+1} ... T_{L-1} (normalized), R[L] = I
        R = [None] * (L + 1)
        R[L] = np.eye(2)
        for i in range(L - 1, -1, -1):
            M = T[i] @ R[i + 1]
            R[i] = M / M.max()
        rng = np.random.Generator(np.random.Philox(np.random.SeedSequence(int(seed))))
        u = rng.random((n_samples, L))
        p0 = np.diag(R[0]) / np.trace(R[0])
        z = np.empty((n_samples, L), dtype=np.int8)
        idx = (u[:, 0] >= p0[0]).astype(int)  # 0 -> +1, 1 -> -1
        first = idx.copy()
        z[:, 0] = 1 - 2 * idx
        for i in range(1, L):
            w = T[i - 1][idx, :] * R[i][:, first].T  # (n, 2)
            p_up = w[:, 0] / w.sum(axis=1)
            idx = (u[:, i] >= p_up).astype(int)
            z[:, i] = 1 - 2 * idx
        return z

    def __call__(self, flux, couplings, site_offsets, n_samples, seed):
        return self.sample(flux, couplings, site_offsets, n_samples, seed)
