"""Annealing schedules Gamma(s), Jcal(s) and the Kibble-Zurek constant b.

Energies are ordinary frequencies in GHz (E/h) and times are in ns, so an
energy divided by hbar becomes ``2*pi*E_GHz`` in rad/ns.
"""
from __future__ import annotations

import csv
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

TWO_PI = 2.0 * np.pi

KINDS = ("tabulated", "linear", "quadratic")


class ScheduleError(ValueError):
    pass


class ScheduleRangeError(ScheduleError):
    """Raised when ``s`` falls outside the tabulated range."""


class NoCriticalPointError(ScheduleError):
    pass


@dataclass(frozen=True)
class KZConstants:
    s_c: float
    b: float  # 1/ns

    def tau_q(self, t_a: float) -> float:
        return self.b * t_a


@dataclass(frozen=True)
class Schedule:
    """Annealing schedule.

    For the analytic kinds ``beta_ghz`` sets the energy scale and ``J`` is the
    coupling magnitude the schedule is normalized to, so that
    ``Jcal(s) * |J|`` follows the closed form (``beta*s`` or ``4*beta*s**2``).
    Tabulated schedules carry explicit ``(s, gamma_ghz, jcal_ghz)`` knots.
    """

    kind: str
    s: np.ndarray = field(default=None, repr=False)
    gamma: np.ndarray = field(default=None, repr=False)
    jcal: np.ndarray = field(default=None, repr=False)
    beta_ghz: float = 1.0
    J: float = 1.0

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ScheduleError(f"unknown schedule kind {self.kind!r}")
        if self.kind == "tabulated":
            s = np.asarray(self.s, dtype=float)
            g = np.asarray(self.gamma, dtype=float)
            j = np.asarray(self.jcal, dtype=float)
            if not (s.ndim == 1 and s.shape == g.shape == j.shape and s.size >= 2):
                raise ScheduleError("tabulated schedule needs >= 2 aligned knots")
            if np.any(np.diff(s) <= 0):
                raise ScheduleError("s knots must be strictly increasing")
            if s[0] < 0 or s[-1] > 1:
                raise ScheduleError("s knots must lie in [0, 1]")
            if np.any(g < 0) or np.any(j < 0):
                raise ScheduleError("schedule energies must be non-negative")
            if np.any(np.diff(g) > 0) or np.any(np.diff(j) < 0):
                raise ScheduleError("Gamma must be non-increasing and Jcal non-decreasing")
            for name, arr in (("s", s), ("gamma", g), ("jcal", j)):
                arr.setflags(write=False)
                object.__setattr__(self, name, arr)
        else:
            if self.beta_ghz <= 0:
                raise ScheduleError("beta_ghz must be positive")
            if self.J == 0:
                raise ScheduleError("normalizing coupling J must be non-zero")

    # construction helpers -------------------------------------------------

    @classmethod
    def linear(cls, beta_ghz: float = 1.0, J: float = 1.0) -> "Schedule":
        return cls("linear", beta_ghz=beta_ghz, J=abs(J))

    @classmethod
    def quadratic(cls, beta_ghz: float = 1.0, J: float = 1.0) -> "Schedule":
        return cls("quadratic", beta_ghz=beta_ghz, J=abs(J))

    @classmethod
    def tabulated(cls, s, gamma_ghz, jcal_ghz) -> "Schedule":
        return cls("tabulated", s=s, gamma=gamma_ghz, jcal=jcal_ghz)

    @classmethod
    def from_csv(cls, path) -> "Schedule":
        """Read a ``s,gamma_ghz,jcal_ghz`` CSV file."""
        rows = []
        with open(path, newline="") as fh:
            reader = csv.DictReader(fh)
            missing = {"s", "gamma_ghz", "jcal_ghz"} - set(reader.fieldnames or ())
            if missing:
                raise ScheduleError(f"{path}: missing columns {sorted(missing)}")
            for lineno, row in enumerate(reader, start=2):
                try:
                    rows.append((float(row["s"]), float(row["gamma_ghz"]), float(row["jcal_ghz"])))
                except (TypeError, ValueError) as exc:
                    raise ScheduleError(f"{path}:{lineno}: bad row {row}") from exc
        arr = np.array(rows, dtype=float).reshape(-1, 3)
        return cls.tabulated(arr[:, 0], arr[:, 1], arr[:, 2])

    @classmethod
    def from_config(cls, cfg: dict, base_dir=None) -> "Schedule":
        kind = cfg.get("kind", "linear")
        if kind == "tabulated":
            path = Path(cfg["path"])
            if base_dir is not None and not path.is_absolute():
                path = Path(base_dir) / path
            return cls.from_csv(path)
        return cls(kind, beta_ghz=float(cfg.get("beta_ghz", 1.0)), J=abs(float(cfg.get("J", 1.0))))

    def to_csv(self, path, n: int = 201) -> None:
        s = self.s if self.kind == "tabulated" else np.linspace(0.0, 1.0, n)
        g, j = self.eval(s)
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["s", "gamma_ghz", "jcal_ghz"])
            for row in zip(s, g, j):
                w.writerow([f"{x:.17g}" for x in row])

    def to_config(self) -> dict:
        if self.kind == "tabulated":
            return {"kind": "tabulated", "knots": np.column_stack([self.s, self.gamma, self.jcal]).tolist()}
        return {"kind": self.kind, "beta_ghz": self.beta_ghz, "J": self.J}

    # evaluation -------------------------------------------------------------

    @property
    def s_start(self) -> float:
        return float(self.s[0]) if self.kind == "tabulated" else 0.0

    @property
    def s_end(self) -> float:
        return float(self.s[-1]) if self.kind == "tabulated" else 1.0

    def _check_range(self, s):
        lo, hi = self.s_start, self.s_end
        s = np.asarray(s, dtype=float)
        if np.any(s < lo - 1e-15) or np.any(s > hi + 1e-15):
            raise ScheduleRangeError(f"s outside schedule range [{lo}, {hi}]")
        return np.clip(s, lo, hi)

    def eval(self, s):
        """Return ``(Gamma(s), Jcal(s))`` in GHz."""
        s = self._check_range(s)
        b = self.beta_ghz
        if self.kind == "linear":
            return b * (1.0 - s), b * s / self.J
        if self.kind == "quadratic":
            return 4.0 * b * (1.0 - s) ** 2, 4.0 * b * s**2 / self.J
        return np.interp(s, self.s, self.gamma), np.interp(s, self.s, self.jcal)

    def derivative(self, s, h: float = 1e-4):
        """Return ``(Gamma'(s), Jcal'(s))``; central differences for tables."""
        s = self._check_range(s)
        b = self.beta_ghz
        if self.kind == "linear":
            return -b * np.ones_like(s), b / self.J * np.ones_like(s)
        if self.kind == "quadratic":
            return -8.0 * b * (1.0 - s), 8.0 * b * s / self.J
        lo = np.maximum(s - h, self.s_start)
        hi = np.minimum(s + h, self.s_end)
        g_lo, j_lo = self.eval(lo)
        g_hi, j_hi = self.eval(hi)
        return (g_hi - g_lo) / (hi - lo), (j_hi - j_lo) / (hi - lo)


def critical_point(schedule: Schedule, J: float, tol: float = 1e-12) -> float:
    """Locate ``s_c`` with ``Gamma(s_c) = Jcal(s_c) |J|`` by bisection."""
    absJ = abs(J)

    def gap(x):
        g, j = schedule.eval(x)
        return float(g - j * absJ)

    lo, hi = schedule.s_start, schedule.s_end
    f_lo, f_hi = gap(lo), gap(hi)
    if f_lo == 0.0:
        return lo
    if f_hi == 0.0:
        return hi
    if np.sign(f_lo) == np.sign(f_hi):
        raise NoCriticalPointError("Gamma(s) - Jcal(s)|J| does not change sign")
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        f_mid = gap(mid)
        if f_mid == 0.0:
            return mid
        if np.sign(f_mid) == np.sign(f_lo):
            lo, f_lo = mid, f_mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def kz_b(schedule: Schedule, J: float, h: float = 1e-4) -> KZConstants:
    """Quench-rate constant ``b`` (1/ns) such that ``tau_Q = b * t_a``."""
    s_c = critical_point(schedule, J)
    g, j = schedule.eval(s_c)
    dg, dj = schedule.derivative(s_c, h=h)
    g, j, dg, dj = float(g), float(j), float(dg), float(dj)
    if g <= 0 or j <= 0:
        raise ScheduleError("schedule energies vanish at the critical point")
    denom = dj / j - dg / g
    if denom <= 0:
        raise ScheduleError(f"non-positive rate denominator {denom!r} at s_c={s_c}")
    return KZConstants(s_c=s_c, b=TWO_PI * g / denom)
