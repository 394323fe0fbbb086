"""Periodic Ising chain parameters shared by every solver."""
from __future__ import annotations

import csv
from dataclasses import dataclass, field

import numpy as np


@dataclass(frozen=True)
class ChainSpec:
    """Periodic chain of ``L`` sites.

    ``couplings[i]`` is the bond between sites ``i`` and ``i+1`` (the last
    bond wraps to site 0). ``fields[i]`` is the longitudinal field on site
    ``i``; both are dimensionless and multiplied by ``Jcal(s)``.
    """

    L: int
    J_nominal: float
    couplings: np.ndarray = field(default=None, repr=False)
    fields: np.ndarray = field(default=None, repr=False)

    def __post_init__(self):
        if self.L < 2:
            raise ValueError("chain needs at least two sites")
        if self.J_nominal == 0:
            raise ValueError("nominal coupling must be non-zero")
        c = np.full(self.L, float(self.J_nominal)) if self.couplings is None else np.asarray(self.couplings, float).copy()
        h = np.zeros(self.L) if self.fields is None else np.asarray(self.fields, float).copy()
        if c.shape != (self.L,) or h.shape != (self.L,):
            raise ValueError("couplings and fields must have length L")
        c.setflags(write=False)
        h.setflags(write=False)
        object.__setattr__(self, "couplings", c)
        object.__setattr__(self, "fields", h)

    @classmethod
    def uniform(cls, L: int, J: float) -> "ChainSpec":
        return cls(L, J)

    @property
    def sign(self) -> int:
        return 1 if self.J_nominal > 0 else -1

    @property
    def is_uniform(self) -> bool:
        return bool(np.all(self.couplings == self.J_nominal) and not np.any(self.fields))

    def with_params(self, couplings=None, fields=None) -> "ChainSpec":
        return ChainSpec(
            self.L,
            self.J_nominal,
            self.couplings if couplings is None else couplings,
            self.fields if fields is None else fields,
        )

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["kind", "index", "value"])
            for i, v in enumerate(self.couplings):
                w.writerow(["J", i, f"{v:.17g}"])
            for i, v in enumerate(self.fields):
                w.writerow(["h", i, f"{v:.17g}"])

    @classmethod
    def from_csv(cls, path, J_nominal: float) -> "ChainSpec":
        J, h = {}, {}
        with open(path, newline="") as fh:
            for row in csv.DictReader(fh):
                (J if row["kind"] == "J" else h)[int(row["index"])] = float(row["value"])
        L = len(J)
        return cls(L, J_nominal, [J[i] for i in range(L)], [h.get(i, 0.0) for i in range(L)])
