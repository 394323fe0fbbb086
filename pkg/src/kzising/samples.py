"""Batched ±1 spin samples and their text serialization.

File layout: one sample per line as space-separated ``+1``/``-1`` values;
a line ``# batch <n>`` opens each batch. Metadata (sampler id, seed,
parameters, batch sizes) lives in a JSON sidecar ``<file>.json``.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np


class SampleFormatError(ValueError):
    pass


@dataclass
class SampleSet:
    batches: list
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        out = []
        L = None
        for b in self.batches:
            b = np.atleast_2d(np.asarray(b, dtype=np.int8))
            if b.size and not np.all(np.abs(b) == 1):
                raise ValueError("spins must be +1 or -1")
            if L is None:
                L = b.shape[1]
            elif b.shape[1] != L:
                raise ValueError("all samples must have the same length")
            out.append(b)
        self.batches = out

    @property
    def L(self) -> int:
        return self.batches[0].shape[1]

    @property
    def batch_sizes(self) -> list[int]:
        return [b.shape[0] for b in self.batches]

    @property
    def n_samples(self) -> int:
        return sum(self.batch_sizes)

    def all(self) -> np.ndarray:
        return np.concatenate(self.batches, axis=0)

    def write(self, path) -> None:
        path = Path(path)
        with open(path, "w") as fh:
            for n, b in enumerate(self.batches):
                fh.write(f"# batch {n}\n")
                for row in b:
                    fh.write(" ".join("+1" if v > 0 else "-1" for v in row))
                    fh.write("\n")
        meta = dict(self.metadata, L=self.L, batch_sizes=self.batch_sizes)
        Path(str(path) + ".json").write_text(json.dumps(meta, indent=2, sort_keys=True))

    @classmethod
    def read(cls, path) -> "SampleSet":
        path = Path(path)
        batches, cur, L = [], None, None
        with open(path) as fh:
            for lineno, line in enumerate(fh, start=1):
                line = line.strip()
                if not line:
                    continue
                if line.startswith("#"):
                    if line.split()[1:2] != ["batch"]:
                        raise SampleFormatError(f"{path}:{lineno}: unknown directive {line!r}")
                    cur = []
                    batches.append(cur)
                    continue
                try:
                    row = [int(tok) for tok in line.split()]
                except ValueError as exc:
                    raise SampleFormatError(f"{path}:{lineno}: non-integer spin") from exc
                if any(v not in (-1, 1) for v in row):
                    raise SampleFormatError(f"{path}:{lineno}: spins must be +1 or -1")
                if L is None:
                    L = len(row)
                elif len(row) != L:
                    raise SampleFormatError(f"{path}:{lineno}: expected {L} spins, got {len(row)}")
                if cur is None:
                    cur = []
                    batches.append(cur)
                cur.append(row)
        batches = [b for b in batches if b]
        if not batches:
            raise SampleFormatError(f"{path}: no samples")
        side = Path(str(path) + ".json")
        meta = json.loads(side.read_text()) if side.exists() else {}
        meta.pop("L", None)
        meta.pop("batch_sizes", None)
        return cls([np.array(b, dtype=np.int8) for b in batches], meta)
