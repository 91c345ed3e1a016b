from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Mapping

import numpy as np


@dataclass(frozen=True, eq=False)
class ShotSet:
    """Measured bitstrings with counts; qubit 0 is the rightmost character."""

    num_qubits: int
    records: Mapping[str, int] = field(default_factory=dict)

    def __post_init__(self) -> None:
        clean = {}
        for b, c in self.records.items():
            if len(b) != self.num_qubits or set(b) - {"0", "1"}:
                raise ValueError(f"bad bitstring {b!r} for {self.num_qubits} qubits")
            if int(c) < 0:
                raise ValueError("negative count")
            if int(c) > 0:
                clean[b] = int(c)
        object.__setattr__(self, "records", dict(sorted(clean.items())))

    @property
    def total(self) -> int:
        return sum(self.records.values())

    def __len__(self) -> int:
        return len(self.records)

    def __eq__(self, other: object) -> bool:
        return isinstance(other, ShotSet) and self.num_qubits == other.num_qubits and self.records == other.records

    def bits(self) -> tuple[np.ndarray, np.ndarray]:
        """``(M, N)`` uint8 bit matrix indexed by qubit, and the ``(M,)`` counts."""
        keys = list(self.records)
        if not keys:
            return np.zeros((0, self.num_qubits), dtype=np.uint8), np.zeros(0, dtype=np.int64)
        raw = np.frombuffer("".join(keys).encode(), dtype=np.uint8).reshape(len(keys), self.num_qubits) - ord("0")
        counts = np.fromiter(self.records.values(), dtype=np.int64, count=len(keys))
        return np.ascontiguousarray(raw[:, ::-1]), counts

    @classmethod
    def from_bits(cls, bits: np.ndarray, counts: np.ndarray | None = None) -> "ShotSet":
        """Aggregate per-shot (or per-row weighted) bit rows indexed by qubit."""
        bits = np.asarray(bits, dtype=np.uint8)
        n = bits.shape[1]
        if counts is None:
            counts = np.ones(len(bits), dtype=np.int64)
        if len(bits) == 0:
            return cls(n, {})
        uniq, inv = np.unique(bits, axis=0, return_inverse=True)
        agg = np.bincount(inv.ravel(), weights=counts, minlength=len(uniq)).astype(np.int64)
        strings = ("".join("1" if v else "0" for v in row[::-1]) for row in uniq)
        return cls(n, {s: int(c) for s, c in zip(strings, agg) if c > 0})

    def expand(self) -> np.ndarray:
        """One bit row per shot (sorted by bitstring)."""
        bits, counts = self.bits()
        return np.repeat(bits, counts, axis=0)

    def to_json(self) -> str:
        return json.dumps(self.records, sort_keys=True)

    @classmethod
    def from_json(cls, text: str) -> "ShotSet":
        rec = json.loads(text)
        if not rec:
            raise ValueError("empty shot file")
        n = len(next(iter(rec)))
        return cls(n, {k: int(v) for k, v in rec.items()})

    @classmethod
    def load(cls, path: str | Path) -> "ShotSet":
        return cls.from_json(Path(path).read_text())

    def save(self, path: str | Path) -> None:
        Path(path).write_text(self.to_json() + "\n")


def one_hot_string(site: int, num_qubits: int) -> str:
    return "".join("1" if q == site else "0" for q in reversed(range(num_qubits)))
