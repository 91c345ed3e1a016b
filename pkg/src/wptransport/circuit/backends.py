"""Statevector backends.

``full``   -- all 2^n amplitudes, basis index sum_q b_q 2^q.
``sector`` -- the vacuum plus the n one-hot strings.  Any gate that would put
              weight outside that span raises :class:`SectorViolation`; in
              practice only a leading X on the vacuum (state preparation) and
              excitation-conserving gates are accepted.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .. import _rng
from ..shots import ShotSet
from . import ir

NORM_TOL = 1e-10
# Squared amplitude allowed to leak out of the sector (rounding only).
LEAK_TOL = 1e-20


class SectorViolation(ValueError):
    def __init__(self, index: int, op: ir.GateOp, leak: float):
        super().__init__(f"op {index} ({op.kind} on {op.all_qubits}) leaves the single-excitation sector (leak {leak:.3g})")
        self.index = index
        self.op = op


# --------------------------------------------------------------------------
# Gate matrices
# --------------------------------------------------------------------------


def ry_matrix(theta: float) -> np.ndarray:
    c, s = math.cos(theta / 2), math.sin(theta / 2)
    return np.array([[c, -s], [s, c]], dtype=complex)


def rz_matrix(phi: float) -> np.ndarray:
    return np.diag([np.exp(-0.5j * phi), np.exp(0.5j * phi)])


def xxz_matrix(theta_i: float, theta_j: float) -> np.ndarray:
    """4x4 matrix in the basis index 2*b_first + b_second."""
    c, s = math.cos(theta_i), math.sin(theta_i)
    out = np.zeros((4, 4), dtype=complex)
    out[0, 0] = out[3, 3] = np.exp(-0.5j * theta_j)
    ph = np.exp(0.5j * theta_j)
    out[1, 1] = out[2, 2] = ph * c
    out[1, 2] = out[2, 1] = -1j * ph * s
    return out


_X = np.array([[0, 1], [1, 0]], dtype=complex)
_CNOT = np.array([[1, 0, 0, 0], [0, 1, 0, 0], [0, 0, 0, 1], [0, 0, 1, 0]], dtype=complex)


def gate_matrix(op: ir.GateOp) -> np.ndarray:
    if op.kind == ir.X:
        return _X
    if op.kind == ir.RY:
        return ry_matrix(op.params[0])
    if op.kind == ir.RZ:
        return rz_matrix(op.params[0])
    if op.kind == ir.CNOT:
        return _CNOT
    if op.kind == ir.XXZ:
        return xxz_matrix(*op.params)
    raise ValueError(f"{op.kind} has no matrix")


# --------------------------------------------------------------------------
# States
# --------------------------------------------------------------------------


@dataclass(eq=False)
class FullState:
    num_qubits: int
    amplitudes: np.ndarray = None  # type: ignore[assignment]

    def __post_init__(self) -> None:
        if self.amplitudes is None:
            self.amplitudes = np.zeros(2**self.num_qubits, dtype=complex)
            self.amplitudes[0] = 1.0
        self.amplitudes = np.array(self.amplitudes, dtype=complex)
        if self.amplitudes.shape != (2**self.num_qubits,):
            raise ValueError("amplitude vector has the wrong length")

    @classmethod
    def from_sector(cls, sector: "SectorState") -> "FullState":
        amps = np.zeros(2**sector.num_qubits, dtype=complex)
        amps[0] = sector.vacuum
        amps[1 << np.arange(sector.num_qubits)] = sector.amplitudes
        return cls(sector.num_qubits, amps)

    def probabilities(self) -> np.ndarray:
        return np.abs(self.amplitudes) ** 2

    def one_hot_amplitudes(self) -> np.ndarray:
        return self.amplitudes[1 << np.arange(self.num_qubits)]

    def bitstring(self, index: int) -> str:
        return format(index, f"0{self.num_qubits}b")


@dataclass(eq=False)
class SectorState:
    num_qubits: int
    amplitudes: np.ndarray = None  # type: ignore[assignment]
    vacuum: complex = 0.0

    def __post_init__(self) -> None:
        if self.amplitudes is None:
            self.amplitudes = np.zeros(self.num_qubits, dtype=complex)
            self.vacuum = 1.0
        self.amplitudes = np.array(self.amplitudes, dtype=complex)
        self.vacuum = complex(self.vacuum)
        if self.amplitudes.shape != (self.num_qubits,):
            raise ValueError("amplitude vector has the wrong length")

    @classmethod
    def vacuum_state(cls, num_qubits: int) -> "SectorState":
        return cls(num_qubits)

    @classmethod
    def one_hot(cls, amplitudes: Sequence[complex]) -> "SectorState":
        a = np.asarray(amplitudes, dtype=complex)
        return cls(len(a), a, 0.0)

    def probabilities(self) -> np.ndarray:
        """Probabilities of the one-hot strings e_0..e_{n-1} followed by the vacuum."""
        return np.append(np.abs(self.amplitudes) ** 2, abs(self.vacuum) ** 2)

    def norm(self) -> float:
        return math.sqrt(float(np.vdot(self.amplitudes, self.amplitudes).real) + abs(self.vacuum) ** 2)


@dataclass
class RunResult:
    state: FullState | SectorState
    clbits: list[int] = field(default_factory=list)


# --------------------------------------------------------------------------
# Full backend
# --------------------------------------------------------------------------


def _apply_matrix(psi: np.ndarray, n: int, matrix: np.ndarray, qubits: Sequence[int]) -> np.ndarray:
    axes = [n - 1 - q for q in qubits]
    t = np.moveaxis(psi.reshape((2,) * n), axes, range(len(axes)))
    shape = t.shape
    t = (matrix @ t.reshape(2 ** len(axes), -1)).reshape(shape)
    return np.moveaxis(t, range(len(axes)), axes).reshape(-1)


def _measure_full(psi: np.ndarray, n: int, q: int, rng: np.random.Generator) -> tuple[np.ndarray, int]:
    idx = np.arange(psi.size)
    ones = ((idx >> q) & 1).astype(bool)
    p1 = float(np.sum(np.abs(psi[ones]) ** 2))
    outcome = int(rng.random() < p1)
    keep = ones if outcome else ~ones
    psi = np.where(keep, psi, 0.0)
    return psi / math.sqrt(p1 if outcome else 1.0 - p1), outcome


def run_full(circuit: ir.Circuit, state: FullState | None = None, rng: np.random.Generator | None = None) -> RunResult:
    n = circuit.num_qubits
    psi = (state or FullState(n)).amplitudes.copy()
    clbits = [0] * circuit.num_clbits
    for op in circuit.ops:
        if op.kind == ir.IF:
            if not clbits[op.clbit]:
                continue
            op = op.inner
        if op.kind == ir.MEASURE:
            if rng is None:
                raise ValueError("circuit has measurements; pass a seed")
            psi, clbits[op.clbit] = _measure_full(psi, n, op.qubits[0], rng)
        else:
            psi = _apply_matrix(psi, n, gate_matrix(op), op.qubits)
    return RunResult(FullState(n, psi), clbits)


# --------------------------------------------------------------------------
# Sector backend
# --------------------------------------------------------------------------


def _others_weight(a: np.ndarray, exclude: Sequence[int]) -> float:
    w = float(np.vdot(a, a).real)
    return w - sum(abs(a[q]) ** 2 for q in exclude)


def _sector_step(st: SectorState, op: ir.GateOp, index: int) -> None:
    a = st.amplitudes
    k = op.kind
    if k == ir.RZ:
        q, phi = op.qubits[0], op.params[0]
        ph = np.exp(-0.5j * phi)
        a *= ph
        a[q] *= np.exp(1j * phi)
        st.vacuum *= ph
    elif k == ir.XXZ:
        p, q = op.qubits
        ti, tj = op.params
        outer = np.exp(-0.5j * tj)
        inner = np.exp(0.5j * tj)
        ap, aq = a[p], a[q]
        if tj != 0:
            a *= outer
            st.vacuum *= outer
        c, s = math.cos(ti), math.sin(ti)
        a[p] = inner * (c * ap - 1j * s * aq)
        a[q] = inner * (c * aq - 1j * s * ap)
    elif k == ir.X:
        q = op.qubits[0]
        leak = _others_weight(a, (q,))
        if leak > LEAK_TOL:
            raise SectorViolation(index, op, leak)
        a[q], st.vacuum = st.vacuum, a[q]
    elif k == ir.RY:
        q = op.qubits[0]
        c, s = math.cos(op.params[0] / 2), math.sin(op.params[0] / 2)
        leak = s * s * _others_weight(a, (q,))
        if leak > LEAK_TOL:
            raise SectorViolation(index, op, leak)
        vac, aq = st.vacuum, a[q]
        a *= c
        a[q] = s * vac + c * aq
        st.vacuum = c * vac - s * aq
    elif k == ir.CNOT:
        ctrl = op.qubits[0]
        leak = abs(a[ctrl]) ** 2
        if leak > LEAK_TOL:
            raise SectorViolation(index, op, leak)
    else:
        raise ValueError(f"unsupported op {k}")


def _measure_sector(st: SectorState, q: int, rng: np.random.Generator) -> int:
    p1 = abs(st.amplitudes[q]) ** 2
    outcome = int(rng.random() < p1)
    if outcome:
        phase = st.amplitudes[q] / abs(st.amplitudes[q])
        st.amplitudes[:] = 0
        st.amplitudes[q] = phase
        st.vacuum = 0.0
    else:
        st.amplitudes[q] = 0
        scale = 1 / math.sqrt(1 - p1)
        st.amplitudes *= scale
        st.vacuum *= scale
    return outcome


def run_sector(circuit: ir.Circuit, state: SectorState | None = None, rng: np.random.Generator | None = None) -> RunResult:
    n = circuit.num_qubits
    src = state or SectorState.vacuum_state(n)
    st = SectorState(n, src.amplitudes.copy(), src.vacuum)
    clbits = [0] * circuit.num_clbits
    for i, op in enumerate(circuit.ops):
        if op.kind == ir.IF:
            if not clbits[op.clbit]:
                continue
            op = op.inner
        if op.kind == ir.MEASURE:
            if rng is None:
                raise ValueError("circuit has measurements; pass a seed")
            clbits[op.clbit] = _measure_sector(st, op.qubits[0], rng)
        else:
            _sector_step(st, op, i)
    return RunResult(st, clbits)


def apply(circuit: ir.Circuit, initial: FullState | SectorState | None = None, backend: str = "full", seed: int | None = None) -> RunResult:
    """Run ``circuit`` on ``backend`` ('full' or 'sector').

    Measurements draw from a measurement stream keyed by ``seed``.
    """
    rng = _rng.stream(seed, _rng.MEASURE) if seed is not None else None
    if backend == "full":
        if isinstance(initial, SectorState):
            initial = FullState.from_sector(initial)
        return run_full(circuit, initial, rng)
    if backend == "sector":
        if isinstance(initial, FullState):
            raise TypeError("sector backend needs a SectorState")
        return run_sector(circuit, initial, rng)
    raise ValueError(f"unknown backend {backend!r}")


def sample(state: FullState | SectorState | np.ndarray, n_shots: int, seed: int) -> ShotSet:
    """Multinomial z-basis shots from the Born probabilities.

    A bare ndarray is read as one-hot amplitudes over its length.
    """
    if isinstance(state, np.ndarray):
        state = SectorState.one_hot(state)
    rng = _rng.stream(seed, _rng.SHOTS)
    probs = state.probabilities()
    counts = rng.multinomial(int(n_shots), probs / probs.sum())
    n = state.num_qubits
    records: dict[str, int] = {}
    if isinstance(state, SectorState):
        for m in np.flatnonzero(counts):
            key = "0" * n if m == n else "".join("1" if q == m else "0" for q in reversed(range(n)))
            records[key] = int(counts[m])
    else:
        for idx in np.flatnonzero(counts):
            records[state.bitstring(int(idx))] = int(counts[idx])
    return ShotSet(n, records)
