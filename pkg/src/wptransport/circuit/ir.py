"""Backend-neutral gate IR and its line-oriented text format.

Conventions: RY(t) = exp(-i t Y / 2), RZ(p) = exp(-i p Z / 2),
XXZ(ti, tj) = exp(-(i/2) [ti (XX + YY) + tj ZZ]).  Bitstrings print qubit 0
as the rightmost character.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Iterator

X = "X"
RY = "RY"
RZ = "RZ"
CNOT = "CNOT"
XXZ = "XXZ"
MEASURE = "MEASURE"
IF = "IF"

_ARITY = {X: (1, 0), RY: (1, 1), RZ: (1, 1), CNOT: (2, 0), XXZ: (2, 2), MEASURE: (1, 0)}


@dataclass(frozen=True)
class GateOp:
    kind: str
    qubits: tuple[int, ...] = ()
    params: tuple[float, ...] = ()
    clbit: int | None = None
    inner: "GateOp | None" = None

    def __post_init__(self) -> None:
        if self.kind == IF:
            if self.inner is None or self.clbit is None:
                raise ValueError("IF needs a clbit and an inner op")
            if self.inner.kind in (IF, MEASURE):
                raise ValueError("IF may only wrap a unitary gate")
            return
        if self.kind not in _ARITY:
            raise ValueError(f"unknown gate kind {self.kind!r}")
        nq, npar = _ARITY[self.kind]
        if len(self.qubits) != nq or len(self.params) != npar:
            raise ValueError(f"{self.kind} takes {nq} qubits and {npar} angles")
        if nq == 2 and self.qubits[0] == self.qubits[1]:
            raise ValueError("two-qubit gate on a single qubit")
        if self.kind == MEASURE and self.clbit is None:
            raise ValueError("MEASURE needs a target clbit")

    @property
    def all_qubits(self) -> tuple[int, ...]:
        return self.inner.qubits if self.kind == IF else self.qubits

    @property
    def two_qubit_weight(self) -> int:
        """Two-qubit gates after compilation: CNOT 1, XXZ(t, 0) 2, general XXZ 3."""
        if self.kind == IF:
            return self.inner.two_qubit_weight
        if self.kind == CNOT:
            return 1
        if self.kind == XXZ:
            return 2 if self.params[1] == 0 else 3
        return 0


def x(q: int) -> GateOp:
    return GateOp(X, (q,))


def ry(q: int, theta: float) -> GateOp:
    return GateOp(RY, (q,), (float(theta),))


def rz(q: int, phi: float) -> GateOp:
    return GateOp(RZ, (q,), (float(phi),))


def cnot(control: int, target: int) -> GateOp:
    return GateOp(CNOT, (control, target))


def xxz(a: int, b: int, theta_i: float, theta_j: float = 0.0) -> GateOp:
    return GateOp(XXZ, (a, b), (float(theta_i), float(theta_j)))


def measure(q: int, c: int) -> GateOp:
    return GateOp(MEASURE, (q,), clbit=c)


def c_if(clbit: int, op: GateOp) -> GateOp:
    return GateOp(IF, clbit=clbit, inner=op)


@dataclass
class Circuit:
    num_qubits: int
    ops: list[GateOp] = field(default_factory=list)
    num_clbits: int = 0

    def __post_init__(self) -> None:
        if self.num_qubits < 1:
            raise ValueError("circuit needs at least one qubit")
        ops, self.ops = list(self.ops), []
        self._written: set[int] = set()
        self.extend(ops)

    def append(self, op: GateOp) -> "Circuit":
        for q in op.all_qubits:
            if not 0 <= q < self.num_qubits:
                raise ValueError(f"qubit {q} out of range for {self.num_qubits} qubits")
        if op.clbit is not None and not 0 <= op.clbit < self.num_clbits:
            raise ValueError(f"clbit {op.clbit} out of range")
        if op.kind == IF and op.clbit not in self._written:
            raise ValueError(f"clbit {op.clbit} is read before any measurement writes it")
        if op.kind == MEASURE:
            self._written.add(op.clbit)
        self.ops.append(op)
        return self

    def extend(self, ops: Iterable[GateOp]) -> "Circuit":
        for op in ops:
            self.append(op)
        return self

    def __add__(self, other: "Circuit") -> "Circuit":
        if other.num_qubits != self.num_qubits:
            raise ValueError("circuits act on different registers")
        out = Circuit(self.num_qubits, list(self.ops), max(self.num_clbits, other.num_clbits))
        return out.extend(other.ops)

    def __iter__(self) -> Iterator[GateOp]:
        return iter(self.ops)

    def __len__(self) -> int:
        return len(self.ops)

    def two_qubit_gate_count(self) -> int:
        return sum(op.two_qubit_weight for op in self.ops)

    def two_qubit_depth(self) -> int:
        """ASAP depth counting only two-qubit gates (a weight-w gate adds w layers)."""
        level = [0] * self.num_qubits
        for op in self.ops:
            w = op.two_qubit_weight
            if w:
                qs = op.all_qubits
                start = max(level[q] for q in qs)
                for q in qs:
                    level[q] = start + w
        return max(level, default=0)

    def to_text(self) -> str:
        lines = [f"# qubits={self.num_qubits} clbits={self.num_clbits}"]
        lines.extend(_op_line(op) for op in self.ops)
        return "\n".join(lines) + "\n"

    @classmethod
    def from_text(cls, text: str) -> "Circuit":
        lines = [ln.strip() for ln in text.splitlines() if ln.strip()]
        header = dict(kv.split("=") for kv in lines[0].lstrip("#").split())
        circ = cls(int(header["qubits"]), num_clbits=int(header["clbits"]))
        for ln in lines[1:]:
            if not ln.startswith("#"):
                circ.append(_parse_line(ln.split()))
        return circ


def _fmt(a: float) -> str:
    return f"{a:.17g}"


def _op_line(op: GateOp) -> str:
    if op.kind == IF:
        return f"IF {op.clbit} {_op_line(op.inner)}"
    if op.kind == MEASURE:
        return f"MEASURE {op.qubits[0]} {op.clbit}"
    return " ".join([op.kind, *map(str, op.qubits), *map(_fmt, op.params)])


def _parse_line(tok: list[str]) -> GateOp:
    kind = tok[0]
    if kind == IF:
        return c_if(int(tok[1]), _parse_line(tok[2:]))
    if kind == MEASURE:
        return measure(int(tok[1]), int(tok[2]))
    nq, npar = _ARITY[kind]
    qubits = tuple(int(t) for t in tok[1 : 1 + nq])
    params = tuple(float(t) for t in tok[1 + nq : 1 + nq + npar])
    return GateOp(kind, qubits, params)
