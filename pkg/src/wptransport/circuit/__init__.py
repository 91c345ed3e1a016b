from . import ir
from .backends import FullState, RunResult, SectorState, SectorViolation, apply, sample
from .ir import Circuit, GateOp
from .trotter import TrotterPlan, build_trotter_circuit, hopping_layers, trotter_evolve, trotter_vs_exact

__all__ = [
    "Circuit",
    "FullState",
    "GateOp",
    "RunResult",
    "SectorState",
    "SectorViolation",
    "TrotterPlan",
    "apply",
    "build_trotter_circuit",
    "hopping_layers",
    "ir",
    "sample",
    "trotter_evolve",
    "trotter_vs_exact",
]
