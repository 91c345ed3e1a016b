"""First-order Trotter circuits for the single-excitation Anderson Hamiltonian."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from ..anderson import (
    DisorderRealization,
    Lattice2D,
    WavepacketSpec,
    build_hamiltonian,
    build_wavepacket,
    diagonalize,
    evolve,
    ipr,
)
from . import ir
from .backends import SectorState, run_sector

STEP_TOL = 1e-9


@dataclass(frozen=True)
class TrotterPlan:
    dt: float
    n_steps: int
    disorder: DisorderRealization
    lattice: Lattice2D

    def __post_init__(self) -> None:
        if self.dt <= 0:
            raise ValueError("dt must be positive")
        if int(self.n_steps) != self.n_steps or self.n_steps < 0:
            raise ValueError("n_steps must be a nonnegative integer")
        if len(self.disorder) != self.lattice.num_sites:
            raise ValueError("disorder does not match the lattice")

    @classmethod
    def for_time(cls, lattice: Lattice2D, disorder: DisorderRealization, t: float, dt: float) -> "TrotterPlan":
        return cls(dt, steps_for(t, dt), disorder, lattice)

    @property
    def time(self) -> float:
        return self.n_steps * self.dt


def steps_for(t: float, dt: float) -> int:
    ratio = t / dt
    n = round(ratio)
    if abs(ratio - n) > STEP_TOL or n < 0:
        raise ValueError(f"t={t} is not a nonnegative integer multiple of dt={dt}")
    return int(n)


def hopping_layers(lattice: Lattice2D) -> list[list[tuple[int, int]]]:
    """Bonds of the four hopping layers: x-even, x-odd, y-even, y-odd.

    A bond is named by its lower coordinate.  On an odd side the wrap bond
    (L-1 -> 0) would touch a site already used by the even layer, so it is
    moved to the odd layer; on a cycle of odd length that layer then has one
    pair of bonds sharing a site, and the gates are applied in the listed
    order.
    """
    layers: list[list[tuple[int, int]]] = [[], [], [], []]
    for d, L in enumerate(lattice.shape):
        for y in range(lattice.shape[1]):
            for x in range(lattice.shape[0]):
                c = (x, y)
                a = c[d]
                nxt = list(c)
                nxt[d] = (a + 1) % L
                parity = a % 2
                if a == L - 1 and L % 2:
                    parity = 1
                layers[2 * d + parity].append((lattice.site_index(*c), lattice.site_index(*nxt)))
    return layers


def trotter_step_ops(plan: TrotterPlan) -> list[ir.GateOp]:
    ops = [ir.xxz(i, j, -plan.dt, 0.0) for layer in hopping_layers(plan.lattice) for i, j in layer]
    ops.extend(ir.rz(q, -w * plan.dt) for q, w in enumerate(plan.disorder.values))
    return ops


def build_trotter_circuit(plan: TrotterPlan) -> ir.Circuit:
    step = trotter_step_ops(plan)
    return ir.Circuit(plan.lattice.num_sites, step * plan.n_steps)


def trotter_gate_count(lattice: Lattice2D, n_steps: int) -> int:
    """Two two-qubit gates per bond, two bonds per site, per step."""
    return n_steps * 2 * (2 * lattice.num_sites)


def trotter_evolve(plan: TrotterPlan, psi0: np.ndarray, record_every: int | None = None) -> np.ndarray:
    """Run the Trotter steps on the sector backend.

    Returns the final one-hot amplitudes, or with ``record_every=k`` an array
    of states after steps 0, k, 2k, ....
    """
    step = ir.Circuit(plan.lattice.num_sites, trotter_step_ops(plan))
    state = SectorState.one_hot(psi0)
    out = [state.amplitudes.copy()] if record_every else []
    for n in range(1, plan.n_steps + 1):
        state = run_sector(step, state).state
        if record_every and n % record_every == 0:
            out.append(state.amplitudes.copy())
    return np.array(out) if record_every else state.amplitudes


def state_error(a: np.ndarray, b: np.ndarray) -> float:
    """Distance between two unit vectors after removing the relative global phase."""
    overlap = abs(np.vdot(a, b))
    return math.sqrt(max(0.0, 2.0 - 2.0 * overlap))


@dataclass(frozen=True)
class TrotterComparison:
    t: float
    dts: tuple[float, ...]
    ipr_trotter: tuple[float, ...]
    ipr_exact: float
    state_errors: tuple[float, ...]

    @property
    def ipr_errors(self) -> tuple[float, ...]:
        return tuple(abs(v - self.ipr_exact) for v in self.ipr_trotter)


def trotter_vs_exact(
    lattice: Lattice2D,
    disorder: DisorderRealization,
    spec: WavepacketSpec,
    t: float,
    dt_list: Sequence[float],
) -> TrotterComparison:
    psi0 = build_wavepacket(lattice, spec).amplitudes
    exact = evolve(diagonalize(build_hamiltonian(lattice, disorder)), psi0, float(t))
    iprs, errs = [], []
    for dt in dt_list:
        psi = trotter_evolve(TrotterPlan.for_time(lattice, disorder, t, dt), psi0)
        iprs.append(ipr(psi))
        errs.append(state_error(psi, exact))
    return TrotterComparison(float(t), tuple(float(d) for d in dt_list), tuple(iprs), ipr(exact), tuple(errs))


def representative_realization(
    lattice: Lattice2D,
    W: float,
    specs: Sequence[WavepacketSpec],
    t_grid: Sequence[float],
    n_candidates: int,
    master_seed: int,
    workers: int = 1,
) -> tuple[int, DisorderRealization]:
    """Candidate whose IPR(t) curves sit closest (least squares) to the candidate average.

    Returns the candidate index and its realization.
    """
    from ..anderson import ipr_timeseries_ensemble, realization_seed

    curves = ipr_timeseries_ensemble(lattice, W, specs, t_grid, n_candidates, master_seed, workers)
    dev = ((curves - curves.mean(axis=0)) ** 2).sum(axis=(1, 2))
    best = int(np.argmin(dev))
    seed = realization_seed(master_seed, best)
    return best, DisorderRealization.generate(lattice.num_sites, W, seed)
