"""Wavepacket and W-state preparation circuits.

The unitary construction is a binary amplitude-splitting tree.  Each node is
an XXZ(theta, 0) partial swap from the qubit currently holding the subtree's
excitation to the first qubit of its right half: cos(theta) of the amplitude
stays, -i sin(theta) moves.  The accumulated -i factors and the target phases
are fixed by one RZ per support site at the end.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from . import _rng
from ._parallel import parallel_map
from .anderson import SingleParticleState, StateLike, _amps
from .circuit import ir
from .circuit.backends import FullState, run_full
from .shots import ShotSet

SUPPORT_TOL = 0.0


@dataclass(frozen=True)
class TreeNode:
    holder: int
    target: int
    theta: float


@dataclass(frozen=True)
class AmplitudeTreePlan:
    num_qubits: int
    support: tuple[int, ...]
    nodes: tuple[tuple[TreeNode, ...], ...]  # grouped by tree level
    phase_angles: tuple[float, ...]  # one per support site, same order

    @property
    def node_angles(self) -> tuple[float, ...]:
        return tuple(n.theta for level in self.nodes for n in level)

    def gate_ops(self, root_x: bool = True) -> list[ir.GateOp]:
        ops = [ir.x(self.support[0])] if root_x else []
        for level in self.nodes:
            ops.extend(ir.xxz(n.holder, n.target, n.theta, 0.0) for n in level)
        if len(self.support) > 1:
            ops.extend(ir.rz(q, phi) for q, phi in zip(self.support, self.phase_angles) if phi != 0.0)
        return ops

    def circuit(self) -> ir.Circuit:
        return ir.Circuit(self.num_qubits, self.gate_ops())


def _wrap(phi: float) -> float:
    phi = math.remainder(phi, 2 * math.pi)
    return 0.0 if abs(phi) < 1e-15 else phi


def plan_amplitude_tree(amplitudes: np.ndarray, support: Sequence[int] | None = None) -> AmplitudeTreePlan:
    """Left-balanced tree over ``support`` (default: nonzero entries, by index)."""
    c = np.asarray(amplitudes, dtype=complex)
    if support is None:
        support = np.flatnonzero(np.abs(c) > SUPPORT_TOL)
    sup = tuple(int(q) for q in support)
    if not sup:
        raise ValueError("target has empty support")
    w = np.abs(c[list(sup)]) ** 2
    prefix = np.concatenate([[0.0], np.cumsum(w)])
    levels: list[list[TreeNode]] = []
    moves = np.zeros(len(sup), dtype=int)

    def split(lo: int, hi: int, depth: int) -> None:
        n = hi - lo
        if n <= 1:
            return
        mid = lo + (n + 1) // 2
        wl = prefix[mid] - prefix[lo]
        wr = prefix[hi] - prefix[mid]
        tot = wl + wr
        theta = math.atan2(math.sqrt(wr), math.sqrt(wl)) if tot > 0 else 0.0
        while len(levels) <= depth:
            levels.append([])
        levels[depth].append(TreeNode(sup[lo], sup[mid], theta))
        moves[mid:hi] += 1
        split(lo, mid, depth + 1)
        split(mid, hi, depth + 1)

    split(0, len(sup), 0)
    # After the tree, site n carries |c_n| (-i)^moves_n.
    phases = tuple(_wrap(math.atan2(c[q].imag, c[q].real) + math.pi / 2 * m) for q, m in zip(sup, moves))
    return AmplitudeTreePlan(len(c), sup, tuple(tuple(l) for l in levels), phases)


def synthesize_wavepacket_circuit(target: StateLike) -> ir.Circuit:
    return plan_amplitude_tree(_amps(target)).circuit()


def w_state(num_qubits: int) -> SingleParticleState:
    return SingleParticleState(np.full(num_qubits, 1 / math.sqrt(num_qubits), dtype=complex))


def state_fidelity(a: np.ndarray, b: np.ndarray) -> float:
    return float(abs(np.vdot(a, b)) ** 2)


# --------------------------------------------------------------------------
# Measurement-and-feedforward fusion of two halves
# --------------------------------------------------------------------------


def mcmff1_circuit(N: int) -> ir.Circuit:
    """Fuse two halves into W_N.

    A parity measurement of the two seed qubits (one per half) leaves them in
    (|01> + |10>)/sqrt(2) when the outcome is 1; only then are the unitary
    W-trees grown from each seed over its half.
    """
    if N < 2 or N % 2:
        raise ValueError("MCM-FF-1 needs an even qubit count >= 2")
    half = N // 2
    a0, b0 = 0, half
    circ = ir.Circuit(N, num_clbits=1)
    circ.extend([ir.ry(a0, math.pi / 2), ir.ry(b0, math.pi / 2), ir.cnot(a0, b0), ir.measure(b0, 0), ir.cnot(a0, b0)])
    amps = np.zeros(N, dtype=complex)
    amps[:] = 1 / math.sqrt(N)
    for seed_qubit, sites in ((a0, range(0, half)), (b0, range(half, N))):
        plan = plan_amplitude_tree(amps, support=list(sites))
        assert plan.support[0] == seed_qubit
        circ.extend(ir.c_if(0, op) for op in plan.gate_ops(root_x=False))
    return circ


@dataclass
class MCMFF1Outcome:
    success: bool
    state: np.ndarray | None  # one-hot amplitudes on success


def mcmff1_run(N: int, seed: int, backend: str = "full") -> MCMFF1Outcome:
    if backend != "full":
        raise ValueError("MCM-FF-1 passes through two-excitation states; only the full backend can run it")
    res = run_full(mcmff1_circuit(N), None, _rng.stream(seed, _rng.MEASURE))
    if not res.clbits[0]:
        return MCMFF1Outcome(False, None)
    return MCMFF1Outcome(True, res.state.one_hot_amplitudes())


def _trial(args) -> int:
    N, seed = args
    return int(mcmff1_run(N, seed).success)


def mcmff1_trials(N: int, n_trials: int, master_seed: int, workers: int = 1) -> np.ndarray:
    """Success flags of independent protocol runs (trial i uses its own stream)."""
    jobs = [(N, _rng.derive_seed(master_seed, _rng.TRIALS, i)) for i in range(n_trials)]
    return np.array(parallel_map(_trial, jobs, workers), dtype=bool)


def mcmff1_branch_probabilities(N: int) -> tuple[float, np.ndarray]:
    """Exact success probability and normalized success-branch one-hot amplitudes.

    Computed by projecting rather than sampling: the full-backend amplitudes
    just before the measurement are split on the measured bit.
    """
    circ = mcmff1_circuit(N)
    pre = ir.Circuit(N, circ.ops[:3])
    psi = run_full(pre).state.amplitudes
    half = N // 2
    idx = np.arange(psi.size)
    ones = ((idx >> half) & 1).astype(bool)
    p1 = float(np.sum(np.abs(psi[ones]) ** 2))
    branch = FullState(N, np.where(ones, psi, 0) / math.sqrt(p1))
    post = ir.Circuit(N, [circ.ops[4]] + [op.inner for op in circ.ops[5:]])
    final = run_full(post, branch).state
    return p1, final.one_hot_amplitudes()


# --------------------------------------------------------------------------
# Constant-depth protocol: closed forms only
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class MCMFF2Config:
    N: int
    delta: float

    def __post_init__(self) -> None:
        if self.N < 2 or self.N % 2:
            raise ValueError("N must be an even integer >= 2")
        if not (0 < self.delta < self.N / 4):
            raise ValueError("delta must lie in (0, N/4)")


def mcmff2_success_probability(config: MCMFF2Config) -> float:
    N, d = config.N, config.delta
    return 0.5 - 0.5 * (1 - 4 * d / N) ** (N / 2)


def mcmff2_ideal_fidelity(config: MCMFF2Config) -> float:
    N, d = config.N, config.delta
    return d / mcmff2_success_probability(config) * (1 - 2 * d / N) ** (N / 2 - 1)


# --------------------------------------------------------------------------
# Classical fidelity and the preparation benchmark
# --------------------------------------------------------------------------


def classical_fidelity(empirical: Sequence[float], ideal: StateLike) -> float:
    """Bhattacharyya overlap between one-hot outcome probabilities and |<e_n|psi>|^2."""
    p = np.asarray(empirical, dtype=float)
    q = np.abs(_amps(ideal)) ** 2
    if p.shape != q.shape:
        raise ValueError("distribution and state have different lengths")
    if np.any(p < 0) or p.sum() > 1 + 1e-12:
        raise ValueError("empirical distribution must be nonnegative with total <= 1")
    return float(math.fsum(np.sqrt(p * q)))


def one_hot_distribution(shots: ShotSet) -> np.ndarray:
    """Normalized frequencies of the one-hot strings, other strings dropped."""
    bits, counts = shots.bits()
    keep = bits.sum(axis=1) == 1
    p = np.zeros(shots.num_qubits)
    if keep.any():
        np.add.at(p, np.argmax(bits[keep], axis=1), counts[keep])
        p /= p.sum()
    return p


BENCHMARK_COLUMNS = ("method", "N", "shots", "classical_fidelity", "stderr")


def prep_benchmark(
    sizes: Sequence[int],
    retained_shots: int,
    epsilon: float,
    n_resamples: int,
    master_seed: int,
    delta: float = 0.2,
) -> list[dict]:
    """Classical fidelity of noisy W-state preparation for each method.

    Noise is IID readout bit flips of strength ``epsilon``; no mitigation
    beyond dropping non-one-hot strings.  Total shots for each method are
    scaled by its success probability so every method keeps about
    ``retained_shots`` after post-selection.  The constant-depth protocol is
    reported from its closed-form ideal state fidelity only, which is a lower
    bound on the classical fidelity of its noiseless output.
    """
    from .circuit.backends import sample
    from .mitigation import BitFlipModel, bootstrap, corrupt, postselect

    rows = []
    model = BitFlipModel(epsilon)
    for N in sizes:
        target = w_state(N)
        unitary_state = FullState(N)
        unitary_state = run_full(synthesize_wavepacket_circuit(target), unitary_state).state
        ps_rate = (1 - epsilon) ** N + (N - 1) * epsilon**2 * (1 - epsilon) ** (N - 2)
        cases = [("unitary", unitary_state.one_hot_amplitudes(), 1.0)]
        if N % 2 == 0:
            p1, branch = mcmff1_branch_probabilities(N)
            cases.append(("mcmff1", branch, p1))
        for i, (method, amps, p_success) in enumerate(cases):
            total = int(math.ceil(retained_shots / (p_success * ps_rate)))
            kept = int(math.ceil(retained_shots / ps_rate))
            key = _rng.derive_seed(master_seed, N, i)
            noisy = corrupt(sample(amps, kept, key), model, key)
            fid = lambda s: classical_fidelity(one_hot_distribution(postselect(s, 1)[0]), target)
            mean, std, _ = bootstrap(noisy, fid, n_resamples, key)
            rows.append({"method": method, "N": N, "shots": total, "classical_fidelity": fid(noisy), "stderr": std})
        if N % 2 == 0 and delta < N / 4:
            cfg = MCMFF2Config(N, delta)
            rows.append({
                "method": "mcmff2_ideal",
                "N": N,
                "shots": int(math.ceil(retained_shots / mcmff2_success_probability(cfg))),
                "classical_fidelity": mcmff2_ideal_fidelity(cfg),
                "stderr": 0.0,
            })
    return rows
