from __future__ import annotations

import json
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.linalg import expm

from wptransport.anderson import Lattice2D, WavepacketSpec, build_wavepacket, ipr
from wptransport.circuit import Circuit, FullState, SectorState, SectorViolation, apply, ir, sample
from wptransport.circuit.backends import gate_matrix
from wptransport.mitigation import ps_ipr
from wptransport.shots import ShotSet

from .conftest import random_state

I2 = np.eye(2)
PX = np.array([[0, 1], [1, 0]], dtype=complex)
PY = np.array([[0, -1j], [1j, 0]])
PZ = np.diag([1.0 + 0j, -1.0])


def embed(n: int, q: int, m: np.ndarray) -> np.ndarray:
    """Single-qubit operator on qubit q with qubit 0 as the least significant bit."""
    out = np.eye(1)
    for k in reversed(range(n)):
        out = np.kron(out, m if k == q else I2)
    return out


def oracle_unitary(n: int, op: ir.GateOp) -> np.ndarray:
    """Dense 2^n unitary built from Pauli exponentials and projectors."""
    if op.kind == ir.RY:
        return expm(-0.5j * op.params[0] * embed(n, op.qubits[0], PY))
    if op.kind == ir.RZ:
        return expm(-0.5j * op.params[0] * embed(n, op.qubits[0], PZ))
    if op.kind == ir.X:
        return embed(n, op.qubits[0], PX)
    a, b = op.qubits
    if op.kind == ir.CNOT:
        p1 = embed(n, a, np.diag([0.0, 1.0]))
        return np.eye(2**n) - p1 + p1 @ embed(n, b, PX)
    ti, tj = op.params
    gen = ti * (embed(n, a, PX) @ embed(n, b, PX) + embed(n, a, PY) @ embed(n, b, PY))
    gen = gen + tj * embed(n, a, PZ) @ embed(n, b, PZ)
    return expm(-0.5j * gen)


angles = st.floats(-2 * math.pi, 2 * math.pi, allow_nan=False)


@st.composite
def single_gate(draw, n=3):
    kind = draw(st.sampled_from([ir.X, ir.RY, ir.RZ, ir.CNOT, ir.XXZ]))
    q = draw(st.permutations(range(n)))
    if kind == ir.X:
        return ir.x(q[0])
    if kind == ir.RY:
        return ir.ry(q[0], draw(angles))
    if kind == ir.RZ:
        return ir.rz(q[0], draw(angles))
    if kind == ir.CNOT:
        return ir.cnot(q[0], q[1])
    return ir.xxz(q[0], q[1], draw(angles), draw(angles))


# ---------------------------------------------------------------- IR


def test_gate_weights():
    assert ir.cnot(0, 1).two_qubit_weight == 1
    assert ir.xxz(0, 1, 0.3).two_qubit_weight == 2
    assert ir.xxz(0, 1, 0.3, 0.1).two_qubit_weight == 3
    assert ir.rz(0, 1.0).two_qubit_weight == 0
    assert ir.c_if(0, ir.cnot(0, 1)).two_qubit_weight == 1


def test_gate_validation():
    with pytest.raises(ValueError):
        ir.xxz(2, 2, 0.1)
    with pytest.raises(ValueError):
        ir.GateOp(ir.RY, (0,), ())
    with pytest.raises(ValueError):
        ir.GateOp("SWAP", (0, 1))
    with pytest.raises(ValueError):
        ir.c_if(0, ir.measure(0, 0))


def test_circuit_index_range():
    with pytest.raises(ValueError):
        Circuit(2, [ir.x(2)])
    with pytest.raises(ValueError):
        Circuit(2, [ir.measure(0, 1)], num_clbits=1)


def test_controlled_op_needs_prior_measurement():
    with pytest.raises(ValueError, match="read before"):
        Circuit(2, [ir.c_if(0, ir.x(1)), ir.measure(0, 0)], num_clbits=1)
    Circuit(2, [ir.measure(0, 0), ir.c_if(0, ir.x(1))], num_clbits=1)


def test_two_qubit_depth():
    c = Circuit(4, [ir.xxz(0, 1, 0.1), ir.xxz(2, 3, 0.1), ir.cnot(1, 2)])
    assert c.two_qubit_gate_count() == 5
    assert c.two_qubit_depth() == 3


def test_text_round_trip_is_exact():
    rng = np.random.default_rng(3)
    ops = [ir.x(0), ir.ry(1, rng.normal()), ir.rz(2, -rng.normal()), ir.cnot(2, 0),
           ir.xxz(0, 3, rng.normal(), rng.normal()), ir.measure(3, 1), ir.c_if(1, ir.rz(0, math.pi / 3))]
    c = Circuit(4, ops, num_clbits=2)
    text = c.to_text()
    back = Circuit.from_text(text)
    assert back.ops == c.ops and back.num_clbits == 2 and back.num_qubits == 4
    assert back.to_text() == text
    assert "XXZ 0 3 " in text


def test_concatenation():
    a = Circuit(2, [ir.x(0)])
    b = Circuit(2, [ir.xxz(0, 1, 0.2)])
    assert (a + b).ops == [ir.x(0), ir.xxz(0, 1, 0.2)]
    with pytest.raises(ValueError):
        a + Circuit(3)


# ---------------------------------------------------------------- gate conventions


@settings(max_examples=60)
@given(single_gate())
def test_gate_matrices_match_pauli_exponentials(op):
    n = 3
    psi = random_state(np.random.default_rng(0), 2**n)
    got = apply(Circuit(n, [op]), FullState(n, psi)).state.amplitudes
    assert np.allclose(got, oracle_unitary(n, op) @ psi, atol=1e-12)


@settings(max_examples=60)
@given(single_gate(), st.integers(0, 2**31))
def test_every_gate_preserves_norm(op, seed):
    psi = random_state(np.random.default_rng(seed), 8)
    out = apply(Circuit(3, [op]), FullState(3, psi)).state.amplitudes
    assert abs(np.linalg.norm(out) - 1.0) < 1e-12


def test_gate_matrices_are_unitary():
    for op in (ir.ry(0, 0.7), ir.rz(0, -1.1), ir.xxz(0, 1, 0.4, -0.9), ir.cnot(0, 1), ir.x(0)):
        m = gate_matrix(op)
        assert np.allclose(m.conj().T @ m, np.eye(len(m)), atol=1e-14)


def test_cnot_twice_is_identity():
    psi = random_state(np.random.default_rng(5), 4)
    out = apply(Circuit(2, [ir.cnot(0, 1), ir.cnot(0, 1)]), FullState(2, psi)).state.amplitudes
    assert np.allclose(out, psi, atol=1e-15)


def test_cnot_control_is_first_qubit():
    out = apply(Circuit(2, [ir.x(0), ir.cnot(0, 1)])).state.amplitudes
    assert np.argmax(np.abs(out)) == 0b11
    out = apply(Circuit(2, [ir.x(1), ir.cnot(0, 1)])).state.amplitudes
    assert np.argmax(np.abs(out)) == 0b10


@pytest.mark.parametrize("backend", ["full", "sector"])
def test_hopping_block_on_single_excitation(backend):
    dt = 0.37
    c = Circuit(2, [ir.x(0), ir.xxz(0, 1, -dt, 0.0)])
    res = apply(c, backend=backend).state
    full = res.amplitudes if backend == "full" else FullState.from_sector(res).amplitudes
    # |01> has qubit 0 set (index 1); |10> is index 2.
    assert full[1] == pytest.approx(math.cos(dt), abs=1e-15)
    assert full[2] == pytest.approx(1j * math.sin(dt), abs=1e-15)
    assert abs(full[0]) + abs(full[3]) < 1e-15


# ---------------------------------------------------------------- backends


def random_sector_circuit(rng: np.random.Generator, n: int, depth: int) -> Circuit:
    c = Circuit(n)
    for _ in range(depth):
        if rng.random() < 0.6:
            a, b = rng.choice(n, 2, replace=False)
            tj = rng.normal() if rng.random() < 0.5 else 0.0
            c.append(ir.xxz(int(a), int(b), rng.normal(), tj))
        else:
            c.append(ir.rz(int(rng.integers(n)), rng.normal()))
    return c


def random_sector_state(rng: np.random.Generator, n: int) -> SectorState:
    v = random_state(rng, n + 1)
    return SectorState(n, v[:n], v[n])


def test_sector_matches_full_on_eight_qubits():
    rng = np.random.default_rng(8)
    c = random_sector_circuit(rng, 8, 120)
    init = random_sector_state(rng, 8)
    sec = apply(c, init, backend="sector").state
    full = apply(c, init, backend="full").state
    assert np.max(np.abs(FullState.from_sector(sec).amplitudes - full.amplitudes)) < 1e-10


@settings(max_examples=25)
@given(st.integers(2, 12), st.integers(0, 2**31))
def test_backend_equivalence_property(n, seed):
    rng = np.random.default_rng(seed)
    c = random_sector_circuit(rng, n, 3 * n)
    init = random_sector_state(rng, n)
    sec = apply(c, init, backend="sector").state
    full = apply(c, init, backend="full").state
    assert np.max(np.abs(FullState.from_sector(sec).amplitudes - full.amplitudes)) < 1e-10
    assert abs(sec.norm() - 1.0) < 1e-10


def test_sector_prep_gates_match_full():
    # X, RY and CNOT are admitted while the touched qubits leave the sector intact.
    c = Circuit(3, [ir.x(0), ir.ry(1, 0.0), ir.cnot(2, 1), ir.xxz(0, 1, 0.3), ir.rz(2, 0.2)])
    sec = apply(c, backend="sector").state
    full = apply(c, backend="full").state
    assert np.allclose(FullState.from_sector(sec).amplitudes, full.amplitudes, atol=1e-14)
    c = Circuit(2, [ir.ry(0, 1.3)])
    assert np.allclose(FullState.from_sector(apply(c, backend="sector").state).amplitudes,
                       apply(c, backend="full").state.amplitudes, atol=1e-15)


@pytest.mark.parametrize(
    "ops,bad",
    [
        ([ir.x(0), ir.x(1)], 1),
        ([ir.x(0), ir.rz(0, 0.1), ir.ry(2, 0.5)], 2),
        ([ir.x(0), ir.cnot(0, 1)], 1),
    ],
)
def test_sector_violation_reports_op_index(ops, bad):
    with pytest.raises(SectorViolation) as err:
        apply(Circuit(3, ops), backend="sector")
    assert err.value.index == bad


def test_sector_backend_refuses_full_state():
    with pytest.raises(TypeError):
        apply(Circuit(2), FullState(2), backend="sector")
    with pytest.raises(ValueError):
        apply(Circuit(2), backend="qpu")


def test_empty_circuit_is_identity():
    psi = random_state(np.random.default_rng(1), 8)
    assert np.array_equal(apply(Circuit(3), FullState(3, psi)).state.amplitudes, psi)


# ---------------------------------------------------------------- measurement and feedforward


def test_measurement_needs_seed():
    with pytest.raises(ValueError, match="seed"):
        apply(Circuit(1, [ir.measure(0, 0)], num_clbits=1))


@pytest.mark.parametrize("backend", ["full", "sector"])
def test_measurement_collapse_and_feedforward(backend):
    # Half the runs measure 1 and the controlled X resets the qubit; the other half already read 0.
    c = Circuit(2, [ir.ry(0, math.pi / 2), ir.measure(0, 0), ir.c_if(0, ir.x(0))], num_clbits=1)
    ones = 0
    for seed in range(400):
        res = apply(c, backend=backend, seed=seed)
        ones += res.clbits[0]
        probs = res.state.probabilities()
        vac = probs[0] if backend == "full" else probs[-1]
        assert vac == pytest.approx(1.0, abs=1e-12)
    assert abs(ones / 400 - 0.5) < 4 * math.sqrt(0.25 / 400)


def test_feedforward_skips_when_clbit_zero():
    c = Circuit(2, [ir.measure(0, 0), ir.c_if(0, ir.x(1))], num_clbits=1)
    res = apply(c, seed=0)
    assert res.clbits == [0]
    assert res.state.probabilities()[0] == pytest.approx(1.0)


def test_measurement_is_seed_deterministic():
    c = Circuit(3, [ir.ry(0, 1.0), ir.ry(1, 2.0), ir.measure(0, 0), ir.measure(1, 1)], num_clbits=2)
    outs = [tuple(apply(c, seed=s).clbits) for s in range(30)]
    assert outs == [tuple(apply(c, seed=s).clbits) for s in range(30)]
    assert len(set(outs)) > 1


# ---------------------------------------------------------------- sampling


def test_one_hot_state_gives_identical_shots():
    shots = sample(np.eye(6)[4], 1000, seed=1)
    assert shots.records == {"010000": 1000}


def test_uniform_two_qubit_frequencies():
    st2 = FullState(2, np.full(4, 0.5, dtype=complex))
    shots = sample(st2, 1_000_000, seed=2)
    assert set(shots.records) == {"00", "01", "10", "11"}
    for c in shots.records.values():
        assert abs(c / 1e6 - 0.25) < 0.002


def test_wavepacket_ipr_estimate_converges():
    lat = Lattice2D(8, 7)
    psi = build_wavepacket(lat, WavepacketSpec((0.5 * math.pi, -0.1 * math.pi), (0.3, 0.35))).amplitudes
    shots = sample(psi, 1_000_000, seed=3)
    assert abs(ps_ipr(shots) - ipr(psi)) < 1e-3


def test_sampling_is_deterministic_and_json_ordered():
    psi = random_state(np.random.default_rng(4), 5)
    a, b = sample(psi, 500, seed=9), sample(psi, 500, seed=9)
    assert a == b and a.total == 500
    assert ShotSet.from_json(a.to_json()) == a
    rec = json.loads(sample(np.eye(3)[0], 5, seed=0).to_json())
    assert rec == {"001": 5}

