"""Half-filled periodic XXZ chain: exact momentum spectra, variational
quasiparticle wavepackets and their energy-density dynamics.

States live on the sector of bitstrings with N/2 ones (qubit q is bit q of the
basis integer), so N=14 means 3432 amplitudes.  The chain is
H = -1/2 sum_i (X_i X_{i+1} + Y_i Y_{i+1} - Delta Z_i Z_{i+1}) with a periodic
wrap; the translation T sends site i to i+1 and a state of momentum k has
T-eigenvalue exp(-i k).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property, lru_cache
from itertools import combinations
from typing import Callable, Sequence

import numpy as np
import scipy.optimize
import scipy.sparse as sp

from .circuit import ir
from .stateprep import plan_amplitude_tree

DEGENERACY_TOL = 1e-8
# Gaussian weight allowed outside 0 < |k| < pi/2, relative to the total.
SUPPORT_LEAK = 1e-3
FD_STEP = 1e-4


# --------------------------------------------------------------------------
# Sector basis
# --------------------------------------------------------------------------


@lru_cache(maxsize=None)
def _sector(N: int, n_up: int) -> "SectorBasis":
    return SectorBasis(N, n_up)


class SectorBasis:
    """Fixed-excitation basis with precomputed bond and translation tables."""

    def __init__(self, N: int, n_up: int):
        self.N = N
        self.n_up = n_up
        states = sorted(sum(1 << q for q in c) for c in combinations(range(N), n_up))
        self.states = np.array(states, dtype=np.int64)
        self.bits = ((self.states[:, None] >> np.arange(N)) & 1).astype(np.int8)

    def __len__(self) -> int:
        return len(self.states)

    def index(self, states: np.ndarray) -> np.ndarray:
        idx = np.searchsorted(self.states, states)
        if np.any(idx >= len(self.states)) or np.any(self.states[np.minimum(idx, len(self.states) - 1)] != states):
            raise ValueError("state outside the sector")
        return idx

    @lru_cache(maxsize=None)
    def bond(self, i: int, j: int) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """(equal, lo, hi): indices with equal bits on (i, j), and the swap partners."""
        bi, bj = self.bits[:, i], self.bits[:, j]
        equal = np.flatnonzero(bi == bj)
        lo = np.flatnonzero((bi == 1) & (bj == 0))
        hi = self.index(self.states[lo] ^ ((1 << i) | (1 << j)))
        return equal, lo, hi

    @cached_property
    def translation(self) -> np.ndarray:
        """perm[a] = index of T|a>, T moving site i to i+1."""
        s = self.states
        N = self.N
        shifted = ((s << 1) | (s >> (N - 1))) & ((1 << N) - 1)
        return self.index(shifted)

    def zz(self, i: int, j: int) -> np.ndarray:
        return (1 - 2 * self.bits[:, i]) * (1 - 2 * self.bits[:, j]).astype(float)


def apply_xxz_gate(psi: np.ndarray, basis: SectorBasis, i: int, j: int, theta_i: float, theta_j: float) -> np.ndarray:
    """exp(-(i/2)[theta_i (XX+YY) + theta_j ZZ]) on sites (i, j), in place."""
    equal, lo, hi = basis.bond(i, j)
    if theta_j:
        psi[equal] *= np.exp(-0.5j * theta_j)
    ph = np.exp(0.5j * theta_j)
    c, s = math.cos(theta_i), math.sin(theta_i)
    a, b = psi[lo], psi[hi]
    psi[lo] = ph * (c * a - 1j * s * b)
    psi[hi] = ph * (c * b - 1j * s * a)
    return psi


def translate(psi: np.ndarray, basis: SectorBasis, shift: int = 1) -> np.ndarray:
    out = psi
    for _ in range(shift % basis.N):
        nxt = np.empty_like(out)
        nxt[basis.translation] = out
        out = nxt
    return out


# --------------------------------------------------------------------------
# Model and Hamiltonian
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class XXZModel:
    N: int
    Delta: float

    def __post_init__(self) -> None:
        if self.N < 6 or self.N % 4 != 2:
            raise ValueError("N must be of the form 2 + 4n with n >= 1")

    @property
    def basis(self) -> SectorBasis:
        return _sector(self.N, self.N // 2)

    def bonds(self) -> list[tuple[int, int]]:
        return [(i, (i + 1) % self.N) for i in range(self.N)]


def bond_operator(model: XXZModel, n: int) -> sp.csr_matrix:
    """h_n = -1/2 (X X + Y Y - Delta Z Z) on bond (n, n+1)."""
    basis = model.basis
    i, j = n, (n + 1) % model.N
    _, lo, hi = basis.bond(i, j)
    dim = len(basis)
    rows = np.concatenate([np.arange(dim), lo, hi])
    cols = np.concatenate([np.arange(dim), hi, lo])
    vals = np.concatenate([0.5 * model.Delta * basis.zz(i, j), -np.ones(len(lo)), -np.ones(len(lo))])
    return sp.csr_matrix((vals, (rows, cols)), shape=(dim, dim))


def xxz_hamiltonian(model: XXZModel) -> sp.csr_matrix:
    """Real symmetric sparse Hamiltonian on the half-filling sector."""
    H = bond_operator(model, 0)
    for n in range(1, model.N):
        H = H + bond_operator(model, n)
    return H.tocsr()


def full_space_hamiltonian(N: int, Delta: float) -> np.ndarray:
    """Dense 2^N Hamiltonian from Pauli products; an independent cross-check for small N."""
    X = np.array([[0, 1], [1, 0]], dtype=complex)
    Y = np.array([[0, -1j], [1j, 0]])
    Z = np.diag([1.0, -1.0]).astype(complex)

    def op(single: np.ndarray, q: int) -> np.ndarray:
        # Kronecker order puts qubit N-1 first so that bit q of the index is qubit q.
        mats = [single if k == q else np.eye(2) for k in reversed(range(N))]
        out = mats[0]
        for m in mats[1:]:
            out = np.kron(out, m)
        return out

    H = np.zeros((2**N, 2**N), dtype=complex)
    for i in range(N):
        j = (i + 1) % N
        H += -0.5 * (op(X, i) @ op(X, j) + op(Y, i) @ op(Y, j) - Delta * op(Z, i) @ op(Z, j))
    return H


def ground_state(model: XXZModel) -> tuple[float, np.ndarray]:
    E, V = np.linalg.eigh(xxz_hamiltonian(model).toarray())
    return float(E[0]), V[:, 0].astype(complex)


def free_fermion_energies(N: int) -> tuple[float, dict[float, float]]:
    """Delta=0 oracle from single-particle modes -2 cos k.

    Returns the ground energy and, per total momentum on the grid, the lowest
    energy above it, by enumerating all occupations of N/2 modes.  N/2 odd
    makes the spin chain's wrap bond equal to a periodic fermion bond.
    """
    if N % 4 != 2:
        raise ValueError("the mapping is periodic only for N = 2 + 4n")
    m = np.arange(N)
    eps = -2 * np.cos(2 * np.pi * m / N)
    best: dict[int, float] = {}
    for occ in combinations(range(N), N // 2):
        e = float(eps[list(occ)].sum())
        K = sum(occ) % N
        if e < best.get(K, math.inf):
            best[K] = e
    e0 = min(best.values())
    return e0, {_wrap_k(2 * np.pi * K / N, N): e - e0 for K, e in best.items()}


def _wrap_k(k: float, N: int) -> float:
    """Canonical grid momentum 2 pi m / N in (-pi, pi] for any k on the grid mod 2 pi."""
    m = k * N / (2 * math.pi)
    if abs(m - round(m)) > 1e-9:
        raise ValueError(f"momentum {k} is not on the 2*pi*m/{N} grid")
    m = int(round(m)) % N
    if m > N // 2:
        m -= N
    return 2 * math.pi * m / N


# --------------------------------------------------------------------------
# Momentum-resolved spectrum
# --------------------------------------------------------------------------


def momentum_grid_1d(N: int) -> np.ndarray:
    m = np.arange(-((N - 1) // 2), N // 2 + 1)
    return 2 * np.pi * m / N


def _orbits(basis: SectorBasis) -> list[np.ndarray]:
    perm = basis.translation
    seen = np.zeros(len(basis), dtype=bool)
    orbits = []
    for r in range(len(basis)):
        if seen[r]:
            continue
        orb = [r]
        nxt = perm[r]
        while nxt != r:
            orb.append(nxt)
            nxt = perm[nxt]
        seen[orb] = True
        orbits.append(np.array(orb))
    return orbits


def momentum_basis(basis: SectorBasis, k: float) -> sp.csr_matrix:
    """Orthonormal columns spanning the T-eigenvalue exp(-ik) subspace.

    Column for orbit r: sum_j exp(ikj) T^j |r> / sqrt(period); orbits whose
    period is incompatible with k drop out.
    """
    rows, cols, vals = [], [], []
    c = 0
    for orb in _orbits(basis):
        L = len(orb)
        if abs(np.exp(1j * k * L) - 1) > 1e-9:
            continue
        j = np.arange(L)
        rows.append(orb)
        cols.append(np.full(L, c))
        vals.append(np.exp(1j * k * j) / math.sqrt(L))
        c += 1
    if c == 0:
        return sp.csr_matrix((len(basis), 0), dtype=complex)
    return sp.csr_matrix(
        (np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))), shape=(len(basis), c)
    )


@dataclass
class MomentumLevel:
    energy: float  # lowest energy in the block, absolute
    excitation: float  # energy minus the global ground energy
    states: np.ndarray  # (dim, multiplicity) lowest multiplet in the sector basis

    @property
    def degenerate(self) -> bool:
        return self.states.shape[1] > 1


@dataclass
class MomentumSpectrum:
    model: XXZModel
    ground_energy: float
    entries: dict[float, MomentumLevel]

    def excitation(self, k: float) -> float:
        return self.entries[_wrap_k(k, self.model.N)].excitation

    def energy(self, k: float) -> float:
        return self.entries[_wrap_k(k, self.model.N)].energy

    @property
    def momenta(self) -> list[float]:
        return sorted(self.entries)

    @property
    def degenerate_momenta(self) -> list[float]:
        return [k for k in self.momenta if self.entries[k].degenerate]


def exact_lowest_excitations(model: XXZModel) -> MomentumSpectrum:
    """Lowest eigenstate (multiplet if within 1e-8) in every momentum block."""
    basis = model.basis
    H = xxz_hamiltonian(model)
    levels: dict[float, MomentumLevel] = {}
    for k in momentum_grid_1d(model.N):
        B = momentum_basis(basis, k)
        if B.shape[1] == 0:
            continue
        Hk = (B.conj().T @ (H @ B)).toarray()
        Hk = 0.5 * (Hk + Hk.conj().T)
        E, V = np.linalg.eigh(Hk)
        mult = int(np.sum(E - E[0] < DEGENERACY_TOL))
        levels[_wrap_k(k, model.N)] = MomentumLevel(float(E[0]), 0.0, B @ V[:, :mult])
    e0 = min(l.energy for l in levels.values())
    for l in levels.values():
        l.excitation = l.energy - e0
    return MomentumSpectrum(model, e0, levels)


# --------------------------------------------------------------------------
# Variational ansatz
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class AnsatzParameters:
    theta: np.ndarray

    def __post_init__(self) -> None:
        t = np.asarray(self.theta, dtype=float).ravel()
        if len(t) == 0 or len(t) % 4:
            raise ValueError("theta must hold 4 angles per layer")
        if not np.all(np.isfinite(t)):
            raise ValueError("theta must be finite")
        object.__setattr__(self, "theta", t)

    @property
    def n_layers(self) -> int:
        return len(self.theta) // 4

    def layer(self, l: int) -> tuple[float, float, float, float]:
        return tuple(self.theta[4 * l : 4 * l + 4])  # type: ignore[return-value]


def even_bonds(N: int) -> list[tuple[int, int]]:
    return [(i, i + 1) for i in range(0, N, 2)]


def odd_bonds(N: int) -> list[tuple[int, int]]:
    return [(i, (i + 1) % N) for i in range(1, N, 2)]


def ansatz_circuit(params: AnsatzParameters, N: int) -> ir.Circuit:
    """Layer l = 0 acts first; within a layer the even bonds act before the odd ones."""
    circ = ir.Circuit(N)
    for l in range(params.n_layers):
        a, b, c, d = params.layer(l)
        circ.extend(ir.xxz(i, j, a, b) for i, j in even_bonds(N))
        circ.extend(ir.xxz(i, j, c, d) for i, j in odd_bonds(N))
    return circ


def apply_ansatz(theta: np.ndarray, psi: np.ndarray, basis: SectorBasis) -> np.ndarray:
    out = np.array(psi, dtype=complex)
    N = basis.N
    for l in range(len(theta) // 4):
        a, b, c, d = theta[4 * l : 4 * l + 4]
        for i, j in even_bonds(N):
            apply_xxz_gate(out, basis, i, j, a, b)
        for i, j in odd_bonds(N):
            apply_xxz_gate(out, basis, i, j, c, d)
    return out


def adiabatic_initial_guess(n_layers: int, Delta: float) -> AnsatzParameters:
    if n_layers < 1:
        raise ValueError("need at least one layer")
    theta = []
    for l in range(n_layers):
        theta += [1 / n_layers, Delta / n_layers, (l + 0.5) / n_layers**2, Delta * (l + 0.5) / n_layers**2]
    return AnsatzParameters(np.array(theta))


# --------------------------------------------------------------------------
# Singlet wavepacket initial state
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class QuasiparticleWavepacketSpec:
    """Gaussian singlet wavepacket; ``x0`` is in two-site cells (None: central cell)."""

    k0: float
    sigma_p: float
    x0: float | None = None

    def __post_init__(self) -> None:
        if self.sigma_p <= 0:
            raise ValueError("sigma_p must be positive")


def cell_momenta(N: int) -> np.ndarray:
    """Momenta 2 pi m / N in (-pi/2, pi/2]: one per translation-by-two eigenvalue."""
    n_cells = N // 2
    m = np.arange(-((n_cells - 1) // 2), n_cells // 2 + 1)
    return 2 * np.pi * m / N


def support_leak(spec: QuasiparticleWavepacketSpec, N: int) -> float:
    """Share of the grid momentum weight exp(-(k-k0)^2 / (2 sigma_p^2)) outside 0 < |k| < pi/2.

    k = 0 counts as outside: the lowest state there is the ground state.
    """
    k = cell_momenta(N)
    w = np.exp(-((k - spec.k0) ** 2) / (2 * spec.sigma_p**2))
    inside = (np.abs(k) > 1e-12) & (np.abs(k) < math.pi / 2 - 1e-12)
    return float(w[~inside].sum() / w.sum())


def singlet_amplitudes(spec: QuasiparticleWavepacketSpec, N: int) -> np.ndarray:
    """c_n over cells n = 0..N/2-1 (singlet on qubits 2n, 2n+1)."""
    if N % 2 or N < 4:
        raise ValueError("N must be even and >= 4")
    leak = support_leak(spec, N)
    if leak >= SUPPORT_LEAK:
        raise ValueError(f"wavepacket has {leak:.2e} of its weight outside 0 < |k| < pi/2")
    n_cells = N // 2
    x0 = spec.x0 if spec.x0 is not None else (n_cells - 1) / 2
    k = cell_momenta(N)
    n = np.arange(n_cells)
    g = np.exp(-((k - spec.k0) ** 2) / (4 * spec.sigma_p**2))
    c = np.exp(2j * np.outer(n - x0, k)) @ g
    return c / np.linalg.norm(c)


def _pair_state(singlet: bool) -> dict[tuple[int, int], float]:
    # (bit of even qubit, bit of odd qubit) -> amplitude
    s = -1.0 if singlet else 1.0
    return {(1, 0): 1 / math.sqrt(2), (0, 1): s / math.sqrt(2)}


def singlet_product_state(N: int, cell: int) -> np.ndarray:
    """Triplets on every cell except a singlet on ``cell``, in the half-filling sector."""
    basis = _sector(N, N // 2)
    amps = {0: 1.0 + 0j}
    for c in range(N // 2):
        nxt = {}
        for state, a in amps.items():
            for (be, bo), v in _pair_state(c == cell).items():
                nxt[state | (be << (2 * c)) | (bo << (2 * c + 1))] = a * v
        amps = nxt
    psi = np.zeros(len(basis), dtype=complex)
    keys = np.array(list(amps), dtype=np.int64)
    psi[basis.index(keys)] = np.array(list(amps.values()))
    return psi


def triplet_product_state(N: int) -> np.ndarray:
    return singlet_product_state(N, -1)


def pair_block_ops(even: int, odd: int) -> list[ir.GateOp]:
    """Triplet from |00>, or the singlet if the even qubit already holds an X."""
    return [ir.ry(even, math.pi / 2), ir.cnot(even, odd), ir.x(odd)]


@dataclass
class InitialWavepacket:
    amplitudes: np.ndarray  # c_n per cell
    state: np.ndarray  # sector-basis state vector
    circuit: ir.Circuit


def initial_wavepacket_state(spec: QuasiparticleWavepacketSpec, N: int) -> InitialWavepacket:
    c = singlet_amplitudes(spec, N)
    psi = sum(cn * singlet_product_state(N, n) for n, cn in enumerate(c))
    w = np.zeros(N, dtype=complex)
    w[0::2] = c
    circ = ir.Circuit(N, plan_amplitude_tree(w, support=range(0, N, 2)).gate_ops())
    for n in range(N // 2):
        circ.extend(pair_block_ops(2 * n, 2 * n + 1))
    return InitialWavepacket(c, np.asarray(psi), circ)


def sector_to_full(psi: np.ndarray, N: int) -> np.ndarray:
    basis = _sector(N, N // 2)
    out = np.zeros(2**N, dtype=complex)
    out[basis.states] = psi
    return out


# --------------------------------------------------------------------------
# Energies and optimization
# --------------------------------------------------------------------------


def expectation(H: sp.spmatrix, psi: np.ndarray) -> float:
    return float(np.vdot(psi, H @ psi).real)


def energy_objective(theta: np.ndarray, model: XXZModel, psi_init: np.ndarray, H: sp.spmatrix | None = None) -> float:
    if H is None:
        H = xxz_hamiltonian(model)
    psi = apply_ansatz(np.asarray(theta, dtype=float), psi_init, model.basis)
    return expectation(H, psi)


def wavepacket_energy(model: XXZModel, psi_init: np.ndarray, spectrum: MomentumSpectrum | None = None) -> float:
    """Lowest energy reachable by a translation-by-two invariant circuit.

    The initial state's weight in each T^2 sector (momenta k and k + pi) is
    conserved, so the minimum puts each weight on the lower of E(k), E(k+pi).
    """
    spectrum = spectrum or exact_lowest_excitations(model)
    basis = model.basis
    total = 0.0
    for k in cell_momenta(model.N):
        weight = 0.0
        for kk in (k, k + np.pi):
            B = momentum_basis(basis, kk)
            if B.shape[1]:
                weight += float(np.linalg.norm(B.conj().T @ psi_init) ** 2)
        e = min(spectrum.energy(k), spectrum.energy(k + np.pi))
        total += weight * e
    return total


def central_difference_gradient(f: Callable[[np.ndarray], float], x: np.ndarray, h: float = FD_STEP) -> np.ndarray:
    g = np.empty_like(x)
    for i in range(len(x)):
        e = np.zeros_like(x)
        e[i] = h
        g[i] = (f(x + e) - f(x - e)) / (2 * h)
    return g


def gradient_step_check(f: Callable[[np.ndarray], float], x: np.ndarray, h: float = FD_STEP) -> float:
    """Largest component change when the difference step grows tenfold.

    The central-difference error scales as h^2, so agreement between h and
    10h bounds the truncation error of the h gradient by about 1/99 of this.
    """
    return float(np.max(np.abs(central_difference_gradient(f, x, h) - central_difference_gradient(f, x, 10 * h))))


@dataclass
class VariationalResult:
    theta: np.ndarray
    energy: float
    trace: list[float]
    evaluations: int
    converged: bool
    message: str = ""
    initial_energy: float = math.nan
    # max |g(h) - g(10h)| at theta; small values mean the step-1e-4 gradient is resolved
    gradient_check: float = math.nan


class _Budget(Exception):
    pass


def optimize(
    model: XXZModel,
    spec: QuasiparticleWavepacketSpec,
    n_layers: int,
    tol: float = 1e-10,
    max_evals: int = 200_000,
    psi_init: np.ndarray | None = None,
    theta0: np.ndarray | None = None,
) -> VariationalResult:
    """Minimize the ansatz energy from the adiabatic guess.

    Quasi-Newton (BFGS) steps with a central-difference gradient; the line
    search only accepts iterates that lower the energy.  Stops when an
    accepted step changes the energy by less than ``tol`` or the evaluation
    budget is spent; in both cases the best point seen is returned.
    """
    H = xxz_hamiltonian(model)
    if psi_init is None:
        psi_init = initial_wavepacket_state(spec, model.N).state
    x0 = adiabatic_initial_guess(n_layers, model.Delta).theta if theta0 is None else np.asarray(theta0, dtype=float)
    count = 0
    best = [math.inf, x0.copy()]

    def f(x: np.ndarray) -> float:
        nonlocal count
        if count >= max_evals:
            raise _Budget
        count += 1
        e = energy_objective(x, model, psi_init, H)
        if e < best[0]:
            best[0], best[1] = e, x.copy()
        return e

    e_start = f(x0)
    trace = [e_start]

    def callback(intermediate_result) -> None:
        e = float(intermediate_result.fun)
        prev = trace[-1]
        trace.append(e)
        if abs(prev - e) < tol:
            raise StopIteration

    converged, message = False, ""
    try:
        res = scipy.optimize.minimize(
            f, x0, jac=lambda x: central_difference_gradient(f, x), method="BFGS",
            callback=callback, options={"gtol": 1e-9, "maxiter": 100_000},
        )
        converged = bool(res.success) or (len(trace) > 1 and abs(trace[-1] - trace[-2]) < tol)
        message = str(res.message)
    except _Budget:
        message = "evaluation budget exhausted"
    check = gradient_step_check(lambda x: energy_objective(x, model, psi_init, H), best[1])
    return VariationalResult(best[1], float(best[0]), trace, count, converged, message, e_start, check)


# --------------------------------------------------------------------------
# Dynamics
# --------------------------------------------------------------------------


def bond_energies(model: XXZModel, psi: np.ndarray) -> np.ndarray:
    """<h_n> for every bond n = 0..N-1 (bond n joins sites n and n+1)."""
    basis = model.basis
    prob = np.abs(psi) ** 2
    out = np.empty(model.N)
    for n in range(model.N):
        i, j = n, (n + 1) % model.N
        _, lo, hi = basis.bond(i, j)
        diag = 0.5 * model.Delta * float(prob @ basis.zz(i, j))
        hop = -2.0 * float(np.vdot(psi[hi], psi[lo]).real)
        out[n] = diag + hop
    return out


def trotter_step(psi: np.ndarray, model: XXZModel, dt: float) -> np.ndarray:
    """First order: even bonds then odd bonds, each exp(-i h_n dt)."""
    basis = model.basis
    for i, j in even_bonds(model.N) + odd_bonds(model.N):
        apply_xxz_gate(psi, basis, i, j, -dt, model.Delta * dt)
    return psi


@dataclass
class EnergyDensity:
    times: np.ndarray
    density: np.ndarray  # (T, N) ground-subtracted bond energies
    total: np.ndarray  # (T,) energy above the ground state

    def center(self) -> np.ndarray:
        """Circular centre of the density per time, in sites, unwrapped."""
        N = self.density.shape[1]
        phase = np.exp(2j * np.pi * np.arange(N) / N)
        angle = np.unwrap(np.angle(self.density @ phase))
        return angle * N / (2 * np.pi)

    def velocity(self) -> float:
        return float(np.polyfit(self.times, self.center(), 1)[0])


def evolve_energy_density(
    state: np.ndarray, model: XXZModel, t_grid: Sequence[float], dt: float | None = None
) -> EnergyDensity:
    """E_n(t) = <h_n>_t - <h_n>_ground, exactly (dt=None) or by Trotter steps of size dt."""
    H = xxz_hamiltonian(model).toarray()
    E, V = np.linalg.eigh(H)
    gs = V[:, 0].astype(complex)
    base = bond_energies(model, gs)
    t = np.asarray(t_grid, dtype=float)
    psi0 = np.asarray(state, dtype=complex)
    rows, totals = [], []
    if dt is None:
        coeff = V.T @ psi0
        for ti in t:
            psi = V @ (np.exp(-1j * E * ti) * coeff)
            rows.append(bond_energies(model, psi) - base)
            totals.append(float(np.vdot(psi, H @ psi).real) - E[0])
    else:
        psi = psi0.copy()
        now = 0.0
        for ti in t:
            n = round((ti - now) / dt)
            if n < 0 or abs((ti - now) / dt - n) > 1e-9:
                raise ValueError("t_grid must advance in multiples of dt")
            for _ in range(n):
                trotter_step(psi, model, dt)
            now = ti
            rows.append(bond_energies(model, psi) - base)
            totals.append(float(np.vdot(psi, H @ psi).real) - E[0])
    return EnergyDensity(t, np.array(rows), np.array(totals))
