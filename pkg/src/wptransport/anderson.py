"""Single-particle Anderson model on periodic hypercubic lattices.

Sites are flattened with the first coordinate fastest, so on a 2D lattice the
site ``(x, y)`` has index ``n = Lx * y + x``.  All states live in the
single-excitation sector and are plain length-N complex amplitude vectors.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence, Union

import numpy as np

from . import _rng
from ._parallel import parallel_map

NORM_TOL = 1e-12


# --------------------------------------------------------------------------
# Geometry
# --------------------------------------------------------------------------


class _Periodic:
    shape: tuple[int, ...]

    def _check(self) -> None:
        for L in self.shape:
            if int(L) != L or L < 3:
                raise ValueError(f"lattice sides must be integers >= 3, got {self.shape}")

    @property
    def dim(self) -> int:
        return len(self.shape)

    @property
    def num_sites(self) -> int:
        return int(np.prod(self.shape))

    def site_index(self, *coords: int) -> int:
        if len(coords) != self.dim:
            raise ValueError(f"expected {self.dim} coordinates")
        n, stride = 0, 1
        for c, L in zip(coords, self.shape):
            n += (int(c) % L) * stride
            stride *= L
        return n

    def coords(self) -> np.ndarray:
        """``(N, D)`` integer coordinates of every site, in index order."""
        grids = np.meshgrid(*[np.arange(L) for L in reversed(self.shape)], indexing="ij")
        return np.stack([g.ravel() for g in reversed(grids)], axis=1)

    def center(self) -> tuple[float, ...]:
        return tuple((L - 1) / 2 for L in self.shape)

    def neighbor_pairs(self) -> np.ndarray:
        """Each nearest-neighbour bond ``(i, j)`` once, ``j`` the +1 neighbour of ``i``."""
        xyz = self.coords()
        idx = np.arange(self.num_sites)
        pairs = []
        for d, L in enumerate(self.shape):
            shifted = xyz.copy()
            shifted[:, d] = (shifted[:, d] + 1) % L
            pairs.append(np.stack([idx, self._flat(shifted)], axis=1))
        return np.concatenate(pairs)

    def _flat(self, xyz: np.ndarray) -> np.ndarray:
        strides = np.cumprod((1,) + self.shape[:-1])
        return (xyz * strides).sum(axis=1)


@dataclass(frozen=True)
class Lattice2D(_Periodic):
    Lx: int
    Ly: int

    def __post_init__(self) -> None:
        self._check()

    @property
    def shape(self) -> tuple[int, int]:  # type: ignore[override]
        return (self.Lx, self.Ly)


@dataclass(frozen=True)
class Chain(_Periodic):
    """Periodic 1D chain; used by the variance analysis."""

    L: int

    def __post_init__(self) -> None:
        self._check()

    @property
    def shape(self) -> tuple[int]:  # type: ignore[override]
        return (self.L,)


Lattice = Union[Lattice2D, Chain]


@dataclass(frozen=True, eq=False)
class DisorderRealization:
    strength: float
    values: np.ndarray
    seed: int | None = None

    def __post_init__(self) -> None:
        v = np.asarray(self.values, dtype=float)
        if self.strength < 0:
            raise ValueError("disorder strength must be >= 0")
        if np.any(np.abs(v) > self.strength / 2):
            raise ValueError("disorder values must lie in [-W/2, W/2]")
        object.__setattr__(self, "values", v)

    @classmethod
    def generate(cls, num_sites: int, strength: float, seed: int) -> "DisorderRealization":
        """Uniform W_i in [-W/2, W/2); bit-reproducible from ``(seed, W, N)``."""
        rng = _rng.stream(seed, _rng.DISORDER)
        values = rng.uniform(-strength / 2, strength / 2, size=int(num_sites))
        return cls(float(strength), values, int(seed))

    @classmethod
    def clean(cls, num_sites: int) -> "DisorderRealization":
        return cls(0.0, np.zeros(int(num_sites)), None)

    @classmethod
    def constant(cls, num_sites: int, value: float) -> "DisorderRealization":
        return cls(2 * abs(value), np.full(int(num_sites), float(value)), None)

    def __len__(self) -> int:
        return len(self.values)


def realization_seed(master_seed: int, index: int) -> int:
    """Seed of realization ``index``: counter scheme keyed by (master_seed, index)."""
    return _rng.derive_seed(master_seed, _rng.DISORDER, index)


# --------------------------------------------------------------------------
# States
# --------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class SingleParticleState:
    amplitudes: np.ndarray

    def __post_init__(self) -> None:
        a = np.asarray(self.amplitudes, dtype=complex)
        if a.ndim != 1:
            raise ValueError("amplitudes must be a vector")
        if abs(np.vdot(a, a).real - 1) > NORM_TOL:
            raise ValueError("state is not normalized")
        object.__setattr__(self, "amplitudes", a)

    @classmethod
    def basis(cls, num_sites: int, site: int) -> "SingleParticleState":
        a = np.zeros(num_sites, dtype=complex)
        a[site] = 1.0
        return cls(a)

    @classmethod
    def normalized(cls, amplitudes: Sequence[complex]) -> "SingleParticleState":
        a = np.asarray(amplitudes, dtype=complex)
        return cls(a / np.linalg.norm(a))

    @property
    def num_sites(self) -> int:
        return len(self.amplitudes)

    @property
    def probabilities(self) -> np.ndarray:
        return np.abs(self.amplitudes) ** 2

    @property
    def support(self) -> np.ndarray:
        return np.flatnonzero(self.amplitudes != 0)

    def __len__(self) -> int:
        return len(self.amplitudes)


StateLike = Union[SingleParticleState, np.ndarray, Sequence[complex]]


def _amps(state: StateLike) -> np.ndarray:
    if isinstance(state, SingleParticleState):
        return state.amplitudes
    return np.asarray(state, dtype=complex)


@dataclass(frozen=True)
class WavepacketSpec:
    """Gaussian wavepacket parameters, one entry per lattice dimension.

    ``x0=None`` centres the packet on the lattice, ``((L-1)/2, ...)``.
    ``k0`` need not lie on the momentum grid; only the summed momenta do.
    """

    k0: tuple[float, ...]
    sigma_p: tuple[float, ...]
    x0: tuple[float, ...] | None = None
    trunc_threshold: float = 0.0

    def __post_init__(self) -> None:
        k0 = tuple(float(k) for k in np.atleast_1d(self.k0))
        sp = tuple(float(s) for s in np.atleast_1d(self.sigma_p))
        if len(k0) != len(sp):
            raise ValueError("k0 and sigma_p must have the same length")
        for k in k0:
            if not (-math.pi < k <= math.pi + 1e-12):
                raise ValueError(f"k0 components must lie in (-pi, pi], got {k0}")
        if any(s <= 0 for s in sp):
            raise ValueError("sigma_p must be positive")
        if not (0 <= self.trunc_threshold < 1):
            raise ValueError("trunc_threshold must be in [0, 1)")
        object.__setattr__(self, "k0", k0)
        object.__setattr__(self, "sigma_p", sp)
        if self.x0 is not None:
            object.__setattr__(self, "x0", tuple(float(x) for x in np.atleast_1d(self.x0)))

    def sigma_tilde(self, shape: Sequence[int]) -> tuple[float, ...]:
        """Momentum spread in units of the grid spacing, sigma_p * L / (2 pi)."""
        return tuple(s * L / (2 * math.pi) for s, L in zip(self.sigma_p, shape))

    def center(self, lattice: Lattice) -> tuple[float, ...]:
        return self.x0 if self.x0 is not None else lattice.center()


@dataclass(frozen=True, eq=False)
class SpectrumResult:
    energies: np.ndarray
    eigenvectors: np.ndarray

    @property
    def rescaled_energies(self) -> np.ndarray:
        return rescale(self.energies)


# --------------------------------------------------------------------------
# Operations
# --------------------------------------------------------------------------


def build_hamiltonian(lattice: Lattice, disorder: DisorderRealization | np.ndarray | None = None) -> np.ndarray:
    """Dense hopping matrix with -1 on periodic nearest-neighbour bonds plus W_i on the diagonal."""
    N = lattice.num_sites
    if disorder is None:
        w = np.zeros(N)
    else:
        w = np.asarray(disorder.values if isinstance(disorder, DisorderRealization) else disorder, dtype=float)
    if w.shape != (N,):
        raise ValueError(f"disorder has {w.size} values for a lattice of {N} sites")
    H = np.diag(w)
    i, j = lattice.neighbor_pairs().T
    H[i, j] = -1.0
    H[j, i] = -1.0
    return H


def dispersion(k: Sequence[float] | float) -> float:
    """Free dispersion -2 * sum_i cos(k_i)."""
    return float(-2.0 * np.cos(np.atleast_1d(np.asarray(k, dtype=float))).sum())


def momentum_grid(L: int) -> np.ndarray:
    """Allowed momenta 2 pi m / L in (-pi, pi], ascending."""
    m = np.arange(-((L - 1) // 2), L // 2 + 1)
    return 2 * np.pi * m / L


def _grid_index(k: float, L: int) -> int:
    m = k * L / (2 * np.pi)
    if abs(m - round(m)) > 1e-9:
        raise ValueError(f"momentum {k} is not on the 2*pi*n/{L} grid")
    return int(round(m))


def plane_wave(lattice: Lattice, k: Sequence[float]) -> SingleParticleState:
    k = np.atleast_1d(np.asarray(k, dtype=float))
    if len(k) != lattice.dim:
        raise ValueError("momentum dimension does not match lattice")
    for ki, L in zip(k, lattice.shape):
        _grid_index(ki, L)
        if not (-np.pi < ki <= np.pi + 1e-12):
            raise ValueError(f"momentum {ki} outside (-pi, pi]")
    phase = lattice.coords() @ k
    return SingleParticleState(np.exp(1j * phase) / math.sqrt(lattice.num_sites))


def wavepacket_amplitudes(lattice: Lattice, spec: WavepacketSpec) -> np.ndarray:
    """Untruncated, normalized wavepacket amplitudes.

    The Gaussian momentum weight is separable, so the position profile is an
    outer product of one 1D sum per dimension.
    """
    if len(spec.k0) != lattice.dim:
        raise ValueError("wavepacket spec dimension does not match lattice")
    x0 = spec.center(lattice)
    factors = []
    for L, k0, sp, xc in zip(lattice.shape, spec.k0, spec.sigma_p, x0):
        k = momentum_grid(L)
        x = np.arange(L)
        weight = np.exp(-((k - k0) ** 2) / (4 * sp**2))
        factors.append(np.exp(1j * np.outer(x - xc, k)) @ weight)
    amps = factors[0]
    for f in factors[1:]:
        amps = np.multiply.outer(f, amps).ravel()
    return amps / np.linalg.norm(amps)


def build_wavepacket(lattice: Lattice, spec: WavepacketSpec) -> SingleParticleState:
    amps = wavepacket_amplitudes(lattice, spec)
    if spec.trunc_threshold > 0:
        probs = np.abs(amps) ** 2
        if spec.trunc_threshold >= probs.max():
            raise ValueError("truncation threshold removes every site")
        amps = np.where(probs < spec.trunc_threshold, 0.0, amps)
        amps = amps / np.linalg.norm(amps)
    return SingleParticleState(amps)


def ipr(state: StateLike) -> float:
    return float(np.sum(np.abs(_amps(state)) ** 4))


def diagonalize(H: np.ndarray) -> SpectrumResult:
    E, V = np.linalg.eigh(H)
    return SpectrumResult(E, V)


def rescale(energies: np.ndarray) -> np.ndarray:
    """Affine map of one realization's energies onto [0, 1]."""
    lo, hi = energies.min(), energies.max()
    if hi == lo:
        return np.zeros_like(energies)
    return (energies - lo) / (hi - lo)


def evolve(spectrum: SpectrumResult, state: StateLike, times: Sequence[float] | float) -> np.ndarray:
    """e^{-iHt}|psi> for each t; returns shape ``(len(times), N)`` (or ``(N,)`` for scalar t)."""
    psi = _amps(state)
    coeff = spectrum.eigenvectors.conj().T @ psi
    t = np.asarray(times, dtype=float)
    phases = np.exp(-1j * np.multiply.outer(t, spectrum.energies))
    return (phases * coeff) @ spectrum.eigenvectors.T


def exact_evolve(H: np.ndarray, state: StateLike, t: float) -> SingleParticleState:
    psi = evolve(diagonalize(H), state, float(t))
    return SingleParticleState(psi / np.linalg.norm(psi))


def spectrum_overlaps(H: np.ndarray | SpectrumResult, state: StateLike) -> tuple[np.ndarray, np.ndarray]:
    """(rescaled energy, |<v_k|psi>|^2) for every eigenvector."""
    spec = H if isinstance(H, SpectrumResult) else diagonalize(H)
    overlaps = np.abs(spec.eigenvectors.conj().T @ _amps(state)) ** 2
    return spec.rescaled_energies, overlaps


@dataclass(frozen=True, eq=False)
class IPRCurve:
    """Binned eigenstate IPR. Empty bins carry ``nan`` mean and zero count."""

    edges: np.ndarray
    mean: np.ndarray
    stderr: np.ndarray
    counts: np.ndarray = field(repr=False)

    @property
    def centers(self) -> np.ndarray:
        return 0.5 * (self.edges[1:] + self.edges[:-1])

    @property
    def present(self) -> np.ndarray:
        return self.counts > 0


def _eigen_iprs(args: tuple[tuple[int, ...], float, int]) -> tuple[np.ndarray, np.ndarray]:
    shape, W, seed = args
    lattice = _lattice_from_shape(shape)
    disorder = DisorderRealization.generate(lattice.num_sites, W, seed)
    spec = diagonalize(build_hamiltonian(lattice, disorder))
    return spec.rescaled_energies, np.sum(np.abs(spec.eigenvectors) ** 4, axis=0)


def _lattice_from_shape(shape: Sequence[int]) -> Lattice:
    return Chain(shape[0]) if len(shape) == 1 else Lattice2D(*shape)


def ipr_vs_energy(
    lattice: Lattice,
    W: float,
    n_realizations: int,
    bins: int,
    master_seed: int,
    workers: int = 1,
) -> IPRCurve:
    """Disorder-averaged eigenstate IPR binned over per-realization rescaled energy.

    At W = 0 degenerate eigenspaces make individual eigenvector IPRs
    basis-dependent; no rotation within degenerate blocks is attempted.
    """
    if n_realizations < 1:
        raise ValueError("need at least one realization")
    jobs = [(lattice.shape, W, realization_seed(master_seed, r)) for r in range(n_realizations)]
    results = parallel_map(_eigen_iprs, jobs, workers)
    edges = np.linspace(0.0, 1.0, bins + 1)
    energies = np.concatenate([r[0] for r in results])
    values = np.concatenate([r[1] for r in results])
    which = np.clip(np.searchsorted(edges, energies, side="right") - 1, 0, bins - 1)
    counts = np.bincount(which, minlength=bins)
    sums = np.bincount(which, weights=values, minlength=bins)
    sq = np.bincount(which, weights=values**2, minlength=bins)
    with np.errstate(invalid="ignore", divide="ignore"):
        mean = np.where(counts > 0, sums / counts, np.nan)
        var = np.where(counts > 1, (sq - counts * mean**2) / (counts - 1), np.nan)
        stderr = np.sqrt(np.maximum(var, 0.0) / counts)
    return IPRCurve(edges, mean, stderr, counts)


def ipr_timeseries(
    lattice: Lattice,
    disorder: DisorderRealization,
    spec: WavepacketSpec,
    t_grid: Sequence[float],
) -> np.ndarray:
    spectrum = diagonalize(build_hamiltonian(lattice, disorder))
    psi0 = build_wavepacket(lattice, spec)
    states = evolve(spectrum, psi0, np.atleast_1d(t_grid))
    return np.sum(np.abs(states) ** 4, axis=1)


def _timeseries_job(args) -> np.ndarray:
    shape, W, seed, specs, t_grid = args
    lattice = _lattice_from_shape(shape)
    disorder = DisorderRealization.generate(lattice.num_sites, W, seed)
    spectrum = diagonalize(build_hamiltonian(lattice, disorder))
    out = []
    for spec in specs:
        states = evolve(spectrum, build_wavepacket(lattice, spec), t_grid)
        out.append(np.sum(np.abs(states) ** 4, axis=1))
    return np.array(out)


def ipr_timeseries_ensemble(
    lattice: Lattice,
    W: float,
    specs: Sequence[WavepacketSpec],
    t_grid: Sequence[float],
    n_realizations: int,
    master_seed: int,
    workers: int = 1,
) -> np.ndarray:
    """IPR(t) for several wavepackets over many disorder realizations.

    Returns shape ``(n_realizations, len(specs), len(t_grid))``; each
    realization shares one diagonalization across all wavepackets.
    """
    t = np.atleast_1d(np.asarray(t_grid, dtype=float))
    jobs = [(lattice.shape, W, realization_seed(master_seed, r), tuple(specs), t) for r in range(n_realizations)]
    return np.array(parallel_map(_timeseries_job, jobs, workers))
