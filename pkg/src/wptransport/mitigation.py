"""Readout bit-flip noise, post-selection and maximum-likelihood mitigation.

Everything works on aggregated :class:`ShotSet` records, so cost scales with
the number of distinct bitstrings rather than with shots.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, NamedTuple, Sequence

import numpy as np

from . import _rng
from .shots import ShotSet

EPS_FLOOR = 1e-9
EPS_CEIL = 0.5 - 1e-9
# Allowed log-likelihood decrease per EM step from rounding alone.
MONOTONE_SLACK = 1e-9


class MitigationError(ValueError):
    pass


@dataclass(frozen=True)
class BitFlipModel:
    epsilon: float

    def __post_init__(self) -> None:
        if not (0.0 <= self.epsilon < 0.5):
            raise ValueError("bit-flip probability must lie in [0, 1/2)")


def corrupt(shots: ShotSet, model: BitFlipModel, seed: int) -> ShotSet:
    """Flip every bit of every shot independently with probability epsilon."""
    if model.epsilon == 0 or shots.total == 0:
        return shots
    rng = _rng.stream(seed, _rng.NOISE)
    bits = shots.expand()
    flips = rng.random(bits.shape) < model.epsilon
    return ShotSet.from_bits(bits ^ flips.astype(np.uint8))


def hamming_distance(a: str, b: str) -> int:
    if len(a) != len(b):
        raise ValueError("bitstrings differ in length")
    return sum(x != y for x, y in zip(a, b))


def postselect(shots: ShotSet, n_e: int) -> tuple[ShotSet, float]:
    kept = {b: c for b, c in shots.records.items() if b.count("1") == n_e}
    total = shots.total
    out = ShotSet(shots.num_qubits, kept)
    return out, (out.total / total if total else 0.0)


def weight_preserving_rate(N: int, epsilon: float) -> float:
    """Probability that a one-hot string still has Hamming weight 1 after the channel.

    Either nothing flips, or the excited bit and exactly one other bit flip.
    """
    return (1 - epsilon) ** N + (N - 1) * epsilon**2 * (1 - epsilon) ** (N - 2)


def ipr_from_distribution(p: Sequence[float]) -> float:
    p = np.asarray(p, dtype=float)
    return float(math.fsum(p**2))


def ps_distribution(shots: ShotSet) -> np.ndarray:
    """Normalized one-hot frequencies after post-selecting weight-1 strings."""
    kept, _ = postselect(shots, 1)
    if kept.total == 0:
        raise MitigationError("no shots survive post-selection")
    bits, counts = kept.bits()
    p = np.zeros(shots.num_qubits)
    np.add.at(p, np.argmax(bits, axis=1), counts)
    return p / p.sum()


# --------------------------------------------------------------------------
# EM maximum likelihood over the one-hot mixture
# --------------------------------------------------------------------------


@dataclass
class MLEstimate:
    p_hat: np.ndarray
    epsilon_hat: float
    log_likelihood: float
    iterations: int
    converged: bool
    trace: list[float] = field(default_factory=list, repr=False)


def _distances(bits: np.ndarray) -> np.ndarray:
    """(M, N) Hamming distances from each measured string to each e_i."""
    w = bits.sum(axis=1, keepdims=True).astype(float)
    return np.where(bits == 1, w - 1, w + 1)


@dataclass
class _EStep:
    loglik: float
    on: np.ndarray  # (M,) responsibility mass on components whose bit is set, per shot
    s: np.ndarray  # (M,) sum of p over set bits


def _e_step(bits: np.ndarray, weights: np.ndarray, counts: np.ndarray, p: np.ndarray, eps: float) -> _EStep:
    """Mixture terms in closed form.

    For string j of weight w, components with bit i set sit at distance w-1
    and the rest at w+1, so the mixture is
    eps^(w-1) (1-eps)^(N-w+1) [S_j + rho (1 - S_j)] with S_j the p-mass on
    set bits and rho = (eps / (1 - eps))^2.
    """
    N = bits.shape[1]
    S = np.clip(bits @ p, 0.0, 1.0)
    rho = (eps / (1 - eps)) ** 2
    inner = S + rho * (1 - S)
    log_b = (weights - 1) * math.log(eps) + (N - weights + 1) * math.log1p(-eps)
    ll = math.fsum(counts * (log_b + np.log(inner)))
    return _EStep(ll, S / inner, S)


def mle_fit(
    shots: ShotSet,
    init: tuple[np.ndarray, float] | None = None,
    tol: float = 1e-10,
    max_iter: int = 10_000,
) -> MLEstimate:
    """EM fit of the one-hot distribution and the flip rate.

    Maximizes sum_j c_j log sum_i p_i eps^d (1-eps)^(N-d) with d the Hamming
    distance from string j to e_i.  Responsibilities are
    r_ji = p_i eps^d (1-eps)^(N-d) / mixture_j, evaluated through the
    closed form in :func:`_e_step` rather than as an (M, N) table.
    """
    N = shots.num_qubits
    bits, counts = shots.bits()
    if counts.sum() == 0:
        raise MitigationError("no shots to fit")
    bitsf = bits.astype(float)
    countsf = counts.astype(float)
    weights = bitsf.sum(axis=1)
    n_shots = float(countsf.sum())
    if init is None:
        onehot = weights == 1
        p = np.zeros(N)
        if onehot.any():
            np.add.at(p, np.argmax(bits[onehot], axis=1), countsf[onehot])
            p /= p.sum()
        p = 0.9 * p + 0.1 / N
        eps = float(np.dot(countsf, np.abs(weights - 1))) / (n_shots * N)
    else:
        p = np.asarray(init[0], dtype=float).copy()
        p /= p.sum()
        eps = float(init[1])
    eps = min(max(eps, EPS_FLOOR), EPS_CEIL)

    e = _e_step(bitsf, weights, countsf, p, eps)
    ll = e.loglik
    trace = [ll]
    converged = False
    it = 0
    for it in range(1, max_iter + 1):
        # Component i collects r_ji from strings with bit i set (share on/S of
        # the set-bit mass) and from strings without it (share (1-on)/(1-S)).
        with np.errstate(invalid="ignore", divide="ignore"):
            per_on = np.where(e.s > 0, e.on / e.s, 0.0)
            per_off = np.where(e.s < 1, (1 - e.on) / (1 - e.s), 0.0)
        a = countsf * per_on
        b = countsf * per_off
        p = p * (bitsf.T @ a + (b.sum() - bitsf.T @ b))
        p = np.maximum(p, 0.0)
        p /= math.fsum(p)
        dist = math.fsum(countsf * (e.on * (weights - 1) + (1 - e.on) * (weights + 1)))
        eps = min(max(dist / (N * n_shots), EPS_FLOOR), EPS_CEIL)
        e = _e_step(bitsf, weights, countsf, p, eps)
        if e.loglik < ll - MONOTONE_SLACK * max(1.0, abs(ll)):
            raise AssertionError(f"EM log-likelihood decreased at iteration {it}: {ll} -> {e.loglik}")
        trace.append(e.loglik)
        gain = e.loglik - ll
        ll = e.loglik
        if gain < tol:
            converged = True
            break
    return MLEstimate(p, eps, ll, it, converged, trace)


def mixture_loglik(shots: ShotSet, p: np.ndarray, eps: float) -> float:
    """Direct evaluation of the log-likelihood from the (M, N) distance table."""
    bits, counts = shots.bits()
    N = shots.num_qubits
    d = _distances(bits)
    comp = np.exp(d * math.log(eps) + (N - d) * math.log1p(-eps))
    return math.fsum(counts * np.log(comp @ np.asarray(p, dtype=float)))


# --------------------------------------------------------------------------
# Estimators and bootstrap
# --------------------------------------------------------------------------


def ps_ipr(shots: ShotSet) -> float:
    return ipr_from_distribution(ps_distribution(shots))


def mle_ipr(shots: ShotSet) -> float:
    return ipr_from_distribution(mle_fit(shots).p_hat)


ESTIMATORS: dict[str, Callable[[ShotSet], float]] = {"ps": ps_ipr, "mle": mle_ipr}


class BootstrapResult(NamedTuple):
    mean: float
    std: float
    redraws: int


def bootstrap(
    shots: ShotSet,
    estimator: Callable[[ShotSet], float],
    n_resamples: int,
    seed: int,
    max_redraws: int | None = None,
) -> BootstrapResult:
    """Resample shots with replacement, re-run the estimator.

    Returns (mean, std, redraws); a resample on which the estimator raises
    :class:`MitigationError` is drawn again and counted in ``redraws``.
    """
    if n_resamples < 2:
        raise ValueError("need at least two resamples")
    keys = list(shots.records)
    counts = np.fromiter(shots.records.values(), dtype=np.int64, count=len(keys))
    total = int(counts.sum())
    if total == 0:
        raise MitigationError("cannot bootstrap an empty shot set")
    probs = counts / total
    rng = _rng.stream(seed, _rng.BOOTSTRAP)
    limit = max_redraws if max_redraws is not None else 10 * n_resamples
    values, redraws = [], 0
    while len(values) < n_resamples:
        draw = rng.multinomial(total, probs)
        resample = ShotSet(shots.num_qubits, {k: int(c) for k, c in zip(keys, draw) if c})
        try:
            values.append(float(estimator(resample)))
        except MitigationError:
            redraws += 1
            if redraws > limit:
                raise MitigationError("estimator failed on too many resamples")
    v = np.array(values)
    return BootstrapResult(float(v.mean()), float(v.std(ddof=1)), redraws)
