"""Experiment manifests, the end-to-end Anderson pipeline and figure-data presets.

A manifest is one JSON document describing one experiment.  Every random
draw is keyed by ``(master_seed, stream, time index)``, so outputs do not
depend on worker count or execution order.
"""

from __future__ import annotations

import csv
import dataclasses
import hashlib
import json
import math
import time as _time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Callable, Sequence

import numpy as np

from . import _rng
from ._parallel import parallel_map
from .anderson import (
    DisorderRealization,
    Lattice2D,
    WavepacketSpec,
    build_hamiltonian,
    build_wavepacket,
    diagonalize,
    evolve,
    ipr,
    ipr_timeseries_ensemble,
    ipr_vs_energy,
    realization_seed,
    spectrum_overlaps,
)
from .circuit.backends import SectorState, apply, sample
from .circuit.trotter import TrotterPlan, build_trotter_circuit, trotter_evolve
from .mitigation import BitFlipModel, bootstrap, corrupt, mle_fit, mle_ipr, postselect, ps_distribution, ps_ipr
from .stateprep import classical_fidelity, synthesize_wavepacket_circuit

LOW_ENERGY_K0 = (0.0, 0.0)
HIGH_ENERGY_K0 = (0.5 * math.pi, -0.1 * math.pi)
DEVICE_SIGMA = (0.3, 0.35)
# Candidate closest to the 50-instance average of IPR(t) for both packets
# (representative_realization with master seed 1234 on t in [0, 3]).
DEVICE_DISORDER = (1234, 7)


class PipelineError(RuntimeError):
    def __init__(self, stage: str, cause: BaseException):
        super().__init__(f"{stage} stage failed: {cause}")
        self.stage = stage
        self.cause = cause


@dataclass(frozen=True)
class ExperimentManifest:
    experiment_id: str
    lattice: tuple[int, int] = (8, 7)
    W: float = 6.0
    k0: tuple[float, float] = LOW_ENERGY_K0
    sigma_p: tuple[float, float] = DEVICE_SIGMA
    trunc_threshold: float = 0.01
    trunc_times: tuple[float, ...] = (0.0, 1.0)
    dt: float = 0.25
    times: tuple[float, ...] = (0.0, 1.0, 2.0, 3.0)
    shots: int | tuple[int, ...] = 500
    epsilon: float = 0.02
    methods: tuple[str, ...] = ("ps", "mle")
    n_bootstrap: int = 100
    master_seed: int = 1234
    disorder_seed: int = DEVICE_DISORDER[0]
    disorder_index: int = DEVICE_DISORDER[1]
    outputs: dict[str, str] = field(default_factory=dict)

    def __post_init__(self) -> None:
        tup = lambda v, t: tuple(t(x) for x in v)
        object.__setattr__(self, "lattice", tup(self.lattice, int))
        object.__setattr__(self, "k0", tup(self.k0, float))
        object.__setattr__(self, "sigma_p", tup(self.sigma_p, float))
        object.__setattr__(self, "trunc_times", tup(self.trunc_times, float))
        object.__setattr__(self, "times", tup(self.times, float))
        object.__setattr__(self, "methods", tup(self.methods, str))
        object.__setattr__(self, "outputs", dict(self.outputs))
        if not isinstance(self.shots, int):
            object.__setattr__(self, "shots", tup(self.shots, int))
            if len(self.shots) != len(self.times):
                raise ValueError("shots must be one int or one count per time")
        if len(self.lattice) != 2:
            raise ValueError("lattice must be (Lx, Ly)")
        if not (0 <= self.epsilon < 0.5):
            raise ValueError("epsilon must lie in [0, 1/2)")
        unknown = set(self.methods) - {"ps", "mle"}
        if unknown:
            raise ValueError(f"unknown mitigation methods {sorted(unknown)}")
        if self.n_bootstrap < 2:
            raise ValueError("n_bootstrap must be at least 2")

    def shots_at(self, i: int) -> int:
        return self.shots if isinstance(self.shots, int) else self.shots[i]

    def wavepacket_spec(self, t: float) -> WavepacketSpec:
        trunc = self.trunc_threshold if any(abs(t - s) < 1e-12 for s in self.trunc_times) else 0.0
        return WavepacketSpec(self.k0, self.sigma_p, trunc_threshold=trunc)

    def disorder(self) -> DisorderRealization:
        lat = Lattice2D(*self.lattice)
        return DisorderRealization.generate(lat.num_sites, self.W, realization_seed(self.disorder_seed, self.disorder_index))

    def to_dict(self) -> dict[str, Any]:
        d = dataclasses.asdict(self)
        return {k: list(v) if isinstance(v, tuple) else v for k, v in d.items()}

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> "ExperimentManifest":
        names = {f.name for f in dataclasses.fields(cls)}
        extra = set(data) - names
        if extra:
            raise ValueError(f"unknown manifest fields {sorted(extra)}")
        return cls(**data)

    @classmethod
    def load(cls, path: str | Path) -> "ExperimentManifest":
        return cls.from_dict(json.loads(Path(path).read_text()))

    def save(self, path: str | Path) -> None:
        Path(path).write_text(self.to_json() + "\n")


def manifest_hash(manifest: ExperimentManifest) -> str:
    """sha256 over the physics and seed fields; the id and output paths are excluded."""
    d = manifest.to_dict()
    d.pop("experiment_id")
    d.pop("outputs")
    canon = json.dumps(d, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canon.encode()).hexdigest()


# --------------------------------------------------------------------------
# Pipeline
# --------------------------------------------------------------------------

RECORD_COLUMNS = ("t", "method", "ipr", "ipr_std", "fidelity", "survival_rate", "gate_count")


@dataclass
class PipelineResult:
    manifest: ExperimentManifest
    records: list[dict[str, Any]]
    distributions: dict[tuple[float, str], np.ndarray] = field(repr=False)

    def select(self, method: str) -> list[dict[str, Any]]:
        return [r for r in self.records if r["method"] == method]


def _stage(name: str, fn: Callable[[], Any]) -> Any:
    try:
        return fn()
    except PipelineError:
        raise
    except Exception as exc:
        raise PipelineError(name, exc) from exc


def _pipeline_point(args: tuple[ExperimentManifest, int]) -> tuple[list[dict], dict]:
    m, i = args
    t = m.times[i]
    lattice = Lattice2D(*m.lattice)
    disorder = m.disorder()
    target = _stage("prepare", lambda: build_wavepacket(lattice, m.wavepacket_spec(t)))
    circuit = _stage(
        "compile",
        lambda: synthesize_wavepacket_circuit(target) + build_trotter_circuit(TrotterPlan.for_time(lattice, disorder, t, m.dt)),
    )
    gates = circuit.two_qubit_gate_count()
    final = _stage("simulate", lambda: apply(circuit, SectorState.vacuum_state(lattice.num_sites), "sector").state)
    ideal = final.amplitudes

    # The ideal branch only sees shot noise; the noise stream is never touched here.
    n_shots = m.shots_at(i)
    clean = _stage("sample", lambda: sample(final, n_shots, _rng.derive_seed(m.master_seed, _rng.SHOTS, i)))
    p_clean = ps_distribution(clean)
    records = [dict(t=t, method="ideal", ipr=ipr(ideal), ipr_std=0.0,
                    fidelity=classical_fidelity(p_clean, ideal), survival_rate=1.0, gate_count=gates)]
    dists = {(t, "ideal"): np.abs(ideal) ** 2}

    noisy = _stage("corrupt", lambda: corrupt(clean, BitFlipModel(m.epsilon), _rng.derive_seed(m.master_seed, _rng.NOISE, i)))
    _, rate = postselect(noisy, 1)
    boot_seed = _rng.derive_seed(m.master_seed, _rng.BOOTSTRAP, i)
    for method in m.methods:
        if method == "ps":
            p = _stage("mitigate", lambda: ps_distribution(noisy))
            _, std, _ = _stage("bootstrap", lambda: bootstrap(noisy, ps_ipr, m.n_bootstrap, boot_seed))
        else:
            p = _stage("mitigate", lambda: mle_fit(noisy).p_hat)
            _, std, _ = _stage("bootstrap", lambda: bootstrap(noisy, mle_ipr, m.n_bootstrap, boot_seed))
        records.append(dict(t=t, method=method.upper(), ipr=float(math.fsum(p**2)), ipr_std=std,
                            fidelity=classical_fidelity(p, ideal), survival_rate=rate, gate_count=gates))
        dists[(t, method.upper())] = p
    return records, dists


def run_anderson_pipeline(manifest: ExperimentManifest, workers: int = 1) -> PipelineResult:
    """Prepare, Trotter-evolve, sample, corrupt and mitigate at every manifest time."""
    out = parallel_map(_pipeline_point, [(manifest, i) for i in range(len(manifest.times))], workers)
    records: list[dict] = []
    dists: dict = {}
    for rec, d in out:
        records.extend(rec)
        dists.update(d)
    return PipelineResult(manifest, records, dists)


# --------------------------------------------------------------------------
# Output files
# --------------------------------------------------------------------------


def _fmt(v: Any) -> str:
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    if isinstance(v, (np.integer,)):
        return str(int(v))
    return str(v)


def write_csv(path: str | Path, rows: Sequence[dict[str, Any]], columns: Sequence[str] | None = None) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    cols = list(columns) if columns is not None else (list(rows[0]) if rows else [])
    with path.open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(cols)
        for r in rows:
            w.writerow([_fmt(r[c]) for c in cols])
    return path


def _jsonable(v: Any) -> Any:
    if isinstance(v, dict):
        return {str(k): _jsonable(x) for k, x in v.items()}
    if isinstance(v, (list, tuple)):
        return [_jsonable(x) for x in v]
    if isinstance(v, np.ndarray):
        return _jsonable(v.tolist())
    if isinstance(v, (np.floating, np.integer)):
        return v.item()
    return v


def write_metadata(path: str | Path, meta: dict[str, Any]) -> Path:
    """JSON side file; ``generated_at`` is the only field that varies between reruns."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    doc = dict(_jsonable(meta))
    doc["generated_at"] = _time.strftime("%Y-%m-%dT%H:%M:%SZ", _time.gmtime())
    path.write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n")
    return path


def save_pipeline(result: PipelineResult, out_dir: str | Path) -> dict[str, Path]:
    m = result.manifest
    out_dir = Path(out_dir)
    stem = m.experiment_id
    csv_path = write_csv(out_dir / m.outputs.get("records", f"{stem}.csv"), result.records, RECORD_COLUMNS)
    meta_path = write_metadata(
        out_dir / m.outputs.get("metadata", f"{stem}.json"),
        {"manifest": m.to_dict(), "manifest_hash": manifest_hash(m), "columns": RECORD_COLUMNS},
    )
    return {"records": csv_path, "metadata": meta_path}


# --------------------------------------------------------------------------
# Figure presets
# --------------------------------------------------------------------------

SCALES = ("desk", "smoke")


@dataclass
class FigureData:
    tables: dict[str, list[dict[str, Any]]]
    meta: dict[str, Any]


def _pick(scale: str, desk: Any, smoke: Any) -> Any:
    if scale not in SCALES:
        raise ValueError(f"unknown scale preset {scale!r}; choose from {SCALES}")
    return desk if scale == "desk" else smoke


def device_manifest(which: str, scale: str = "desk", **overrides: Any) -> ExperimentManifest:
    """The 8x7 low- or high-energy pipeline used for the device comparison figures."""
    k0 = {"low": LOW_ENERGY_K0, "high": HIGH_ENERGY_K0}[which]
    base = dict(
        experiment_id=f"anderson8x7_{which}",
        k0=k0,
        n_bootstrap=_pick(scale, 100, 4),
        times=_pick(scale, (0.0, 1.0, 2.0, 3.0), (0.0, 0.5)),
        trunc_times=(0.0, 1.0),
    )
    base.update(overrides)
    return ExperimentManifest(**base)


def _eigenstate_ipr_20x20(scale: str, seed: int, workers: int) -> FigureData:
    L, R, bins = _pick(scale, (20, 200, 40), (6, 2, 10))
    rows = []
    for W in (1.0, 3.0, 6.0, 12.0):
        curve = ipr_vs_energy(Lattice2D(L, L), W, R, bins, seed, workers)
        for c, mu, se, n in zip(curve.centers, curve.mean, curve.stderr, curve.counts):
            rows.append({"W": W, "energy": c, "ipr_mean": mu, "ipr_stderr": se, "count": int(n)})
    return FigureData({"": rows}, {"lattice": [L, L], "realizations": R, "bins": bins,
                                   "full_scale": "50x50, 2000 realizations"})


MOBILITY_EDGE_K0 = (("k0=(0,0)", (0.0, 0.0)), ("k0=(0.75pi,0.75pi)", (0.75 * math.pi, 0.75 * math.pi)))


def _mobility_edge_overlaps(scale: str, seed: int, workers: int) -> FigureData:
    L = _pick(scale, 20, 6)
    lat = Lattice2D(L, L)
    spectrum = diagonalize(build_hamiltonian(lat, DisorderRealization.generate(lat.num_sites, 3.0, realization_seed(seed, 0))))
    rows = []
    for label, k0 in MOBILITY_EDGE_K0:
        e, w = spectrum_overlaps(spectrum, build_wavepacket(lat, WavepacketSpec(k0, (0.1, 0.1))))
        rows.extend({"wavepacket": label, "energy": a, "overlap": b} for a, b in zip(e, w))
    return FigureData({"": rows}, {"lattice": [L, L], "W": 3.0, "realizations": 1, "sigma_p": [0.1, 0.1]})


def mobility_edge_dynamics(scale: str, seed: int, workers: int) -> tuple[np.ndarray, np.ndarray, Lattice2D]:
    """IPR(t) of the two mobility-edge packets on each realization: shape (R, 2, T)."""
    L, R, T = _pick(scale, (20, 100, 51), (6, 3, 6))
    lat = Lattice2D(L, L)
    t = np.linspace(0.0, 250.0, T)
    specs = [WavepacketSpec(k0, (0.1, 0.1)) for _, k0 in MOBILITY_EDGE_K0]
    return t, ipr_timeseries_ensemble(lat, 3.0, specs, t, R, seed, workers), lat


def _mobility_edge_ipr(scale: str, seed: int, workers: int) -> FigureData:
    t, curves, lat = mobility_edge_dynamics(scale, seed, workers)
    med = np.median(curves, axis=0)
    q1, q3 = np.quantile(curves, [0.25, 0.75], axis=0)
    rows = []
    for j, (label, _) in enumerate(MOBILITY_EDGE_K0):
        rows.extend({"wavepacket": label, "t": ti, "ipr_median": a, "ipr_q25": b, "ipr_q75": c}
                    for ti, a, b, c in zip(t, med[j], q1[j], q3[j]))
    return FigureData({"": rows}, {"lattice": list(lat.shape), "W": 3.0, "realizations": curves.shape[0],
                                   "full_scale": "50x50, 2000 realizations"})


def _device_pipelines(scale: str, seed: int, workers: int) -> list[PipelineResult]:
    return [run_anderson_pipeline(device_manifest(w, scale, master_seed=seed), workers) for w in ("low", "high")]


def _device_pipeline_records(scale: str, seed: int, workers: int) -> FigureData:
    rows = []
    for res in _device_pipelines(scale, seed, workers):
        rows.extend({"experiment": res.manifest.experiment_id, **r} for r in res.records)
    return FigureData({"": rows}, {"note": "synthetic IID readout noise; device values are not reproduced"})


def _device_distributions(scale: str, seed: int, workers: int) -> FigureData:
    rows = []
    for res in _device_pipelines(scale, seed, workers):
        for (t, method), p in sorted(res.distributions.items()):
            if method in ("ideal", "MLE"):
                rows.extend({"experiment": res.manifest.experiment_id, "t": t, "method": method, "site": n, "probability": v}
                            for n, v in enumerate(p))
    return FigureData({"": rows}, {"site_index": "n = x + Lx*y"})


def _device_gate_counts(scale: str, seed: int, workers: int) -> FigureData:
    rows = []
    for which in ("low", "high"):
        m = device_manifest(which, "desk")
        lat, dis = Lattice2D(*m.lattice), m.disorder()
        for t in m.times:
            circ = synthesize_wavepacket_circuit(build_wavepacket(lat, m.wavepacket_spec(t)))
            circ = circ + build_trotter_circuit(TrotterPlan.for_time(lat, dis, t, m.dt))
            rows.append({"wavepacket": which, "t": t, "two_qubit_gates": circ.two_qubit_gate_count()})
    return FigureData({"": rows}, {"trunc_threshold": 0.01, "trunc_times": [0.0, 1.0], "dt": 0.25})


MCMFF2_SIZES = (8, 12, 16, 20, 32)


def _mcmff2_values(scale: str, seed: int, workers: int) -> FigureData:
    from .stateprep import MCMFF2Config, mcmff2_ideal_fidelity, mcmff2_success_probability

    rows = []
    for N in MCMFF2_SIZES:
        cfg = MCMFF2Config(N, 0.2)
        rows.append({"N": N, "ideal_fidelity": mcmff2_ideal_fidelity(cfg), "p_success": mcmff2_success_probability(cfg)})
    return FigureData({"": rows}, {"delta": 0.2})


def _xxz_dispersion(scale: str, seed: int, workers: int) -> FigureData:
    from .xxz import XXZModel, exact_lowest_excitations

    N = _pick(scale, 10, 6)
    rows = []
    for D in (-0.5, 0.0, 0.5):
        spec = exact_lowest_excitations(XXZModel(N, D))
        rows.extend({"Delta": D, "k": k, "excitation": spec.excitation(k), "degenerate": int(spec.entries[k].degenerate)}
                    for k in spec.momenta)
    gap = min(r["excitation"] for r in rows if r["Delta"] == 0.0 and r["k"] != 0.0)
    return FigureData({"": rows}, {"N": N, "gap_delta0": gap, "gap_expected": 4 * math.sin(math.pi / N),
                                   "full_scale": "N=26"})


XXZ_SPEC = (0.25 * math.pi, 0.2)
# N=6 grid has k = pi/3 next to the zone edge; a wider, shifted packet keeps the leak below 1e-3.
XXZ_SMOKE_SPEC = (0.3 * math.pi, 0.25)


def _ansatz_convergence(scale: str, seed: int, workers: int) -> FigureData:
    from .xxz import QuasiparticleWavepacketSpec, XXZModel, initial_wavepacket_state, optimize, wavepacket_energy

    N, layers = _pick(scale, (10, (2, 4, 6, 8)), (6, (1, 2)))
    k0, sigma = _pick(scale, XXZ_SPEC, XXZ_SMOKE_SPEC)
    spec = QuasiparticleWavepacketSpec(k0, sigma)
    psi = initial_wavepacket_state(spec, N).state
    rows = []
    for D in (0.5, -0.5):
        model = XXZModel(N, D)
        e_wp = wavepacket_energy(model, psi)
        for nl in layers:
            r = optimize(model, spec, nl, psi_init=psi)
            rows.append({"Delta": D, "n_layers": nl, "E_ansatz": r.energy, "E_WP": e_wp, "gap": r.energy - e_wp,
                         "evaluations": r.evaluations, "converged": int(r.converged)})
    return FigureData({"": rows}, {"N": N, "k0": k0, "sigma_p": sigma, "full_scale": "N=22"})


def _energy_density(scale: str, seed: int, workers: int) -> FigureData:
    from .xxz import QuasiparticleWavepacketSpec, XXZModel, apply_ansatz, evolve_energy_density, initial_wavepacket_state, optimize

    N, nl, T = _pick(scale, (10, 4, 81), (6, 1, 11))
    spec = QuasiparticleWavepacketSpec(*_pick(scale, XXZ_SPEC, XXZ_SMOKE_SPEC))
    psi0 = initial_wavepacket_state(spec, N).state
    tables, meta = {}, {"N": N, "n_layers": nl, "full_scale": "N=22, n_L=12"}
    for D in (0.5, -0.5):
        model = XXZModel(N, D)
        r = optimize(model, spec, nl, psi_init=psi0)
        ed = evolve_energy_density(apply_ansatz(r.theta, psi0, model.basis), model, np.linspace(0, 20, T))
        tables[f"delta{D:+g}"] = [{"t": t, **{f"bond{n}": v for n, v in enumerate(row)}} for t, row in zip(ed.times, ed.density)]
        meta[f"velocity_delta{D:+g}"] = ed.velocity()
    return FigureData(tables, meta)


def _device_specs(trunc: float = 0.0) -> list[WavepacketSpec]:
    return [WavepacketSpec(k0, DEVICE_SIGMA, trunc_threshold=trunc) for k0 in (LOW_ENERGY_K0, HIGH_ENERGY_K0)]


def _device_ipr_ensemble(scale: str, seed: int, workers: int) -> FigureData:
    R, T = _pick(scale, (200, 25), (4, 5))
    lat = Lattice2D(8, 7)
    t = np.linspace(0.0, 6.0, T)
    specs = _device_specs()
    avg = ipr_timeseries_ensemble(lat, 6.0, specs, t, R, seed, workers).mean(axis=0)
    inst = ipr_timeseries_ensemble(lat, 6.0, specs, t, DEVICE_DISORDER[1] + 1, DEVICE_DISORDER[0], workers)[-1]
    rows = []
    for j, which in enumerate(("low", "high")):
        rows.extend({"wavepacket": which, "t": ti, "ipr_instance": a, "ipr_average": b} for ti, a, b in zip(t, inst[j], avg[j]))
    return FigureData({"": rows}, {"realizations": R, "instance": list(DEVICE_DISORDER), "full_scale": "2000 realizations"})


def _trotter_ipr(scale: str, seed: int, workers: int) -> FigureData:
    dts = _pick(scale, (0.25, 0.125, 0.0625), (0.25,))
    lat = Lattice2D(8, 7)
    dis = DisorderRealization.generate(56, 6.0, realization_seed(*DEVICE_DISORDER))
    spectrum = diagonalize(build_hamiltonian(lat, dis))
    t_end = _pick(scale, 3.0, 1.0)
    rows = []
    for which, spec in zip(("low", "high"), _device_specs()):
        psi0 = build_wavepacket(lat, spec).amplitudes
        grid = np.arange(0.0, t_end + 1e-9, 0.25)
        exact = np.sum(np.abs(evolve(spectrum, psi0, grid)) ** 4, axis=1)
        rows.extend({"wavepacket": which, "dt": 0.0, "t": a, "ipr": b} for a, b in zip(grid, exact))
        for dt in dts:
            every = int(round(0.25 / dt))
            states = trotter_evolve(TrotterPlan.for_time(lat, dis, t_end, dt), psi0, record_every=every)
            rows.extend({"wavepacket": which, "dt": dt, "t": a, "ipr": ipr(s)} for a, s in zip(grid, states))
    return FigureData({"": rows}, {"note": "dt=0 rows are exact evolution", "instance": list(DEVICE_DISORDER)})


def _eigenstate_ipr_8x7(scale: str, seed: int, workers: int) -> FigureData:
    R, bins = _pick(scale, (200, 30), (4, 8))
    lat = Lattice2D(8, 7)
    rows = []
    for W in (1.0, 3.0, 6.0, 12.0):
        curve = ipr_vs_energy(lat, W, R, bins, seed, workers)
        for c, mu, se, n in zip(curve.centers, curve.mean, curve.stderr, curve.counts):
            rows.append({"W": W, "energy": c, "ipr_mean": mu, "ipr_stderr": se, "count": int(n)})
    return FigureData({"": rows}, {"lattice": [8, 7], "realizations": R, "full_scale": "2000 realizations"})


def _device_overlaps(scale: str, seed: int, workers: int) -> FigureData:
    R = _pick(scale, 200, 4)
    lat = Lattice2D(8, 7)
    bins = np.linspace(0, 1, 31)
    acc = np.zeros((2, len(bins) - 1))
    for r in range(R):
        spectrum = diagonalize(build_hamiltonian(lat, DisorderRealization.generate(56, 6.0, realization_seed(seed, r))))
        for j, spec in enumerate(_device_specs()):
            e, w = spectrum_overlaps(spectrum, build_wavepacket(lat, spec))
            acc[j] += np.histogram(e, bins=bins, weights=w)[0]
    acc /= R
    centers = 0.5 * (bins[1:] + bins[:-1])
    rows = [{"wavepacket": which, "energy": c, "overlap": v} for j, which in enumerate(("low", "high")) for c, v in zip(centers, acc[j])]
    return FigureData({"": rows}, {"W": 6.0, "realizations": R})


def _prep_benchmark(scale: str, seed: int, workers: int) -> FigureData:
    from .stateprep import prep_benchmark

    sizes, shots, boots = _pick(scale, ((8, 16, 24, 32, 40, 48, 56), 1350, 100), ((4, 8), 200, 4))
    rows = prep_benchmark(sizes, shots, 0.002, boots, seed)
    return FigureData({"": rows}, {"epsilon": 0.002, "retained_shots": shots})


def _variance_oracle(scale: str, seed: int, workers: int) -> FigureData:
    from .anderson import Chain
    from .variance import variance_table

    Ns, sts, R = _pick(scale, ((64, 128), (2.0, 4.0), 500), ((32,), (2.0,), 20))
    cases = []
    for N in Ns:
        for st in sts:
            for W in (0.0, 1.0):
                cases.append((Chain(N), WavepacketSpec((math.pi / 2,), (2 * math.pi * st / N,)), W))
    return FigureData({"": variance_table(cases, R, seed, workers)}, {"realizations": R})


FIGURES: dict[str, Callable[[str, int, int], FigureData]] = {
    "fig1a": _eigenstate_ipr_20x20,
    "fig1b": _mobility_edge_overlaps,
    "fig1": _mobility_edge_ipr,
    "fig3": _device_pipeline_records,
    "fig4b": _xxz_dispersion,
    "fig5": _ansatz_convergence,
    "fig6": _energy_density,
    "fig7a": _device_ipr_ensemble,
    "fig7b": _trotter_ipr,
    "fig8a": _eigenstate_ipr_8x7,
    "fig8b": _device_overlaps,
    "fig9": _device_distributions,
    "table1": _device_gate_counts,
    "table2": _mcmff2_values,
    "prep": _prep_benchmark,
    "variance": _variance_oracle,
}


def figure_data(figure_id: str, scale: str = "desk", seed: int = 1234, workers: int = 1) -> FigureData:
    if figure_id not in FIGURES:
        raise KeyError(f"unknown figure id {figure_id!r}; valid ids: {', '.join(sorted(FIGURES))}")
    _pick(scale, None, None)
    return FIGURES[figure_id](scale, seed, workers)


def regenerate_figure_data(figure_id: str, scale: str = "desk", out_dir: str | Path = ".", seed: int = 1234,
                           workers: int = 1) -> list[Path]:
    """Write ``<id>[_<table>].csv`` files plus ``<id>.json`` metadata into ``out_dir``."""
    data = figure_data(figure_id, scale, seed, workers)
    out_dir = Path(out_dir)
    paths = []
    for name, rows in data.tables.items():
        paths.append(write_csv(out_dir / (f"{figure_id}_{name}.csv" if name else f"{figure_id}.csv"), rows))
    meta = {"figure": figure_id, "scale": scale, "seed": seed, **data.meta}
    paths.append(write_metadata(out_dir / f"{figure_id}.json", meta))
    return paths
