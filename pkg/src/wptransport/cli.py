"""Command-line entry point: ``wptransport <verb> [options]``.

Every verb writes its data as CSV and its metadata as JSON into ``--out``.
"""

from __future__ import annotations

import argparse
import json
import math
import re
import sys
from pathlib import Path
from typing import Sequence

import numpy as np

from . import harness

_ANGLE = re.compile(r"^\s*([+-]?(?:\d+(?:\.\d*)?|\.\d+)?)\s*(\*?\s*pi)?\s*(?:/\s*(\d+(?:\.\d*)?))?\s*$")


def parse_angle(text: str) -> float:
    """Read '0.25pi', '-pi/2', 'pi', '0.7' as radians."""
    m = _ANGLE.match(text.lower())
    if not m or (m.group(1) in (None, "", "+", "-") and not m.group(2)):
        raise argparse.ArgumentTypeError(f"cannot read angle {text!r}")
    coef = m.group(1)
    value = float(coef + "1" if coef in ("", "+", "-") else coef) if coef is not None else 1.0
    if m.group(2):
        value *= math.pi
    if m.group(3):
        value /= float(m.group(3))
    return value


def _pair(parse):
    def inner(text: str) -> tuple:
        parts = [p for p in re.split(r"[,\s]+", text.strip()) if p]
        return tuple(parse(p) for p in parts)

    return inner


def _shape(text: str) -> tuple[int, int]:
    m = re.fullmatch(r"(\d+)x(\d+)", text.strip())
    if not m:
        raise argparse.ArgumentTypeError("lattice must look like 8x7")
    return int(m.group(1)), int(m.group(2))


def _out(args: argparse.Namespace) -> Path:
    p = Path(args.out)
    p.mkdir(parents=True, exist_ok=True)
    return p


def _emit(args: argparse.Namespace, stem: str, rows: list[dict], meta: dict) -> None:
    out = _out(args)
    harness.write_csv(out / f"{stem}.csv", rows)
    harness.write_metadata(out / f"{stem}.json", {"command": args.verb, "seed": args.seed, **meta})
    print(out / f"{stem}.csv")


# --------------------------------------------------------------------------
# Verbs
# --------------------------------------------------------------------------


def cmd_anderson_spectrum(args: argparse.Namespace) -> None:
    from .anderson import Lattice2D, ipr_vs_energy

    curve = ipr_vs_energy(Lattice2D(*args.lattice), args.W, args.realizations, args.bins, args.seed, args.workers)
    rows = [{"energy": c, "ipr_mean": m, "ipr_stderr": s, "count": int(n)}
            for c, m, s, n in zip(curve.centers, curve.mean, curve.stderr, curve.counts)]
    _emit(args, "anderson_spectrum", rows, {"lattice": args.lattice, "W": args.W, "realizations": args.realizations})


def cmd_anderson_dynamics(args: argparse.Namespace) -> None:
    from .anderson import Lattice2D, WavepacketSpec, ipr_timeseries_ensemble

    spec = WavepacketSpec(args.k0, args.sigma, trunc_threshold=args.trunc)
    t = np.linspace(0.0, args.tmax, args.nt)
    curves = ipr_timeseries_ensemble(Lattice2D(*args.lattice), args.W, [spec], t, args.realizations, args.seed, args.workers)[:, 0]
    rows = [{"t": ti, "ipr_mean": a, "ipr_median": b} for ti, a, b in zip(t, curves.mean(0), np.median(curves, 0))]
    _emit(args, "anderson_dynamics", rows, {"lattice": args.lattice, "W": args.W, "k0": args.k0, "sigma_p": args.sigma,
                                            "realizations": args.realizations})


def cmd_pipeline(args: argparse.Namespace) -> None:
    if args.manifest:
        m = harness.ExperimentManifest.load(args.manifest)
    else:
        m = harness.device_manifest(args.wavepacket, args.preset, master_seed=args.seed)
    res = harness.run_anderson_pipeline(m, args.workers)
    paths = harness.save_pipeline(res, _out(args))
    print(paths["records"])


def cmd_prep_benchmark(args: argparse.Namespace) -> None:
    from .stateprep import BENCHMARK_COLUMNS, prep_benchmark

    rows = prep_benchmark(args.sizes, args.retained, args.epsilon, args.bootstrap, args.seed, args.delta)
    rows = [{c: r[c] for c in BENCHMARK_COLUMNS} for r in rows]
    _emit(args, "prep_benchmark", rows, {"epsilon": args.epsilon, "retained_shots": args.retained, "delta": args.delta})


def mitigate_summary(shots, method: str, n_e: int, n_bootstrap: int, seed: int) -> dict:
    from .mitigation import bootstrap, mle_fit, mle_ipr, postselect, ps_distribution, ps_ipr

    if n_e != 1:
        raise ValueError("only single-excitation data (--ne 1) are supported")
    _, rate = postselect(shots, n_e)
    if method == "ps":
        p, eps, ll, iters = ps_distribution(shots), None, None, 0
        est = ps_ipr
    else:
        fit = mle_fit(shots)
        p, eps, ll, iters = fit.p_hat, fit.epsilon_hat, fit.log_likelihood, fit.iterations
        est = mle_ipr
    std = bootstrap(shots, est, n_bootstrap, seed)[1] if n_bootstrap >= 2 else None
    return {
        "p_hat": [float(v) for v in p],
        "epsilon_hat": eps,
        "ipr": float(math.fsum(np.asarray(p) ** 2)),
        "ipr_std": std,
        "survival_rate": rate,
        "loglik": ll,
        "iterations": iters,
    }


def cmd_mitigate(args: argparse.Namespace) -> None:
    from .shots import ShotSet

    summary = mitigate_summary(ShotSet.load(args.shots), args.method, args.ne, args.bootstrap, args.seed)
    out = _out(args) / f"mitigate_{args.method}.json"
    out.write_text(json.dumps(summary, indent=2, sort_keys=True) + "\n")
    print(json.dumps(summary, sort_keys=True))


def cmd_variance(args: argparse.Namespace) -> None:
    from .anderson import Chain, WavepacketSpec
    from .variance import CSV_COLUMNS, variance_table

    cases = [(Chain(N), WavepacketSpec((args.k0,), (2 * math.pi * st / N,)), W)
             for N in args.n for st in args.sigma_tilde for W in args.W]
    rows = variance_table(cases, args.realizations, args.seed, args.workers)
    _emit(args, "variance", [{c: r[c] for c in CSV_COLUMNS} for r in rows], {"realizations": args.realizations})


def cmd_xxz_train(args: argparse.Namespace) -> None:
    from .xxz import QuasiparticleWavepacketSpec, XXZModel, initial_wavepacket_state, optimize, wavepacket_energy

    model = XXZModel(args.n, args.delta)
    spec = QuasiparticleWavepacketSpec(args.k0, args.sigma)
    psi = initial_wavepacket_state(spec, args.n).state
    res = optimize(model, spec, args.layers, tol=args.tol, max_evals=args.max_evals, psi_init=psi)
    e_wp = wavepacket_energy(model, psi)
    doc = {
        "N": args.n, "Delta": args.delta, "k0": args.k0, "sigma_p": args.sigma, "n_layers": args.layers,
        "theta": [float(v) for v in res.theta], "E_ansatz": res.energy, "E_WP": e_wp, "gap": res.energy - e_wp,
        "trace": [float(v) for v in res.trace], "evaluations": res.evaluations, "converged": res.converged,
        "message": res.message,
    }
    out = _out(args) / f"xxz_train_N{args.n}_D{args.delta:g}_L{args.layers}.json"
    out.write_text(json.dumps(doc, indent=2) + "\n")
    print(out)


def cmd_xxz_dynamics(args: argparse.Namespace) -> None:
    from .xxz import (QuasiparticleWavepacketSpec, XXZModel, apply_ansatz, evolve_energy_density,
                      initial_wavepacket_state, optimize)

    model = XXZModel(args.n, args.delta)
    spec = QuasiparticleWavepacketSpec(args.k0, args.sigma)
    psi = initial_wavepacket_state(spec, args.n).state
    if args.layers > 0:
        psi = apply_ansatz(optimize(model, spec, args.layers, psi_init=psi).theta, psi, model.basis)
    ed = evolve_energy_density(psi, model, np.linspace(0.0, args.tmax, args.nt), args.dt)
    rows = [{"t": t, **{f"bond{n}": v for n, v in enumerate(row)}} for t, row in zip(ed.times, ed.density)]
    _emit(args, "xxz_dynamics", rows, {"N": args.n, "Delta": args.delta, "n_layers": args.layers,
                                       "velocity": ed.velocity(), "total_energy": ed.total})


def cmd_figure(args: argparse.Namespace) -> None:
    try:
        paths = harness.regenerate_figure_data(args.figure_id, args.preset, _out(args), args.seed, args.workers)
    except KeyError as exc:
        raise SystemExit(str(exc.args[0]))
    for p in paths:
        print(p)


# --------------------------------------------------------------------------
# Parser
# --------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=1234)
    common.add_argument("--out", default=".")
    common.add_argument("--preset", default="desk", choices=harness.SCALES)
    common.add_argument("--workers", type=int, default=1)

    p = argparse.ArgumentParser(prog="wptransport", description=__doc__)
    sub = p.add_subparsers(dest="verb", required=True)

    s = sub.add_parser("anderson-spectrum", parents=[common], help="eigenstate IPR vs rescaled energy")
    s.add_argument("--lattice", type=_shape, default=(20, 20))
    s.add_argument("--W", type=float, default=3.0)
    s.add_argument("--realizations", type=int, default=100)
    s.add_argument("--bins", type=int, default=40)
    s.set_defaults(func=cmd_anderson_spectrum)

    s = sub.add_parser("anderson-dynamics", parents=[common], help="disorder-averaged wavepacket IPR(t)")
    s.add_argument("--lattice", type=_shape, default=(20, 20))
    s.add_argument("--W", type=float, default=3.0)
    s.add_argument("--k0", type=_pair(parse_angle), default=(0.0, 0.0))
    s.add_argument("--sigma", type=_pair(float), default=(0.1, 0.1))
    s.add_argument("--trunc", type=float, default=0.0)
    s.add_argument("--tmax", type=float, default=250.0)
    s.add_argument("--nt", type=int, default=51)
    s.add_argument("--realizations", type=int, default=100)
    s.set_defaults(func=cmd_anderson_dynamics)

    s = sub.add_parser("pipeline", parents=[common], help="prepare, evolve, corrupt, mitigate")
    s.add_argument("--manifest", help="manifest JSON; without it the 8x7 device preset is used")
    s.add_argument("--wavepacket", choices=("low", "high"), default="low")
    s.set_defaults(func=cmd_pipeline)

    s = sub.add_parser("prep-benchmark", parents=[common], help="noisy W-state classical fidelity")
    s.add_argument("--sizes", type=_pair(int), default=(8, 16, 32))
    s.add_argument("--retained", type=int, default=1350)
    s.add_argument("--epsilon", type=float, default=0.002)
    s.add_argument("--bootstrap", type=int, default=100)
    s.add_argument("--delta", type=float, default=0.2)
    s.set_defaults(func=cmd_prep_benchmark)

    s = sub.add_parser("mitigate", parents=[common], help="PS or MLE on a shot file")
    s.add_argument("--shots", required=True)
    s.add_argument("--method", choices=("ps", "mle"), default="mle")
    s.add_argument("--ne", type=int, default=1)
    s.add_argument("--bootstrap", type=int, default=100)
    s.set_defaults(func=cmd_mitigate)

    s = sub.add_parser("variance", parents=[common], help="closed-form vs sampled energy variance (1D)")
    s.add_argument("--n", type=_pair(int), default=(64, 128))
    s.add_argument("--sigma-tilde", type=_pair(float), default=(2.0, 4.0))
    s.add_argument("--W", type=_pair(float), default=(0.0, 1.0))
    s.add_argument("--k0", type=parse_angle, default=math.pi / 2)
    s.add_argument("--realizations", type=int, default=500)
    s.set_defaults(func=cmd_variance)

    for name, fn in (("xxz-train", cmd_xxz_train), ("xxz-dynamics", cmd_xxz_dynamics)):
        s = sub.add_parser(name, parents=[common])
        s.add_argument("--n", type=int, default=10)
        s.add_argument("--delta", type=float, default=0.5)
        s.add_argument("--k0", type=parse_angle, default=0.25 * math.pi)
        s.add_argument("--sigma", type=float, default=0.2)
        s.add_argument("--layers", type=int, default=4)
        if name == "xxz-train":
            s.add_argument("--tol", type=float, default=1e-10)
            s.add_argument("--max-evals", type=int, default=200_000)
        else:
            s.add_argument("--tmax", type=float, default=20.0)
            s.add_argument("--nt", type=int, default=81)
            s.add_argument("--dt", type=float, default=None, help="Trotter step; exact evolution when omitted")
        s.set_defaults(func=fn)

    s = sub.add_parser("figure", parents=[common], help="regenerate the data behind one figure or table")
    s.add_argument("figure_id")
    s.set_defaults(func=cmd_figure)
    return p


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    args.func(args)
    return 0


if __name__ == "__main__":
    sys.exit(main())
