"""Command-line workbench.

Subcommands wire the library into reproducible experiments: `gen` writes
instance files, `validate` recomputes their witnesses, `pipeline` runs
one decision, `fig1` and `fig2` emit the ensemble and landscape reports
(CSV plus rendered PNG), and `rerun` replays a manifest.

Every run writes a manifest capturing the resolved configuration and
seed; replaying it reproduces the output files byte for byte. Stochastic
commands refuse to run without an explicit seed. Exit codes: 0 success,
2 parameter error, 3 capacity or rank error, 4 degenerate statistics.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .errors import CapacityError, DegenerateDataError, ParameterError, RankError
from .lwe import (LweParams, QaoaSolverConfig, gen_instance, instance_rng,
                  monte_carlo, qaoa_enhancement, run_pipeline, LweInstance)
from .modq import is_prime
from .qaoa import OptimizerConfig, QaoaParams, gradient_descent, run_qaoa, sample
from . import plots

FIG2_DEFAULT_OFFSETS = (0.35, 0.25)


def _json_dump(obj, path: Path):
    path.write_text(json.dumps(obj, indent=2, sort_keys=True) + "\n")


def _py(obj):
    """Recursively convert numpy scalars/arrays for JSON serialization."""
    if isinstance(obj, dict):
        return {k: _py(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_py(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [_py(v) for v in obj.tolist()]
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.floating,)):
        return float(obj)
    return obj


def _read_config(path):
    """Flat key=value lines; blank lines and # comments ignored."""
    values = {}
    for lineno, raw in enumerate(Path(path).read_text().splitlines(), 1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise ParameterError(f"{path}:{lineno}: expected key=value, got {raw!r}")
        key, _, val = line.partition("=")
        values[key.strip().replace("-", "_")] = val.strip()
    return values


def _auto_coerce(raw: str):
    for conv in (int, float):
        try:
            return conv(raw)
        except ValueError:
            continue
    return raw


def _write_manifest(outdir: Path, command: str, config: dict, outputs: list):
    manifest = {
        "command": command,
        "config": _py(config),
        "version": __version__,
        "outputs": sorted(outputs),
    }
    _json_dump(manifest, outdir / "manifest.json")


def _next_prime(x: int) -> int:
    p = max(2, int(x))
    while not is_prime(p):
        p += 1
    return p


def scaled_params(n: int) -> LweParams:
    """Problem-size scaling used by the sweep: m = 3n, q the first prime
    at or above n^2, sigma = sqrt(2n/pi)."""
    return LweParams(n=n, m=3 * n, q=_next_prime(n * n),
                     sigma=math.sqrt(2.0 * n / math.pi))


# ---------------------------------------------------------------------------
# subcommands

def cmd_gen(args) -> int:
    params = LweParams(args.n, args.m, args.q, args.sigma)
    if args.kind not in ("structured", "uniform"):
        raise ParameterError(f"kind must be structured or uniform, got {args.kind!r}")
    if args.count < 1:
        raise ParameterError("count must be at least 1")
    outdir = Path(args.out)
    outdir.mkdir(parents=True, exist_ok=True)
    names = []
    for i in range(args.count):
        inst = gen_instance(params, args.kind, instance_rng(args.seed, i))
        name = f"instance_{i:04d}.json"
        (outdir / name).write_text(inst.to_json() + "\n")
        names.append(name)
    _write_manifest(outdir, "gen", {
        "n": args.n, "m": args.m, "q": args.q, "sigma": args.sigma,
        "kind": args.kind, "count": args.count, "seed": args.seed,
    }, names)
    print(f"wrote {len(names)} instance(s) to {outdir}")
    return 0


def cmd_validate(args) -> int:
    bad = 0
    for name in args.files:
        inst = LweInstance.from_json(Path(name).read_text())
        ok = inst.validate()
        print(f"{name}: {'ok' if ok else 'INVALID'}")
        bad += not ok
    return 0 if bad == 0 else 2


def cmd_pipeline(args) -> int:
    text = Path(args.instance).read_text()
    inst = LweInstance.from_json(text)
    if args.solver == "qaoa" and args.seed is None:
        raise ParameterError("--seed is required for the qaoa solver")
    qcfg = QaoaSolverConfig(
        qubits_per_basis=args.qubits_per_basis,
        pinned_qubits=args.pinned_qubits,
        coefficient_range=args.coefficient_range,
        grid_points=args.grid,
        iterations=args.iterations,
        shots=args.shots,
    )
    res = run_pipeline(inst, solver=args.solver, block_size=args.block_size,
                       qaoa_config=qcfg, seed=args.seed)
    outdir = Path(args.out)
    outdir.mkdir(parents=True, exist_ok=True)
    payload = {
        "solver": res.solver,
        "vector": res.vector.tolist(),
        "norm_sq": res.norm_sq,
        "norm": math.sqrt(res.norm_sq),
        "inner_product": res.inner_product,
        "threshold": res.threshold,
        "decision": res.decision,
        "norm_bound": res.norm_bound,
        "bound_met": res.bound_met,
        "b0_norm_sq": res.b0_norm_sq,
        "extra": _py(res.extra),
        "label": inst.label,
    }
    _json_dump(payload, outdir / "decision.json")
    _write_manifest(outdir, "pipeline", {
        "instance": str(args.instance), "solver": args.solver,
        "block_size": args.block_size, "qubits_per_basis": args.qubits_per_basis,
        "pinned_qubits": args.pinned_qubits,
        "coefficient_range": args.coefficient_range, "grid": args.grid,
        "iterations": args.iterations, "shots": args.shots, "seed": args.seed,
    }, ["decision.json"])
    print(f"decision: {res.decision} (p={res.inner_product}, "
          f"|v|^2={res.norm_sq}, bound_met={res.bound_met})")
    return 0


def _parse_qubit_range(spec: str):
    if ":" in spec:
        lo, hi = spec.split(":", 1)
        counts = list(range(int(lo), int(hi) + 1))
    else:
        counts = [int(tok) for tok in spec.split(",") if tok]
    if not counts or any(c < 1 for c in counts):
        raise ParameterError(f"bad qubit range {spec!r}")
    return counts


def cmd_fig1(args) -> int:
    params = LweParams(args.n, args.m, args.q, args.sigma)
    qubit_counts = _parse_qubit_range(args.qubits)
    outdir = Path(args.out)
    outdir.mkdir(parents=True, exist_ok=True)
    report = monte_carlo(params, args.instances, solver=args.solver,
                         qubit_counts=qubit_counts, seed=args.seed,
                         block_size=args.block_size, delta=args.delta)
    outputs = []

    hist_csv = outdir / "inner_product_hist.csv"
    with open(hist_csv, "w") as fh:
        fh.write("value,count,label\n")
        for v in range(params.q):
            fh.write(f"{v},{int(report.hist_structured[v])},structured\n")
        for v in range(params.q):
            fh.write(f"{v},{int(report.hist_uniform[v])},uniform\n")
    outputs.append(hist_csv.name)

    repr_csv = outdir / "representability.csv"
    with open(repr_csv, "w") as fh:
        fh.write("qubits,successes,total,fraction,lo,hi,"
                 "cond_successes,cond_total,cond_fraction,cond_lo,cond_hi\n")
        for s in report.representability:
            o, c = s.overall, s.conditional
            fh.write(f"{s.qubits},{o[0]},{o[1]},{o[2]:.6f},{o[3]:.6f},{o[4]:.6f},"
                     f"{c[0]},{c[1]},{c[2]:.6f},{c[3]:.6f},{c[4]:.6f}\n")
    outputs.append(repr_csv.name)

    sweep_ns = [int(tok) for tok in args.sweep.split(",")] if args.sweep else [args.n]
    sweep_m = args.sweep_instances or args.instances
    sweep_rows = []
    for n_i in sweep_ns:
        p_i = scaled_params(n_i)
        rep_i = monte_carlo(p_i, sweep_m, solver=args.solver,
                            qubit_counts=qubit_counts, seed=args.seed,
                            delta=args.delta)
        row = {
            "n": n_i, "m": p_i.m, "q": p_i.q, "sigma": p_i.sigma,
            "instances": rep_i.total,
            "v0_shorter_fraction": rep_i.v0_shorter[2],
            "v0_shorter_lo": rep_i.v0_shorter[3],
            "v0_shorter_hi": rep_i.v0_shorter[4],
        }
        for s in rep_i.representability:
            row[f"repr_{s.qubits}_conditional"] = s.conditional[2]
        sweep_rows.append(row)
    sweep_csv = outdir / "proportion_vs_n.csv"
    cols = (["n", "m", "q", "sigma", "instances", "v0_shorter_fraction",
             "v0_shorter_lo", "v0_shorter_hi"]
            + [f"repr_{y}_conditional" for y in qubit_counts])
    with open(sweep_csv, "w") as fh:
        fh.write(",".join(cols) + "\n")
        for row in sweep_rows:
            fh.write(",".join(_fmt(row[c]) for c in cols) + "\n")
    outputs.append(sweep_csv.name)

    _json_dump(json.loads(report.to_json()), outdir / "report.json")
    outputs.append("report.json")

    plots.plot_inner_product_hist(report.hist_structured, report.hist_uniform,
                                  params.q, report.threshold,
                                  outdir / "inner_product_hist.png")
    plots.plot_representability(report.representability,
                                outdir / "representability.png")
    plots.plot_sweep(sweep_rows, qubit_counts, outdir / "proportion_vs_n.png")
    outputs += ["inner_product_hist.png", "representability.png", "proportion_vs_n.png"]

    _write_manifest(outdir, "fig1", {
        "n": args.n, "m": args.m, "q": args.q, "sigma": args.sigma,
        "instances": args.instances, "qubits": args.qubits,
        "sweep": args.sweep, "sweep_instances": args.sweep_instances,
        "solver": args.solver, "block_size": args.block_size,
        "delta": args.delta, "seed": args.seed,
    }, outputs)
    print(f"accuracy {report.accuracy:.4f} at threshold {report.threshold}; "
          f"outputs in {outdir}")
    return 0


def _fmt(x):
    if isinstance(x, float):
        return f"{x:.6f}"
    return str(x)


def cmd_fig2(args) -> int:
    params = LweParams(args.n, args.m, args.q, args.sigma)
    outdir = Path(args.out)
    outdir.mkdir(parents=True, exist_ok=True)
    inst = gen_instance(params, "structured", instance_rng(args.seed, 0))
    res = run_pipeline(inst, solver="enum")
    study = qaoa_enhancement(res.basis, qubits_per_basis=args.qubits_per_basis,
                             pinned_qubits=args.pinned_qubits,
                             coefficient_range=args.coefficient_range,
                             grid_points=args.grid)
    outputs = []

    landscape_csv = outdir / "landscape.csv"
    with open(landscape_csv, "w") as fh:
        fh.write("beta,gamma,energy\n")
        for i, b in enumerate(study.betas):
            for j, g in enumerate(study.gammas):
                fh.write(f"{b:.12g},{g:.12g},{study.surface[i, j]:.12g}\n")
    outputs.append(landscape_csv.name)

    state = run_qaoa(study.diagonal,
                     QaoaParams([study.best_beta], [study.best_gamma], study.scale))
    rng = np.random.default_rng(np.random.SeedSequence(entropy=args.seed,
                                                       spawn_key=(1,)))
    hist = sample(state, args.shots, rng)
    n_qubits = int(np.log2(len(hist)))
    hist_csv = outdir / "histogram.csv"
    with open(hist_csv, "w") as fh:
        fh.write("bitstring,count\n")
        for z, cnt in enumerate(hist):
            bits = "".join(str((z >> u) & 1) for u in range(n_qubits))
            fh.write(f"{bits},{int(cnt)}\n")
    outputs.append(hist_csv.name)

    theta0 = np.array([study.best_beta + args.offset_beta,
                       study.best_gamma / study.scale + args.offset_gamma])
    opt = OptimizerConfig(learning_rate=args.learning_rate, step=args.fd_step,
                          max_iters=args.iterations)
    traj_csv = outdir / "trajectory.csv"
    traj = gradient_descent(study.diagonal, theta0, opt, scale=study.scale,
                            csv_path=traj_csv)
    outputs.append(traj_csv.name)

    ground_mask = study.diagonal == study.ground_energy
    sampled_p = float(hist[ground_mask].sum() / args.shots)
    _json_dump({
        "pinned": study.pinned,
        "ground_energy": study.ground_energy,
        "scale": study.scale,
        "grid_minimum": {"beta": study.best_beta, "gamma": study.best_gamma,
                         "energy": float(study.surface.min())},
        "target_probability": study.target_probability,
        "sampled_ground_probability": sampled_p,
        "trajectory_energies": [pt.energy for pt in traj],
        "shortest_vector": res.vector.tolist(),
        "shortest_norm_sq": res.norm_sq,
    }, outdir / "report.json")
    outputs.append("report.json")

    plots.plot_landscape(study.betas, study.gammas, study.surface, study.scale,
                         outdir / "landscape.png")
    plots.plot_trajectory([pt.energy for pt in traj], outdir / "trajectory.png")
    plots.plot_state_histogram(hist, ground_mask, outdir / "histogram.png")
    outputs += ["landscape.png", "trajectory.png", "histogram.png"]

    _write_manifest(outdir, "fig2", {
        "n": args.n, "m": args.m, "q": args.q, "sigma": args.sigma,
        "grid": args.grid, "iterations": args.iterations,
        "learning_rate": args.learning_rate, "fd_step": args.fd_step,
        "shots": args.shots, "qubits_per_basis": args.qubits_per_basis,
        "pinned_qubits": args.pinned_qubits,
        "coefficient_range": args.coefficient_range,
        "offset_beta": args.offset_beta, "offset_gamma": args.offset_gamma,
        "seed": args.seed,
    }, outputs)
    print(f"register {study.pinned}: ground energy {study.ground_energy}, "
          f"sampled ground probability {sampled_p:.3f}; outputs in {outdir}")
    return 0


def cmd_rerun(args) -> int:
    manifest = json.loads(Path(args.manifest).read_text())
    command = manifest["command"]
    config = manifest["config"]
    argv = [command]
    for key, val in config.items():
        if val is None:
            continue
        argv += [f"--{key.replace('_', '-')}", str(val)]
    argv += ["--out", str(args.out)]
    return main(argv)


# ---------------------------------------------------------------------------
# parser plumbing

def _add_params(p, n=None, m=None, q=None, sigma=None):
    # not argparse-required so a --config file may provide them; checked
    # after the merge in main()
    p.add_argument("--n", type=int, default=n, help="secret dimension")
    p.add_argument("--m", type=int, default=m, help="number of samples")
    p.add_argument("--q", type=int, default=q, help="modulus")
    p.add_argument("--sigma", type=float, default=sigma,
                   help="error standard deviation")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="lwekit",
        description="workbench for LWE-decision experiments over q-ary lattices")
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen", help="generate instance files")
    _add_params(p)
    p.add_argument("--kind", default="structured",
                   choices=("structured", "uniform"))
    p.add_argument("--count", type=int, default=1)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--config", default=None, help="key=value defaults file")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_gen, needs_seed=True)

    p = sub.add_parser("validate", help="check instance files against their witness")
    p.add_argument("files", nargs="+")
    p.set_defaults(func=cmd_validate, needs_seed=False)

    p = sub.add_parser("pipeline", help="run the decision pipeline on one instance")
    p.add_argument("--instance", required=True)
    p.add_argument("--solver", default="enum",
                   choices=("lll", "bkz", "enum", "qaoa"))
    p.add_argument("--block-size", type=int, default=None)
    p.add_argument("--qubits-per-basis", type=int, default=1)
    p.add_argument("--pinned-qubits", type=int, default=0)
    p.add_argument("--coefficient-range", default="symmetric",
                   choices=("symmetric", "binary"))
    p.add_argument("--grid", type=int, default=24)
    p.add_argument("--iterations", type=int, default=0)
    p.add_argument("--shots", type=int, default=2048)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--config", default=None)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_pipeline, needs_seed=False)

    p = sub.add_parser("fig1", help="ensemble report: histograms and representability")
    _add_params(p)
    p.add_argument("--instances", type=int, default=100,
                   help="instances per class")
    p.add_argument("--qubits", default="1:4",
                   help="qubit counts, lo:hi or comma list")
    p.add_argument("--sweep", default=None,
                   help="comma list of n values for the size sweep")
    p.add_argument("--sweep-instances", type=int, default=None)
    p.add_argument("--solver", default="enum",
                   choices=("lll", "bkz", "enum"))
    p.add_argument("--block-size", type=int, default=None)
    p.add_argument("--delta", type=float, default=0.75,
                   help="reduction parameter for the pipeline basis")
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--config", default=None)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_fig1, needs_seed=True)

    p = sub.add_parser("fig2", help="landscape, trajectory and sampling report")
    _add_params(p, n=2, m=6, q=17, sigma=1.2)
    p.add_argument("--grid", type=int, default=48)
    p.add_argument("--iterations", type=int, default=8)
    p.add_argument("--learning-rate", type=float, default=0.06)
    p.add_argument("--fd-step", type=float, default=0.05)
    p.add_argument("--shots", type=int, default=4096)
    p.add_argument("--qubits-per-basis", type=int, default=1)
    p.add_argument("--pinned-qubits", type=int, default=0)
    p.add_argument("--coefficient-range", default="binary",
                   choices=("symmetric", "binary"))
    p.add_argument("--offset-beta", type=float, default=FIG2_DEFAULT_OFFSETS[0],
                   help="trajectory start offset from the grid minimum")
    p.add_argument("--offset-gamma", type=float, default=FIG2_DEFAULT_OFFSETS[1],
                   help="trajectory start offset in scale units")
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--config", default=None)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_fig2, needs_seed=True)

    p = sub.add_parser("rerun", help="replay a manifest into a new directory")
    p.add_argument("manifest")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_rerun, needs_seed=False)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        if getattr(args, "config", None):
            # file values fill in anything the command line left alone
            tokens = list(sys.argv[1:] if argv is None else argv)
            explicit = {t.split("=", 1)[0] for t in tokens if t.startswith("--")}
            for key, raw in _read_config(args.config).items():
                flag = "--" + key.replace("_", "-")
                if flag not in explicit and hasattr(args, key):
                    setattr(args, key, _auto_coerce(raw))
        for key in ("n", "m", "q", "sigma"):
            if hasattr(args, key) and getattr(args, key) is None:
                raise ParameterError(f"--{key} is required (flag or config file)")
        if args.needs_seed and getattr(args, "seed", None) is None:
            raise ParameterError(
                "--seed is required: stochastic commands take no silent entropy")
        return args.func(args)
    except (ParameterError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except FileNotFoundError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (CapacityError, RankError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3
    except DegenerateDataError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 4


if __name__ == "__main__":
    sys.exit(main())
