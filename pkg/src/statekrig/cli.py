"""Command-line front end for end-to-end experiments.

Subcommands: generate, train, emulate, evaluate, compare-narx, repeat.
Every run writes a manifest.json sufficient to reproduce its artifacts
byte-for-byte.  Worker threads are capped by the STATEKRIG_MAX_WORKERS
environment variable (default 1).
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from . import benchmarks, emulator, experiments
from .experiments import ExperimentConfig


def _add_common_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--benchmark", required=True, choices=sorted(experiments.BENCHMARKS))
    parser.add_argument("--n-train", type=int, default=1)
    parser.add_argument(
        "--sigma",
        default="1",
        help="magnification factor (number) or 'mixture' for the per-history schedule",
    )
    parser.add_argument("--delta", type=float, default=None)
    parser.add_argument("--dt", type=float, default=None)
    parser.add_argument("--duration", type=float, default=None, help="time horizon T in seconds")
    parser.add_argument("--n0", type=int, default=5, help="initial equidistant sample count")
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--n-test", type=int, default=100)
    parser.add_argument("--nmc", type=int, default=50, help="Monte Carlo ensemble size")
    parser.add_argument("--refit-every", type=int, default=1)
    parser.add_argument("--max-selected", type=int, default=1000)
    parser.add_argument("--out", default="statekrig_out", help="output directory")


def _config_from_args(args: argparse.Namespace) -> ExperimentConfig:
    sigma = args.sigma if args.sigma == "mixture" else float(args.sigma)
    return ExperimentConfig(
        benchmark=args.benchmark,
        n_train=args.n_train,
        sigma=sigma,
        delta=args.delta,
        dt=args.dt,
        T=args.duration,
        n_initial=args.n0,
        seed=args.seed,
        n_test=args.n_test,
        n_mc=args.nmc,
        refit_every=args.refit_every,
        max_selected=args.max_selected,
    )


def _cmd_generate(args) -> None:
    config = _config_from_args(args)
    defaults = experiments.BENCHMARKS[config.benchmark]
    system = defaults.system_factory()
    master = np.random.SeedSequence(config.seed)
    train_seq = master.spawn(3)[0]
    excitations = experiments.sample_excitations(
        config.benchmark, config.sigma_schedule(), train_seq
    )
    _, trajectories = benchmarks.generate_training_pool(
        system, excitations, config.dt, config.T
    )
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    experiments.write_manifest(out / "manifest.json", config)
    for k, traj in enumerate(trajectories):
        experiments.write_trajectory_csv(out / f"train_{k:03d}.csv", traj)
    print(f"wrote {len(trajectories)} reference trajectories to {out}")


def _cmd_train(args) -> None:
    config = _config_from_args(args)
    surrogate, pool, trajectories, traces = experiments.train_surrogate(config)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    experiments.write_manifest(out / "manifest.json", config)
    emulator.save_surrogate(surrogate, str(out / "surrogate.npz"))
    for k, traj in enumerate(trajectories):
        experiments.write_trajectory_csv(out / f"train_{k:03d}.csv", traj)
    selection = {
        "pool_size": pool.n_rows,
        "sample_sizes": [t.n_selected for t in traces],
        "sparsity": [t.sparsity(pool.n_rows) for t in traces],
        "converged": [t.converged for t in traces],
        "selected_indices": [[int(i) for i in t.selected_indices] for t in traces],
    }
    (out / "selection.json").write_text(json.dumps(selection, indent=2))
    print(
        f"trained {surrogate.n} component models; sample sizes "
        f"{selection['sample_sizes']} of pool {pool.n_rows}"
    )


def _cmd_emulate(args) -> None:
    config = _config_from_args(args)
    model_path = Path(args.model) if args.model else Path(args.out) / "surrogate.npz"
    surrogate = emulator.load_surrogate(str(model_path))
    defaults = experiments.BENCHMARKS[config.benchmark]
    system = defaults.system_factory()
    test_seq = np.random.SeedSequence(config.seed).spawn(3)[1]
    exc = experiments.sample_excitations(config.benchmark, np.ones(1), test_seq)[0]
    x0 = np.zeros(system.n)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    trajectory = emulator.emulate(surrogate, exc, x0, config.dt, config.T)
    experiments.write_trajectory_csv(out / "emulated.csv", trajectory)
    if args.ensemble:
        prediction = emulator.ensemble(
            surrogate, exc, x0, config.dt, config.T, n_mc=config.n_mc, seed=config.seed
        )
        (out / "ensemble.json").write_text(json.dumps(prediction.to_summary()))
        print(
            f"wrote emulated.csv and ensemble.json "
            f"({prediction.divergent_count} divergent replicates)"
        )
    else:
        print("wrote emulated.csv")


def _cmd_evaluate(args) -> None:
    config = _config_from_args(args)
    report = experiments.run_experiment(config, out_dir=args.out)
    _print_report(report)


def _cmd_compare_narx(args) -> None:
    config = _config_from_args(args)
    result = experiments.compare_narx(config, out_dir=args.out)
    s2 = np.asarray(result["surrogate_errors"])
    nx = np.asarray(result["narx_errors"])
    print(f"benchmark          : {result['benchmark']}")
    print(f"surrogate median e1: {np.median(s2):.3e}")
    print(f"narx median e1     : {np.median(nx):.3e}")


def _cmd_repeat(args) -> None:
    config = _config_from_args(args)
    reports = experiments.repeat_experiment(config, args.repetitions, out_dir=args.out)
    for k, report in enumerate(reports):
        print(f"rep {k:02d}: mean errors " + _fmt_vector(report.mean_errors))


def _fmt_vector(v: np.ndarray) -> str:
    return "[" + ", ".join(f"{x:.3e}" for x in v) + "]"


def _print_report(report) -> None:
    print(f"benchmark     : {report.benchmark}")
    print(f"mean errors   : {_fmt_vector(report.mean_errors)}")
    print(f"sample sizes  : {report.sample_sizes}")
    print(f"sparsity      : {_fmt_vector(np.asarray(report.sparsity))}")
    print(f"divergent     : {report.divergent_count}")
    print(
        f"timings       : train {report.timings['train_s']:.1f} s, "
        f"evaluate {report.timings['evaluate_s']:.1f} s"
    )


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="statekrig",
        description="Sparse Kriging emulation of dynamical systems under stochastic excitation",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    commands = {
        "generate": ("sample excitations and write reference trajectories", _cmd_generate),
        "train": ("train the sparse component models and save the surrogate", _cmd_train),
        "emulate": ("emulate one test history with a saved surrogate", _cmd_emulate),
        "evaluate": ("full train/emulate/score pipeline with artifacts", _cmd_evaluate),
        "compare-narx": ("paired surrogate vs NARX comparison", _cmd_compare_narx),
        "repeat": ("independent repetitions for error statistics", _cmd_repeat),
    }
    for name, (help_text, handler) in commands.items():
        p = sub.add_parser(name, help=help_text)
        _add_common_flags(p)
        if name == "emulate":
            p.add_argument("--model", default=None, help="path to a saved surrogate .npz")
            p.add_argument("--ensemble", action="store_true", help="also write a Monte Carlo ensemble summary")
        if name == "repeat":
            p.add_argument("--repetitions", type=int, default=10)
        p.set_defaults(handler=handler, stage=name)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        args.handler(args)
    except Exception as exc:  # noqa: BLE001 - report the failing stage and exit nonzero
        print(f"stage '{args.stage}' failed: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
