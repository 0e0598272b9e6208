"""Command line entry points: run, sweep, plot and oracle subcommands.

Owns all file I/O: per-step CSV logs, per-run JSON summaries, the sweep
comparison report and the SVG figures. Exit codes: 0 success, 1 config
error, 2 training abort, 3 I/O error.
"""
from __future__ import annotations

import argparse
import concurrent.futures
import json
import math
import os
import statistics
import sys
import time

import numpy as np

from . import agent, config as config_mod, metrics, oracles, plots
from .config import ConfigError, ExperimentConfig

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_TRAINING = 2
EXIT_IO = 3


def _alpha_tag(alpha: float) -> str:
    return repr(float(alpha))


def run_name(seed: int, alpha: float) -> str:
    return f"run_seed{seed}_alpha{_alpha_tag(alpha)}"


def run_training(cfg: ExperimentConfig, seed: int, alpha: float) -> agent.TrainResult:
    environment = cfg.make_environment(seed)
    return agent.train(
        environment,
        cfg.make_smirl_config(alpha),
        cfg.make_ppo_config(),
        seed,
        constrain_l1=cfg.sampler.constrain_l1,
        norm_target=cfg.sampler.norm_target,
        entropy_window=cfg.metrics.window,
    )


def _final_sample_entropy(log: metrics.RunLog) -> float | None:
    valid = log.sample_entropy[~np.isnan(log.sample_entropy)]
    return float(valid[-1]) if len(valid) else None


def summarize_run(cfg: ExperimentConfig, log: metrics.RunLog,
                  buffer_snapshot: dict, wall_clock: float) -> dict:
    """Digest one run: final-bin reward, self-referenced convergence step, entropy."""
    bin_size = cfg.metrics.bin_size
    bins = metrics.bin_series(log.r_energy, bin_size)
    final_bin_mean = bins[-1][0] if bins else None
    steps = None
    if final_bin_mean is not None:
        theta = metrics.threshold_at_fraction(final_bin_mean)
        idx = metrics.steps_to_threshold([b[0] for b in bins], theta)
        if idx is not None:
            steps = min((idx + 1) * bin_size, int(len(log)))
    return {
        "config_hash": cfg.config_hash(),
        "seed": int(log.seed),
        "alpha": float(log.alpha),
        "final_bin_mean_r_energy": final_bin_mean,
        "steps_to_threshold": steps,
        "final_sample_entropy": _final_sample_entropy(log),
        "buffer": buffer_snapshot,
        "wall_clock_seconds": wall_clock,
    }


def _write_json(path: str, payload: dict) -> None:
    with open(path, "w", newline="\n") as fh:
        json.dump(payload, fh, sort_keys=True, indent=2)
        fh.write("\n")


def run_single(cfg: ExperimentConfig, seed: int, alpha: float, out_dir: str,
               quiet: bool = False) -> dict:
    """Execute one (seed, alpha) run, writing its CSV and summary JSON.

    On a training abort the partial CSV is retained with a trailing marker
    row and the abort is re-raised for the caller's exit handling.
    """
    os.makedirs(out_dir, exist_ok=True)
    name = run_name(seed, alpha)
    csv_path = os.path.join(out_dir, name + ".csv")
    started = time.perf_counter()
    try:
        result = run_training(cfg, seed, alpha)
    except agent.TrainingAbort as abort:
        if abort.partial_log is not None:
            abort.partial_log.truncation_note = f"aborted: {abort}"
            metrics.write_step_csv(csv_path, abort.partial_log)
        raise
    wall_clock = time.perf_counter() - started
    metrics.write_step_csv(csv_path, result.log)
    summary = summarize_run(cfg, result.log, result.buffer.snapshot(), wall_clock)
    _write_json(os.path.join(out_dir, name + "_summary.json"), summary)
    if not quiet:
        print(f"{name}: final_bin_mean_r_energy={summary['final_bin_mean_r_energy']} "
              f"steps_to_threshold={summary['steps_to_threshold']} "
              f"({wall_clock:.1f}s)")
    return summary


def _sweep_cell(cfg_dict: dict, seed: int, alpha: float, out_dir: str,
                quiet: bool) -> dict:
    cfg = config_mod.from_dict(cfg_dict)
    try:
        return run_single(cfg, seed, alpha, out_dir, quiet=quiet)
    except agent.TrainingAbort as abort:
        return {"seed": seed, "alpha": alpha, "failed": str(abort)}


def _median_or_none(values) -> float | None:
    vals = [math.inf if v is None else float(v) for v in values]
    if not vals:
        return None
    med = statistics.median(vals)
    return None if math.isinf(med) or math.isnan(med) else med


def _pooled_bin_curve(logs: list[metrics.RunLog], bin_size: int):
    """Per-bin mean/std pooled over every seed's observations in that bin."""
    n = max((len(log) for log in logs), default=0)
    steps, r_mean, r_std, e_mean, e_std = [], [], [], [], []
    for start in range(0, n, bin_size):
        rewards = np.concatenate([log.r_energy[start:start + bin_size] for log in logs])
        ents = np.concatenate([log.sample_entropy[start:start + bin_size] for log in logs])
        ents = ents[~np.isnan(ents)]
        steps.append(min(start + bin_size, n))
        r_mean.append(float(rewards.mean()))
        r_std.append(float(rewards.std()))
        e_mean.append(float(ents.mean()) if len(ents) else math.nan)
        e_std.append(float(ents.std()) if len(ents) else math.nan)
    return steps, r_mean, r_std, e_mean, e_std


def build_sweep_report(cfg: ExperimentConfig, summaries: list[dict]) -> dict:
    """Comparison table across alphas, thresholded against the baseline alpha.

    The convergence threshold is 95% of the baseline's median final-bin
    reward (baseline is alpha = 0 when present, else the smallest alpha).
    """
    alphas = sorted({float(s["alpha"]) for s in summaries})
    baseline_alpha = 0.0 if 0.0 in alphas else min(alphas)
    bin_size = cfg.metrics.bin_size

    by_alpha: dict[float, list[dict]] = {a: [] for a in alphas}
    for s in summaries:
        by_alpha[float(s["alpha"])].append(s)

    base_finals = [s["final_bin_mean_r_energy"] for s in by_alpha[baseline_alpha]
                   if not s.get("failed") and s["final_bin_mean_r_energy"] is not None]
    theta = metrics.threshold_at_fraction(statistics.median(base_finals)) \
        if base_finals else None

    table = {}
    for a in alphas:
        cells = [s for s in by_alpha[a] if not s.get("failed")]
        steps_vals = []
        for s in cells:
            steps_vals.append(s.get("_steps_to_shared_threshold"))
        table[_alpha_tag(a)] = {
            "median_steps_to_threshold": _median_or_none(steps_vals),
            "median_final_reward": _median_or_none(
                [s["final_bin_mean_r_energy"] for s in cells]),
            "median_final_entropy": _median_or_none(
                [s["final_sample_entropy"] for s in cells]),
            "runs": len(by_alpha[a]),
            "failed": sum(1 for s in by_alpha[a] if s.get("failed")),
        }
    return {
        "config_hash": cfg.config_hash(),
        "baseline_alpha": baseline_alpha,
        "theta": theta,
        "bin_size": bin_size,
        "table": table,
    }


def _shared_threshold_steps(log: metrics.RunLog, theta: float, bin_size: int) -> int | None:
    bins = metrics.bin_series(log.r_energy, bin_size)
    idx = metrics.steps_to_threshold([b[0] for b in bins], theta)
    return None if idx is None else min((idx + 1) * bin_size, int(len(log)))


def sweep(cfg: ExperimentConfig, out_dir: str, quiet: bool = False) -> dict:
    """Run the full (seed, alpha) grid, then emit the report and curve figure."""
    os.makedirs(out_dir, exist_ok=True)
    cells = [(seed, float(alpha)) for alpha in cfg.run.alphas for seed in cfg.run.seeds]
    workers = cfg.run.workers or os.cpu_count() or 1
    workers = min(workers, len(cells))

    summaries: dict[tuple, dict] = {}
    if workers > 1:
        cfg_dict = cfg.to_dict()
        with concurrent.futures.ProcessPoolExecutor(max_workers=workers) as pool:
            futures = {
                pool.submit(_sweep_cell, cfg_dict, seed, alpha, out_dir, quiet):
                (seed, alpha) for seed, alpha in cells
            }
            for fut in concurrent.futures.as_completed(futures):
                summaries[futures[fut]] = fut.result()
    else:
        for seed, alpha in cells:
            summaries[(seed, alpha)] = _sweep_cell(cfg.to_dict(), seed, alpha,
                                                   out_dir, quiet)

    ordered = [summaries[cell] for cell in cells]

    # Re-read the logs once for the shared-threshold column and the figure.
    logs: dict[tuple, metrics.RunLog] = {}
    for (seed, alpha), summ in zip(cells, ordered):
        if summ.get("failed"):
            continue
        logs[(seed, alpha)] = metrics.read_step_csv(
            os.path.join(out_dir, run_name(seed, alpha) + ".csv"))

    report = build_sweep_report(cfg, ordered)
    if report["theta"] is not None:
        for (seed, alpha), summ in zip(cells, ordered):
            if (seed, alpha) in logs:
                summ["_steps_to_shared_threshold"] = _shared_threshold_steps(
                    logs[(seed, alpha)], report["theta"], cfg.metrics.bin_size)
        report = build_sweep_report(cfg, ordered)
    report["cells"] = [{k: v for k, v in s.items() if not k.startswith("_")}
                       for s in ordered]

    _write_json(os.path.join(out_dir, "sweep_report.json"), report)

    curves = []
    for alpha in sorted({a for _, a in cells}):
        alpha_logs = [logs[c] for c in cells if c[1] == alpha and c in logs]
        if not alpha_logs:
            continue
        steps, r_mean, r_std, e_mean, e_std = _pooled_bin_curve(
            alpha_logs, cfg.metrics.bin_size)
        curves.append({"alpha": alpha, "steps": steps, "reward_mean": r_mean,
                       "reward_std": r_std, "entropy_mean": e_mean,
                       "entropy_std": e_std})
    svg = plots.render_sweep_curves(curves, cfg.metrics.bin_size)
    with open(os.path.join(out_dir, "sweep_curves.svg"), "w", newline="\n") as fh:
        fh.write(svg)

    if not quiet:
        print(f"baseline alpha {report['baseline_alpha']}, theta {report['theta']}")
        print(f"{'alpha':>8} {'median steps':>14} {'median reward':>16} "
              f"{'median entropy':>16} {'failed':>7}")
        for tag, row in report["table"].items():
            print(f"{tag:>8} {str(row['median_steps_to_threshold']):>14} "
                  f"{str(row['median_final_reward']):>16} "
                  f"{str(row['median_final_entropy']):>16} {row['failed']:>7}")
    return report


def plot_consumption(csv_paths: list[str], steps: list[int], grid) -> str:
    """Render demand snapshots at the requested steps for each run CSV."""
    if not csv_paths:
        raise ValueError("no CSV files given")
    logs = []
    for path in csv_paths:
        label = os.path.splitext(os.path.basename(path))[0]
        logs.append((label, metrics.read_step_csv(path)))
    checkpoints = []
    for step in steps:
        series = []
        for label, log in logs:
            hit = np.nonzero(log.step == step)[0]
            if len(hit) == 0:
                lo = int(log.step[0]) if len(log) else 0
                hi = int(log.step[-1]) if len(log) else 0
                raise ValueError(
                    f"step {step} not present in {label} (available steps {lo}..{hi})")
            series.append({"label": label,
                           "demand": log.demand[hit[0]].tolist()})
        checkpoints.append({"step": int(step), "series": series})
    return plots.render_consumption(checkpoints, grid)


def _load_config(path: str | None) -> ExperimentConfig:
    if path is None:
        return ExperimentConfig().validate()
    return config_mod.load(path)


def _add_common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="experiment config file (YAML)")
    p.add_argument("--out", help="output directory (overrides run.out_dir)")
    p.add_argument("--quiet", action="store_true", help="suppress progress output")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="pricebench",
        description="Train and compare surprise-regularised price-setting agents "
                    "on a simulated office demand-response day.")
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="single training run")
    _add_common(p_run)
    p_run.add_argument("--seed", type=int, help="override the first config seed")
    p_run.add_argument("--alpha", type=float, help="override smirl.alpha")

    p_sweep = sub.add_parser("sweep", help="full seeds x alphas comparison")
    _add_common(p_sweep)

    p_plot = sub.add_parser("plot", help="demand snapshots from run CSVs")
    _add_common(p_plot)
    p_plot.add_argument("csvs", nargs="+", help="run CSV files")
    p_plot.add_argument("--steps", required=True,
                        help="comma-separated checkpoint steps, e.g. 2000,8000")

    p_oracle = sub.add_parser("oracle", help="print brute-force reference values")
    p_oracle.add_argument("--quiet", action="store_true")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "oracle":
            for name, value in oracles.reference_report():
                print(f"{name} = {value!r}")
            return EXIT_OK

        cfg = _load_config(args.config)
        out_dir = args.out or cfg.run.out_dir

        if args.command == "run":
            seed = cfg.run.seeds[0] if args.seed is None else args.seed
            alpha = cfg.smirl.alpha if args.alpha is None else args.alpha
            if alpha < 0:
                raise ConfigError("alpha: must be >= 0")
            run_single(cfg, seed, alpha, out_dir, quiet=args.quiet)
            return EXIT_OK

        if args.command == "sweep":
            report = sweep(cfg, out_dir, quiet=args.quiet)
            failed = sum(row["failed"] for row in report["table"].values())
            return EXIT_TRAINING if failed else EXIT_OK

        if args.command == "plot":
            steps = [int(s) for s in args.steps.split(",") if s]
            svg = plot_consumption(args.csvs, steps, cfg.env.grid_schedule)
            os.makedirs(out_dir, exist_ok=True)
            out_path = os.path.join(out_dir, "consumption.svg")
            with open(out_path, "w", newline="\n") as fh:
                fh.write(svg)
            if not args.quiet:
                print(out_path)
            return EXIT_OK
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except agent.TrainingAbort as exc:
        print(f"training aborted: {exc}", file=sys.stderr)
        return EXIT_TRAINING
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_IO
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
